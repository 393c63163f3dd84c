#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tdho {

/// Nonpositive mass, non-symplectic map, or other value outside an operation's domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Evaluation outside the sampled range of a tabulated family.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Malformed request: bad grid, wrong dimensions, unknown pipeline.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Integration produced a non-finite value.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, double time)
        : std::runtime_error(what + " at t = " + std::to_string(time)), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Fock-space population leaked into the truncation margin.
class TruncationError : public std::runtime_error {
public:
    TruncationError(const std::string& what, double time)
        : std::runtime_error(what + " at t = " + std::to_string(time)), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// A conserved quantity drifted beyond tolerance.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using WarningSink = std::function<void(std::string_view)>;

// Process-wide sink for non-fatal diagnostics (negative coupling, large
// squeeze parameters, renormalisation). Defaults to stderr.
inline WarningSink& warning_sink() {
    static WarningSink sink = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return sink;
}

inline void warn(std::string_view msg) {
    if (auto& sink = warning_sink()) sink(msg);
}

} // namespace tdho
