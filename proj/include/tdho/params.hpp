#pragma once

// Time-dependent coefficients of the coupled-oscillator Hamiltonian and the
// squeeze-frame scale functions derived from the masses.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tdho/errors.hpp"

namespace tdho {

struct Constant {
    double c;
};

/// c0 * exp(gamma t)
struct Exponential {
    double c0;
    double gamma;
};

/// c0 * (1 + a t)^n
struct PowerLaw {
    double c0;
    double a;
    double n;
};

/// c0 + amp * cos(nu t + phi)
struct Harmonic {
    double c0;
    double amp;
    double nu;
    double phi;
};

/// Samples interpolated by a natural cubic spline. Derivatives are taken by
/// central differences on the interpolant, not from the spline coefficients,
/// so tabulated input behaves like measured data.
class Tabulated {
public:
    static constexpr std::size_t min_samples = 5;

    Tabulated(std::vector<double> times, std::vector<double> values)
        : t_(std::move(times)), y_(std::move(values)) {
        if (t_.size() != y_.size()) throw UsageError("tabulated family: time and value counts differ");
        if (t_.size() < min_samples)
            throw UsageError("tabulated family needs at least " + std::to_string(min_samples) + " samples");
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (!std::isfinite(t_[i]) || !std::isfinite(y_[i]))
                throw UsageError("tabulated family: non-finite sample");
            if (i > 0 && !(t_[i] > t_[i - 1]))
                throw UsageError("tabulated family: sample times must be strictly increasing");
        }
        fit_spline();
    }

    double t_min() const noexcept { return t_.front(); }
    double t_max() const noexcept { return t_.back(); }
    const std::vector<double>& times() const noexcept { return t_; }
    const std::vector<double>& values() const noexcept { return y_; }

    /// Spline value; extrapolates with the end pieces outside the sample range.
    double interpolate(double t) const noexcept {
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        std::size_t i = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
        i = std::min(i, t_.size() - 2);
        const double h = t_[i + 1] - t_[i];
        const double a = (t_[i + 1] - t) / h;
        const double b = (t - t_[i]) / h;
        return a * y_[i] + b * y_[i + 1] +
               ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
    }

private:
    void fit_spline() {
        // Natural end conditions, Thomas algorithm on the interior knots.
        const std::size_t n = t_.size();
        m_.assign(n, 0.0);
        std::vector<double> c(n, 0.0), d(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = t_[i] - t_[i - 1];
            const double h1 = t_[i + 1] - t_[i];
            const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
            const double diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
            c[i] = h1 / diag;
            d[i] = (rhs - h0 * d[i - 1]) / diag;
        }
        for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
    }

    std::vector<double> t_;
    std::vector<double> y_;
    std::vector<double> m_;
};

using ParamFamily = std::variant<Constant, Exponential, PowerLaw, Harmonic, Tabulated>;

/// Value with its first and second time derivatives.
struct Jet {
    double value;
    double d1;
    double d2;
};

namespace detail {

inline double fd_step(double t) { return 1e-5 * std::max(1.0, std::abs(t)); }

inline void check_tabulated_range(const Tabulated& f, double t) {
    if (t < f.t_min() || t > f.t_max())
        throw RangeError("tabulated family evaluated at t = " + std::to_string(t) + " outside [" +
                         std::to_string(f.t_min()) + ", " + std::to_string(f.t_max()) + "]");
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace detail

inline double eval_family(const ParamFamily& f, double t) {
    return std::visit(
        detail::overloaded{
            [](const Constant& c) { return c.c; },
            [t](const Exponential& e) { return e.c0 * std::exp(e.gamma * t); },
            [t](const PowerLaw& p) { return p.c0 * std::pow(1.0 + p.a * t, p.n); },
            [t](const Harmonic& h) { return h.c0 + h.amp * std::cos(h.nu * t + h.phi); },
            [t](const Tabulated& tab) {
                detail::check_tabulated_range(tab, t);
                return tab.interpolate(t);
            },
        },
        f);
}

inline Jet eval_derivatives(const ParamFamily& f, double t) {
    return std::visit(
        detail::overloaded{
            [](const Constant& c) { return Jet{c.c, 0.0, 0.0}; },
            [t](const Exponential& e) {
                const double v = e.c0 * std::exp(e.gamma * t);
                return Jet{v, e.gamma * v, e.gamma * e.gamma * v};
            },
            [t](const PowerLaw& p) {
                const double base = 1.0 + p.a * t;
                return Jet{p.c0 * std::pow(base, p.n), p.c0 * p.n * p.a * std::pow(base, p.n - 1.0),
                           p.c0 * p.n * (p.n - 1.0) * p.a * p.a * std::pow(base, p.n - 2.0)};
            },
            [t](const Harmonic& h) {
                const double phase = h.nu * t + h.phi;
                return Jet{h.c0 + h.amp * std::cos(phase), -h.amp * h.nu * std::sin(phase),
                           -h.amp * h.nu * h.nu * std::cos(phase)};
            },
            [t](const Tabulated& tab) {
                detail::check_tabulated_range(tab, t);
                const double h = detail::fd_step(t);
                const double f0 = tab.interpolate(t);
                const double fp = tab.interpolate(t + h);
                const double fm = tab.interpolate(t - h);
                return Jet{f0, (fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)};
            },
        },
        f);
}

/// Reference mass m(t) in u_j = ln sqrt(m / m_j).
enum class RefMassMode {
    unity,          // m = 1, so u_j = -ln(m_j) / 2
    geometric_mean, // m = sqrt(m1 m2)
};

enum class Oscillator : std::size_t { one = 0, two = 1 };

inline constexpr std::array<Oscillator, 2> oscillators{Oscillator::one, Oscillator::two};

inline constexpr std::size_t index(Oscillator j) noexcept { return static_cast<std::size_t>(j); }

struct TimeWindow {
    double t0;
    double t1;
};

class SystemParams {
public:
    static constexpr std::size_t positivity_samples = 1001;

    SystemParams(ParamFamily m1, ParamFamily m2, ParamFamily w1, ParamFamily w2, ParamFamily k,
                 TimeWindow window, RefMassMode mode = RefMassMode::unity)
        : mass_{std::move(m1), std::move(m2)}, freq_{std::move(w1), std::move(w2)}, k_(std::move(k)),
          window_(window), mode_(mode) {
        if (!(window_.t1 > window_.t0) || !std::isfinite(window_.t0) || !std::isfinite(window_.t1))
            throw UsageError("time window requires finite t1 > t0");
        validate();
    }

    const ParamFamily& mass(Oscillator j) const noexcept { return mass_[index(j)]; }
    const ParamFamily& frequency(Oscillator j) const noexcept { return freq_[index(j)]; }
    const ParamFamily& coupling() const noexcept { return k_; }
    TimeWindow window() const noexcept { return window_; }
    RefMassMode ref_mass_mode() const noexcept { return mode_; }

    SystemParams with_mode(RefMassMode mode) const {
        SystemParams copy = *this;
        copy.mode_ = mode;
        return copy;
    }

    bool contains(double t, double slack = 1e-9) const noexcept {
        const double tol = slack * std::max(1.0, std::abs(window_.t1 - window_.t0));
        return t >= window_.t0 - tol && t <= window_.t1 + tol;
    }

private:
    void validate() const {
        bool warned_k = false;
        for (std::size_t i = 0; i < positivity_samples; ++i) {
            const double t = window_.t0 + (window_.t1 - window_.t0) * static_cast<double>(i) /
                                              static_cast<double>(positivity_samples - 1);
            for (Oscillator j : oscillators) {
                const double m = eval_family(mass_[index(j)], t);
                if (!std::isfinite(m) || m <= 0.0)
                    throw DomainError("mass m" + std::to_string(index(j) + 1) + " is not positive at t = " +
                                      std::to_string(t));
                if (!std::isfinite(eval_family(freq_[index(j)], t)))
                    throw DomainError("frequency w" + std::to_string(index(j) + 1) + " is not finite at t = " +
                                      std::to_string(t));
            }
            const double k = eval_family(k_, t);
            if (!std::isfinite(k)) throw DomainError("coupling k is not finite at t = " + std::to_string(t));
            if (k < 0.0 && !warned_k) {
                warn("coupling k is negative at t = " + std::to_string(t));
                warned_k = true;
            }
        }
    }

    std::array<ParamFamily, 2> mass_;
    std::array<ParamFamily, 2> freq_;
    ParamFamily k_;
    TimeWindow window_;
    RefMassMode mode_;
};

/// (u, du/dt, d2u/dt2) for one oscillator.
struct ScaleJet {
    double u;
    double u_dot;
    double u_ddot;
};

namespace detail {

// ln m and its derivatives.
inline Jet log_jet(const Jet& m) {
    if (!(m.value > 0.0)) throw DomainError("nonpositive mass " + std::to_string(m.value));
    const double r = m.d1 / m.value;
    return Jet{std::log(m.value), r, m.d2 / m.value - r * r};
}

} // namespace detail

/// u_j = ln sqrt(m / m_j) and its derivatives, with m fixed by `mode`.
inline ScaleJet scale_from_mass(const SystemParams& p, Oscillator j, double t, RefMassMode mode) {
    const Jet lj = detail::log_jet(eval_derivatives(p.mass(j), t));
    if (mode == RefMassMode::unity) return ScaleJet{-0.5 * lj.value, -0.5 * lj.d1, -0.5 * lj.d2};

    const Jet l1 = detail::log_jet(eval_derivatives(p.mass(Oscillator::one), t));
    const Jet l2 = detail::log_jet(eval_derivatives(p.mass(Oscillator::two), t));
    return ScaleJet{0.25 * (l1.value + l2.value) - 0.5 * lj.value, 0.25 * (l1.d1 + l2.d1) - 0.5 * lj.d1,
                    0.25 * (l1.d2 + l2.d2) - 0.5 * lj.d2};
}

inline ScaleJet scale_from_mass(const SystemParams& p, Oscillator j, double t) {
    return scale_from_mass(p, j, t, p.ref_mass_mode());
}

/// Scale functions for both oscillators under a fixed reference-mass choice.
class ScaleFunctions {
public:
    ScaleFunctions(SystemParams params, RefMassMode mode) : params_(std::move(params)), mode_(mode) {}
    explicit ScaleFunctions(SystemParams params) : ScaleFunctions(params, params.ref_mass_mode()) {}

    std::array<ScaleJet, 2> operator()(double t) const {
        return {scale_from_mass(params_, Oscillator::one, t, mode_),
                scale_from_mass(params_, Oscillator::two, t, mode_)};
    }

    RefMassMode mode() const noexcept { return mode_; }

private:
    SystemParams params_;
    RefMassMode mode_;
};

} // namespace tdho
