#pragma once

// Scenario files: flat `key = value` lines, `#` comments.
//
//   m1 = exponential 1.0 0.2       # family name followed by its arguments
//   m2 = powerlaw 1.0 0.3 2
//   w1 = constant 1
//   w2 = harmonic 1 0.2 0.5 0
//   k  = constant 0.3
//   grid = 0 5 0.001               # t0 t1 [h]
//   ref_mass = unity               # or geometric_mean
//   state = displaced              # or vacuum; mu / sigma override
//   pipelines = all                # or a list of pipeline names
//   fock = off                     # on enables the number-basis cross-check
//   fock_dim = 30
//   fock_step = 0.01
//   demo_mass = exponential 1 0.2  # single-oscillator demo, defaults to m1
//   output = out

#include <charconv>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tdho/dynamics.hpp"
#include "tdho/errors.hpp"
#include "tdho/params.hpp"
#include "tdho/quadratic.hpp"
#include "tdho/sympl.hpp"

namespace tdho {

/// Malformed scenario text. `line` is set for syntax errors, `key` for semantic ones.
class ConfigError : public UsageError {
public:
    ConfigError(const std::string& what, std::size_t line, std::string key)
        : UsageError(what), line_(line), key_(std::move(key)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

struct FockOptions {
    bool enabled = false;
    Eigen::Index dimension = 30;
    double step = 0.01;
};

struct ScenarioConfig {
    ParamFamily m1 = Constant{1.0};
    ParamFamily m2 = Constant{1.0};
    ParamFamily w1 = Constant{1.0};
    ParamFamily w2 = Constant{1.0};
    ParamFamily k = Constant{0.0};
    RefMassMode ref_mass = RefMassMode::unity;
    double t0 = 0.0;
    double t1 = 1.0;
    double h = 1e-3;
    GaussianState initial = GaussianState::coherent(Vec4(1.0, 0.5, 0.0, 0.0));
    std::vector<Pipeline> pipelines{all_pipelines.begin(), all_pipelines.end()};
    FockOptions fock;
    std::optional<ParamFamily> demo_mass;
    std::string output = "out";

    SystemParams system() const { return SystemParams(m1, m2, w1, w2, k, {t0, t1}, ref_mass); }
    TimeGrid grid() const { return TimeGrid(t0, t1, h); }
    TimeGrid fock_grid() const { return TimeGrid(t0, t1, fock.step); }
    const ParamFamily& demo_family() const { return demo_mass ? *demo_mass : m1; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_words(std::string_view s) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) words.push_back(s.substr(i, j - i));
        i = j;
    }
    return words;
}

struct Entry {
    std::vector<std::string_view> words;
    std::size_t line;
};

class EntryReader {
public:
    explicit EntryReader(const std::map<std::string, Entry, std::less<>>& entries) : entries_(entries) {}

    const Entry* find(std::string_view key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }

    [[noreturn]] static void fail(std::string_view key, const Entry& e, const std::string& what) {
        throw ConfigError("line " + std::to_string(e.line) + ": " + std::string(key) + ": " + what, e.line,
                          std::string(key));
    }

    static double number(std::string_view key, const Entry& e, std::string_view word) {
        double v = 0.0;
        const auto* end = word.data() + word.size();
        auto [ptr, ec] = std::from_chars(word.data(), end, v);
        if (ec != std::errc{} || ptr != end || !std::isfinite(v))
            fail(key, e, "expected a number, got '" + std::string(word) + "'");
        return v;
    }

    std::vector<double> numbers(std::string_view key, const Entry& e, std::size_t from = 0) const {
        std::vector<double> out;
        for (std::size_t i = from; i < e.words.size(); ++i) out.push_back(number(key, e, e.words[i]));
        return out;
    }

    ParamFamily family(std::string_view key, const Entry& e) const {
        if (e.words.empty()) fail(key, e, "missing family specification");
        const std::string_view name = e.words.front();
        const std::vector<double> a = numbers(key, e, 1);
        auto arity = [&](std::size_t n) {
            if (a.size() != n)
                fail(key, e, std::string(name) + " takes " + std::to_string(n) + " arguments, got " +
                                 std::to_string(a.size()));
        };
        if (name == "constant") {
            arity(1);
            return Constant{a[0]};
        }
        if (name == "exponential") {
            arity(2);
            return Exponential{a[0], a[1]};
        }
        if (name == "powerlaw") {
            arity(3);
            return PowerLaw{a[0], a[1], a[2]};
        }
        if (name == "harmonic") {
            arity(4);
            return Harmonic{a[0], a[1], a[2], a[3]};
        }
        if (name == "tabulated") {
            if (a.size() % 2 != 0) fail(key, e, "tabulated takes (t, value) pairs");
            std::vector<double> ts, ys;
            for (std::size_t i = 0; i < a.size(); i += 2) {
                ts.push_back(a[i]);
                ys.push_back(a[i + 1]);
            }
            try {
                return Tabulated(std::move(ts), std::move(ys));
            } catch (const UsageError& err) {
                fail(key, e, err.what());
            }
        }
        fail(key, e, "unknown family '" + std::string(name) + "'");
    }

private:
    const std::map<std::string, Entry, std::less<>>& entries_;
};

inline const std::vector<std::string_view>& known_keys() {
    static const std::vector<std::string_view> keys{"m1",    "m2",    "w1",        "w2",       "k",
                                                    "grid",  "ref_mass", "state",  "mu",       "sigma",
                                                    "pipelines", "fock", "fock_dim", "fock_step", "demo_mass",
                                                    "output"};
    return keys;
}

} // namespace detail

inline ScenarioConfig parse_config(std::string_view text) {
    using detail::Entry;
    using detail::EntryReader;

    std::map<std::string, Entry, std::less<>> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'", line_no, "");
        const std::string key(detail::trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key", line_no, "");
        const auto& keys = detail::known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'", line_no, key);
        if (entries.count(key))
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'", line_no, key);
        Entry entry{detail::split_words(detail::trim(line.substr(eq + 1))), line_no};
        if (entry.words.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": missing value for '" + key + "'", line_no, key);
        entries.emplace(key, std::move(entry));
    }

    const EntryReader reader(entries);
    ScenarioConfig cfg;
    auto require = [&](std::string_view key) -> const Entry& {
        if (const Entry* e = reader.find(key)) return *e;
        throw ConfigError("missing required key '" + std::string(key) + "'", 0, std::string(key));
    };

    cfg.m1 = reader.family("m1", require("m1"));
    cfg.m2 = reader.family("m2", require("m2"));
    cfg.w1 = reader.family("w1", require("w1"));
    cfg.w2 = reader.family("w2", require("w2"));
    cfg.k = reader.family("k", require("k"));

    {
        const Entry& e = require("grid");
        const auto g = reader.numbers("grid", e);
        if (g.size() != 2 && g.size() != 3) EntryReader::fail("grid", e, "expected 't0 t1 [h]'");
        cfg.t0 = g[0];
        cfg.t1 = g[1];
        if (g.size() == 3) cfg.h = g[2];
        if (!(cfg.t1 > cfg.t0)) EntryReader::fail("grid", e, "t1 must exceed t0");
        if (!(cfg.h > 0.0)) EntryReader::fail("grid", e, "step must be positive");
        if (std::llround((cfg.t1 - cfg.t0) / cfg.h) < 1) EntryReader::fail("grid", e, "step exceeds the interval");
    }

    if (const Entry* e = reader.find("ref_mass")) {
        if (e->words.size() != 1) EntryReader::fail("ref_mass", *e, "expected one word");
        if (e->words[0] == "unity")
            cfg.ref_mass = RefMassMode::unity;
        else if (e->words[0] == "geometric_mean")
            cfg.ref_mass = RefMassMode::geometric_mean;
        else
            EntryReader::fail("ref_mass", *e, "expected 'unity' or 'geometric_mean'");
    }

    if (const Entry* e = reader.find("state")) {
        if (e->words.size() != 1) EntryReader::fail("state", *e, "expected one word");
        if (e->words[0] == "vacuum")
            cfg.initial = GaussianState::vacuum();
        else if (e->words[0] != "displaced")
            EntryReader::fail("state", *e, "expected 'vacuum' or 'displaced'");
    }
    if (const Entry* e = reader.find("mu")) {
        const auto v = reader.numbers("mu", *e);
        if (v.size() != 4) EntryReader::fail("mu", *e, "expected 4 numbers");
        cfg.initial.mu = Vec4(v[0], v[1], v[2], v[3]);
    }
    if (const Entry* e = reader.find("sigma")) {
        const auto v = reader.numbers("sigma", *e);
        if (v.size() != 16) EntryReader::fail("sigma", *e, "expected 16 numbers (row-major 4x4)");
        for (Eigen::Index r = 0; r < 4; ++r)
            for (Eigen::Index c = 0; c < 4; ++c) cfg.initial.sigma(r, c) = v[static_cast<std::size_t>(r * 4 + c)];
        if (cfg.initial.sigma != cfg.initial.sigma.transpose()) EntryReader::fail("sigma", *e, "must be symmetric");
        if (!is_physical(cfg.initial)) EntryReader::fail("sigma", *e, "violates the uncertainty bound");
    }

    if (const Entry* e = reader.find("pipelines")) {
        cfg.pipelines.clear();
        for (std::string_view w : e->words) {
            if (w == "all") {
                cfg.pipelines.assign(all_pipelines.begin(), all_pipelines.end());
                continue;
            }
            try {
                const Pipeline p = pipeline_from_string(w);
                if (std::find(cfg.pipelines.begin(), cfg.pipelines.end(), p) == cfg.pipelines.end())
                    cfg.pipelines.push_back(p);
            } catch (const UsageError& err) {
                EntryReader::fail("pipelines", *e, err.what());
            }
        }
    }

    if (const Entry* e = reader.find("fock")) {
        if (e->words.size() != 1 || (e->words[0] != "on" && e->words[0] != "off"))
            EntryReader::fail("fock", *e, "expected 'on' or 'off'");
        cfg.fock.enabled = e->words[0] == "on";
    }
    if (const Entry* e = reader.find("fock_dim")) {
        const auto v = reader.numbers("fock_dim", *e);
        if (v.size() != 1 || v[0] != std::floor(v[0]) || v[0] < 8 || v[0] > 40)
            EntryReader::fail("fock_dim", *e, "expected an integer in [8, 40]");
        cfg.fock.dimension = static_cast<Eigen::Index>(v[0]);
    }
    if (const Entry* e = reader.find("fock_step")) {
        const auto v = reader.numbers("fock_step", *e);
        if (v.size() != 1 || !(v[0] > 0.0)) EntryReader::fail("fock_step", *e, "expected a positive step");
        cfg.fock.step = v[0];
    }

    if (const Entry* e = reader.find("demo_mass")) cfg.demo_mass = reader.family("demo_mass", *e);
    if (const Entry* e = reader.find("output")) {
        if (e->words.size() != 1) EntryReader::fail("output", *e, "expected a single path");
        cfg.output = std::string(e->words[0]);
    }

    // Semantic checks against the window, reported by key.
    const TimeWindow window{cfg.t0, cfg.t1};
    auto check_positive = [&](std::string_view key, const ParamFamily& f) {
        const Entry& e = key == "demo_mass" ? *reader.find(key) : require(key);
        try {
            for (std::size_t i = 0; i < SystemParams::positivity_samples; ++i) {
                const double t = window.t0 + (window.t1 - window.t0) * static_cast<double>(i) /
                                                 static_cast<double>(SystemParams::positivity_samples - 1);
                const double v = eval_family(f, t);
                if (!std::isfinite(v) || v <= 0.0)
                    EntryReader::fail(key, e, "must be positive on the grid window (fails at t = " +
                                                  std::to_string(t) + ")");
            }
        } catch (const RangeError& err) {
            EntryReader::fail(key, e, err.what());
        }
    };
    check_positive("m1", cfg.m1);
    check_positive("m2", cfg.m2);
    if (cfg.demo_mass) check_positive("demo_mass", *cfg.demo_mass);
    for (std::string_view key : {"w1", "w2", "k"}) {
        const ParamFamily& f = key == "w1" ? cfg.w1 : key == "w2" ? cfg.w2 : cfg.k;
        try {
            eval_family(f, cfg.t0);
            eval_family(f, cfg.t1);
        } catch (const RangeError& err) {
            EntryReader::fail(key, require(key), err.what());
        }
    }
    try {
        (void)cfg.system();
    } catch (const std::exception& err) {
        throw ConfigError(std::string("invalid system parameters: ") + err.what(), 0, "");
    }
    return cfg;
}

} // namespace tdho
