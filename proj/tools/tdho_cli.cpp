#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tdho/config.hpp"
#include "tdho/errors.hpp"
#include "tdho/scenario.hpp"

namespace {

enum Exit { ok = 0, usage = 1, invariant = 2, numerical = 3 };

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw tdho::UsageError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run(tdho::Command command, const std::string& config_path, const std::string& output_override, bool quiet) {
    if (quiet) tdho::warning_sink() = [](std::string_view) {};
    const tdho::ScenarioConfig cfg = tdho::parse_config(read_file(config_path));
    const std::filesystem::path out_dir = output_override.empty() ? cfg.output : output_override;

    const tdho::Report report = tdho::run_scenario(cfg, command);
    for (const auto& [name, traj] : report.trajectories) tdho::write_atomically(out_dir / (name + ".csv"), tdho::to_csv(traj));
    tdho::write_atomically(out_dir / "summary.json", report.summary.dump(2) + "\n");
    if (!quiet) std::cout << report.summary.dump(2) << "\n";
    return tdho::exit_code(report);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two coupled oscillators with time-dependent masses: frame transformations and checks"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string output_dir;
    bool quiet = false;
    unsigned long long seed = 0;
    app.add_option("--output-dir", output_dir, "Directory for CSV and summary output (overrides 'output' in the config)");
    app.add_flag("--quiet", quiet, "Suppress warnings and the summary on stdout");
    app.add_option("--seed", seed, "Reserved; all computations are deterministic");

    struct Sub {
        tdho::Command command;
        const char* help;
    };
    const Sub subs[] = {
        {tdho::Command::simulate, "Evolve all configured pipelines and write lab-frame moments"},
        {tdho::Command::verify, "Check frame equivalence and invariants without writing trajectories"},
        {tdho::Command::compare_mg, "Measure the Macedo-Guedes frame discrepancy against a constant-mass control"},
        {tdho::Command::fock_check, "Number-basis operator identities and the two-mode cross-check"},
        {tdho::Command::single_demo, "Naive rescaling of a single oscillator with time-dependent mass"},
    };
    std::string config_path;
    tdho::Command chosen = tdho::Command::simulate;
    for (const Sub& s : subs) {
        CLI::App* sub = app.add_subcommand(std::string(tdho::to_string(s.command)), s.help);
        sub->add_option("config", config_path, "Scenario configuration file")->required();
        sub->callback([&chosen, cmd = s.command] { chosen = cmd; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Exit::ok : Exit::usage;
    }

    try {
        return run(chosen, config_path, output_dir, quiet);
    } catch (const tdho::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return Exit::usage;
    } catch (const tdho::InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return Exit::invariant;
    } catch (const tdho::NumericalFailure& e) {
        std::cerr << "numerical failure at t = " << e.time() << ": " << e.what() << "\n";
        return Exit::numerical;
    } catch (const tdho::TruncationError& e) {
        std::cerr << "truncation failure at t = " << e.time() << ": " << e.what() << "\n";
        return Exit::numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Exit::usage;
    }
}
