// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "tdho/dynamics.hpp"
#include "tdho/fock.hpp"
#include "tdho/params.hpp"
#include "tdho/quadratic.hpp"
#include "tdho/sympl.hpp"

using namespace tdho;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Growing masses shared by the falsification, Fock and invariant criteria.
SystemParams growing(double t1) {
    return SystemParams(Exponential{1.0, 0.2}, PowerLaw{1.0, 0.3, 2.0}, Constant{1.0}, Constant{1.0}, Constant{0.3},
                        {0.0, t1});
}

const GaussianState displaced = GaussianState::coherent(Vec4(1.0, 0.5, 0.0, 0.0));

Outcome operator_identities() {
    constexpr Eigen::Index d = 60;
    const auto q = fock::quadrature(d);
    double dilation = 0.0;
    for (double u : {-0.3, -0.2, -0.1, 0.1, 0.2, 0.3}) {
        const fock::FockOperator U = fock::dilation_unitary(u, d);
        dilation = std::max({dilation, fock::conjugation_residual(U, q.x, std::exp(u) * q.x),
                             fock::conjugation_residual(U, q.p, std::exp(-u) * q.p)});
    }
    double shear = 0.0;
    for (double c : {-0.2, -0.1, 0.1, 0.2}) {
        const fock::FockOperator U = fock::shear_unitary(c, d);
        shear = std::max(shear, fock::conjugation_residual(U, q.p, q.p + 2.0 * c * q.x));
    }
    return {dilation <= 1e-8 && shear <= 1e-8, fmt("dilation residual %.2e, shear residual %.2e (d = 60)", dilation, shear)};
}

Outcome constant_mass_collapse() {
    const TimeGrid g(0.0, 10.0, 1e-3);
    const ParamFamily w1 = Harmonic{1.0, 0.2, 0.7, 0.0};
    const ParamFamily w2 = Constant{1.3};
    const ParamFamily k = Harmonic{0.3, 0.1, 0.5, 0.0};

    // Unit masses leave every frame equal to the lab frame entry by entry.
    const SystemParams unit(Constant{1.0}, Constant{1.0}, w1, w2, k, {0.0, 10.0});
    double ham = 0.0;
    for (std::size_t i = 0; i < g.size(); i += 100)
        for (Pipeline pl : all_pipelines)
            ham = std::max(ham, (build_hamiltonian(pl, unit, g.node(i)).S - build_hamiltonian(Pipeline::direct, unit, g.node(i)).S)
                                    .cwiseAbs()
                                    .maxCoeff());

    // Other constant masses give static frames; the residual must still vanish.
    double residual = 0.0;
    for (const SystemParams& p : {unit, SystemParams(Constant{2.0}, Constant{0.5}, w1, w2, k, {0.0, 10.0})})
        for (Pipeline pl : all_pipelines) {
            if (pl == Pipeline::direct) continue;
            const Residual r = equivalence_residual(pl, p, displaced, g);
            residual = std::max({residual, r.mean, r.cov});
        }
    return {ham <= 1e-14 && residual <= 1e-8,
            fmt("max |S - S_direct| %.2e, max equivalence residual %.2e", ham, residual)};
}

Outcome correction_falsification() {
    const SystemParams p = growing(5.0);
    const TimeGrid fine(0.0, 5.0, 1e-3);
    const SystemParams control(Constant{2.0}, Constant{0.5}, Constant{1.0}, Constant{1.0}, Constant{0.3}, {0.0, 5.0});
    const double baseline = std::max(equivalence_residual(Pipeline::macedo_guedes, control, displaced, fine).mean,
                                     std::numeric_limits<double>::epsilon());
    const double mg = mg_discrepancy(p, displaced, fine);

    std::string detail = fmt("MG %.3e vs baseline %.3e (x%.2e)", mg, baseline, mg / baseline);
    std::vector<std::string> winners;
    for (Pipeline pl : {Pipeline::corrected_final, Pipeline::paper_final}) {
        const Residual r = equivalence_residual(pl, p, displaced, fine);
        const double r1 = equivalence_residual(pl, p, displaced, TimeGrid(0.0, 5.0, 0.1)).mean;
        const double r2 = equivalence_residual(pl, p, displaced, TimeGrid(0.0, 5.0, 0.05)).mean;
        const double r3 = equivalence_residual(pl, p, displaced, TimeGrid(0.0, 5.0, 0.025)).mean;
        const double q1 = r1 / r2, q2 = r2 / r3;
        const bool ok = r.mean <= 1e-5 && r.cov <= 1e-5 && q1 >= 12.0 && q1 <= 20.0 && q2 >= 12.0 && q2 <= 20.0;
        detail += fmt("; %s residual %.2e, halving ratios %.1f %.1f", std::string(to_string(pl)).c_str(),
                      std::max(r.mean, r.cov), q1, q2);
        if (ok) winners.emplace_back(to_string(pl));
    }
    std::string who = winners.empty() ? "none" : winners.front();
    for (std::size_t i = 1; i < winners.size(); ++i) who += "+" + winners[i];
    detail += "; winning candidate: " + who;
    return {mg >= 100.0 * baseline && !winners.empty(), detail};
}

Outcome gaussian_fock() {
    // Amplitudes halved relative to the other criteria to keep the d = 30 tail below 1e-7.
    const SystemParams p = growing(3.0);
    const Vec4 mu(0.5, 0.25, 0.0, 0.0);
    const TimeGrid g(0.0, 3.0, 0.01);
    const auto fock_traj = fock::two_mode_evolve(Pipeline::direct, p, fock::TwoModeState::coherent(mu, 30), g);
    const auto gauss = evolve(Pipeline::direct, p, GaussianState::coherent(mu), g);
    double dmu = 0.0, dsigma = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        dmu = std::max(dmu, (fock_traj.moments[i].mu - gauss.states[i].mu).cwiseAbs().maxCoeff());
        dsigma = std::max(dsigma, (fock_traj.moments[i].sigma - gauss.states[i].sigma).cwiseAbs().maxCoeff());
    }
    return {dmu <= 1e-4 && dsigma <= 1e-4,
            fmt("max |dmu| %.2e, max |dSigma| %.2e, max tail %.1e (d = 30, step 0.01)", dmu, dsigma, fock_traj.max_tail)};
}

Outcome invariant_suite() {
    const SystemParams p = growing(5.0);
    const TimeGrid g(0.0, 5.0, 1e-3);
    const GaussianState squeezed{Vec4(1.0, 0.5, -0.3, 0.2),
                                 push_state(GaussianState::vacuum(), scaling_map(0.4, -0.25) * shear_map(0.3, -0.1),
                                            Direction::to_lab)
                                     .sigma};
    double maps = 0.0, drift = 0.0, round_trip = 0.0;
    for (Pipeline pl : all_pipelines) {
        maps = std::max(maps, check_symplectic(propagator(pl, p, g)));
        for (std::size_t i = 0; i < g.size(); i += 50) {
            const SymplecticMap m = frame_map(pl, p, g.node(i));
            maps = std::max(maps, check_symplectic(m));
            const GaussianState back = push_state(push_state(squeezed, m, Direction::to_frame), m, Direction::to_lab);
            round_trip = std::max({round_trip, (back.mu - squeezed.mu).cwiseAbs().maxCoeff(),
                                   (back.sigma - squeezed.sigma).cwiseAbs().maxCoeff()});
        }
        for (const GaussianState& s0 : {displaced, squeezed}) {
            const InvariantDrift d =
                trajectory_invariants(pl == Pipeline::direct ? evolve(pl, p, s0, g) : evolve_via_frame(pl, p, s0, g));
            drift = std::max({drift, d.det_sigma, d.symplectic_eig});
        }
    }

    // Which way moments move under T_u, read off the number basis and off push_state.
    const double u = 0.2;
    const fock::FrameDirection oracle = fock::frame_direction_oracle(u, 60);
    const double vx = push_state(GaussianState::vacuum(), scaling_map(u, 0.0), Direction::to_frame).sigma(0, 0);
    const fock::FrameRule sympl_rule = std::abs(vx - 0.5 * std::exp(-2.0 * u)) < std::abs(vx - 0.5 * std::exp(2.0 * u))
                                           ? fock::FrameRule::inverse_map
                                           : fock::FrameRule::forward_map;
    const bool direction = oracle.rule == sympl_rule;

    return {maps <= 1e-8 && drift <= 1e-7 && round_trip <= 1e-12 && direction,
            fmt("symplectic defect %.2e, invariant drift %.2e, round trip %.2e, frame direction %s (%s)", maps, drift,
                round_trip, direction ? "matches" : "differs",
                oracle.rule == fock::FrameRule::inverse_map ? "moments move with M^-1" : "moments move with M")};
}

Outcome single_demo() {
    const TimeGrid g(0.0, 5.0, 1e-3);
    double still = 0.0;
    for (double m : {1.0, 3.0, 0.4}) still = std::max(still, single_oscillator_demo(Constant{m}, g).naive_residual);
    const double moving = single_oscillator_demo(Exponential{1.0, 0.2}, g).naive_residual;
    return {still <= 1e-8 && moving > 1e-2, fmt("constant M residual %.2e, M = e^{0.2t} residual %.3e", still, moving)};
}

} // namespace

int main() {
    warning_sink() = [](std::string_view) {};
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
        double budget_s;
    };
    const std::vector<Criterion> criteria = {
        {"operator identities", operator_identities, 10.0},
        {"constant-mass collapse", constant_mass_collapse, 5.0},
        {"correction falsification", correction_falsification, 30.0},
        {"Gaussian-Fock cross-validation", gaussian_fock, 300.0},
        {"invariant suite", invariant_suite, 60.0},
        {"single-oscillator demo", single_demo, 10.0},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < criteria[i].budget_s;
        const bool pass = out.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("%s [%zu] %s: %s; %.2f s (budget %.0f s)\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                    out.detail.c_str(), secs, criteria[i].budget_s);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
