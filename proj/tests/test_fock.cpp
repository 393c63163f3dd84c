#include <gtest/gtest.h>

#include <cmath>

#include "tdho/fock.hpp"

using namespace tdho;
using namespace tdho::coord;
using namespace tdho::fock;

namespace {

Eigen::VectorXcd vacuum(Eigen::Index d) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
    v(0) = 1.0;
    return v;
}

double expect(const Eigen::VectorXcd& psi, const FockOperator& op) { return psi.dot(op * psi).real(); }

} // namespace

TEST(Ladder, Examples) {
    FockOperator a2(2, 2);
    a2 << 0, 1, 0, 0;
    EXPECT_EQ(ladder(2), a2);
    EXPECT_NEAR(ladder(3)(1, 2).real(), std::sqrt(2.0), 1e-15);
    const FockOperator a = ladder(12);
    const FockOperator n = a.adjoint() * a;
    for (Eigen::Index i = 0; i < 12; ++i) EXPECT_NEAR(n(i, i).real(), static_cast<double>(i), 1e-13);
    EXPECT_THROW(ladder(1), UsageError);
}

TEST(Quadrature, CanonicalCommutatorAndVacuum) {
    const Eigen::Index d = 20;
    const auto [x, p] = quadrature(d);
    const FockOperator comm = x * p - p * x;
    const FockOperator expected = I * FockOperator::Identity(d - 2, d - 2);
    EXPECT_LE((comm.topLeftCorner(d - 2, d - 2) - expected).cwiseAbs().maxCoeff(), 1e-12);
    const auto v = vacuum(d);
    EXPECT_NEAR(expect(v, x * x), 0.5, 1e-15);
    EXPECT_NEAR(expect(v, x * p + p * x), 0.0, 1e-15);
    EXPECT_LE(hermiticity_defect(x), 1e-15);
    EXPECT_LE(hermiticity_defect(p), 1e-15);
}

TEST(Quadrature, ExactMonomialsAgreeAwayFromTheEdge) {
    const Eigen::Index d = 16;
    const auto [x, p] = quadrature(d);
    const Eigen::Index b = d - 1;
    EXPECT_LE((x_squared(d) - x * x).topLeftCorner(b, b).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LE((p_squared(d) - p * p).topLeftCorner(b, b).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LE((xp_symmetric(d) - 0.5 * (x * p + p * x)).topLeftCorner(b, b).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(DilationUnitary, ZeroIsIdentity) {
    EXPECT_LE((dilation_unitary(0.0, 20) - FockOperator::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((shear_unitary(0.0, 20) - FockOperator::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DilationUnitary, ConjugationIdentities) {
    const Eigen::Index d = 60;
    const auto [x, p] = quadrature(d);
    for (double u : {-0.3, -0.2, -0.1, 0.1, 0.2, 0.3}) {
        const FockOperator U = dilation_unitary(u, d);
        EXPECT_LE(unitarity_defect(U), 1e-9);
        EXPECT_LE(conjugation_residual(U, x, std::exp(u) * x), 1e-8) << "u = " << u;
        EXPECT_LE(conjugation_residual(U, p, std::exp(-u) * p), 1e-8) << "u = " << u;
    }
}

TEST(DilationUnitary, WrongDirectionIsDetected) {
    const Eigen::Index d = 60;
    const auto [x, p] = quadrature(d);
    const double u = 0.2;
    const FockOperator U = dilation_unitary(u, d);
    const Eigen::Index side = d / 3;
    const double block_norm = x.topLeftCorner(side, side).cwiseAbs().maxCoeff();
    EXPECT_GE(conjugation_residual(U, x, std::exp(-u) * x), std::abs(std::exp(u) - std::exp(-u)) * block_norm / 2);
}

TEST(DilationUnitary, LargeSqueezeWarns) {
    int warnings = 0;
    auto saved = warning_sink();
    warning_sink() = [&](std::string_view) { ++warnings; };
    (void)dilation_unitary(0.6, 16);
    (void)shear_unitary(0.7, 16);
    warning_sink() = saved;
    EXPECT_EQ(warnings, 2);
}

TEST(ShearUnitary, ShiftsMomentum) {
    const Eigen::Index d = 60;
    const auto [x, p] = quadrature(d);
    for (double c : {-0.1, 0.1, 0.25}) {
        const FockOperator U = shear_unitary(c, d);
        EXPECT_LE(conjugation_residual(U, p, p + 2.0 * c * x), 1e-8) << "c = " << c;
        EXPECT_LE(conjugation_residual(U, x, x), 1e-10) << "c = " << c;
    }
}

TEST(ConjugationResidual, IdentityAndErrors) {
    const auto [x, p] = quadrature(12);
    EXPECT_EQ(conjugation_residual(FockOperator::Identity(12, 12), x, x), 0.0);
    EXPECT_THROW(conjugation_residual(FockOperator::Identity(10, 10), x, x), UsageError);
    EXPECT_THROW(conjugation_residual(FockOperator::Identity(12, 12), x, x, 1.0), UsageError);
}

TEST(FrameDirectionOracle, FixesSqueezeConvention) {
    const FrameDirection zero = frame_direction_oracle(0.0, 60);
    EXPECT_NEAR(zero.variance_x, 0.5, 1e-12);
    EXPECT_EQ(zero.rule, FrameRule::indistinguishable);

    const FrameDirection fd = frame_direction_oracle(0.2, 60);
    // Ground-truth fixture: T_u|0> is narrower in x for u > 0.
    EXPECT_EQ(fd.rule, FrameRule::inverse_map);
    EXPECT_NEAR(fd.variance_x, 0.5 * std::exp(-0.4), 1e-6);
    EXPECT_NEAR(fd.variance_x * fd.variance_p, 0.25, 1e-6);

    // The phase-space rule must reproduce the same number.
    for (double u : {-0.3, 0.1, 0.2, 0.3}) {
        const GaussianState framed = push_state(GaussianState::vacuum(), scaling_map(u, 0.0), Direction::to_frame);
        const FrameDirection oracle = frame_direction_oracle(u, 60);
        EXPECT_NEAR(framed.sigma(x1, x1), oracle.variance_x, 1e-10);
        EXPECT_NEAR(framed.sigma(p1, p1), oracle.variance_p, 1e-10);
        EXPECT_EQ(oracle.rule, FrameRule::inverse_map);
    }
}

// R T_u applied to the vacuum: number-basis moments against push_state with frame_map.
TEST(FrameComposition, ProductUnitaryMatchesFrameMap) {
    const SystemParams p(Exponential{1.0, 0.2}, PowerLaw{1.0, 0.3, 2.0}, Constant{1}, Constant{1}, Constant{0.3},
                         {0.0, 5.0});
    const Eigen::Index d = 60;
    for (Pipeline pl : {Pipeline::paper_final, Pipeline::corrected_final}) {
        for (double t : {1.0, 3.0}) {
            const GaussianState framed = push_state(GaussianState::vacuum(), frame_map(pl, p, t), Direction::to_frame);
            for (Oscillator j : oscillators) {
                const ScaleJet s = scale_from_mass(p, j, t, RefMassMode::unity);
                const double beta = *shear_ratio(pl) * s.u_dot;
                const FockOperator U = shear_unitary(beta / 2.0, d) * dilation_unitary(s.u, d);
                const Eigen::VectorXcd psi = U * vacuum(d);
                EXPECT_NEAR(expect(psi, x_squared(d)), framed.sigma(coord::x(j), coord::x(j)), 1e-5);
                EXPECT_NEAR(expect(psi, p_squared(d)), framed.sigma(coord::p(j), coord::p(j)), 1e-5);
                EXPECT_NEAR(expect(psi, xp_symmetric(d)), framed.sigma(coord::x(j), coord::p(j)), 1e-5);
            }
        }
    }
}

TEST(TwoModeState, CoherentMomentsAndTail) {
    const Eigen::Index d = 16;
    const TwoModeState s = TwoModeState::coherent(Vec4(1.0, 0.5, -0.3, 0.2), d);
    EXPECT_NEAR(s.amplitudes.norm(), 1.0, 1e-14);
    const TwoModeOperators ops(d);
    const GaussianState m = ops.moments(s.amplitudes);
    EXPECT_LE((m.mu - Vec4(1.0, 0.5, -0.3, 0.2)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((m.sigma - 0.5 * Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(tail_population(s), 1e-8);
    EXPECT_NEAR(tail_population(TwoModeState::number(15, 0, d)), 1.0, 1e-15);
}

TEST(TwoModeOperators, HamiltonianMatchesQuadraticForm) {
    // <psi|H|psi> = 1/2 tr(S Sigma) + 1/2 mu^T S mu for any state.
    const Eigen::Index d = 12;
    const TwoModeOperators ops(d);
    Mat4 S = Mat4::Random();
    S = (S + S.transpose()).eval();
    const TwoModeState s = TwoModeState::coherent(Vec4(0.4, -0.3, 0.2, 0.1), d);
    const GaussianState m = ops.moments(s.amplitudes);
    const double energy = s.amplitudes.dot(ops.hamiltonian(S) * s.amplitudes).real();
    EXPECT_NEAR(energy, 0.5 * (S * m.sigma).trace() + 0.5 * m.mu.dot(S * m.mu), 1e-9);
}

TEST(TwoModeEvolve, VacuumStaysPut) {
    const SystemParams p(Constant{1}, Constant{1}, Constant{1}, Constant{1}, Constant{0}, {0, 2});
    const auto traj = two_mode_evolve(Pipeline::direct, p, TwoModeState::number(0, 0, 10), TimeGrid(0, 2, 0.1));
    for (const auto& m : traj.moments) {
        EXPECT_LE(m.mu.cwiseAbs().maxCoeff(), 1e-13);
        EXPECT_LE((m.sigma - 0.5 * Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-13);
    }
    EXPECT_EQ(traj.renormalisations, 0u);
}

TEST(TwoModeEvolve, CoherentStateRotates) {
    const SystemParams p(Constant{1}, Constant{1}, Constant{1}, Constant{1}, Constant{0}, {0, 3});
    const auto traj =
        two_mode_evolve(Pipeline::direct, p, TwoModeState::coherent(Vec4(1, 0, 0, 0), 24), TimeGrid(0, 3, 0.1));
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        EXPECT_NEAR(traj.moments[i].mu(x1), std::cos(traj.times[i]), 1e-6);
}

TEST(TwoModeEvolve, MatchesGaussianMomentsShortWindow) {
    const SystemParams p(Exponential{1.0, 0.1}, Exponential{1.0, 0.1}, Constant{1}, Constant{1}, Constant{0.2},
                         {0, 1});
    const Vec4 mu0(0.5, 0.25, 0, 0);
    const TimeGrid g(0, 1, 0.02);
    const auto fock = two_mode_evolve(Pipeline::direct, p, TwoModeState::coherent(mu0, 16), g);
    const auto gauss = evolve(Pipeline::direct, p, GaussianState::coherent(mu0), g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_LE((fock.moments[i].mu - gauss.states[i].mu).cwiseAbs().maxCoeff(), 1e-4);
        EXPECT_LE((fock.moments[i].sigma - gauss.states[i].sigma).cwiseAbs().maxCoeff(), 1e-4);
    }
    EXPECT_LT(fock.max_tail, 1e-6);
}

// The squeeze frame Hamiltonian carries imaginary matrix elements (x p terms),
// exercising the complex sector solver.
TEST(TwoModeEvolve, SqueezeFrameMatchesGaussianMoments) {
    const SystemParams p(Exponential{1.0, 0.2}, Constant{1}, Constant{1}, Constant{1}, Constant{0.3}, {0, 1});
    const TimeGrid g(0, 1, 0.02);
    const GaussianState start = push_state(GaussianState::coherent(Vec4(0.5, 0.25, 0, 0)),
                                           frame_map(Pipeline::unit_mass_tilde, p, 0.0), Direction::to_frame);
    const auto fock = two_mode_evolve(Pipeline::unit_mass_tilde, p, TwoModeState::coherent(start.mu, 16), g);
    const auto gauss = evolve(Pipeline::unit_mass_tilde, p, start, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_LE((fock.moments[i].mu - gauss.states[i].mu).cwiseAbs().maxCoeff(), 1e-4);
        EXPECT_LE((fock.moments[i].sigma - gauss.states[i].sigma).cwiseAbs().maxCoeff(), 1e-4);
    }
}

TEST(TwoModeEvolve, Errors) {
    const SystemParams p(Constant{1}, Constant{1}, Constant{1}, Constant{1}, Constant{0}, {0, 2});
    EXPECT_THROW(two_mode_evolve(Pipeline::direct, p, TwoModeState::number(9, 0, 10), TimeGrid(0, 1, 0.1)),
                 TruncationError);
    EXPECT_THROW(two_mode_evolve(Pipeline::direct, p, TwoModeState::number(0, 0, 41), TimeGrid(0, 1, 0.1)),
                 UsageError);
    // A strongly displaced state rotates into the truncation margin.
    const SystemParams fast(Constant{1}, Constant{1}, Constant{1}, Constant{1}, Constant{0}, {0, 2});
    TwoModeState s = TwoModeState::coherent(Vec4(3.0, 0, 0, 0), 12);
    try {
        two_mode_evolve(Pipeline::direct, fast, s, TimeGrid(0, 2, 0.1));
        FAIL() << "expected a truncation error";
    } catch (const TruncationError& e) {
        EXPECT_GE(e.time(), 0.0);
    }
}
