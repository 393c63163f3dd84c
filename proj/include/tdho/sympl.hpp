#pragma once

// Linear canonical maps on z = (x1, x2, p1, p2) and Gaussian moments.
//
// A SymplecticMap M is the Heisenberg image of a frame unitary U:
// U z U^dagger = M z componentwise. For a squeeze T_u with
// T_u x T_u^dagger = e^u x this makes M(x, x) = e^u.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "tdho/errors.hpp"
#include "tdho/params.hpp"
#include "tdho/quadratic.hpp"

namespace tdho {

inline const Mat4& symplectic_form() {
    static const Mat4 J = [] {
        Mat4 m = Mat4::Zero();
        m.topRightCorner<2, 2>() = Eigen::Matrix2d::Identity();
        m.bottomLeftCorner<2, 2>() = -Eigen::Matrix2d::Identity();
        return m;
    }();
    return J;
}

struct SymplecticMap {
    Mat4 M = Mat4::Identity();

    static SymplecticMap identity() { return {}; }

    /// Symplectic inverse -J M^T J; exact for symplectic M.
    SymplecticMap inverse() const {
        const Mat4& J = symplectic_form();
        return {-J * M.transpose() * J};
    }

    SymplecticMap operator*(const SymplecticMap& o) const { return {M * o.M}; }
};

/// max |M^T J M - J|
inline double check_symplectic(const Mat4& M) {
    const Mat4& J = symplectic_form();
    return (M.transpose() * J * M - J).cwiseAbs().maxCoeff();
}

inline double check_symplectic(const SymplecticMap& m) { return check_symplectic(m.M); }

/// diag(e^{u1}, e^{u2}, e^{-u1}, e^{-u2})
inline SymplecticMap scaling_map(double u1, double u2) {
    SymplecticMap s;
    s.M.diagonal() << std::exp(u1), std::exp(u2), std::exp(-u1), std::exp(-u2);
    return s;
}

/// p_j -> p_j + beta_j x_j, the image of exp(-i (beta_1 x1^2 + beta_2 x2^2) / 2).
inline SymplecticMap shear_map(double beta1, double beta2) {
    SymplecticMap s;
    s.M(coord::p1, coord::x1) = beta1;
    s.M(coord::p2, coord::x2) = beta2;
    return s;
}

/// Heisenberg map of the total frame unitary of `pipeline` at time t.
///
/// For the final frames the unitary is R T_u. Conjugating by T_u first and
/// then by R gives R T_u z T_u^dagger R^dagger = M_T (R z R^dagger) = M_T M_R z,
/// so the matrices compose as scaling * shear.
inline SymplecticMap frame_map(Pipeline pipeline, const SystemParams& p, double t) {
    if (pipeline == Pipeline::direct) return SymplecticMap::identity();
    detail::require_in_window(p, t);
    const RefMassMode mode = frame_mode(pipeline, p);
    const ScaleJet s1 = scale_from_mass(p, Oscillator::one, t, mode);
    const ScaleJet s2 = scale_from_mass(p, Oscillator::two, t, mode);
    SymplecticMap m = scaling_map(s1.u, s2.u);
    if (auto ratio = shear_ratio(pipeline)) m = m * shear_map(*ratio * s1.u_dot, *ratio * s2.u_dot);
    return m;
}

/// First and symmetrised second moments, Sigma_ab = <{dz_a, dz_b}>/2.
struct GaussianState {
    Vec4 mu = Vec4::Zero();
    Mat4 sigma = 0.5 * Mat4::Identity();

    static GaussianState vacuum() { return {}; }

    /// Coherent state: vacuum covariance about the given mean.
    static GaussianState coherent(const Vec4& mu) { return {mu, 0.5 * Mat4::Identity()}; }
};

enum class Direction { to_frame, to_lab };

/// Moments of U|psi> (to_frame) or U^dagger|phi> (to_lab), U having Heisenberg map m.
inline GaussianState push_state(const GaussianState& s, const SymplecticMap& m, Direction direction) {
    const double residual = check_symplectic(m);
    if (!(residual <= 1e-9))
        throw DomainError("push_state: map is not symplectic (residual " + std::to_string(residual) + ")");
    const Mat4 A = direction == Direction::to_frame ? m.inverse().M : m.M;
    GaussianState out;
    out.mu = A * s.mu;
    out.sigma = A * s.sigma * A.transpose();
    out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
    return out;
}

/// Moduli of the eigenvalue pairs of i J Sigma, ascending.
inline std::array<double, 2> symplectic_eigenvalues(const Mat4& sigma) {
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw UsageError("symplectic_eigenvalues: covariance is not symmetric");
    // J Sigma has eigenvalues +-i nu_j.
    const Eigen::EigenSolver<Mat4> es(symplectic_form() * sigma, false);
    std::array<double, 4> mods{};
    for (Eigen::Index i = 0; i < 4; ++i) mods[static_cast<std::size_t>(i)] = std::abs(es.eigenvalues()(i));
    std::sort(mods.begin(), mods.end());
    return {0.5 * (mods[0] + mods[1]), 0.5 * (mods[2] + mods[3])};
}

/// Robertson-Schrodinger bound: every symplectic eigenvalue at least 1/2 - tol.
inline bool is_physical(const GaussianState& s, double tol = 1e-9) {
    return symplectic_eigenvalues(s.sigma)[0] >= 0.5 - tol;
}

} // namespace tdho
