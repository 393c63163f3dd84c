#pragma once

// Truncated number-basis operators used as an independent check on the
// phase-space algebra: conjugation identities of the squeeze and shear
// unitaries, frame-direction conventions, and full two-mode evolution.
//
// Conventions: hbar = 1, x = (a + a^dagger)/sqrt(2), p = i(a^dagger - a)/sqrt(2).
// Two-mode states are indexed n1 * d + n2.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "tdho/dynamics.hpp"
#include "tdho/errors.hpp"
#include "tdho/params.hpp"
#include "tdho/quadratic.hpp"
#include "tdho/sympl.hpp"

namespace tdho::fock {

using cplx = std::complex<double>;
using FockOperator = Eigen::MatrixXcd;
using SparseOperator = Eigen::SparseMatrix<cplx>;

inline constexpr cplx I{0.0, 1.0};
inline constexpr std::size_t min_dimension = 8;

inline void require_dimension(Eigen::Index d, Eigen::Index min = 2) {
    if (d < min) throw UsageError("Fock truncation must be at least " + std::to_string(min));
}

/// Annihilation operator, a(n-1, n) = sqrt(n).
inline FockOperator ladder(Eigen::Index d) {
    require_dimension(d);
    FockOperator a = FockOperator::Zero(d, d);
    for (Eigen::Index n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

struct Quadratures {
    FockOperator x;
    FockOperator p;
};

inline Quadratures quadrature(Eigen::Index d) {
    const FockOperator a = ladder(d);
    const FockOperator ad = a.adjoint();
    return {(a + ad) / std::sqrt(2.0), I * (ad - a) / std::sqrt(2.0)};
}

// Quadratic monomials written through a^2, a^dagger^2 and N so the truncated
// matrices carry no spurious entry in the last level.
namespace detail {

inline FockOperator a_squared(Eigen::Index d) {
    FockOperator m = FockOperator::Zero(d, d);
    for (Eigen::Index n = 2; n < d; ++n) m(n - 2, n) = std::sqrt(static_cast<double>(n) * static_cast<double>(n - 1));
    return m;
}

inline FockOperator two_n_plus_one(Eigen::Index d) {
    FockOperator m = FockOperator::Zero(d, d);
    for (Eigen::Index n = 0; n < d; ++n) m(n, n) = 2.0 * static_cast<double>(n) + 1.0;
    return m;
}

} // namespace detail

/// x^2 = (a^2 + a^dagger^2 + 2N + 1)/2
inline FockOperator x_squared(Eigen::Index d) {
    require_dimension(d);
    const FockOperator a2 = detail::a_squared(d);
    return 0.5 * (a2 + a2.adjoint() + detail::two_n_plus_one(d));
}

/// p^2 = (2N + 1 - a^2 - a^dagger^2)/2
inline FockOperator p_squared(Eigen::Index d) {
    require_dimension(d);
    const FockOperator a2 = detail::a_squared(d);
    return 0.5 * (detail::two_n_plus_one(d) - a2 - a2.adjoint());
}

/// (x p + p x)/2 = i(a^dagger^2 - a^2)/2
inline FockOperator xp_symmetric(Eigen::Index d) {
    require_dimension(d);
    const FockOperator a2 = detail::a_squared(d);
    return 0.5 * I * (a2.adjoint() - a2);
}

inline double hermiticity_defect(const FockOperator& h) { return (h - h.adjoint()).cwiseAbs().maxCoeff(); }

inline double unitarity_defect(const FockOperator& u) {
    return (u.adjoint() * u - FockOperator::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

/// exp(-i H) for Hermitian H, through its eigendecomposition.
inline FockOperator unitary_from_hamiltonian(const FockOperator& h) {
    if (hermiticity_defect(h) > 1e-12) throw DomainError("generator is not Hermitian");
    const Eigen::SelfAdjointEigenSolver<FockOperator> es(h);
    const Eigen::VectorXcd phases = (-I * es.eigenvalues().cast<cplx>()).array().exp();
    FockOperator u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    if (unitarity_defect(u) > 1e-9) throw DomainError("matrix exponential lost unitarity");
    return u;
}

/// exp(i u (x p + p x)/2): conjugation sends x -> e^u x, p -> e^{-u} p.
inline FockOperator dilation_unitary(double u, Eigen::Index d) {
    require_dimension(d);
    if (std::abs(u) > 0.5) warn("dilation_unitary: |u| = " + std::to_string(std::abs(u)) + " exceeds 0.5, truncation error grows");
    return unitary_from_hamiltonian(-u * xp_symmetric(d));
}

/// exp(-i c x^2): conjugation sends p -> p + 2 c x.
inline FockOperator shear_unitary(double c, Eigen::Index d) {
    require_dimension(d);
    if (std::abs(c) > 0.5) warn("shear_unitary: |c| = " + std::to_string(std::abs(c)) + " exceeds 0.5, truncation error grows");
    return unitary_from_hamiltonian(c * x_squared(d));
}

/// max |U A U^dagger - expected| on the leading block of side floor(d (1 - margin)).
inline double conjugation_residual(const FockOperator& U, const FockOperator& A, const FockOperator& expected,
                                   double margin_fraction = 2.0 / 3.0) {
    const Eigen::Index d = U.rows();
    if (U.cols() != d || A.rows() != d || A.cols() != d || expected.rows() != d || expected.cols() != d)
        throw UsageError("conjugation_residual: dimension mismatch");
    if (!(margin_fraction >= 0.0 && margin_fraction < 1.0)) throw UsageError("margin_fraction must lie in [0, 1)");
    const auto side = static_cast<Eigen::Index>(std::floor(static_cast<double>(d) * (1.0 - margin_fraction)));
    if (side == 0) return 0.0;
    const FockOperator conj = U * A * U.adjoint();
    return (conj - expected).topLeftCorner(side, side).cwiseAbs().maxCoeff();
}

/// How moments follow a frame change |phi> = U|psi> when U z U^dagger = M z.
enum class FrameRule {
    inverse_map,       // moments move with M^{-1}: Var x of T_u|0> is e^{-2u}/2
    forward_map,       // moments move with M: Var x of T_u|0> is e^{2u}/2
    indistinguishable, // u = 0
};

struct FrameDirection {
    double variance_x;
    double variance_p;
    FrameRule rule;
};

/// Moments of T_u|0> computed in the number basis.
inline FrameDirection frame_direction_oracle(double u, Eigen::Index d = 60) {
    require_dimension(d, static_cast<Eigen::Index>(min_dimension));
    const FockOperator U = dilation_unitary(u, d);
    Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(d);
    vac(0) = 1.0;
    const Eigen::VectorXcd psi = U * vac;
    const auto [x, p] = quadrature(d);
    auto expect = [&](const FockOperator& op) { return psi.dot(op * psi).real(); };
    const double mx = expect(x);
    const double mp = expect(p);
    FrameDirection out{expect(x_squared(d)) - mx * mx, expect(p_squared(d)) - mp * mp, FrameRule::indistinguishable};
    const double contracts = 0.5 * std::exp(-2.0 * u);
    const double expands = 0.5 * std::exp(2.0 * u);
    if (std::abs(contracts - expands) > 1e-12)
        out.rule = std::abs(out.variance_x - contracts) < std::abs(out.variance_x - expands) ? FrameRule::inverse_map
                                                                                            : FrameRule::forward_map;
    return out;
}

/// Normalised two-mode state vector.
struct TwoModeState {
    Eigen::VectorXcd amplitudes;
    Eigen::Index d = 0;

    static TwoModeState number(Eigen::Index n1, Eigen::Index n2, Eigen::Index d) {
        TwoModeState s{Eigen::VectorXcd::Zero(d * d), d};
        s.amplitudes(n1 * d + n2) = 1.0;
        return s;
    }

    /// Product of coherent states with <z> = mu, renormalised after truncation.
    static TwoModeState coherent(const Vec4& mu, Eigen::Index d) {
        auto single = [d](double x, double p) {
            const cplx alpha = cplx(x, p) / std::sqrt(2.0);
            Eigen::VectorXcd c(d);
            c(0) = std::exp(-0.5 * std::norm(alpha));
            for (Eigen::Index n = 1; n < d; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
            return c;
        };
        const Eigen::VectorXcd c1 = single(mu(coord::x1), mu(coord::p1));
        const Eigen::VectorXcd c2 = single(mu(coord::x2), mu(coord::p2));
        TwoModeState s{Eigen::VectorXcd(d * d), d};
        for (Eigen::Index n1 = 0; n1 < d; ++n1) s.amplitudes.segment(n1 * d, d) = c1(n1) * c2;
        s.amplitudes.normalize();
        return s;
    }
};

/// Population in the top tenth of levels of either mode (the larger of the two).
inline double tail_population(const TwoModeState& s) {
    const Eigen::Index d = s.d;
    const Eigen::Index first_tail = d - (d + 9) / 10;
    double tail1 = 0.0;
    double tail2 = 0.0;
    for (Eigen::Index n1 = 0; n1 < d; ++n1)
        for (Eigen::Index n2 = 0; n2 < d; ++n2) {
            const double w = std::norm(s.amplitudes(n1 * d + n2));
            if (n1 >= first_tail) tail1 += w;
            if (n2 >= first_tail) tail2 += w;
        }
    return std::max(tail1, tail2);
}

/// Symmetrised phase-space operators on the two-mode space.
class TwoModeOperators {
public:
    explicit TwoModeOperators(Eigen::Index d) : d_(d) {
        require_dimension(d, static_cast<Eigen::Index>(min_dimension));
        const auto [x, p] = quadrature(d);
        const std::array<FockOperator, 2> single{x, p};
        const FockOperator id = FockOperator::Identity(d, d);
        // z_a on the product space; quadrature index q(a) = a / 2 (x or p), mode = a % 2.
        for (Eigen::Index a = 0; a < 4; ++a) first_[static_cast<std::size_t>(a)] = embed(single[q(a)], a % 2, id);
        const std::array<FockOperator, 3> same{x_squared(d), xp_symmetric(d), p_squared(d)};
        for (Eigen::Index a = 0; a < 4; ++a)
            for (Eigen::Index b = a; b < 4; ++b) {
                SparseOperator op;
                if (a % 2 == b % 2) {
                    // Same mode: x^2, (xp+px)/2 or p^2.
                    op = embed(same[q(a) + q(b)], a % 2, id);
                } else {
                    op = first_[static_cast<std::size_t>(a)] * first_[static_cast<std::size_t>(b)];
                }
                second_[pair_index(a, b)] = std::move(op);
            }
    }

    Eigen::Index d() const noexcept { return d_; }
    const SparseOperator& z(Eigen::Index a) const { return first_[static_cast<std::size_t>(a)]; }
    /// (z_a z_b + z_b z_a)/2
    const SparseOperator& zz(Eigen::Index a, Eigen::Index b) const { return second_[pair_index(a, b)]; }

    /// 1/2 sum_ab S_ab (z_a z_b + z_b z_a)/2
    SparseOperator hamiltonian(const Mat4& S) const {
        SparseOperator h(d_ * d_, d_ * d_);
        for (Eigen::Index a = 0; a < 4; ++a)
            for (Eigen::Index b = a; b < 4; ++b) {
                const double w = a == b ? 0.5 * S(a, a) : S(a, b);
                if (w != 0.0) h += w * zz(a, b);
            }
        return h;
    }

    GaussianState moments(const Eigen::VectorXcd& psi) const {
        GaussianState s;
        for (Eigen::Index a = 0; a < 4; ++a) s.mu(a) = psi.dot(z(a) * psi).real();
        for (Eigen::Index a = 0; a < 4; ++a)
            for (Eigen::Index b = a; b < 4; ++b)
                s.sigma(a, b) = s.sigma(b, a) = psi.dot(zz(a, b) * psi).real() - s.mu(a) * s.mu(b);
        return s;
    }

private:
    static std::size_t q(Eigen::Index a) { return static_cast<std::size_t>(a / 2); }

    static std::size_t pair_index(Eigen::Index a, Eigen::Index b) {
        if (a > b) std::swap(a, b);
        return static_cast<std::size_t>(a * 4 + b);
    }

    static SparseOperator embed(const FockOperator& op, Eigen::Index mode, const FockOperator& id) {
        const Eigen::Index d = op.rows();
        std::vector<Eigen::Triplet<cplx>> entries;
        const FockOperator& left = mode == 0 ? op : id;
        const FockOperator& right = mode == 0 ? id : op;
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) {
                if (left(i, j) == cplx{}) continue;
                for (Eigen::Index k = 0; k < d; ++k)
                    for (Eigen::Index l = 0; l < d; ++l)
                        if (right(k, l) != cplx{}) entries.emplace_back(i * d + k, j * d + l, left(i, j) * right(k, l));
            }
        SparseOperator out(d * d, d * d);
        out.setFromTriplets(entries.begin(), entries.end());
        return out;
    }

    Eigen::Index d_;
    std::array<SparseOperator, 4> first_;
    std::array<SparseOperator, 16> second_;
};

struct FockTrajectory {
    std::vector<double> times;
    std::vector<GaussianState> moments;
    double max_tail = 0.0;
    std::size_t renormalisations = 0;
};

inline constexpr double initial_tail_limit = 1e-8;
inline constexpr double tail_abort_limit = 1e-4;

namespace detail {

// Quadratic Hamiltonians change n1 + n2 by an even amount, so the total
// parity sectors evolve independently.
struct ParitySectors {
    std::array<std::vector<Eigen::Index>, 2> members;
    std::vector<Eigen::Index> slot; // position of a basis index within its sector

    explicit ParitySectors(Eigen::Index d) : slot(static_cast<std::size_t>(d * d)) {
        for (Eigen::Index n1 = 0; n1 < d; ++n1)
            for (Eigen::Index n2 = 0; n2 < d; ++n2) {
                auto& sector = members[static_cast<std::size_t>((n1 + n2) % 2)];
                slot[static_cast<std::size_t>(n1 * d + n2)] = static_cast<Eigen::Index>(sector.size());
                sector.push_back(n1 * d + n2);
            }
    }

    Eigen::Index parity(Eigen::Index idx, Eigen::Index d) const { return (idx / d + idx % d) % 2; }
};

template <class Matrix>
Matrix sector_block(const SparseOperator& h, const ParitySectors& sectors, std::size_t which, Eigen::Index d) {
    const auto n = static_cast<Eigen::Index>(sectors.members[which].size());
    Matrix block = Matrix::Zero(n, n);
    for (Eigen::Index col = 0; col < h.outerSize(); ++col)
        for (SparseOperator::InnerIterator it(h, col); it; ++it) {
            if (static_cast<std::size_t>(sectors.parity(it.row(), d)) != which) continue;
            const Eigen::Index r = sectors.slot[static_cast<std::size_t>(it.row())];
            const Eigen::Index c = sectors.slot[static_cast<std::size_t>(it.col())];
            if constexpr (std::is_same_v<typename Matrix::Scalar, double>)
                block(r, c) = it.value().real();
            else
                block(r, c) = it.value();
        }
    return block;
}

// psi <- exp(-i h dt) psi within one sector.
template <class Matrix>
Eigen::VectorXcd sector_step(const Matrix& h, const Eigen::VectorXcd& psi, double dt) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const Eigen::VectorXcd phases = (-I * dt * es.eigenvalues().template cast<cplx>()).array().exp();
    const Eigen::VectorXcd coeffs = es.eigenvectors().adjoint().template cast<cplx>() * psi;
    return es.eigenvectors().template cast<cplx>() * phases.cwiseProduct(coeffs);
}

} // namespace detail

/// Midpoint-frozen exponential propagation psi <- exp(-i H(t + h/2) h) psi.
inline FockTrajectory two_mode_evolve(Pipeline pipeline, const SystemParams& p, const TwoModeState& psi0,
                                      const TimeGrid& g) {
    const Eigen::Index d = psi0.d;
    if (d > 40) throw UsageError("two_mode_evolve supports d <= 40");
    if (psi0.amplitudes.size() != d * d) throw UsageError("state length does not match d^2");
    tdho::detail::require_grid_in_window(p, g);

    const TwoModeOperators ops(d);
    const detail::ParitySectors sectors(d);
    TwoModeState psi = psi0;

    FockTrajectory traj;
    const double tail0 = tail_population(psi);
    if (tail0 > initial_tail_limit) throw TruncationError("initial tail population " + std::to_string(tail0), g.t0());
    traj.max_tail = tail0;

    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.moments.push_back(ops.moments(psi.amplitudes));
    };
    record(g.t0());

    const double h = g.step();
    for (std::size_t i = 0; i < g.intervals(); ++i) {
        const double t_mid = g.node(i) + 0.5 * h;
        const Mat4 S = build_hamiltonian(pipeline, p, t_mid).S;
        const bool real = S.topRightCorner<2, 2>().isZero(0.0);
        const SparseOperator H = ops.hamiltonian(S);
        for (std::size_t which = 0; which < 2; ++which) {
            const auto& members = sectors.members[which];
            Eigen::VectorXcd local(static_cast<Eigen::Index>(members.size()));
            for (std::size_t k = 0; k < members.size(); ++k)
                local(static_cast<Eigen::Index>(k)) = psi.amplitudes(members[k]);
            if (real)
                local = detail::sector_step(detail::sector_block<Eigen::MatrixXd>(H, sectors, which, d), local, h);
            else
                local = detail::sector_step(detail::sector_block<Eigen::MatrixXcd>(H, sectors, which, d), local, h);
            for (std::size_t k = 0; k < members.size(); ++k)
                psi.amplitudes(members[k]) = local(static_cast<Eigen::Index>(k));
        }

        const double t = g.node(i + 1);
        if (!psi.amplitudes.allFinite()) throw NumericalFailure("non-finite Fock amplitudes", t);
        const double norm = psi.amplitudes.norm();
        if (std::abs(norm - 1.0) > 1e-9) {
            warn("two_mode_evolve: renormalising state (norm " + std::to_string(norm) + ") at t = " + std::to_string(t));
            psi.amplitudes /= norm;
            ++traj.renormalisations;
        }
        const double tail = tail_population(psi);
        traj.max_tail = std::max(traj.max_tail, tail);
        if (tail > tail_abort_limit) throw TruncationError("tail population " + std::to_string(tail), t);
        record(t);
    }
    return traj;
}

} // namespace tdho::fock
