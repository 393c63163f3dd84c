#pragma once

// Moment propagation under the quadratic Hamiltonians, frame-equivalence
// residuals and the single-oscillator rescaling demo.
//
// For H = 1/2 z^T S(t) z the means obey d mu/dt = J S mu and the covariance
// d Sigma/dt = A Sigma + Sigma A^T with A = J S; both are integrated with
// fixed-step classic RK4.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tdho/errors.hpp"
#include "tdho/params.hpp"
#include "tdho/quadratic.hpp"
#include "tdho/sympl.hpp"

namespace tdho {

class TimeGrid {
public:
    TimeGrid(double t0, double t1, double h) : t0_(t0), t1_(t1), h_(h) {
        if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("time grid step must be positive");
        if (!std::isfinite(t0) || !std::isfinite(t1) || t1 < t0) throw UsageError("time grid requires t1 >= t0");
        intervals_ = static_cast<std::size_t>(std::llround((t1 - t0) / h));
        if (t1 > t0 && intervals_ == 0) throw UsageError("time grid step exceeds the interval");
    }

    double t0() const noexcept { return t0_; }
    double t1() const noexcept { return t1_; }
    double h() const noexcept { return h_; }
    std::size_t size() const noexcept { return intervals_ + 1; }
    std::size_t intervals() const noexcept { return intervals_; }

    /// Step actually taken: (t1 - t0) / intervals, equal to h when h divides the interval.
    double step() const noexcept { return intervals_ == 0 ? 0.0 : (t1_ - t0_) / static_cast<double>(intervals_); }

    double node(std::size_t i) const noexcept {
        return i == intervals_ ? t1_ : t0_ + static_cast<double>(i) * step();
    }

    TimeGrid halved() const { return TimeGrid(t0_, t1_, 0.5 * h_); }

private:
    double t0_;
    double t1_;
    double h_;
    std::size_t intervals_ = 0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<GaussianState> states;
};

namespace detail {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
template <int N>
using Mat = Eigen::Matrix<double, N, N>;

template <int N>
Mat<N> symplectic_form_n() {
    constexpr int half = N / 2;
    Mat<N> J = Mat<N>::Zero();
    J.template topRightCorner<half, half>().setIdentity();
    J.template bottomLeftCorner<half, half>() = -Eigen::Matrix<double, half, half>::Identity();
    return J;
}

template <int N>
bool all_finite(const Vec<N>& mu, const Mat<N>& sigma) {
    return mu.allFinite() && sigma.allFinite();
}

// RK4 for the moment equations. `generator(t)` returns A(t) = J S(t);
// `visit(i, t, mu, sigma)` is called at every node including the first.
template <int N, class Generator, class Visitor>
void rk4_moments(const TimeGrid& g, Vec<N> mu, Mat<N> sigma, Generator&& generator, Visitor&& visit) {
    visit(std::size_t{0}, g.node(0), mu, sigma);
    const double h = g.step();
    auto cov_rhs = [](const Mat<N>& A, const Mat<N>& s) -> Mat<N> { return A * s + s * A.transpose(); };
    Mat<N> a_start = g.intervals() > 0 ? generator(g.node(0)) : Mat<N>::Zero();
    for (std::size_t i = 0; i < g.intervals(); ++i) {
        const double t = g.node(i);
        const Mat<N> a_mid = generator(t + 0.5 * h);
        const Mat<N> a_end = generator(g.node(i + 1));

        const Vec<N> k1 = a_start * mu;
        const Vec<N> k2 = a_mid * (mu + 0.5 * h * k1);
        const Vec<N> k3 = a_mid * (mu + 0.5 * h * k2);
        const Vec<N> k4 = a_end * (mu + h * k3);
        mu += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        const Mat<N> c1 = cov_rhs(a_start, sigma);
        const Mat<N> c2 = cov_rhs(a_mid, sigma + 0.5 * h * c1);
        const Mat<N> c3 = cov_rhs(a_mid, sigma + 0.5 * h * c2);
        const Mat<N> c4 = cov_rhs(a_end, sigma + h * c3);
        sigma += (h / 6.0) * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
        sigma = (0.5 * (sigma + sigma.transpose())).eval();

        if (!all_finite<N>(mu, sigma)) throw NumericalFailure("non-finite moments", g.node(i + 1));
        visit(i + 1, g.node(i + 1), mu, sigma);
        a_start = a_end;
    }
}

inline void require_grid_in_window(const SystemParams& p, const TimeGrid& g) {
    if (!p.contains(g.t0()) || !p.contains(g.t1()))
        throw UsageError("time grid [" + std::to_string(g.t0()) + ", " + std::to_string(g.t1()) +
                         "] leaves the parameter window");
}

inline auto generator_for(Pipeline pipeline, const SystemParams& p) {
    return [pipeline, &p](double t) -> Mat4 { return symplectic_form() * build_hamiltonian(pipeline, p, t).S; };
}

} // namespace detail

/// Threshold below which a trajectory state counts as unphysical.
inline constexpr double physicality_tolerance = 1e-6;

inline Trajectory evolve(Pipeline pipeline, const SystemParams& p, const GaussianState& s0, const TimeGrid& g) {
    detail::require_grid_in_window(p, g);
    if (!is_physical(s0)) throw DomainError("evolve: initial state violates the uncertainty bound");
    Trajectory traj;
    traj.times.reserve(g.size());
    traj.states.reserve(g.size());
    detail::rk4_moments<4>(g, s0.mu, s0.sigma, detail::generator_for(pipeline, p),
                           [&](std::size_t, double t, const Vec4& mu, const Mat4& sigma) {
                               GaussianState s{mu, sigma};
                               if (!is_physical(s, physicality_tolerance))
                                   throw InvariantViolation("state became unphysical at t = " + std::to_string(t));
                               traj.times.push_back(t);
                               traj.states.push_back(std::move(s));
                           });
    return traj;
}

/// Fundamental matrix Phi(t1, t0) of d Phi/dt = J S(t) Phi.
inline SymplecticMap propagator(Pipeline pipeline, const SystemParams& p, const TimeGrid& g) {
    detail::require_grid_in_window(p, g);
    Mat4 phi = Mat4::Identity();
    const auto generator = detail::generator_for(pipeline, p);
    const double h = g.step();
    for (std::size_t i = 0; i < g.intervals(); ++i) {
        const double t = g.node(i);
        const Mat4 a0 = generator(t);
        const Mat4 a1 = generator(t + 0.5 * h);
        const Mat4 a2 = generator(g.node(i + 1));
        const Mat4 k1 = a0 * phi;
        const Mat4 k2 = a1 * (phi + 0.5 * h * k1);
        const Mat4 k3 = a1 * (phi + 0.5 * h * k2);
        const Mat4 k4 = a2 * (phi + h * k3);
        phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!phi.allFinite()) throw NumericalFailure("non-finite propagator", g.node(i + 1));
    }
    return {phi};
}

/// Evolve in the pipeline's frame and map every node back to the lab frame.
inline Trajectory evolve_via_frame(Pipeline pipeline, const SystemParams& p, const GaussianState& s0,
                                   const TimeGrid& g) {
    const GaussianState start = push_state(s0, frame_map(pipeline, p, g.t0()), Direction::to_frame);
    Trajectory traj = evolve(pipeline, p, start, g);
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        traj.states[i] = push_state(traj.states[i], frame_map(pipeline, p, traj.times[i]), Direction::to_lab);
    return traj;
}

struct Residual {
    double mean = 0.0; // max_t |mu_A - mu_B|_2
    double cov = 0.0;  // max_t max_ab |Sigma_A - Sigma_B|
};

inline Residual trajectory_distance(const Trajectory& a, const Trajectory& b) {
    if (a.states.size() != b.states.size()) throw UsageError("trajectories have different lengths");
    Residual r;
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        r.mean = std::max(r.mean, (a.states[i].mu - b.states[i].mu).norm());
        r.cov = std::max(r.cov, (a.states[i].sigma - b.states[i].sigma).cwiseAbs().maxCoeff());
    }
    return r;
}

/// Lab-frame mismatch between direct evolution and evolution through `pipeline`'s frame.
inline Residual equivalence_residual(Pipeline pipeline, const SystemParams& p, const GaussianState& s0,
                                     const TimeGrid& g) {
    if (pipeline == Pipeline::direct) throw UsageError("equivalence_residual needs a transformed pipeline");
    return trajectory_distance(evolve(Pipeline::direct, p, s0, g), evolve_via_frame(pipeline, p, s0, g));
}

/// Mean-vector error caused by dropping the dilation term.
inline double mg_discrepancy(const SystemParams& p, const GaussianState& s0, const TimeGrid& g) {
    return equivalence_residual(Pipeline::macedo_guedes, p, s0, g).mean;
}

struct InvariantDrift {
    double det_sigma = 0.0;     // max relative change of det Sigma
    double symplectic_eig = 0.0; // max relative change of either symplectic eigenvalue
};

inline InvariantDrift trajectory_invariants(const Trajectory& traj) {
    InvariantDrift d;
    if (traj.states.empty()) return d;
    const double det0 = traj.states.front().sigma.determinant();
    const auto nu0 = symplectic_eigenvalues(traj.states.front().sigma);
    for (const auto& s : traj.states) {
        d.det_sigma = std::max(d.det_sigma, std::abs(s.sigma.determinant() - det0) / std::abs(det0));
        const auto nu = symplectic_eigenvalues(s.sigma);
        for (std::size_t j = 0; j < 2; ++j)
            d.symplectic_eig = std::max(d.symplectic_eig, std::abs(nu[j] - nu0[j]) / nu0[j]);
    }
    return d;
}

/// Single oscillator H = P^2/(2M) + M X^2/2 and the static rescaling that makes
/// it look like p^2/2 + x^2/2.
enum class NaiveRescaling {
    as_written,       // x = M X, p = P / M
    static_canonical, // x = sqrt(M) X, p = P / sqrt(M), exact whenever M is constant
};

struct DemoState {
    Eigen::Vector2d mu{1.0, 0.5};
    Eigen::Matrix2d sigma = 0.5 * Eigen::Matrix2d::Identity();
};

struct DemoResult {
    double naive_residual = 0.0;
    std::string note;
};

inline DemoResult single_oscillator_demo(const ParamFamily& mass, const TimeGrid& g, const DemoState& s0 = {},
                                         NaiveRescaling rescaling = NaiveRescaling::static_canonical) {
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double m = eval_family(mass, g.node(i));
        if (!(m > 0.0) || !std::isfinite(m))
            throw DomainError("demo mass is not positive at t = " + std::to_string(g.node(i)));
    }
    const Eigen::Matrix2d J = detail::symplectic_form_n<2>();
    auto scale = [&](double t) {
        const double m = eval_family(mass, t);
        return rescaling == NaiveRescaling::as_written ? m : std::sqrt(m);
    };

    std::vector<Eigen::Vector2d> lab(g.size());
    detail::rk4_moments<2>(
        g, s0.mu, s0.sigma,
        [&](double t) -> Eigen::Matrix2d {
            const double m = eval_family(mass, t);
            return J * Eigen::Vector2d(m, 1.0 / m).asDiagonal().toDenseMatrix();
        },
        [&](std::size_t i, double, const Eigen::Vector2d& mu, const Eigen::Matrix2d&) { lab[i] = mu; });

    const double a0 = scale(g.t0());
    const Eigen::Vector2d naive_start(a0 * s0.mu(0), s0.mu(1) / a0);
    const Eigen::Matrix2d naive_scaling = Eigen::Vector2d(a0, 1.0 / a0).asDiagonal().toDenseMatrix();
    const Eigen::Matrix2d naive_sigma = naive_scaling * s0.sigma * naive_scaling;

    DemoResult result;
    detail::rk4_moments<2>(
        g, naive_start, naive_sigma, [&](double) -> Eigen::Matrix2d { return J; },
        [&](std::size_t i, double t, const Eigen::Vector2d& mu, const Eigen::Matrix2d&) {
            const double a = scale(t);
            const Eigen::Vector2d back(mu(0) / a, a * mu(1));
            result.naive_residual = std::max(result.naive_residual, (back - lab[i]).norm());
        });

    result.note = result.naive_residual <= 1e-8
                      ? "static rescaling reproduces the lab dynamics"
                      : "static rescaling misses the frame terms generated by the time-dependent mass";
    return result;
}

} // namespace tdho
