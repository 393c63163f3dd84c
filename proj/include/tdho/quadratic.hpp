#pragma once

// Hamiltonians of the coupled oscillator pair as quadratic forms
// H = 1/2 z^T S z over z = (x1, x2, p1, p2).
//
// A symmetrised product (x p + p x)/2 is represented by its Weyl symbol x p,
// so c * x_j p_j is stored as S(x_j, p_j) = S(p_j, x_j) = c.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "tdho/errors.hpp"
#include "tdho/params.hpp"

namespace tdho {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

/// Phase-space coordinate indices.
namespace coord {
inline constexpr Eigen::Index x1 = 0;
inline constexpr Eigen::Index x2 = 1;
inline constexpr Eigen::Index p1 = 2;
inline constexpr Eigen::Index p2 = 3;

inline constexpr Eigen::Index x(Oscillator j) noexcept { return static_cast<Eigen::Index>(index(j)); }
inline constexpr Eigen::Index p(Oscillator j) noexcept { return static_cast<Eigen::Index>(index(j)) + 2; }
} // namespace coord

struct QuadraticForm {
    Mat4 S = Mat4::Zero();

    double energy(const Vec4& z) const { return 0.5 * z.dot(S * z); }

    QuadraticForm operator+(const QuadraticForm& o) const { return {S + o.S}; }
    QuadraticForm operator-(const QuadraticForm& o) const { return {S - o.S}; }
};

/// Frame in which the Schrodinger equation is solved.
enum class Pipeline {
    direct,          // lab frame, original Hamiltonian
    tilde,           // after the squeeze T_u, reference mass from SystemParams
    unit_mass_tilde, // after T_u with m = 1
    paper_final,     // shear p -> p + (u'/2) x and the published final Hamiltonian
    corrected_final, // shear p -> p + u' x, Omega^2 = w^2 - u'^2 + u''
    macedo_guedes,   // unit_mass_tilde without the dilation term
};

inline constexpr std::array<Pipeline, 6> all_pipelines{Pipeline::direct,          Pipeline::tilde,
                                                       Pipeline::unit_mass_tilde, Pipeline::paper_final,
                                                       Pipeline::corrected_final, Pipeline::macedo_guedes};

inline std::string_view to_string(Pipeline p) {
    switch (p) {
    case Pipeline::direct: return "direct";
    case Pipeline::tilde: return "tilde";
    case Pipeline::unit_mass_tilde: return "unit_mass_tilde";
    case Pipeline::paper_final: return "paper_final";
    case Pipeline::corrected_final: return "corrected_final";
    case Pipeline::macedo_guedes: return "macedo_guedes";
    }
    throw UsageError("unknown pipeline");
}

inline Pipeline pipeline_from_string(std::string_view name) {
    for (Pipeline p : all_pipelines)
        if (to_string(p) == name) return p;
    throw UsageError("unknown pipeline '" + std::string(name) + "'");
}

/// Reference-mass choice used by a pipeline's squeeze frame. Everything past
/// the plain tilde frame is built on m = 1.
inline RefMassMode frame_mode(Pipeline pipeline, const SystemParams& p) {
    return pipeline == Pipeline::tilde ? p.ref_mass_mode() : RefMassMode::unity;
}

/// beta_j / u'_j for the shear p_j -> p_j + beta_j x_j, or nullopt without a shear.
inline std::optional<double> shear_ratio(Pipeline pipeline) {
    switch (pipeline) {
    case Pipeline::paper_final: return 0.5;
    case Pipeline::corrected_final: return 1.0;
    default: return std::nullopt;
    }
}

/// -u'_j (x_j p_j + p_j x_j)/2, the generator contribution of a moving squeeze frame.
inline QuadraticForm dilation_term(double u_dot_1, double u_dot_2) {
    QuadraticForm q;
    q.S(coord::x1, coord::p1) = q.S(coord::p1, coord::x1) = -u_dot_1;
    q.S(coord::x2, coord::p2) = q.S(coord::p2, coord::x2) = -u_dot_2;
    return q;
}

namespace detail {

inline QuadraticForm coupling_block(double k, double u1, double u2) {
    QuadraticForm q;
    const double off = -k * std::exp(u1 + u2);
    q.S(coord::x1, coord::x1) = k * std::exp(2.0 * u1);
    q.S(coord::x2, coord::x2) = k * std::exp(2.0 * u2);
    q.S(coord::x1, coord::x2) = q.S(coord::x2, coord::x1) = off;
    return q;
}

} // namespace detail

/// k (x2 e^{u2} - x1 e^{u1})^2 / 2. Negative k is accepted with a warning.
inline QuadraticForm coupling_term(double k, double u1, double u2) {
    if (k < 0.0) warn("negative coupling k = " + std::to_string(k));
    return detail::coupling_block(k, u1, u2);
}

namespace detail {

inline void require_in_window(const SystemParams& p, double t) {
    if (!p.contains(t)) throw UsageError("t = " + std::to_string(t) + " outside the parameter window");
}

// Squeeze-frame Hamiltonian with the dilation term switched on or off.
inline QuadraticForm squeezed_hamiltonian(const SystemParams& p, double t, RefMassMode mode, bool dilation) {
    QuadraticForm q;
    std::array<ScaleJet, 2> s{};
    for (Oscillator j : oscillators) {
        s[index(j)] = scale_from_mass(p, j, t, mode);
        const double m = eval_family(p.mass(j), t);
        const double w = eval_family(p.frequency(j), t);
        const double e2u = std::exp(2.0 * s[index(j)].u);
        if (mode == RefMassMode::unity) {
            q.S(coord::p(j), coord::p(j)) = 1.0;
            q.S(coord::x(j), coord::x(j)) = w * w;
        } else {
            q.S(coord::p(j), coord::p(j)) = 1.0 / (m * e2u);
            q.S(coord::x(j), coord::x(j)) = m * w * w * e2u;
        }
    }
    q = q + coupling_block(eval_family(p.coupling(), t), s[0].u, s[1].u);
    if (dilation) q = q + dilation_term(s[0].u_dot, s[1].u_dot);
    return q;
}

// p-block identity, x-block diag(Omega_j^2) plus the scaled coupling.
inline QuadraticForm final_frame_hamiltonian(const SystemParams& p, double t, bool corrected) {
    QuadraticForm q;
    std::array<ScaleJet, 2> s{};
    for (Oscillator j : oscillators) {
        const ScaleJet sj = scale_from_mass(p, j, t, RefMassMode::unity);
        s[index(j)] = sj;
        const double w = eval_family(p.frequency(j), t);
        const double omega_sq = corrected ? w * w - sj.u_dot * sj.u_dot + sj.u_ddot
                                          : w * w - (sj.u_dot * sj.u_dot - 2.0 * sj.u_ddot) / 4.0;
        q.S(coord::p(j), coord::p(j)) = 1.0;
        q.S(coord::x(j), coord::x(j)) = omega_sq;
    }
    return q + coupling_block(eval_family(p.coupling(), t), s[0].u, s[1].u);
}

} // namespace detail

inline QuadraticForm build_hamiltonian(Pipeline pipeline, const SystemParams& p, double t) {
    detail::require_in_window(p, t);
    switch (pipeline) {
    case Pipeline::direct: {
        QuadraticForm q;
        for (Oscillator j : oscillators) {
            const double m = eval_family(p.mass(j), t);
            if (!(m > 0.0)) throw DomainError("nonpositive mass at t = " + std::to_string(t));
            const double w = eval_family(p.frequency(j), t);
            q.S(coord::p(j), coord::p(j)) = 1.0 / m;
            q.S(coord::x(j), coord::x(j)) = m * w * w;
        }
        return q + detail::coupling_block(eval_family(p.coupling(), t), 0.0, 0.0);
    }
    case Pipeline::tilde: return detail::squeezed_hamiltonian(p, t, p.ref_mass_mode(), true);
    case Pipeline::unit_mass_tilde: return detail::squeezed_hamiltonian(p, t, RefMassMode::unity, true);
    case Pipeline::macedo_guedes: return detail::squeezed_hamiltonian(p, t, RefMassMode::unity, false);
    case Pipeline::paper_final: return detail::final_frame_hamiltonian(p, t, false);
    case Pipeline::corrected_final: return detail::final_frame_hamiltonian(p, t, true);
    }
    throw UsageError("unknown pipeline");
}

} // namespace tdho
