#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "error.hpp"
#include "model.hpp"

namespace lramp {

using cplx = std::complex<double>;
using CVec4 = std::array<cplx, 4>;

/// Real 4x4 generator acting on the coherence vector.
struct Supermatrix {
    std::array<Vec4, 4> entries{};
    Kind kind = Kind::full_lindblad;

    [[nodiscard]] double operator()(int i, int j) const noexcept
    {
        return entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    [[nodiscard]] double trace() const noexcept
    {
        return entries[0][0] + entries[1][1] + entries[2][2] + entries[3][3];
    }
    [[nodiscard]] Vec4 apply(const Vec4& v) const noexcept
    {
        Vec4 out{};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) out[i] += entries[i][j] * v[j];
        return out;
    }
};

/// L|v> without materialising the matrix; used inside integrator stages.
inline Vec4 liouvillian_apply(double p, double delta, double gamma, Kind kind, const Vec4& v) noexcept
{
    if (kind == Kind::full_lindblad) {
        return {0.0,
                -2.0 * gamma * v[1] + 2.0 * delta * v[3],
                -2.0 * gamma * v[2] - 2.0 * p * v[3],
                -4.0 * gamma * (v[0] + v[3]) - 2.0 * delta * v[1] + 2.0 * p * v[2]};
    }
    return {-2.0 * gamma * v[3],
            2.0 * delta * v[3],
            -2.0 * p * v[3],
            -2.0 * gamma * v[0] - 2.0 * delta * v[1] + 2.0 * p * v[2]};
}

inline Supermatrix build_supermatrix(const ModeParams& m, double gamma, Kind kind)
{
    require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be finite and non-negative");
    Supermatrix s;
    s.kind = kind;
    for (std::size_t j = 0; j < 4; ++j) {
        Vec4 unit{};
        unit[j] = 1.0;
        const Vec4 col = liouvillian_apply(m.p, m.delta, gamma, kind, unit);
        for (std::size_t i = 0; i < 4; ++i) s.entries[i][j] = col[i];
    }
    return s;
}

/// Closed-form spectrum; index 0 is the kernel, 2 and 3 the oscillating pair.
struct EigenSystem {
    Kind kind = Kind::full_lindblad;
    std::array<cplx, 4> lambdas{};
    std::array<CVec4, 4> right{};
    std::array<CVec4, 4> left{};
    std::array<cplx, 4> norms{};
};

struct EigenOptions {
    /// Relative distance to the EP (in units of p²+Δ²) below which the basis is refused.
    double ep_tolerance = 1e-9;
};

inline cplx bilinear(const CVec4& e, const CVec4& d) noexcept
{
    cplx s{};
    for (std::size_t i = 0; i < 4; ++i) s += e[i] * d[i];
    return s;
}

/// Eigenvalues only; defined at the EP as well.
inline std::array<cplx, 4> eigenvalues(const ModeParams& m, double gamma, Kind kind)
{
    const double e2 = m.energy2();
    if (kind == Kind::full_lindblad) {
        const cplx s = std::sqrt(cplx(4.0 * e2 - gamma * gamma, 0.0));
        const cplx c(-3.0 * gamma, 0.0);
        return {cplx{}, cplx(-2.0 * gamma, 0.0), c + cplx(0, 1) * s, c - cplx(0, 1) * s};
    }
    const cplx w = std::sqrt(cplx(e2 - gamma * gamma, 0.0));
    return {cplx{}, cplx{}, cplx(0, 2) * w, cplx(0, -2) * w};
}

inline EigenSystem eigensystem(const ModeParams& m, double gamma, Kind kind, const EigenOptions& opt = {})
{
    require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be finite and non-negative");
    const double p = m.p;
    const double d = m.delta;
    const double e2 = m.energy2();
    if (e2 == 0.0) throw Error(Errc::degenerate_mode, "p = delta = 0 has no two-dimensional Hamiltonian sector");

    EigenSystem es;
    es.kind = kind;
    es.lambdas = eigenvalues(m, gamma, kind);
    const cplx i1(0.0, 1.0);

    if (kind == Kind::full_lindblad) {
        const double gap = 4.0 * e2 - gamma * gamma;
        if (std::abs(gap) < opt.ep_tolerance * e2)
            throw Error(Errc::ep_degenerate, "4(p^2+delta^2) = gamma^2 within tolerance");
        const double w = e2 + 2.0 * gamma * gamma;
        const cplx s = std::sqrt(cplx(gap, 0.0));

        es.right[0] = {0.5, -d * gamma / w, p * gamma / w, -gamma * gamma / w};
        es.left[0] = {1.0, 0.0, 0.0, 0.0};
        es.right[1] = {0.0, p, d, 0.0};
        es.left[1] = es.right[1];
        for (int k = 0; k < 2; ++k) {
            const cplx g = gamma + (k == 0 ? i1 : -i1) * s;
            const cplx h = 3.0 * gamma + (k == 0 ? i1 : -i1) * s;
            es.right[2 + k] = {0.0, -d * g / (2.0 * e2), p * g / (2.0 * e2), 1.0};
            es.left[2 + k] = {gamma * h / w, d * g / (2.0 * e2), -p * g / (2.0 * e2), 1.0};
        }
    } else {
        const double gap = e2 - gamma * gamma;
        if (std::abs(gap) < opt.ep_tolerance * e2)
            throw Error(Errc::ep_degenerate, "p^2+delta^2 = gamma^2 within tolerance");
        es.right[0] = {1.0, -d * gamma / e2, p * gamma / e2, 0.0};
        es.left[0] = {1.0, d * gamma / e2, -p * gamma / e2, 0.0};
        es.right[1] = {0.0, p, d, 0.0};
        es.left[1] = es.right[1];
        for (int k = 0; k < 2; ++k) {
            const cplx mu = es.lambdas[static_cast<std::size_t>(2 + k)];
            es.right[2 + k] = {-2.0 * gamma / mu, 2.0 * d / mu, -2.0 * p / mu, 1.0};
            es.left[2 + k] = {-2.0 * gamma / mu, -2.0 * d / mu, 2.0 * p / mu, 1.0};
        }
    }
    for (std::size_t a = 0; a < 4; ++a) es.norms[a] = bilinear(es.left[a], es.right[a]);
    return es;
}

/// Normalised full-Lindblad kernel state.
inline CoherenceVector steady_state(const ModeParams& m, double gamma)
{
    const double w = m.energy2() + 2.0 * gamma * gamma;
    if (w == 0.0) throw Error(Errc::degenerate_mode, "steady state undefined for p = delta = gamma = 0");
    return {{0.5, -m.delta * gamma / w, m.p * gamma / w, -gamma * gamma / w}};
}

/// d(steady_state)/d(gamma), component-wise.
inline Vec4 steady_state_gamma_derivative(const ModeParams& m, double gamma)
{
    const double e2 = m.energy2();
    const double w = e2 + 2.0 * gamma * gamma;
    const double w2 = w * w;
    const double lin = (e2 - 2.0 * gamma * gamma) / w2;
    return {0.0, -m.delta * lin, m.p * lin, -2.0 * gamma * e2 / w2};
}

inline CoherenceVector initial_ground_state(const ModeParams& m)
{
    const double e2 = m.energy2();
    if (e2 == 0.0) throw Error(Errc::degenerate_mode, "ground state undefined for p = delta = 0");
    const double e = std::sqrt(e2);
    return CoherenceVector::from_bloch(-m.p / e, -m.delta / e, 0.0);
}

inline std::array<cplx, 4> project_onto_eigenbasis(const CoherenceVector& state, const EigenSystem& es)
{
    const CVec4 v{state.c[0], state.c[1], state.c[2], state.c[3]};
    std::array<cplx, 4> r{};
    for (std::size_t a = 0; a < 4; ++a) {
        if (std::abs(es.norms[a]) == 0.0) throw Error(Errc::ep_degenerate, "vanishing biorthogonal norm");
        r[a] = bilinear(es.left[a], v) / es.norms[a];
    }
    return r;
}

inline CVec4 reconstruct(const std::array<cplx, 4>& r, const EigenSystem& es) noexcept
{
    CVec4 out{};
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t i = 0; i < 4; ++i) out[i] += r[a] * es.right[a][i];
    return out;
}

inline double find_ep(const ModeParams& m, Kind kind)
{
    const double e = std::sqrt(m.energy2());
    return kind == Kind::full_lindblad ? 2.0 * e : e;
}

/// τ→∞ limit of the normalised no-jump state at coupling gamma, starting from
/// the ground state at gamma = 0.
///
/// Below the EP this is the kernel state continuously connected to the ground
/// state; above it (only reachable without a gap) the amplified eigenmode
/// dominates.
inline CoherenceVector adiabatic_nojump_state(const ModeParams& m, double gamma)
{
    const double e2 = m.energy2();
    if (e2 == 0.0) throw Error(Errc::degenerate_mode, "p = delta = 0");
    const double g2 = gamma * gamma;
    if (g2 <= e2) {
        const double w = std::sqrt(e2 - g2);
        return CoherenceVector::from_bloch(-(m.p * w + m.delta * gamma) / e2, (m.p * gamma - m.delta * w) / e2, 0.0);
    }
    const double w = std::sqrt(g2 - e2);
    return CoherenceVector::from_bloch(-m.delta / gamma, m.p / gamma, -w / gamma);
}

} // namespace lramp
