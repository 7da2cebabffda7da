#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "chebyshev.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "propagator.hpp"

namespace lramp {

/// Trace-sector coefficient r0 and the P/M pair of the no-jump dynamics on
/// the PT ramp γ = Δx.
struct NoJumpState {
    double r0 = 0.0;
    double P = 0.0;
    double M = 0.0;
};

inline constexpr double default_guard = 1e-6;

namespace detail {

inline double nojump_s2(double x, double y, double guard)
{
    const double G = 1.0 + y * y;
    if (x > std::sqrt(G) - guard)
        throw Error(Errc::singular_point, "x = " + std::to_string(x) + " within the guard band of sqrt(1+y^2)");
    return G - x * x;
}

} // namespace detail

inline NoJumpState nojump_rhs(double x, double y, double T, const NoJumpState& s, double guard = default_guard)
{
    require(T > 0.0, "rate must be positive");
    const double s2 = detail::nojump_s2(x, y, guard);
    const double sq = std::sqrt(s2);
    const double G = 1.0 + y * y;
    return {x * s.r0 / s2 - G * s.M / (s2 * sq), 2.0 * T * sq * s.M, -s.r0 / sq - 2.0 * T * sq * s.P};
}

/// σ_z of the state (r0, P, M) at x.
inline double nojump_sigma_z(double x, double y, const NoJumpState& s)
{
    const double sq = std::sqrt(1.0 + y * y - x * x);
    return s.P / (s.r0 + x / sq * s.M);
}

/// Integrates the reduced (r0, P, M) system from x = 0; the default start is
/// the ground state (r0 = 1/2, P = M = 0).
inline NoJumpState nojump_reduced(double y, double T, double x_end, const StepControls& c = {},
                                  double guard = default_guard, const NoJumpState& start = {0.5, 0.0, 0.0})
{
    c.validate();
    detail::nojump_s2(x_end, y, guard);
    if (x_end <= 0.0) return start;
    auto rhs = [&](double x, const ode::State<3>& v) {
        const auto d = nojump_rhs(x, y, T, {v[0], v[1], v[2]}, guard);
        return ode::State<3>{d.r0, d.P, d.M};
    };
    const std::vector<double> stops{x_end};
    auto ignore = [](double, const ode::State<3>&) {};
    ode::State<3> out;
    if (c.mode == StepControls::Mode::fixed) {
        out = ode::rk4<3>(rhs, 0.0, {start.r0, start.P, start.M}, stops, c.steps, ignore);
    } else {
        ode::AdaptiveOptions o;
        o.rtol = c.rtol;
        o.atol = c.atol;
        o.max_steps = c.max_steps;
        out = ode::dopri5<3>(rhs, 0.0, {start.r0, start.P, start.M}, stops, o, ignore);
    }
    return {out[0], out[1], out[2]};
}

/// No-jump defect at x_end (t = x_end·τ) from the supermatrix dynamics,
/// measured against the adiabatic limit at γ(x_end).
inline DefectRecord nojump_evolve(const ModeParams& m, double x_end, const StepControls& c = {})
{
    require(x_end >= 0.0 && x_end <= 1.0, "x_end must lie in [0, 1]");
    if (x_end == 0.0) {
        DefectRecord r;
        r.p = m.p;
        r.tau = 0.0;
        const auto ref = adiabatic_nojump_state(m, 0.0);
        r.ss_x = ref.expectation(1);
        r.ss_y = ref.expectation(2);
        r.ss_z = ref.expectation(3);
        return r;
    }
    const RampProtocol ramp{m.gamma0 * x_end, m.tau * x_end};
    return defect_at_end(m, ramp, Kind::no_jump, c);
}

/// τ·(E² − γ0²)^{3/2}/scale²: how adiabatic the end of a no-jump ramp is.
/// Zero at or beyond the EP.
inline double nojump_end_adiabaticity(const ModeParams& m)
{
    const double w2 = m.energy2() - m.gamma0 * m.gamma0;
    if (!(w2 > 0.0)) return 0.0;
    const double sc = m.scale();
    return m.tau * w2 * std::sqrt(w2) / (sc * sc);
}

/// Leading adiabatic order of the no-jump n_z at the end of the ramp,
/// −scale/(2τ(E² − γ0²)); relative error about 3/A with A the end-point
/// adiabaticity.
inline double nojump_leading_defect(const ModeParams& m)
{
    const double w2 = m.energy2() - m.gamma0 * m.gamma0;
    require(w2 > 0.0, "leading order needs a mode short of its EP at the end of the ramp");
    return -m.scale() / (2.0 * m.tau * w2);
}

/// No-jump defect at the end of the ramp with the undamped oscillation at
/// frequency 2√(E² − γ0²) averaged out.
///
/// The defect n(t) = σ(t) − σ_ad(γ(t)) is averaged over one period ending at
/// t = τ with the periodic trapezoid rule. The smooth part drifts by O(1/τ²)
/// across the window, while the oscillation integrates to zero; summed over
/// momenta the oscillation only contributes at O(1/τ²) anyway, so this is the
/// per-mode value that momentum integrals should see.
///
/// Close to the EP the reference itself moves by O(n) within one period, so
/// averaging is only done when the end point is adiabatic,
/// τ·(E² − γ0²)^{3/2}/scale² ≥ min_adiabaticity; other modes (including
/// everything at or beyond the EP) return the plain end value.
inline DefectRecord nojump_dephased_defect(const ModeParams& m, const StepControls& c = {},
                                           double min_adiabaticity = 50.0, std::size_t samples = 64)
{
    m.validate();
    require(samples >= 4, "dephasing needs at least four samples");
    const RampProtocol ramp = RampProtocol::of(m);
    const double w2 = m.energy2() - m.gamma0 * m.gamma0;
    if (!(w2 > 0.0) || nojump_end_adiabaticity(m) < min_adiabaticity)
        return defect_at_end(m, ramp, Kind::no_jump, c);
    const double period = std::numbers::pi / std::sqrt(w2);
    if (!(period < 0.25 * ramp.tau)) return defect_at_end(m, ramp, Kind::no_jump, c);

    std::vector<double> stops(samples + 1);
    for (std::size_t k = 0; k <= samples; ++k)
        stops[k] = k == samples ? ramp.tau : ramp.tau - period * static_cast<double>(samples - k) / static_cast<double>(samples);
    StepControls cc = c;
    const Trajectory tr = evolve_at(m, ramp, Kind::no_jump, initial_ground_state(m), cc, stops);

    DefectRecord rec;
    rec.p = m.p;
    rec.tau = ramp.tau;
    const CoherenceVector ref = adiabatic_nojump_state(m, ramp.gamma0);
    rec.ss_x = ref.expectation(1);
    rec.ss_y = ref.expectation(2);
    rec.ss_z = ref.expectation(3);
    // states[0] is the initial state; the window samples follow, the last one at t = τ
    for (std::size_t k = 1; k < tr.states.size() - 1; ++k) {
        const CoherenceVector& s = tr.states[k];
        if (!(s.c[0] > 0.0)) throw Error(Errc::non_finite_state, "no-jump trace coordinate lost positivity");
        const CoherenceVector a = adiabatic_nojump_state(m, ramp.gamma(tr.times[k]));
        rec.n_x += s.expectation(1) - a.expectation(1);
        rec.n_y += s.expectation(2) - a.expectation(2);
        rec.n_z += s.expectation(3) - a.expectation(3);
    }
    const double inv = 1.0 / static_cast<double>(samples);
    rec.n_x *= inv;
    rec.n_y *= inv;
    rec.n_z *= inv;
    return rec;
}

/// Grid samples of c_k, d_k, e_k for one y.
struct GridCoefficient {
    int order = 0;
    double y = 0.0;
    std::vector<double> x;
    std::vector<double> c, d, e;
};

struct NoJumpSeriesOptions {
    double e0_constant = std::numeric_limits<double>::quiet_NaN(); // NaN: match r0(0) = 1/2
    double guard = default_guard;
    double resolution_tol = 1e-6; // largest tolerated trailing Chebyshev coefficient ratio
};

/// Orders 0..K of the no-jump recursion on a Chebyshev grid.
///
/// The r0 equation is solved order by order with the running integral anchored
/// at x = 0, so only e0 carries a homogeneous part.
inline std::vector<GridCoefficient> nojump_coefficients(int K, double y, const ChebyshevGrid& grid,
                                                        const NoJumpSeriesOptions& opt = {})
{
    require(K >= 0, "order must be non-negative");
    require(grid.lower() == 0.0, "the running integral is anchored at x = 0, so the grid must start there");
    detail::nojump_s2(grid.upper(), y, opt.guard);
    const double G = 1.0 + y * y;
    const double e0c = std::isnan(opt.e0_constant) ? 0.5 * std::sqrt(G) : opt.e0_constant;
    const auto& x = grid.nodes();
    const std::size_t n = x.size();
    std::vector<double> s(n), s2(n);
    for (std::size_t i = 0; i < n; ++i) {
        s2[i] = G - x[i] * x[i];
        s[i] = std::sqrt(s2[i]);
    }
    auto resolved = [&](const std::vector<double>& f, int k, const char* what) {
        const double r = grid.tail_ratio(f);
        if (r > opt.resolution_tol)
            throw Error(Errc::grid_too_coarse, std::string(what) + "_" + std::to_string(k) +
                                                   " unresolved (tail ratio " + std::to_string(r) + ")");
    };

    std::vector<GridCoefficient> out;
    GridCoefficient k0{0, y, x, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) k0.e[i] = e0c / s[i];
    out.push_back(std::move(k0));

    for (int k = 1; k <= K; ++k) {
        const auto& prev = out.back();
        GridCoefficient cur{k, y, x, std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
        std::vector<double> cp(n, 0.0), dp(n, 0.0);
        if (k > 1) {
            resolved(prev.c, k - 1, "c");
            resolved(prev.d, k - 1, "d");
            cp = grid.derivative(prev.c);
            dp = grid.derivative(prev.d);
        }
        std::vector<double> integrand(n);
        for (std::size_t i = 0; i < n; ++i) integrand[i] = cp[i] / (s2[i] * s[i]);
        const auto I = grid.cumulative_integral(integrand);
        for (std::size_t i = 0; i < n; ++i) {
            cur.c[i] = -prev.e[i] / (2.0 * s2[i]) - dp[i] / (2.0 * s[i]);
            cur.d[i] = cp[i] / (2.0 * s[i]);
            cur.e[i] = -G / (2.0 * s[i]) * I[i];
        }
        out.push_back(std::move(cur));
    }
    return out;
}

/// Series estimate of σ_z on the grid: Σc_k T^-k / (Σe_k T^-k + (x/s)Σd_k T^-k).
inline std::vector<double> nojump_series_sigma_z(const std::vector<GridCoefficient>& coeffs, double T, int K)
{
    require(!coeffs.empty() && K >= 1 && K < static_cast<int>(coeffs.size()), "order outside the table");
    const auto& x = coeffs.front().x;
    const double G = 1.0 + coeffs.front().y * coeffs.front().y;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double P = 0, M = 0, r0 = 0, tk = 1;
        for (int k = 0; k <= K; ++k) {
            const auto& ck = coeffs[static_cast<std::size_t>(k)];
            P += ck.c[i] * tk;
            M += ck.d[i] * tk;
            r0 += ck.e[i] * tk;
            tk /= T;
        }
        out[i] = P / (r0 + x[i] / std::sqrt(G - x[i] * x[i]) * M);
    }
    return out;
}

struct ScalingCollapse {
    double exponent = 1.0 / 3.0;
    std::vector<double> scaled_momentum;             // shared axis z
    std::vector<double> tau_list;                    // Δτ values
    std::vector<std::vector<double>> scaled_defect;  // per Δτ, per z
    double peak = 0.0;
    double residual = 0.0; // max pointwise spread / peak
};

/// No-jump momentum profiles at the end of the PT ramp, rescaled by
/// p = Δ z (Δτ)^-a and f = (Δτ)^a n_z, with a = exponent.
inline ScalingCollapse scaling_collapse(double delta, const std::vector<double>& tau_list,
                                        const std::vector<double>& z_grid, const StepControls& c = {},
                                        double exponent = 1.0 / 3.0, unsigned threads = 0)
{
    require(delta > 0.0, "collapse needs a gapped mode");
    require(!tau_list.empty() && !z_grid.empty(), "empty collapse input");
    ScalingCollapse out;
    out.exponent = exponent;
    out.scaled_momentum = z_grid;
    for (double tau : tau_list) out.tau_list.push_back(delta * tau);
    const std::size_t nz = z_grid.size();
    const auto vals = parallel_map<double>(
        tau_list.size() * nz,
        [&](std::size_t idx) {
            const double tau = tau_list[idx / nz];
            const double T = delta * tau;
            const double scale = std::pow(T, exponent);
            const auto m = ModeParams::gapped(delta * z_grid[idx % nz] / scale, delta, 1.0, tau);
            return scale * nojump_evolve(m, 1.0, c).n_z;
        },
        threads);
    for (std::size_t t = 0; t < tau_list.size(); ++t)
        out.scaled_defect.emplace_back(vals.begin() + static_cast<std::ptrdiff_t>(t * nz),
                                       vals.begin() + static_cast<std::ptrdiff_t>((t + 1) * nz));
    for (double v : vals) out.peak = std::max(out.peak, std::abs(v));
    double spread = 0.0;
    for (std::size_t j = 0; j < nz; ++j) {
        double lo = out.scaled_defect[0][j], hi = lo;
        for (const auto& row : out.scaled_defect) lo = std::min(lo, row[j]), hi = std::max(hi, row[j]);
        spread = std::max(spread, hi - lo);
    }
    out.residual = out.peak > 0.0 ? spread / out.peak : 0.0;
    return out;
}

inline void write_collapse_csv(std::ostream& os, const ScalingCollapse& sc, const std::vector<std::string>& header = {})
{
    for (const auto& h : header) os << "# " << h << '\n';
    os << "# exponent=" << sc.exponent << " residual=" << sc.residual << '\n';
    os << "scaled_p,scaled_nz,tau\n";
    const auto prec = os.precision(17);
    for (std::size_t t = 0; t < sc.tau_list.size(); ++t)
        for (std::size_t j = 0; j < sc.scaled_momentum.size(); ++j)
            os << sc.scaled_momentum[j] << ',' << sc.scaled_defect[t][j] << ',' << sc.tau_list[t] << '\n';
    os.precision(prec);
}

} // namespace lramp
