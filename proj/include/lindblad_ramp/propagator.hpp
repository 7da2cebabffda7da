#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <vector>

#include "error.hpp"
#include "liouvillian.hpp"
#include "model.hpp"
#include "ode.hpp"

namespace lramp {

/// Linear ramp γ(t) = γ0 t / τ on [0, τ].
struct RampProtocol {
    double gamma0 = 0.0;
    double tau = 1.0;

    static RampProtocol of(const ModeParams& m) { return {m.gamma0, m.tau}; }

    [[nodiscard]] double gamma(double t) const noexcept { return gamma0 * t / tau; }
    [[nodiscard]] double rate() const noexcept { return gamma0 / tau; }

    void validate() const
    {
        require(tau > 0.0 && std::isfinite(tau), "tau must be positive");
        require(gamma0 >= 0.0 && std::isfinite(gamma0), "gamma0 must be non-negative");
    }
};

struct StepControls {
    enum class Mode { adaptive, fixed };
    Mode mode = Mode::adaptive;
    double rtol = 1e-10;
    double atol = 1e-12;
    std::size_t steps = 0;       // fixed mode only
    std::size_t samples = 1;     // output grid: samples+1 equally spaced instants including both ends
    bool renormalize = true;     // no-jump only; rescales the state, tracked in log_scale
    std::size_t max_steps = 200'000'000;

    static StepControls fixed(std::size_t n)
    {
        StepControls c;
        c.mode = Mode::fixed;
        c.steps = n;
        return c;
    }

    void validate() const
    {
        if (mode == Mode::fixed) require(steps >= 1, "fixed mode needs steps >= 1");
        else require(rtol > 0.0 && atol > 0.0, "tolerances must be positive");
        require(samples >= 1, "need at least one sample interval");
    }
};

/// Sampled solution. The true state at sample i is states[i] * exp(log_scale[i]).
struct Trajectory {
    Kind kind = Kind::full_lindblad;
    std::vector<double> times;
    std::vector<CoherenceVector> states;
    std::vector<double> log_scale;
    ode::Stats stats;

    [[nodiscard]] bool rescaled() const
    {
        return std::any_of(log_scale.begin(), log_scale.end(), [](double s) { return s != 0.0; });
    }
};

struct DefectRecord {
    double p = 0.0;
    double tau = 0.0;
    double n_x = 0.0, n_y = 0.0, n_z = 0.0;
    double ss_x = 0.0, ss_y = 0.0, ss_z = 0.0;
};

namespace detail {

inline std::vector<double> sample_grid(double tau, std::size_t samples)
{
    std::vector<double> t(samples);
    for (std::size_t i = 0; i < samples; ++i)
        t[i] = i + 1 == samples ? tau : tau * static_cast<double>(i + 1) / static_cast<double>(samples);
    return t;
}

template <class Rhs, class Observe, class Renorm>
ode::State<4> integrate(Rhs&& rhs, const Vec4& y0, const std::vector<double>& stops, const StepControls& c,
                        Observe&& observe, Renorm&& renorm, ode::Stats* stats)
{
    if (c.mode == StepControls::Mode::fixed)
        return ode::rk4<4>(rhs, 0.0, y0, stops, c.steps, observe, renorm, stats);
    ode::AdaptiveOptions o;
    o.rtol = c.rtol;
    o.atol = c.atol;
    o.max_steps = c.max_steps;
    return ode::dopri5<4>(rhs, 0.0, y0, stops, o, observe, renorm, stats);
}

} // namespace detail

/// As evolve, sampled at the given ascending instants in (0, τ] instead of
/// the equally spaced grid.
inline Trajectory evolve_at(const ModeParams& m, const RampProtocol& ramp, Kind kind, const CoherenceVector& initial,
                            const StepControls& c, const std::vector<double>& stops)
{
    ramp.validate();
    c.validate();
    require(!stops.empty() && stops.front() > 0.0 && stops.back() <= ramp.tau, "sample instants must lie in (0, tau]");
    for (std::size_t i = 1; i < stops.size(); ++i) require(stops[i] > stops[i - 1], "sample instants must ascend");
    Trajectory tr;
    tr.kind = kind;
    tr.times.push_back(0.0);
    tr.states.push_back(initial);
    tr.log_scale.push_back(0.0);

    const double rate = ramp.rate();
    auto rhs = [&](double t, const Vec4& v) { return liouvillian_apply(m.p, m.delta, rate * t, kind, v); };
    double log_scale = 0.0;
    auto observe = [&](double t, const Vec4& v) {
        tr.times.push_back(t);
        tr.states.push_back(CoherenceVector{v});
        tr.log_scale.push_back(log_scale);
    };
    auto renorm = [&](double, Vec4& v) {
        if (kind != Kind::no_jump || !c.renormalize) return false;
        const double v0 = v[0];
        if (v0 > 0.125 && v0 < 4.0) return false;
        if (!(v0 > 0.0)) return false; // leave it to the caller's positivity checks
        const double s = 0.5 / v0;
        for (double& x : v) x *= s;
        log_scale -= std::log(s);
        return true;
    };
    detail::integrate(rhs, initial.c, stops, c, observe, renorm, &tr.stats);
    return tr;
}

inline Trajectory evolve(const ModeParams& m, const RampProtocol& ramp, Kind kind, const CoherenceVector& initial,
                         const StepControls& c = {})
{
    c.validate();
    return evolve_at(m, ramp, kind, initial, c, detail::sample_grid(ramp.tau, c.samples));
}

/// Defect at t = τ measured against the steady state (full kind) or the
/// adiabatic no-jump limit, starting from the ground state.
///
/// The full kind integrates δ = ρ − ρ_ss(γ(t)) instead of ρ, so the O(1/τ)
/// answer is not obtained by cancelling O(1) numbers.
inline DefectRecord defect_at_end(const ModeParams& m, const RampProtocol& ramp, Kind kind, const StepControls& c = {})
{
    ramp.validate();
    c.validate();
    DefectRecord rec;
    rec.p = m.p;
    rec.tau = ramp.tau;
    const CoherenceVector start = initial_ground_state(m);
    const double rate = ramp.rate();
    const std::vector<double> stops{ramp.tau};
    auto ignore = [](double, const Vec4&) {};

    if (kind == Kind::full_lindblad) {
        const CoherenceVector ss0 = steady_state(m, 0.0);
        Vec4 d0{};
        for (std::size_t i = 0; i < 4; ++i) d0[i] = start.c[i] - ss0.c[i];
        auto rhs = [&](double t, const Vec4& v) {
            const double g = rate * t;
            Vec4 out = liouvillian_apply(m.p, m.delta, g, kind, v);
            const Vec4 ds = steady_state_gamma_derivative(m, g);
            for (std::size_t i = 0; i < 4; ++i) out[i] -= ds[i] * rate;
            return out;
        };
        const Vec4 d = detail::integrate(rhs, d0, stops, c, ignore, ode::NoRenorm{}, nullptr);
        const CoherenceVector ss = steady_state(m, ramp.gamma0);
        rec.ss_x = ss.expectation(1);
        rec.ss_y = ss.expectation(2);
        rec.ss_z = ss.expectation(3);
        rec.n_x = d[1] / ss.c[0];
        rec.n_y = d[2] / ss.c[0];
        rec.n_z = d[3] / ss.c[0];
        return rec;
    }

    StepControls cc = c;
    cc.samples = 1;
    const Trajectory tr = evolve(m, ramp, kind, start, cc);
    const CoherenceVector& end = tr.states.back();
    if (!(end.c[0] > 0.0)) throw Error(Errc::non_finite_state, "no-jump trace coordinate lost positivity");
    const CoherenceVector ref = adiabatic_nojump_state(m, ramp.gamma0);
    rec.ss_x = ref.expectation(1);
    rec.ss_y = ref.expectation(2);
    rec.ss_z = ref.expectation(3);
    rec.n_x = end.expectation(1) - rec.ss_x;
    rec.n_y = end.expectation(2) - rec.ss_y;
    rec.n_z = end.expectation(3) - rec.ss_z;
    return rec;
}

namespace detail {

/// Derivative at t[at] of the quadratic through (t[a], t[b], t[c]).
inline std::array<double, 3> three_point_weights(double ta, double tb, double tc, double at)
{
    return {((at - tb) + (at - tc)) / ((ta - tb) * (ta - tc)), ((at - ta) + (at - tc)) / ((tb - ta) * (tb - tc)),
            ((at - ta) + (at - tb)) / ((tc - ta) * (tc - tb))};
}

} // namespace detail

/// Largest |dv/dt − L(t) v| over the samples, with dv/dt from every
/// second-order three-point stencil (forward, central, backward) that fits.
inline double residual_check(const Trajectory& tr, const ModeParams& m, const RampProtocol& ramp, Kind kind)
{
    const std::size_t n = tr.times.size();
    require(n >= 3 && tr.states.size() == n, "residual_check needs at least three samples");
    const double rate = ramp.rate();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ls = tr.log_scale.empty() ? 0.0 : tr.log_scale[i];
        const Vec4 lv = liouvillian_apply(m.p, m.delta, rate * tr.times[i], kind, tr.states[i].c);
        for (std::size_t first = (i >= 2 ? i - 2 : 0); first <= i && first + 2 < n; ++first) {
            const auto w = detail::three_point_weights(tr.times[first], tr.times[first + 1], tr.times[first + 2],
                                                       tr.times[i]);
            for (std::size_t k = 0; k < 4; ++k) {
                double deriv = 0.0;
                for (std::size_t j = 0; j < 3; ++j) {
                    const std::size_t s = first + j;
                    const double rel = tr.log_scale.empty() ? 1.0 : std::exp(tr.log_scale[s] - ls);
                    deriv += w[j] * tr.states[s].c[k] * rel;
                }
                worst = std::max(worst, std::abs(deriv - lv[k]));
            }
        }
    }
    return worst;
}

/// '#'-prefixed header lines followed by t,v0,v1,v2,v3 rows (and log_scale
/// when the run was rescaled).
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const std::vector<std::string>& header = {})
{
    for (const auto& h : header) os << "# " << h << '\n';
    const bool scaled = tr.rescaled();
    os << "t,v0,v1,v2,v3" << (scaled ? ",log_scale" : "") << '\n';
    const auto prec = os.precision(17);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        os << tr.times[i];
        for (double v : tr.states[i].c) os << ',' << v;
        if (scaled) os << ',' << tr.log_scale[i];
        os << '\n';
    }
    os.precision(prec);
}

} // namespace lramp
