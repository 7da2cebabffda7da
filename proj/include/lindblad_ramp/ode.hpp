#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "error.hpp"

namespace lramp::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct AdaptiveOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double initial_step = 0.0; // 0 selects the automatic estimate
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 200'000'000;
};

struct Stats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t evaluations = 0;
};

namespace detail {

template <std::size_t N>
void check_finite(const State<N>& y, double t)
{
    for (double v : y)
        if (!std::isfinite(v)) throw Error(Errc::non_finite_state, "state diverged at t = " + std::to_string(t));
}

template <std::size_t N>
double error_norm(const State<N>& err, const State<N>& y0, const State<N>& y1, double atol, double rtol)
{
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sc;
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(N));
}

// axpy helpers keep the stage code readable
template <std::size_t N>
State<N> lin(const State<N>& y, double h, std::initializer_list<std::pair<double, const State<N>*>> terms)
{
    State<N> out = y;
    for (const auto& [c, k] : terms)
        for (std::size_t i = 0; i < N; ++i) out[i] += h * c * (*k)[i];
    return out;
}

} // namespace detail

struct NoRenorm {
    template <class S>
    bool operator()(double, S&) const noexcept { return false; }
};

/// Dormand–Prince 5(4) with Hairer's error norm.
///
/// Steps are clamped so that every time in `stops` (strictly increasing,
/// all > t0) is hit exactly; `observe(t, y)` fires at each stop. After every
/// accepted step `renorm(t, y)` may rescale y in place and returns true if it
/// did, which invalidates the FSAL stage.
template <std::size_t N, class Rhs, class Observe, class Renorm = NoRenorm>
State<N> dopri5(Rhs&& f, double t0, State<N> y, std::span<const double> stops, const AdaptiveOptions& opt,
                Observe&& observe, Renorm&& renorm = {}, Stats* stats = nullptr)
{
    require(opt.rtol > 0.0 || opt.atol > 0.0, "tolerance must be positive");
    if (stops.empty()) return y;

    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    Stats local;
    Stats& st = stats ? *stats : local;
    double t = t0;
    const double t_end = stops.back();
    detail::check_finite(y, t);
    State<N> k1 = f(t, y);
    ++st.evaluations;

    double h = opt.initial_step;
    if (h <= 0.0) {
        // Hairer & Wanner's starting-step heuristic.
        State<N> zero{};
        const double d0 = detail::error_norm(y, zero, zero, opt.atol, opt.rtol);
        const double d1 = detail::error_norm(k1, y, y, opt.atol, opt.rtol);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, t_end - t0);
        State<N> y1 = detail::lin<N>(y, h0, {{1.0, &k1}});
        State<N> f1 = f(t + h0, y1);
        ++st.evaluations;
        State<N> df{};
        for (std::size_t i = 0; i < N; ++i) df[i] = f1[i] - k1[i];
        const double d2 = detail::error_norm(df, y, y, opt.atol, opt.rtol) / h0;
        const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                   : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
        h = std::min(100.0 * h0, h1);
    }
    h = std::min(h, opt.max_step);

    std::size_t next = 0;
    bool last_rejected = false;
    while (next < stops.size()) {
        if (st.accepted + st.rejected >= opt.max_steps)
            throw Error(Errc::step_size_underflow, "step budget exhausted at t = " + std::to_string(t));
        const double target = stops[next];
        bool hits = false;
        double hs = h;
        if (t + hs >= target - 1e-13 * std::abs(target)) {
            hs = target - t;
            hits = true;
        }
        if (hs <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
            throw Error(Errc::step_size_underflow, "step size underflow at t = " + std::to_string(t));

        const State<N> k2 = f(t + c2 * hs, detail::lin<N>(y, hs, {{a21, &k1}}));
        const State<N> k3 = f(t + c3 * hs, detail::lin<N>(y, hs, {{a31, &k1}, {a32, &k2}}));
        const State<N> k4 = f(t + c4 * hs, detail::lin<N>(y, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const State<N> k5 =
            f(t + c5 * hs, detail::lin<N>(y, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const State<N> k6 =
            f(t + hs, detail::lin<N>(y, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        const State<N> y5 = detail::lin<N>(y, hs, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        const double t_new = hits ? target : t + hs;
        const State<N> k7 = f(t_new, y5);
        st.evaluations += 6;

        State<N> err{};
        for (std::size_t i = 0; i < N; ++i)
            err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double en = detail::error_norm(err, y, y5, opt.atol, opt.rtol);

        if (!std::isfinite(en)) {
            detail::check_finite(y5, t_new);
            h = 0.25 * hs;
            last_rejected = true;
            ++st.rejected;
            continue;
        }
        double fac = en == 0.0 ? 10.0 : 0.9 * std::pow(en, -0.2);
        if (en <= 1.0) {
            ++st.accepted;
            t = t_new;
            y = y5;
            k1 = k7;
            if (hits) {
                observe(t, y);
                ++next;
            }
            if (renorm(t, y)) k1 = f(t, y), ++st.evaluations;
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
            // a step shortened only to hit a stop says nothing about the next one
            h = std::min(opt.max_step, (hits && hs < h ? h : hs * fac));
            last_rejected = false;
        } else {
            ++st.rejected;
            h = hs * std::clamp(fac, 0.2, 1.0);
            last_rejected = true;
        }
    }
    detail::check_finite(y, t);
    return y;
}

/// Classical RK4 with roughly `steps` equal steps over [t0, stops.back()];
/// each interval between stops gets its proportional share (at least one).
template <std::size_t N, class Rhs, class Observe, class Renorm = NoRenorm>
State<N> rk4(Rhs&& f, double t0, State<N> y, std::span<const double> stops, std::size_t steps, Observe&& observe,
             Renorm&& renorm = {}, Stats* stats = nullptr)
{
    require(steps >= 1, "fixed-step mode needs at least one step");
    if (stops.empty()) return y;
    const double span = stops.back() - t0;
    double t = t0;
    for (double target : stops) {
        const double len = target - t;
        const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(
                                                    static_cast<double>(steps) * len / span - 1e-9)));
        const double h = len / static_cast<double>(n);
        const double start = t;
        for (std::size_t s = 0; s < n; ++s) {
            const double ts = start + static_cast<double>(s) * h;
            const State<N> k1 = f(ts, y);
            const State<N> k2 = f(ts + 0.5 * h, detail::lin<N>(y, h, {{0.5, &k1}}));
            const State<N> k3 = f(ts + 0.5 * h, detail::lin<N>(y, h, {{0.5, &k2}}));
            const State<N> k4 = f(ts + h, detail::lin<N>(y, h, {{1.0, &k3}}));
            y = detail::lin<N>(y, h, {{1.0 / 6, &k1}, {1.0 / 3, &k2}, {1.0 / 3, &k3}, {1.0 / 6, &k4}});
            const double tn = s + 1 == n ? target : ts + h;
            detail::check_finite(y, tn);
            renorm(tn, y);
            if (stats) {
                ++stats->accepted;
                stats->evaluations += 4;
            }
        }
        t = target;
        observe(t, y);
    }
    return y;
}

} // namespace lramp::ode
