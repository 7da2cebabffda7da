#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "error.hpp"
#include "parallel.hpp"

namespace lramp {

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n)
{
    require(n >= 1, "Gauss-Legendre needs n >= 1");
    std::vector<double> x(n), w(n);
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                const double dj = static_cast<double>(j);
                p1 = ((2.0 * dj - 1.0) * z * p2 - (dj - 1.0) * p3) / dj;
            }
            pp = dn * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return {x, w};
}

/// How the half line p ≥ 0 is covered.
///
/// Without a feature point: p = scale·tan θ with Gauss–Legendre in θ. With a
/// feature point p_f (a structure of width w = `feature_width` with ~1/|p − p_f|
/// flanks) the half line is split at p_f and each side is tangent-mapped
/// outward from it, p = p_f ∓ w·tan θ; the node budget is shared evenly.
struct QuadratureSpec {
    std::size_t nodes = 64;        // per level, on p ≥ 0
    std::size_t max_nodes = 1024;  // adaptive doubling stops here
    double scale = 1.0;
    double feature = 0.0;          // 0: none
    double feature_width = 0.0;
    double tolerance = 1e-6;       // relative to |integral|
    double abs_tolerance = 1e-15;
    bool even = true;              // integrate p ≥ 0 and double

    void validate() const
    {
        require(nodes >= 16, "node budget must be at least 16");
        require(max_nodes >= nodes, "max_nodes below the starting budget");
        require(scale > 0.0, "tangent-map scale must be positive");
        if (feature > 0.0) require(feature_width > 0.0, "feature width must be positive");
        require(tolerance > 0.0 && abs_tolerance >= 0.0, "tolerance must be positive");
    }
};

struct QuadratureRule {
    std::vector<double> p;
    std::vector<double> w; // includes the dp/2π measure and the parity factor
};

inline QuadratureRule momentum_rule(const QuadratureSpec& spec, std::size_t n)
{
    QuadratureRule r;
    const double parity = spec.even ? 2.0 : 1.0;
    const double measure = parity / (2.0 * std::numbers::pi);
    // p = origin + dir·s·tan θ for θ ∈ (0, θ_max)
    auto tangent = [&](std::size_t m, double origin, double dir, double s, double th_max) {
        const auto [x, w] = gauss_legendre(m);
        const double half = 0.5 * th_max;
        for (std::size_t i = 0; i < m; ++i) {
            const double th = half * (x[i] + 1.0);
            const double c = std::cos(th);
            r.p.push_back(origin + dir * s * std::tan(th));
            r.w.push_back(measure * half * w[i] * s / (c * c));
        }
    };
    if (spec.feature <= 0.0) {
        tangent(n, 0.0, 1.0, spec.scale, std::numbers::pi / 2.0);
    } else {
        const double wf = spec.feature_width;
        const std::size_t left = n / 2;
        tangent(left, spec.feature, -1.0, wf, std::atan(spec.feature / wf));
        std::reverse(r.p.begin(), r.p.end());
        std::reverse(r.w.begin(), r.w.end());
        tangent(n - left, spec.feature, 1.0, wf, std::numbers::pi / 2.0);
    }
    return r;
}

struct IntegralResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t nodes = 0;
    bool converged = false;
};

/// ∫ dp/2π f(p) over the real line; the error is |I_N − I_{N/2}| and N doubles
/// until it drops below tolerance·|I| + abs_tolerance or max_nodes is reached.
///
/// Evaluations may run on several threads; the sum is always taken in node
/// order, so the result does not depend on the thread count.
inline IntegralResult momentum_integral(const std::function<double(double)>& f, const QuadratureSpec& spec,
                                        unsigned threads = 1, bool throw_on_failure = true)
{
    spec.validate();
    auto level = [&](std::size_t n) {
        const auto rule = momentum_rule(spec, n);
        const auto vals = parallel_map<double>(rule.p.size(), [&](std::size_t i) { return f(rule.p[i]); }, threads);
        double s = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i) s += rule.w[i] * vals[i];
        return s;
    };
    IntegralResult res;
    std::size_t n = spec.nodes;
    double coarse = level(n / 2);
    for (;;) {
        const double fine = level(n);
        res.value = fine;
        res.error = std::abs(fine - coarse);
        res.nodes = n;
        if (res.error <= spec.tolerance * std::abs(fine) + spec.abs_tolerance) {
            res.converged = true;
            return res;
        }
        if (2 * n > spec.max_nodes) break;
        coarse = fine;
        n *= 2;
    }
    if (throw_on_failure)
        throw Error(Errc::quadrature_non_convergent, "error estimate " + std::to_string(res.error) + " after " +
                                                         std::to_string(res.nodes) + " nodes");
    return res;
}

} // namespace lramp
