#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "error.hpp"
#include "linear_fit.hpp"
#include "nojump.hpp"
#include "propagator.hpp"
#include "quadrature.hpp"

namespace lramp {

struct SweepPlan {
    Kind kind = Kind::full_lindblad;
    bool gapped = true;
    double epsilon = 1.0;    // gapped only
    double energy = 1.0;     // Δ (gapped) or γ0 (gapless)
    std::vector<double> tau_list;
    QuadratureSpec quad;
    bool auto_quadrature = true; // pick scale/feature from the kind and rate
    StepControls controls;
    unsigned threads = 1;
    bool check_parity = true;
    bool dephase = true;          // no-jump: average out the end-of-ramp oscillation per mode
    // no-jump modes whose end-point adiabaticity exceeds this take the leading
    // series order instead of an evolution (cost ∝ p·τ, relative error ≈ 3/A)
    double series_tail = 1e5;

    void validate() const
    {
        require(energy > 0.0, "energy scale must be positive");
        require(series_tail > 0.0, "series_tail must be positive");
        if (gapped) require(epsilon > 0.0, "epsilon must be positive");
        for (std::size_t i = 0; i < tau_list.size(); ++i) {
            require(tau_list[i] > 0.0, "tau must be positive");
            if (i > 0) require(tau_list[i] > tau_list[i - 1], "tau_list must be strictly increasing");
        }
        quad.validate();
        controls.validate();
    }

    [[nodiscard]] ModeParams mode(double p, double tau) const
    {
        return gapped ? ModeParams::gapped(p, energy, epsilon, tau) : ModeParams::gapless(p, energy, tau);
    }
};

struct DensityRecord {
    double tau = 0.0;
    double n_z_integrated = 0.0;
    double quadrature_error_estimate = 0.0;
    std::size_t nodes = 0;
    bool flagged = false; // error estimate above the requested tolerance
};

/// Quadrature layout used for one rate: the tangent scale follows the width
/// of the defect profile; the gapless no-jump profile is split at its
/// end-of-ramp EP |p| = γ0, whose window is (γ0τ)^{-2/3} wide.
inline QuadratureSpec auto_quadrature(const SweepPlan& plan, double tau)
{
    QuadratureSpec q = plan.quad;
    const double T = plan.energy * tau;
    if (plan.kind == Kind::full_lindblad) {
        q.scale = plan.energy;
        q.feature = 0.0;
    } else if (plan.gapped) {
        q.scale = plan.energy * std::cbrt(1.0 / T);
        q.feature = 0.0;
    } else {
        q.scale = plan.energy;
        q.feature = plan.energy;
        q.feature_width = std::pow(T, -2.0 / 3.0) * plan.energy;
    }
    return q;
}

/// n_z of one mode at the end of the ramp.
inline double mode_defect(const SweepPlan& plan, double tau, double p)
{
    const ModeParams m = plan.mode(p, tau);
    StepControls c = plan.controls;
    if (plan.kind == Kind::full_lindblad) {
        // the defect falls like 1/p², so the absolute tolerance has to follow it
        const double r = plan.energy / std::max(plan.energy, std::abs(p));
        c.atol = plan.controls.atol * r * r;
    }
    if (plan.kind == Kind::no_jump && nojump_end_adiabaticity(m) >= plan.series_tail) return nojump_leading_defect(m);
    if (plan.kind == Kind::no_jump && plan.dephase) return nojump_dephased_defect(m, c).n_z;
    return defect_at_end(m, RampProtocol::of(m), plan.kind, c).n_z;
}

inline std::vector<DensityRecord> tau_sweep(const SweepPlan& plan)
{
    plan.validate();
    std::vector<DensityRecord> out;
    bool parity_done = !plan.check_parity;
    for (double tau : plan.tau_list) {
        const QuadratureSpec q = plan.auto_quadrature ? auto_quadrature(plan, tau) : plan.quad;
        if (!parity_done) {
            const double p = 0.37 * q.scale + 0.01 * plan.energy;
            const double a = mode_defect(plan, tau, p), b = mode_defect(plan, tau, -p);
            if (std::abs(a - b) > 1e-7 * std::abs(a) + 1e-14)
                throw Error(Errc::invalid_argument, "defect profile is not even in p; parity shortcut invalid");
            parity_done = true;
        }
        const auto res = momentum_integral([&](double p) { return mode_defect(plan, tau, p); }, q, plan.threads, false);
        out.push_back({tau, res.value, res.error, res.nodes, !res.converged});
    }
    return out;
}

struct ExponentFit {
    double exponent = 0.0;
    double stderr_ = 0.0;
    double tau_min = 0.0;
    double tau_max = 0.0;
    std::size_t points = 0;
    bool dropped_smallest = false;
};

/// OLS slope of log|n| against log τ. The smallest τ is dropped once if its
/// residual exceeds three standard errors of the fit.
inline ExponentFit fit_exponent(const std::vector<DensityRecord>& records)
{
    require(records.size() >= 3, "exponent fit needs at least three records");
    std::vector<DensityRecord> r = records;
    std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.tau < b.tau; });
    require(r.back().tau >= 10.0 * r.front().tau, "exponent fit needs a tau span of at least one decade");
    const double sign = r.front().n_z_integrated > 0 ? 1.0 : -1.0;
    for (const auto& d : r)
        if (!(d.n_z_integrated * sign > 0.0))
            throw Error(Errc::sign_change, "integrated defect changes sign inside the fit window");

    auto fit = [](const std::vector<DensityRecord>& v) {
        std::vector<double> x, y;
        for (const auto& d : v) {
            x.push_back(std::log(d.tau));
            y.push_back(std::log(std::abs(d.n_z_integrated)));
        }
        return fit_line(x, y);
    };
    LineFit f = fit(r);
    ExponentFit out;
    // the floor keeps round-off on exact power laws from triggering a drop
    if (r.size() > 3 && std::abs(f.residuals.front()) > std::max(3.0 * f.slope_stderr, 1e-9)) {
        r.erase(r.begin());
        f = fit(r);
        out.dropped_smallest = true;
    }
    out.exponent = f.slope;
    out.stderr_ = f.slope_stderr;
    out.tau_min = r.front().tau;
    out.tau_max = r.back().tau;
    out.points = r.size();
    return out;
}

/// Exponent of the momentum-integrated no-jump defect on the PT ramp (γ0 = Δ).
inline ExponentFit integrated_kz_exponent(double delta, const std::vector<double>& tau_list,
                                          const StepControls& controls = {}, const QuadratureSpec& quad = {},
                                          unsigned threads = 1)
{
    require(tau_list.size() >= 2 && tau_list.back() >= 100.0 * tau_list.front(),
            "tau_list must span at least two decades");
    SweepPlan plan;
    plan.kind = Kind::no_jump;
    plan.gapped = true;
    plan.epsilon = 1.0;
    plan.energy = delta;
    plan.tau_list = tau_list;
    plan.quad = quad;
    plan.controls = controls;
    plan.threads = threads;
    return fit_exponent(tau_sweep(plan));
}

inline void write_density_csv(std::ostream& os, const std::vector<DensityRecord>& recs,
                              const std::vector<std::string>& header = {})
{
    for (const auto& h : header) os << "# " << h << '\n';
    os << "tau,n_z,err,nodes,flagged\n";
    const auto prec = os.precision(17);
    for (const auto& r : recs)
        os << r.tau << ',' << r.n_z_integrated << ',' << r.quadrature_error_estimate << ',' << r.nodes << ','
           << (r.flagged ? 1 : 0) << '\n';
    os.precision(prec);
}

} // namespace lramp
