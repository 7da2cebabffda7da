#pragma once

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "propagator.hpp"
#include "series.hpp"
#include "sweep.hpp"

namespace lramp {

inline std::string to_string(const Rational& r)
{
    std::ostringstream os;
    os << r;
    return os.str();
}

inline nlohmann::json to_json(const ExponentFit& f)
{
    return {{"exponent", f.exponent},
            {"stderr", f.stderr_},
            {"tau_range", {f.tau_min, f.tau_max}},
            {"points", f.points},
            {"dropped_smallest", f.dropped_smallest}};
}

inline nlohmann::json to_json(const BiPoly& p)
{
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [k, c] : p.terms())
        terms.push_back({{"x", k.first},
                         {"y2", k.second},
                         {"num", to_string(Rational(numerator(c)))},
                         {"den", to_string(Rational(denominator(c)))}});
    return terms;
}

/// Exact table: c_k = N_k(x, y²)/D^{denom_power}, D the case denominator.
inline nlohmann::json to_json(const CoefficientTable& t)
{
    const auto& kase = t.series_case();
    nlohmann::json out;
    out["case"] = kase.gapped ? "gapped" : "gapless";
    out["epsilon"] = to_string(kase.epsilon);
    out["denominator"] = to_json(kase.denominator());
    for (const char* which : {"c", "d"}) {
        nlohmann::json rows = nlohmann::json::array();
        for (int k = 1; k <= t.max_order(); ++k) {
            const SeriesCoefficient& s = which[0] == 'c' ? t.c(k) : t.d(k);
            rows.push_back({{"order", s.order}, {"denom_power", s.denom_power}, {"terms", to_json(s.numerator)}});
        }
        out[which] = rows;
    }
    return out;
}

inline nlohmann::json to_json(const ConvergenceReport& r)
{
    nlohmann::json logs = nlohmann::json::array();
    for (double v : r.log_abs_ck) logs.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
    return {{"y", r.y},
            {"orders", r.orders},
            {"log_abs_ck", logs},
            {"growth_rate", r.growth_rate},
            {"radius_estimate", r.radius_estimate}};
}

inline nlohmann::json to_json(const DensityRecord& d)
{
    return {{"tau", d.tau},
            {"n_z", d.n_z_integrated},
            {"err", d.quadrature_error_estimate},
            {"nodes", d.nodes},
            {"flagged", d.flagged}};
}

inline void write_profile_csv(std::ostream& os, const std::vector<DefectRecord>& recs,
                              const std::vector<std::string>& header = {})
{
    for (const auto& h : header) os << "# " << h << '\n';
    os << "p,n_x,n_y,n_z\n";
    const auto prec = os.precision(17);
    for (const auto& r : recs) os << r.p << ',' << r.n_x << ',' << r.n_y << ',' << r.n_z << '\n';
    os.precision(prec);
}

} // namespace lramp
