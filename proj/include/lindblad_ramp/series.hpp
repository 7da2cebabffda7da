#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "linear_fit.hpp"
#include "model.hpp"
#include "rational_poly.hpp"

namespace lramp {

/// P = r2 + r3 and the matching real combination M of the oscillating pair.
struct PMState {
    double P = 0.0;
    double M = 0.0;
};

namespace detail {

// Shared form of both dimensionless systems: G = 1 + y² and e = ε with a gap,
// G = y² and e = 1 without.
inline PMState pm_rhs(double x, double G, double e, double T, const PMState& s)
{
    const double ex = e * x;
    if (G == 0.0) // both sources carry a factor G; avoids 0/0 at x = 0
        return {T * (-3.0 * ex * s.P + s.M), T * (-3.0 * ex * s.M - (e / T - ex * ex) * s.P)};
    const double D = G + 2.0 * ex * ex;
    const double D2 = D * D;
    return {T * (-3.0 * ex * s.P + s.M) + 2.0 * e * e * x * G / D2,
            T * (-3.0 * ex * s.M - (e / T + 4.0 * G - ex * ex) * s.P) - 2.0 * e * G * (G - ex * ex) / D2};
}

} // namespace detail

/// d(P, M)/dx with x = t/τ and Δτ = T, for the gapped mode.
inline PMState pm_rhs_gapped(double x, double y, double epsilon, double T, const PMState& s)
{
    require(T > 0.0, "rate must be positive");
    return detail::pm_rhs(x, 1.0 + y * y, epsilon, T, s);
}

/// Same for the gapless mode, with T = γ0τ and y = p/γ0.
inline PMState pm_rhs_gapless(double x, double y, double T, const PMState& s)
{
    require(T > 0.0, "rate must be positive");
    return detail::pm_rhs(x, y * y, 1.0, T, s);
}

/// Defect components from (P, M) at coupling gamma.
inline std::tuple<double, double, double> defect_from_pm(const ModeParams& m, double gamma, const PMState& pm)
{
    const double lam = m.is_gapped() ? m.delta : m.gamma0;
    const double e2 = m.energy2();
    if (e2 == 0.0) throw Error(Errc::degenerate_mode, "p = delta = 0");
    const double q = gamma * pm.P + lam * pm.M;
    if (!m.is_gapped()) {
        if (m.p == 0.0) throw Error(Errc::degenerate_mode, "gapless n_y needs p != 0");
        return {0.0, q / m.p, 2.0 * pm.P};
    }
    return {-m.delta * q / e2, m.p * q / e2, 2.0 * pm.P};
}

struct SeriesCase {
    bool gapped = true;
    Rational epsilon = 1;

    static SeriesCase gapped_with(const Rational& eps) { return {true, eps}; }
    static SeriesCase gapless() { return {false, 1}; }

    /// Canonical denominator g + Y + 2e²x² with Y = y².
    [[nodiscard]] BiPoly denominator() const
    {
        BiPoly d = BiPoly::monomial(0, 1) + BiPoly::monomial(2, 0, 2 * epsilon * epsilon);
        if (gapped) d += BiPoly(Rational(1));
        return d;
    }
    [[nodiscard]] BiPoly g_poly() const { return gapped ? BiPoly(Rational(1)) + BiPoly::monomial(0, 1) : BiPoly::monomial(0, 1); }
};

/// numerator(x, y²) / D(x, y²)^denom_power.
struct SeriesCoefficient {
    int order = 0;
    BiPoly numerator;
    int denom_power = 0;
};

struct SeriesOptions {
    /// Largest permitted bit length of any numerator/denominator in the table.
    std::size_t bit_budget = 1u << 15;
};

class CoefficientTable {
public:
    CoefficientTable(SeriesCase kase, std::vector<SeriesCoefficient> c, std::vector<SeriesCoefficient> d)
        : kase_(std::move(kase)), c_(std::move(c)), d_(std::move(d))
    {
        e2_ = Float50(numerator(kase_.epsilon)) / Float50(denominator(kase_.epsilon));
        e2_ *= e2_;
        for (const auto& k : c_) c_eval_.emplace_back(k.numerator);
        for (const auto& k : d_) d_eval_.emplace_back(k.numerator);
    }

    [[nodiscard]] const SeriesCase& series_case() const noexcept { return kase_; }
    [[nodiscard]] int max_order() const noexcept { return static_cast<int>(c_.size()); }
    [[nodiscard]] const SeriesCoefficient& c(int k) const { return c_.at(index(k)); }
    [[nodiscard]] const SeriesCoefficient& d(int k) const { return d_.at(index(k)); }

    [[nodiscard]] Float50 c_hp(int k, const Float50& x, const Float50& y) const { return value(c_eval_, c(k), k, x, y); }
    [[nodiscard]] Float50 d_hp(int k, const Float50& x, const Float50& y) const { return value(d_eval_, d(k), k, x, y); }
    [[nodiscard]] double c_value(int k, double x, double y) const { return static_cast<double>(c_hp(k, x, y)); }
    [[nodiscard]] double d_value(int k, double x, double y) const { return static_cast<double>(d_hp(k, x, y)); }

    /// Exact value at rational (x, Y = y²).
    [[nodiscard]] Rational c_exact(int k, const Rational& x, const Rational& Y) const { return exact(c(k), x, Y); }
    [[nodiscard]] Rational d_exact(int k, const Rational& x, const Rational& Y) const { return exact(d(k), x, Y); }

private:
    static std::size_t index(int k)
    {
        require(k >= 1, "series orders start at 1");
        return static_cast<std::size_t>(k - 1);
    }

    Float50 value(const std::vector<BiPolyEvaluator>& ev, const SeriesCoefficient& s, int k, const Float50& x,
                  const Float50& y) const
    {
        const Float50 Y = y * y;
        const Float50 D = (kase_.gapped ? Float50(1) : Float50(0)) + Y + 2 * e2_ * x * x;
        return ev[index(k)](x, Y) / boost::multiprecision::pow(D, s.denom_power);
    }

    Rational exact(const SeriesCoefficient& s, const Rational& x, const Rational& Y) const
    {
        const Rational D = kase_.denominator().eval(x, Y);
        Rational den = 1;
        for (int i = 0; i < s.denom_power; ++i) den *= D;
        return s.numerator.eval(x, Y) / den;
    }

    SeriesCase kase_;
    std::vector<SeriesCoefficient> c_, d_;
    std::vector<BiPolyEvaluator> c_eval_, d_eval_;
    Float50 e2_;
};

namespace detail {

inline CoefficientTable build_coefficients(int K, const SeriesCase& kase, const SeriesOptions& opt)
{
    require(K >= 1, "need at least one order");
    const Rational e = kase.epsilon;
    const Rational e2 = e * e;
    const BiPoly G = kase.g_poly();
    const BiPoly D = kase.denominator();
    const BiPoly Dx = D.dx();
    const BiPoly x = BiPoly::monomial(1, 0);
    const BiPoly x2 = BiPoly::monomial(2, 0);

    std::vector<SeriesCoefficient> cs, ds;
    // order 1
    BiPoly c1 = (e / 2) * G * ((4 * e2) * x2 - G);
    BiPoly d1 = (e2 / 2) * x * G * ((4 * e2) * x2 - Rational(7) * G);
    cs.push_back({1, std::move(c1), 3});
    ds.push_back({1, std::move(d1), 3});

    const BiPoly c_coef_x = (-3 * e) * x;
    const BiPoly d_coef_c = 4 * G - e2 * x2;
    for (int k = 2; k <= K; ++k) {
        const auto& pc = cs.back();
        const auto& pd = ds.back();
        const int a = pc.denom_power;
        // derivative of N / D^a has numerator N' D - a N D_x over D^(a+1)
        const BiPoly cdot = pc.numerator.dx() * D - Rational(a) * pc.numerator * Dx;
        const BiPoly ddot = pd.numerator.dx() * D - Rational(a) * pd.numerator * Dx;
        const BiPoly cD = pc.numerator * D;
        BiPoly nc = (c_coef_x * cdot - ddot - e * cD) * Rational(1, 4);
        BiPoly nd = (d_coef_c * cdot - (3 * e) * x * ddot - (3 * e2) * x * cD) * Rational(1, 4);
        const std::size_t bits = std::max(nc.max_bits(), nd.max_bits());
        if (bits > opt.bit_budget)
            throw Error(Errc::order_overflow, "order " + std::to_string(k) + " needs " + std::to_string(bits) +
                                                  " bits, budget " + std::to_string(opt.bit_budget));
        cs.push_back({k, std::move(nc), a + 2});
        ds.push_back({k, std::move(nd), a + 2});
    }
    return CoefficientTable(kase, std::move(cs), std::move(ds));
}

} // namespace detail

inline CoefficientTable coefficients_gapped(int K, const Rational& epsilon, const SeriesOptions& opt = {})
{
    require(epsilon > 0, "epsilon must be positive");
    return detail::build_coefficients(K, SeriesCase::gapped_with(epsilon), opt);
}

inline CoefficientTable coefficients_gapless(int K, const SeriesOptions& opt = {})
{
    return detail::build_coefficients(K, SeriesCase::gapless(), opt);
}

struct ConvergenceReport {
    double y = 0.0;
    std::vector<int> orders;
    std::vector<double> log_abs_ck;  // log|c_k(1, y)|, -inf for an exact zero
    double growth_rate = 0.0;
    double radius_estimate = 0.0;
};

/// Fits log|c_k(1, y)| ≈ a + g·k over k ∈ [3, K]; the radius is e^g.
inline ConvergenceReport convergence_report(const CoefficientTable& t, double y, int K = 0)
{
    if (K == 0) K = t.max_order();
    require(K >= 6 && K <= t.max_order(), "convergence report needs 6 <= K <= table order");
    ConvergenceReport r;
    r.y = y;
    std::vector<double> ks, ls;
    for (int k = 1; k <= K; ++k) {
        const Float50 v = t.c_hp(k, 1, y);
        const double l = v == 0 ? -std::numeric_limits<double>::infinity()
                                : static_cast<double>(boost::multiprecision::log(boost::multiprecision::abs(v)));
        r.orders.push_back(k);
        r.log_abs_ck.push_back(l);
        if (k >= 3 && std::isfinite(l)) {
            ks.push_back(k);
            ls.push_back(l);
        }
    }
    const LineFit f = fit_line(ks, ls);
    r.growth_rate = f.slope;
    r.radius_estimate = std::exp(f.slope);
    return r;
}

inline std::vector<ConvergenceReport> convergence_report(const CoefficientTable& t, const std::vector<double>& ys,
                                                         int K = 0)
{
    std::vector<ConvergenceReport> out;
    for (double y : ys) out.push_back(convergence_report(t, y, K));
    return out;
}

/// Σ_{k≤K} 2 c_k(1, y) T^{-k}.
inline double series_defect(const CoefficientTable& t, double y, double T, int K)
{
    require(K >= 1 && K <= t.max_order(), "order outside the table");
    require(T > 0.0, "rate must be positive");
    Float50 s = 0, tk = 1;
    for (int k = 1; k <= K; ++k) {
        tk /= T;
        s += 2 * t.c_hp(k, 1, y) * tk;
    }
    return static_cast<double>(s);
}

namespace detail {

inline void check_radius(const CoefficientTable& t, double y, double T)
{
    const int kr = std::min(t.max_order(), 12);
    const double radius = convergence_report(t, y, kr).radius_estimate;
    if (T < radius)
        throw Error(Errc::radius_exceeded,
                    "rate " + std::to_string(T) + " below estimated radius " + std::to_string(radius));
}

} // namespace detail

/// Truncated series prediction of n_z for a gapped mode.
inline double predict_defect_gapped(double p, double delta, double tau, const Rational& epsilon, int K,
                                    bool check_radius = true)
{
    require(delta > 0.0 && tau > 0.0, "gapped prediction needs delta > 0 and tau > 0");
    const auto t = coefficients_gapped(std::max(K, 12), epsilon);
    const double T = delta * tau;
    if (check_radius) detail::check_radius(t, p / delta, T);
    return series_defect(t, p / delta, T, K);
}

inline double predict_defect_gapless(double p, double gamma0, double tau, int K, bool check_radius = true)
{
    require(gamma0 > 0.0 && tau > 0.0, "gapless prediction needs gamma0 > 0 and tau > 0");
    const auto t = coefficients_gapless(std::max(K, 12));
    const double T = gamma0 * tau;
    if (check_radius) detail::check_radius(t, p / gamma0, T);
    return series_defect(t, p / gamma0, T, K);
}

/// Closed-form leading-order τ·n_z of a gapped mode at ε = 1.
inline double leading_defect_gapped(double p, double delta)
{
    const double p2 = p * p, d2 = delta * delta;
    const double q = p2 + 3.0 * d2;
    return delta * (p2 + d2) * (3.0 * d2 - p2) / (q * q * q);
}

/// Closed-form leading-order τ·n_z of a gapless mode.
inline double leading_defect_gapless(double p, double gamma0)
{
    const double p2 = p * p, g2 = gamma0 * gamma0;
    const double q = p2 + 2.0 * g2;
    return gamma0 * p2 * (4.0 * g2 - p2) / (q * q * q);
}

/// k followed by one log|c_k| column per y.
inline void write_growth_csv(std::ostream& os, const std::vector<ConvergenceReport>& reports,
                             const std::vector<std::string>& header = {})
{
    for (const auto& h : header) os << "# " << h << '\n';
    os << "k";
    for (const auto& r : reports) os << ",log_abs_ck_y" << r.y;
    os << '\n';
    if (reports.empty()) return;
    const auto prec = os.precision(17);
    for (std::size_t i = 0; i < reports.front().orders.size(); ++i) {
        os << reports.front().orders[i];
        for (const auto& r : reports) os << ',' << r.log_abs_ck[i];
        os << '\n';
    }
    os.precision(prec);
}

} // namespace lramp
