#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "lindblad_ramp/propagator.hpp"
#include "lindblad_ramp/series.hpp"

using namespace lramp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Truncated Taylor jets in x around x0: an independent floating-point route
// to the coefficient recursion.
using Jet = std::vector<long double>;

Jet jmul(const Jet& a, const Jet& b)
{
    Jet out(std::min(a.size(), b.size()), 0.0L);
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) out[i] += a[j] * b[i - j];
    return out;
}

Jet jdiv(const Jet& a, const Jet& b)
{
    Jet out(std::min(a.size(), b.size()), 0.0L);
    for (std::size_t i = 0; i < out.size(); ++i) {
        long double s = a[i];
        for (std::size_t j = 1; j <= i; ++j) s -= b[j] * out[i - j];
        out[i] = s / b[0];
    }
    return out;
}

Jet jderiv(const Jet& a)
{
    Jet out(a.size() - 1);
    for (std::size_t i = 0; i + 1 < a.size(); ++i) out[i] = a[i + 1] * static_cast<long double>(i + 1);
    return out;
}

Jet jlin(std::initializer_list<std::pair<long double, const Jet*>> terms)
{
    std::size_t n = SIZE_MAX;
    for (auto& t : terms) n = std::min(n, t.second->size());
    Jet out(n, 0.0L);
    for (auto& [c, j] : terms)
        for (std::size_t i = 0; i < n; ++i) out[i] += c * (*j)[i];
    return out;
}

std::vector<std::pair<double, double>> jet_recursion(long double G, long double e, long double x0, int K)
{
    const std::size_t L = static_cast<std::size_t>(K) + 2;
    Jet X(L, 0.0L), one(L, 0.0L);
    X[0] = x0;
    X[1] = 1;
    one[0] = 1;
    const Jet X2 = jmul(X, X);
    const Jet D = jlin({{G, &one}, {2 * e * e, &X2}});
    const Jet D3 = jmul(jmul(D, D), D);
    const long double e2 = e * e;
    Jet cn = jlin({{2 * e * e2 * G, &X2}, {-e * G * G / 2, &one}});
    const Jet X3 = jmul(X2, X);
    Jet dn = jlin({{2 * e2 * e2 * G, &X3}, {-7 * e2 * G * G / 2, &X}});
    Jet c = jdiv(cn, D3), d = jdiv(dn, D3);
    std::vector<std::pair<double, double>> out{{static_cast<double>(c[0]), static_cast<double>(d[0])}};
    const Jet fourD = jlin({{4, &D}});
    const Jet cd_coef = jlin({{4 * G, &one}, {-e2, &X2}});
    for (int k = 2; k <= K; ++k) {
        const Jet cp = jderiv(c), dp = jderiv(d);
        const Jet xcp = jmul(X, cp), xc = jmul(X, c), xdp = jmul(X, dp), qcp = jmul(cd_coef, cp);
        const Jet nc = jlin({{-3 * e, &xcp}, {-1, &dp}, {-e, &c}});
        const Jet nd = jlin({{1, &qcp}, {-3 * e, &xdp}, {-3 * e2, &xc}});
        c = jdiv(nc, fourD);
        d = jdiv(nd, fourD);
        out.emplace_back(static_cast<double>(c[0]), static_cast<double>(d[0]));
    }
    return out;
}

} // namespace

TEST_CASE("dimensionless P/M right-hand sides")
{
    const double T = 50.0;
    for (double eps : {0.5, 1.0, 2.0}) {
        const auto r = pm_rhs_gapped(0.0, 0.0, eps, T, {0.0, 0.0});
        CHECK(r.P == 0.0);
        CHECK_THAT(r.M / T, WithinRel(-2.0 * eps / T, 1e-14));
    }
    const PMState s{0.3, -0.7};
    const auto free = pm_rhs_gapped(0.4, 1.5, 0.0, T, s);
    CHECK_THAT(free.P, WithinRel(T * s.M, 1e-14));
    CHECK_THAT(free.M, WithinRel(-4.0 * T * (1.0 + 2.25) * s.P, 1e-14));

    for (double x : {0.0, 0.3, 1.0}) {
        const auto z = pm_rhs_gapless(x, 0.0, T, {0.0, 0.0});
        CHECK(z.P == 0.0);
        CHECK(z.M == 0.0);
    }
    const auto g = pm_rhs_gapless(1.0, 1.0, T, {0.0, 0.0});
    CHECK_THAT(g.P / T, WithinRel(2.0 / (T * 9.0), 1e-14));
    CHECK(g.M == 0.0);
    const double y = 1e4;
    const auto big = pm_rhs_gapless(0.6, y, T, {0.0, 0.0});
    CHECK_THAT(big.P / T * y * y, WithinRel(2.0 * 0.6 / T, 1e-6));
    REQUIRE_THROWS_AS(pm_rhs_gapless(0.5, 1.0, 0.0, {}), Error);
}

TEST_CASE("P/M evolution reproduces the propagator defect")
{
    auto run = [](const ModeParams& m) {
        const double T = m.rate();
        const double y = m.y();
        auto rhs = [&](double x, const ode::State<2>& v) {
            const PMState s{v[0], v[1]};
            const auto r = m.is_gapped() ? pm_rhs_gapped(x, y, m.epsilon, T, s) : pm_rhs_gapless(x, y, T, s);
            return ode::State<2>{r.P, r.M};
        };
        ode::AdaptiveOptions o;
        o.rtol = 1e-11;
        o.atol = 1e-14;
        const auto end = ode::dopri5<2>(rhs, 0.0, {0.0, 0.0}, std::vector<double>{1.0}, o, [](double, auto&) {});
        const auto pm = defect_from_pm(m, m.gamma0, {end[0], end[1]});
        const auto ref = defect_at_end(m, RampProtocol::of(m), Kind::full_lindblad);
        INFO("p=" << m.p << " delta=" << m.delta << " eps=" << m.epsilon);
        CHECK_THAT(std::get<0>(pm), WithinAbs(ref.n_x, 1e-8 / T));
        CHECK_THAT(std::get<1>(pm), WithinAbs(ref.n_y, 1e-8 / T));
        CHECK_THAT(std::get<2>(pm), WithinAbs(ref.n_z, 1e-8 / T));
    };
    run(ModeParams::gapped(0.0, 1.0, 1.0, 100.0));
    run(ModeParams::gapped(0.7, 1.3, 1.0, 200.0));
    run(ModeParams::gapped(0.4, 1.0, 2.0, 100.0));
    run(ModeParams::gapless(0.8, 1.0, 100.0));
    run(ModeParams::gapless(2.5, 0.7, 300.0));
}

TEST_CASE("truncated series solves the P/M system order by order")
{
    // residual of P = sum c_k T^-k in the ODE falls like T^-K
    for (const auto& t : {coefficients_gapped(6, 1), coefficients_gapped(6, 2), coefficients_gapless(6)}) {
        const bool gapped = t.series_case().gapped;
        const double e = static_cast<double>(t.series_case().epsilon);
        const double T = 1000.0, y = 0.8, h = 1e-5;
        for (double x : {0.2, 0.6, 1.0}) {
            auto sum = [&](int K, double xx, bool d) {
                double s = 0, tk = 1;
                for (int k = 1; k <= K; ++k) {
                    tk /= T;
                    s += (d ? t.d_value(k, xx, y) : t.c_value(k, xx, y)) * tk;
                }
                return s;
            };
            std::vector<double> res;
            for (int K : {1, 3}) {
                const PMState s{sum(K, x, false), sum(K, x, true)};
                const auto r = gapped ? pm_rhs_gapped(x, y, e, T, s) : pm_rhs_gapless(x, y, T, s);
                const double dp = (sum(K, x + h, false) - sum(K, x - h, false)) / (2 * h);
                const double dm = (sum(K, x + h, true) - sum(K, x - h, true)) / (2 * h);
                res.push_back(std::max(std::abs(dp - r.P), std::abs(dm - r.M)));
            }
            CHECK(res[0] > 1e-4);
            CHECK(res[1] < 1e-6);
        }
    }
}

TEST_CASE("defect formulas from P and M")
{
    const auto m = ModeParams::gapped(0.6, 1.2, 1.0, 10.0);
    const auto [zx, zy, zz] = defect_from_pm(m, 0.8, {0.0, 0.0});
    CHECK((zx == 0.0 && zy == 0.0 && zz == 0.0));

    const auto at0 = defect_from_pm(ModeParams::gapped(0.0, 1.0, 1.0, 100.0), 1.0, {1.0 / 18.0 / 100.0, 0.0});
    CHECK_THAT(std::get<2>(at0), WithinRel(1.0 / 900.0, 1e-15));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const auto [nx, ny, nz] = defect_from_pm(m, 0.8, {u(rng), u(rng)});
        (void)nz;
        CHECK(std::abs(nx * m.p + ny * m.delta) < 1e-15);
    }

    // explicit conjugate pair r2, r3 on the right eigenvectors
    for (const auto& mm : {ModeParams::gapped(0.6, 1.2, 1.0, 10.0), ModeParams::gapless(0.9, 0.5, 10.0)}) {
        const double g = 0.35;
        const auto es = eigensystem(mm, g, Kind::full_lindblad);
        const cplx r2(u(rng), u(rng));
        const cplx r3 = std::conj(r2);
        const double s = std::sqrt(4.0 * mm.energy2() - g * g);
        const double lam = mm.is_gapped() ? mm.delta : mm.gamma0;
        const PMState pm{(r2 + r3).real(), (cplx(0, 1) / lam * (r2 - r3) * s).real()};
        const auto [nx, ny, nz] = defect_from_pm(mm, g, pm);
        const double expect[3] = {2.0 * (r2 * es.right[2][1] + r3 * es.right[3][1]).real(),
                                  2.0 * (r2 * es.right[2][2] + r3 * es.right[3][2]).real(),
                                  2.0 * (r2 * es.right[2][3] + r3 * es.right[3][3]).real()};
        CHECK_THAT(nx, WithinAbs(expect[0], 1e-14));
        CHECK_THAT(ny, WithinAbs(expect[1], 1e-14));
        CHECK_THAT(nz, WithinAbs(expect[2], 1e-14));
    }

    try {
        defect_from_pm(ModeParams::gapless(0.0, 1.0, 1.0), 0.5, {1e-3, 1e-3});
        FAIL("expected DegenerateMode");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::degenerate_mode);
    }
}

TEST_CASE("rational parsing and polynomial basics")
{
    CHECK(parse_rational("3") == 3);
    CHECK(parse_rational("-3/2") == Rational(-3, 2));
    CHECK(parse_rational("1.25") == Rational(5, 4));
    REQUIRE_THROWS_AS(parse_rational("abc"), Error);
    REQUIRE_THROWS_AS(parse_rational("1/0"), Error);

    const BiPoly x = BiPoly::monomial(1, 0);
    const BiPoly Y = BiPoly::monomial(0, 1);
    const BiPoly p = (x + Y).pow(3);
    CHECK(p.eval(2, 3) == 125);
    CHECK(p.dx() == Rational(3) * (x + Y).pow(2));
    CHECK((p - p).is_zero());
    CHECK(p.at_x(1) == (BiPoly(Rational(1)) + Y).pow(3));
}

TEST_CASE("first-order coefficients")
{
    const auto g = coefficients_gapped(3, 1);
    CHECK(g.c_exact(1, 1, 0) == Rational(1, 18));
    CHECK(g.c(1).denom_power == 3);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int i = 0; i < 20; ++i) CHECK(g.d_value(1, 0.0, u(rng)) == 0.0);

    const auto gl = coefficients_gapless(3);
    CHECK(gl.c_exact(1, 1, 1) == Rational(1, 18));
    for (double x : {0.1, 0.5, 1.0}) CHECK(gl.c_value(1, x, 0.0) == 0.0);

    // printed gapless d1 = x y²(4x²-7y²)/(2(y²+2x²)³)
    const double x = 0.7, y = 1.3;
    const double D = y * y + 2 * x * x;
    CHECK_THAT(gl.d_value(1, x, y), WithinRel(x * y * y * (4 * x * x - 7 * y * y) / (2 * D * D * D), 1e-14));
}

TEST_CASE("leading order is the closed-form defect", "[property]")
{
    const auto g = coefficients_gapped(1, 1);
    // 2 N(1, Y) - (1+Y)(3-Y) == 0 with D(1, Y) = Y + 3
    const BiPoly Y = BiPoly::monomial(0, 1);
    const BiPoly one(Rational(1));
    const BiPoly diff = Rational(2) * g.c(1).numerator.at_x(1) - (one + Y) * (Rational(3) * one - Y);
    CHECK(diff.is_zero());
    CHECK(g.series_case().denominator().at_x(1) == Y + Rational(3) * one);

    const auto gl = coefficients_gapless(1);
    const BiPoly dl = Rational(2) * gl.c(1).numerator.at_x(1) - Y * (Rational(4) * one - Y);
    CHECK(dl.is_zero());

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 6.0);
    for (int i = 0; i < 100; ++i) {
        const double y = u(rng);
        CHECK_THAT(2.0 * g.c_value(1, 1.0, y), WithinAbs(leading_defect_gapped(y, 1.0), 1e-12));
        CHECK_THAT(2.0 * gl.c_value(1, 1.0, y), WithinAbs(leading_defect_gapless(y, 1.0), 1e-12));
    }
}

TEST_CASE("exact tables agree with a floating-point jet recursion", "[property]")
{
    const int K = 12;
    const auto g1 = coefficients_gapped(K, 1);
    const auto g2 = coefficients_gapped(K, 2);
    const auto gl = coefficients_gapless(K);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ux(0.0, 1.0), uy(0.0, 5.0);
    int worst_k = 0;
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const double x = ux(rng), y = uy(rng);
        const auto& t = i % 3 == 0 ? g1 : (i % 3 == 1 ? g2 : gl);
        const double G = t.series_case().gapped ? 1.0 + y * y : y * y;
        const double e = static_cast<double>(t.series_case().epsilon);
        if (!t.series_case().gapped && y < 0.2) continue;
        const auto jets = jet_recursion(G, e, x, K);
        for (int k = 1; k <= K; ++k) {
            const double ce = t.c_value(k, x, y), de = t.d_value(k, x, y);
            const auto [cj, dj] = jets[static_cast<std::size_t>(k - 1)];
            const double rc = std::abs(ce - cj) / std::max(std::abs(ce), 1e-300);
            const double rd = std::abs(de - dj) / std::max(std::abs(de), 1e-300);
            if (std::max(rc, rd) > worst) worst = std::max(rc, rd), worst_k = k;
        }
    }
    INFO("worst order " << worst_k);
    CHECK(worst < 1e-10);
}

TEST_CASE("denominator power law and growth budget", "[property]")
{
    const auto t = coefficients_gapped(20, 1);
    for (int k = 1; k <= 20; ++k) {
        CHECK(t.c(k).denom_power == 2 * k + 1);
        CHECK(t.d(k).denom_power == 2 * k + 1);
    }
    SeriesOptions tiny;
    tiny.bit_budget = 64;
    try {
        coefficients_gapped(20, 1, tiny);
        FAIL("expected OrderOverflow");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::order_overflow);
        CHECK(std::string(e.what()).find("order") != std::string::npos);
    }
    REQUIRE_THROWS_AS(coefficients_gapped(0, 1), Error);
    REQUIRE_THROWS_AS(coefficients_gapped(3, 0), Error);
}

TEST_CASE("EP crossing leaves the coefficients finite", "[property]")
{
    const auto t = coefficients_gapped(20, 2);
    for (int k = 1; k <= 20; ++k) {
        CHECK(std::isfinite(t.c_value(k, 1.0, 0.0)));
        CHECK(std::isfinite(t.d_value(k, 1.0, 0.0)));
        // the denominator 1 + y² + 8x² never vanishes for real x, y
        CHECK(t.series_case().denominator().eval(1, 0) == 9);
    }
}

TEST_CASE("second order against the propagator")
{
    const auto t = coefficients_gapped(2, 1);
    CHECK(t.c_exact(2, 1, 0) == Rational(-1, 81));

    // τ n_z - 2 c1 shrinks like 1/τ
    const double y = 0.5;
    std::vector<double> gaps;
    for (double T : {100.0, 1000.0, 10000.0}) {
        const auto m = ModeParams::gapped(y, 1.0, 1.0, T);
        gaps.push_back(T * defect_at_end(m, RampProtocol::of(m), Kind::full_lindblad).n_z - 2.0 * t.c_value(1, 1.0, y));
    }
    CHECK_THAT(gaps[0] / gaps[1], WithinAbs(10.0, 0.5));
    CHECK_THAT(gaps[1] / gaps[2], WithinAbs(10.0, 0.5));
    CHECK_THAT(gaps[1] * 1000.0, WithinRel(2.0 * t.c_value(2, 1.0, y), 0.02));
}

TEST_CASE("truncated predictions")
{
    CHECK_THAT(predict_defect_gapped(0.0, 1.0, 100.0, 1, 1), WithinRel(1.0 / 900.0, 1e-14));
    CHECK(std::abs(predict_defect_gapped(std::sqrt(3.0), 1.0, 100.0, 1, 1)) < 1e-18);
    const double k1 = predict_defect_gapped(0.0, 1.0, 100.0, 1, 1);
    const double k2 = predict_defect_gapped(0.0, 1.0, 100.0, 1, 2);
    const double rel = std::abs(k2 - k1) / std::abs(k1);
    CHECK(rel > 1e-3);
    CHECK(rel < 1e-1);
    CHECK_THAT(predict_defect_gapless(1.0, 1.0, 1000.0, 1), WithinRel(1.0 / 9000.0, 1e-14));
    try {
        predict_defect_gapped(0.0, 1.0, 2.0, 1, 3);
        FAIL("expected RadiusExceeded");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::radius_exceeded);
    }
    REQUIRE_NOTHROW(predict_defect_gapped(0.0, 1.0, 2.0, 1, 3, false));
}

TEST_CASE("convergence report")
{
    const auto t = coefficients_gapped(20, 1);
    const auto reps = convergence_report(t, std::vector<double>{0.0, 1.0});
    REQUIRE(reps.size() == 2);
    for (const auto& r : reps) {
        CHECK(r.orders.size() == 20);
        CHECK(r.growth_rate > 0.0);
        CHECK(std::isfinite(r.radius_estimate));
        CHECK_THAT(r.radius_estimate, WithinRel(std::exp(r.growth_rate), 1e-15));
    }
    REQUIRE_THROWS_AS(convergence_report(t, 0.0, 5), Error);

    // exact zeros are skipped: gapless c1 vanishes at y = 2
    const auto gl = coefficients_gapless(10);
    const auto z = convergence_report(gl, 2.0);
    CHECK(std::isinf(z.log_abs_ck[0]));
    CHECK(std::isfinite(z.growth_rate));

    std::ostringstream os;
    write_growth_csv(os, reps, {"case=gapped"});
    CHECK(os.str().rfind("# case=gapped\nk,log_abs_ck_y0,log_abs_ck_y1\n1,", 0) == 0);
}
