#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <random>

#include "lindblad_ramp/liouvillian.hpp"

using namespace lramp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CVec4 lmul(const Supermatrix& L, const CVec4& v)
{
    CVec4 out{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) out[static_cast<std::size_t>(i)] += L(i, j) * v[static_cast<std::size_t>(j)];
    return out;
}

CVec4 rmul(const CVec4& e, const Supermatrix& L)
{
    CVec4 out{};
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) out[static_cast<std::size_t>(j)] += e[static_cast<std::size_t>(i)] * L(i, j);
    return out;
}

double cnorm(const CVec4& v)
{
    double s = 0;
    for (auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

double mnorm(const Supermatrix& L)
{
    double s = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) s += L(i, j) * L(i, j);
    return std::sqrt(s);
}

struct Sample {
    ModeParams m;
    double gamma;
};

std::vector<Sample> random_samples(Kind kind, int n)
{
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::vector<Sample> out;
    while (static_cast<int>(out.size()) < n) {
        const bool gapless = out.size() % 4 == 3;
        const double p = u(rng) - 1.5;
        const double d = gapless ? 0.0 : u(rng) + 0.05;
        const double g = u(rng);
        const ModeParams m = gapless ? ModeParams::gapless(p, 1.0, 10.0) : ModeParams::gapped(p, d, 1.0, 10.0);
        const double ep = find_ep(m, kind);
        if (std::abs(ep * ep - g * g) < 1e-3 * m.energy2() || m.energy2() < 1e-4) continue;
        out.push_back({m, g});
    }
    return out;
}

} // namespace

TEST_CASE("mode parameters enforce their invariants")
{
    REQUIRE_NOTHROW(ModeParams::gapped(0.3, 1.0, 2.0, 5.0));
    REQUIRE_THROWS_AS(ModeParams::gapped(0.3, 1.0, 2.0, -1.0), Error);
    REQUIRE_THROWS_AS(ModeParams::gapless(0.3, 0.0, 1.0), Error);
    ModeParams bad{0.1, 1.0, 2.0, 1.0, 1.5};
    REQUIRE_THROWS_AS(bad.validate(), Error);
    const auto g = ModeParams::make(2.0, 0.0, 4.0, 3.0);
    CHECK_FALSE(g.is_gapped());
    CHECK(g.y() == 0.5);
    CHECK(g.rate() == 12.0);
}

TEST_CASE("supermatrix entries")
{
    const auto m = ModeParams::gapped(1.0, 1.0, 1.0, 1.0);
    const auto full = build_supermatrix(m, 0.0, Kind::full_lindblad);
    CHECK(full(3, 0) == 0.0);
    CHECK(full(3, 1) == -2.0);
    CHECK(full(3, 2) == 2.0);
    CHECK(full(3, 3) == 0.0);
    for (int j = 0; j < 4; ++j) {
        CHECK(full(1, j) == (j == 3 ? 2.0 : 0.0));
        CHECK(full(2, j) == (j == 3 ? -2.0 : 0.0));
    }

    ModeParams zero{0.0, 0.0, 1.0, 1.0, 0.0};
    const auto z = build_supermatrix(zero, 0.0, Kind::full_lindblad);
    CHECK(mnorm(z) == 0.0);

    const auto nj = build_supermatrix(m, 1.0, Kind::no_jump);
    const double expect[4][4] = {{0, 0, 0, -2}, {0, 0, 0, 2}, {0, 0, 0, -2}, {-2, -2, 2, 0}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(nj(i, j) == expect[i][j]);

    REQUIRE_THROWS_AS(build_supermatrix(m, -0.1, Kind::full_lindblad), Error);
}

TEST_CASE("supermatrix trace and first row")
{
    for (const auto& s : random_samples(Kind::full_lindblad, 40)) {
        const auto L = build_supermatrix(s.m, s.gamma, Kind::full_lindblad);
        for (int j = 0; j < 4; ++j) CHECK(L(0, j) == 0.0);
        CHECK_THAT(L.trace(), WithinAbs(-8.0 * s.gamma, 1e-14));
        const auto N = build_supermatrix(s.m, s.gamma, Kind::no_jump);
        CHECK(N.trace() == 0.0);
        CHECK(N(0, 3) == N(3, 0));
        CHECK(N(1, 3) == -N(3, 1));
        CHECK(N(2, 3) == -N(3, 2));
    }
}

TEST_CASE("analytic eigenpairs satisfy both eigen equations", "[property]")
{
    for (Kind kind : {Kind::full_lindblad, Kind::no_jump}) {
        for (const auto& s : random_samples(kind, 60)) {
            const auto L = build_supermatrix(s.m, s.gamma, kind);
            const auto es = eigensystem(s.m, s.gamma, kind);
            const double scale = std::max(1.0, mnorm(L));
            cplx sum{};
            for (std::size_t a = 0; a < 4; ++a) {
                const auto lr = lmul(L, es.right[a]);
                const auto el = rmul(es.left[a], L);
                CVec4 rr{}, ll{};
                for (std::size_t i = 0; i < 4; ++i) {
                    rr[i] = lr[i] - es.lambdas[a] * es.right[a][i];
                    ll[i] = el[i] - es.lambdas[a] * es.left[a][i];
                }
                CHECK(cnorm(rr) <= 1e-12 * scale * cnorm(es.right[a]));
                CHECK(cnorm(ll) <= 1e-12 * scale * cnorm(es.left[a]));
                sum += es.lambdas[a];
            }
            CHECK(es.lambdas[0] == cplx{});
            CHECK_THAT(sum.real(), WithinAbs(L.trace(), 1e-12 * scale));
            CHECK_THAT(sum.imag(), WithinAbs(0.0, 1e-12 * scale));
        }
    }
}

TEST_CASE("biorthogonality away from exceptional points", "[property]")
{
    for (Kind kind : {Kind::full_lindblad, Kind::no_jump}) {
        for (const auto& s : random_samples(kind, 60)) {
            const auto es = eigensystem(s.m, s.gamma, kind);
            for (std::size_t a = 0; a < 4; ++a) {
                CHECK(std::abs(es.norms[a]) > 0.0);
                for (std::size_t b = 0; b < 4; ++b) {
                    if (a == b) continue;
                    CHECK(std::abs(bilinear(es.left[b], es.right[a])) <
                          1e-10 * cnorm(es.left[b]) * cnorm(es.right[a]));
                }
            }
        }
    }
}

TEST_CASE("analytic spectrum agrees with a generic eigensolver")
{
    for (Kind kind : {Kind::full_lindblad, Kind::no_jump}) {
        for (const auto& s : random_samples(kind, 30)) {
            const auto L = build_supermatrix(s.m, s.gamma, kind);
            Eigen::Matrix4d A;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) A(i, j) = L(i, j);
            Eigen::EigenSolver<Eigen::Matrix4d> solver(A, false);
            std::vector<cplx> num(solver.eigenvalues().data(), solver.eigenvalues().data() + 4);
            auto ana = eigenvalues(s.m, s.gamma, kind);
            auto key = [](cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); };
            auto near_sort = [&](std::vector<cplx>& v) {
                for (auto& x : v) x = {std::round(x.real() * 1e6) / 1e6, std::round(x.imag() * 1e6) / 1e6};
                std::sort(v.begin(), v.end(), key);
            };
            std::vector<cplx> a(ana.begin(), ana.end());
            near_sort(num);
            near_sort(a);
            for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(num[i] - a[i]) < 1e-5);
        }
    }
}

TEST_CASE("eigenvalue examples")
{
    const auto closed = eigenvalues(ModeParams::gapped(1.0, 1.0, 1.0, 1.0), 0.0, Kind::full_lindblad);
    CHECK_THAT(closed[2].imag(), WithinRel(2.0 * std::sqrt(2.0), 1e-15));
    CHECK_THAT(closed[3].imag(), WithinRel(-2.0 * std::sqrt(2.0), 1e-15));
    CHECK(closed[2].real() == 0.0);

    const auto m = ModeParams::gapped(0.0, 1.0, 2.0, 1.0);
    const auto ep = eigenvalues(m, 2.0, Kind::full_lindblad);
    CHECK(ep[2] == cplx(-6.0, 0.0));
    CHECK(ep[3] == cplx(-6.0, 0.0));
    REQUIRE_THROWS_AS(eigensystem(m, 2.0, Kind::full_lindblad), Error);
    try {
        eigensystem(m, 2.0, Kind::full_lindblad);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ep_degenerate);
    }

    const auto pt = eigenvalues(ModeParams::gapped(0.0, 1.0, 1.0, 1.0), 1.0, Kind::no_jump);
    CHECK(std::abs(pt[2]) == 0.0);
    CHECK(std::abs(pt[3]) == 0.0);
    REQUIRE_THROWS_AS(eigensystem(ModeParams::gapped(0.0, 1.0, 1.0, 1.0), 1.0, Kind::no_jump), Error);

    EigenOptions loose;
    loose.ep_tolerance = 5e-2;
    REQUIRE_THROWS_AS(eigensystem(m, 2.005, Kind::full_lindblad, loose), Error);
    REQUIRE_NOTHROW(eigensystem(m, 2.005, Kind::full_lindblad));

    try {
        eigensystem(ModeParams{0.0, 0.0, 1.0, 1.0, 0.0}, 0.5, Kind::full_lindblad);
        FAIL("expected DegenerateMode");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::degenerate_mode);
    }
}

TEST_CASE("gapless modes use the rescaled eigenvector")
{
    const auto m = ModeParams::gapless(0.7, 1.0, 10.0);
    const auto es = eigensystem(m, 0.4, Kind::full_lindblad);
    CHECK(es.right[1][1] == cplx(0.7));
    CHECK(es.right[1][2] == cplx(0.0));
    for (const auto& v : es.right)
        for (const auto& x : v) CHECK(std::isfinite(std::abs(x)));
}

TEST_CASE("exceptional point locations")
{
    CHECK(find_ep(ModeParams::gapped(0.0, 1.0, 1.0, 1.0), Kind::full_lindblad) == 2.0);
    CHECK(find_ep(ModeParams::gapped(0.0, 1.0, 1.0, 1.0), Kind::no_jump) == 1.0);
    const double gamma = 0.8;
    const auto m = ModeParams::gapless(gamma / 2.0, 1.0, 1.0);
    CHECK_THAT(find_ep(m, Kind::full_lindblad), WithinRel(gamma, 1e-15));
    const auto lam = eigenvalues(m, gamma, Kind::full_lindblad);
    CHECK(lam[2] == lam[3]);
}

TEST_CASE("steady state")
{
    const auto ss = steady_state(ModeParams::gapped(0.0, 1.0, 1.0, 1.0), 1.0);
    CHECK_THAT(ss.expectation(3), WithinRel(-2.0 / 3.0, 1e-15));
    CHECK_THAT(ss.expectation(1), WithinRel(-2.0 / 3.0, 1e-15));
    CHECK(ss.expectation(2) == 0.0);

    const auto mixed = steady_state(ModeParams::gapped(0.4, 1.3, 1.0, 1.0), 0.0);
    CHECK(mixed.c == Vec4{0.5, 0.0, 0.0, 0.0});

    const auto decay = steady_state(ModeParams{0.0, 0.0, 1.0, 1.0, 0.0}, 0.6);
    CHECK(decay.expectation(3) == -1.0);

    REQUIRE_THROWS_AS(steady_state(ModeParams{0.0, 0.0, 1.0, 1.0, 0.0}, 0.0), Error);

    for (const auto& s : random_samples(Kind::full_lindblad, 40)) {
        const auto st = steady_state(s.m, s.gamma);
        const auto r = liouvillian_apply(s.m.p, s.m.delta, s.gamma, Kind::full_lindblad, st.c);
        for (double x : r) CHECK(std::abs(x) < 1e-12);
        CHECK(st.bloch_length() <= 1.0 + 1e-12);
    }
}

TEST_CASE("steady-state gamma derivative matches finite differences")
{
    const auto m = ModeParams::gapped(0.6, 1.1, 1.0, 1.0);
    const double g = 0.45, h = 1e-5;
    const auto d = steady_state_gamma_derivative(m, g);
    const auto a = steady_state(m, g + h).c;
    const auto b = steady_state(m, g - h).c;
    for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(d[i], WithinAbs((a[i] - b[i]) / (2 * h), 1e-9));
}

TEST_CASE("ground state")
{
    // <psi-|sigma|psi-> with psi- = (-sin(theta/2) e^{-i phi}... ) evaluated directly
    auto oracle = [](double p, double d) {
        // H = p sx + d sy; ground state is the -E eigenvector of the 2x2 matrix
        const double e = std::hypot(p, d);
        const cplx h01(p, -d);
        // eigenvector for -E: (h01, -E)
        cplx a = h01, b = -e;
        const double n = std::sqrt(std::norm(a) + std::norm(b));
        a /= n;
        b /= n;
        const double sx = 2 * (std::conj(a) * b).real();
        const double sy = 2 * (std::conj(a) * b).imag();
        const double sz = std::norm(a) - std::norm(b);
        return std::array<double, 3>{sx, sy, sz};
    };
    const auto g1 = initial_ground_state(ModeParams::gapped(0.0, 1.0, 1.0, 1.0)).bloch();
    CHECK(g1 == std::array<double, 3>{0.0, -1.0, 0.0});
    const auto g2 = initial_ground_state(ModeParams::gapless(1.0, 1.0, 1.0)).bloch();
    CHECK(g2 == std::array<double, 3>{-1.0, 0.0, 0.0});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        const double p = u(rng), d = std::abs(u(rng)) + 0.01;
        const auto g = initial_ground_state(ModeParams::gapped(p, d, 1.0, 1.0));
        const auto o = oracle(p, d);
        for (std::size_t k = 0; k < 3; ++k) CHECK_THAT(g.bloch()[k], WithinAbs(o[k], 1e-14));
        CHECK_THAT(g.bloch_length(), WithinAbs(1.0, 1e-15));
    }
    REQUIRE_THROWS_AS(initial_ground_state(ModeParams{0.0, 0.0, 1.0, 1.0, 0.0}), Error);
}

TEST_CASE("projection onto the eigenbasis")
{
    const auto m = ModeParams::gapped(0.3, 1.0, 1.0, 1.0);
    const double g = 0.7;
    for (Kind kind : {Kind::full_lindblad, Kind::no_jump}) {
        const auto es = eigensystem(m, g, kind);
        if (kind == Kind::full_lindblad) {
            const auto r = project_onto_eigenbasis(steady_state(m, g), es);
            CHECK_THAT(r[0].real(), WithinAbs(1.0, 1e-14));
            for (std::size_t a = 1; a < 4; ++a) CHECK(std::abs(r[a]) < 1e-14);
        }
        CoherenceVector d1{{0.0, 2.5 * 0.3, 2.5 * 1.0, 0.0}};
        const auto r1 = project_onto_eigenbasis(d1, es);
        CHECK_THAT(r1[1].real(), WithinAbs(2.5, 1e-14));
        for (std::size_t a : {0u, 2u, 3u}) CHECK(std::abs(r1[a]) < 1e-14);

        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < 50; ++i) {
            const auto v = CoherenceVector::from_bloch(u(rng) / 2, u(rng) / 2, u(rng) / 2);
            const auto back = reconstruct(project_onto_eigenbasis(v, es), es);
            for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(back[k] - v.c[k]) < 1e-10);
        }
    }
}

TEST_CASE("adiabatic no-jump reference is an instantaneous eigenmode")
{
    // below the EP: in the kernel; above it: the growing eigenvector
    const auto below = ModeParams::gapped(0.4, 1.0, 0.9, 1.0);
    const auto s = adiabatic_nojump_state(below, 0.9);
    const auto r = liouvillian_apply(below.p, below.delta, 0.9, Kind::no_jump, s.c);
    for (double x : r) CHECK(std::abs(x) < 1e-14);
    const auto g0 = adiabatic_nojump_state(below, 0.0);
    const auto gs = initial_ground_state(below);
    for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(g0.c[i], WithinAbs(gs.c[i], 1e-15));

    const auto above = ModeParams::gapless(0.3, 1.0, 1.0);
    const auto a = adiabatic_nojump_state(above, 1.0);
    const auto la = liouvillian_apply(above.p, above.delta, 1.0, Kind::no_jump, a.c);
    const double mu = 2.0 * std::sqrt(1.0 - 0.09);
    for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(la[i], WithinAbs(mu * a.c[i], 1e-14));
    CHECK(a.expectation(3) < 0.0);
    CHECK_THAT(a.bloch_length(), WithinAbs(1.0, 1e-14));
}
