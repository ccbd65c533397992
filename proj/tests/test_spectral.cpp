#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cbfed/nonlinear.hpp"
#include "cbfed/spectral.hpp"
#include "test_util.hpp"

using namespace cbfed;
using cbfed::test::make_grid;
using cbfed::test::random_field;

TEST_CASE("fft round trip for supported sizes") {
    for (std::size_t n : {8u, 16u, 12u, 24u, 48u, 64u, 96u}) {
        Fft plan(n);
        SplitMix64 rng(17 + n);
        std::vector<Complex> data(n), orig;
        for (auto& c : data)
            c = Complex(rng.next_symmetric(), rng.next_symmetric());
        orig = data;
        plan.forward(data.data());
        plan.inverse(data.data());
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(data[i] / double(n) - orig[i]));
        CHECK(worst < 1e-13);
    }
    CHECK_THROWS_AS(Fft(10), std::invalid_argument);
}

TEST_CASE("fft matches direct DFT") {
    std::size_t n = 12;
    Fft plan(n);
    SplitMix64 rng(5);
    std::vector<Complex> data(n);
    for (auto& c : data)
        c = Complex(rng.next_symmetric(), rng.next_symmetric());
    std::vector<Complex> ref(n, Complex(0, 0));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) {
            double ang = -2.0 * M_PI * double(j * k) / double(n);
            ref[k] += data[j] * Complex(std::cos(ang), std::sin(ang));
        }
    plan.forward(data.data());
    for (std::size_t k = 0; k < n; ++k)
        CHECK(std::abs(data[k] - ref[k]) < 1e-12);
}

TEST_CASE("grid construction validates input") {
    CHECK_THROWS_AS(Grid(2, 6), std::invalid_argument);
    CHECK_THROWS_AS(Grid(2, 20), std::invalid_argument); // not a power of two
    CHECK_THROWS_AS(Grid(4, 16), std::invalid_argument);
    Grid g(2, 32);
    CHECK(g.kmax() == 10);
    CHECK(g.lambda1() == doctest::Approx(1.0));
    Grid gp(2, 32, M_PI);
    CHECK(gp.lambda1() == doctest::Approx(4.0));
}

TEST_CASE("physical transform pair is exact") {
    auto grid = make_grid(2, 16);
    // delta spike: flat magnitude spectrum, exact round trip
    std::vector<double> spike(grid->total(), 0.0);
    spike[37] = 1.0;
    auto coeffs = physical_to_spectral(*grid, spike);
    double mag0 = std::abs(coeffs[0]);
    for (const auto& c : coeffs)
        CHECK(std::abs(c) == doctest::Approx(mag0).epsilon(1e-12));
    auto back = spectral_to_physical(*grid, coeffs);
    double worst = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i)
        worst = std::max(worst, std::abs(back[i] - spike[i]));
    CHECK(worst < 1e-12);

    // (sin x1, 0): exactly two nonzero modes k = +/- e1
    const Grid& g = *grid;
    std::vector<double> sinx(g.total());
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j)
            sinx[i * g.n() + j] = std::sin(kTwoPi * i / g.n());
    auto sc = physical_to_spectral(g, sinx);
    int nonzero = 0;
    for (std::size_t idx = 0; idx < g.total(); ++idx)
        if (std::abs(sc[idx]) > 1e-12)
            ++nonzero;
    CHECK(nonzero == 2);
    CHECK(std::abs(sc[g.linear_index({1, 0, 0})] - Complex(0.0, -0.5)) < 1e-13);

    // random round trip
    SplitMix64 rng(99);
    std::vector<double> noise(g.total());
    double peak = 0.0;
    for (auto& v : noise) {
        v = rng.next_symmetric();
        peak = std::max(peak, std::abs(v));
    }
    auto rt = spectral_to_physical(g, physical_to_spectral(g, noise));
    worst = 0.0;
    for (std::size_t i = 0; i < rt.size(); ++i)
        worst = std::max(worst, std::abs(rt[i] - noise[i]));
    CHECK(worst < 1e-12 * peak);
}

TEST_CASE("leray projection") {
    auto grid = make_grid(2, 32);
    SplitMix64 rng(3);

    SUBCASE("gradient fields project to zero") {
        // grad(sin x1) = (cos x1, 0): mode +/- e1 amplitude (1/2, 0)
        SpectralField gradphi(grid);
        gradphi.set_mode({1, 0, 0}, {Complex(0.5, 0.0), Complex(0.0, 0.0), Complex(0.0, 0.0)});
        auto proj = leray_project(gradphi);
        CHECK(h_norm(proj) < 1e-14);
    }

    SUBCASE("solenoidal fields are fixed points") {
        SpectralField u(grid);
        // u = (sin x2, 0): coef of component 0 at k=(0,1) is -i/2
        u.set_mode({0, 1, 0}, {Complex(0.0, -0.5), Complex(0.0, 0.0), Complex(0.0, 0.0)});
        auto proj = leray_project(u);
        CHECK(h_norm(proj - u) < 1e-14 * h_norm(u));
    }

    SUBCASE("output is modewise solenoidal and idempotent") {
        for (int trial = 0; trial < 100; ++trial) {
            auto u = random_field(grid, rng);
            auto p = leray_project(u);
            CHECK(divergence_defect(p) <= 1e-12);
            auto pp = leray_project(p);
            CHECK(h_norm(pp - p) <= 1e-13 * h_norm(p));
        }
    }

    SUBCASE("orthogonal to gradients") {
        for (int trial = 0; trial < 20; ++trial) {
            auto u = random_field(grid, rng);
            auto p = leray_project(u);
            // random scalar phi -> gradient field
            SpectralField gphi(grid);
            for (int a = 1; a <= 4; ++a)
                for (int b = -4; b <= 4; ++b) {
                    Complex phi(rng.next_symmetric(), rng.next_symmetric());
                    std::array<int, 3> k{a, b, 0};
                    double ks = kTwoPi / grid->box_length();
                    gphi.add_mode(k, {Complex(0.0, ks * a) * phi, Complex(0.0, ks * b) * phi,
                                      Complex(0.0, 0.0)});
                }
            double ip = dot_h(p, gphi);
            CHECK(std::abs(ip) <= 1e-12 * h_norm(p) * h_norm(gphi));
        }
    }
}

TEST_CASE("stokes operator") {
    auto grid = make_grid(2, 32);

    SUBCASE("eigen relation on single modes") {
        SpectralField u(grid);
        u.set_mode({1, 2, 0}, {Complex(2.0, 0.0), Complex(-1.0, 0.0), Complex(0.0, 0.0)});
        auto w = leray_project(u);
        auto aw = stokes_apply(w);
        CHECK(h_norm(aw - 5.0 * w) < 1e-13 * h_norm(w));
    }

    SUBCASE("eigen relation holds for every retained mode of a small grid") {
        auto small = make_grid(2, 8);
        for (int a = -small->kmax(); a <= small->kmax(); ++a)
            for (int b = -small->kmax(); b <= small->kmax(); ++b) {
                if (a == 0 && b == 0)
                    continue;
                SpectralField u(small);
                u.set_mode({a, b, 0}, {Complex(0.7, 0.3), Complex(-0.1, 0.9), Complex(0, 0)});
                auto w = leray_project(u);
                if (h_norm(w) == 0.0)
                    continue;
                auto aw = stokes_apply(w);
                double lam = double(a * a + b * b) * small->lambda1();
                CHECK(h_norm(aw - lam * w) <= 1e-13 * lam * h_norm(w));
            }
    }

    SUBCASE("zero maps to zero; unflagged input rejected") {
        auto z = SpectralField::zero(grid);
        z.set_divergence_free(true);
        CHECK(h_norm(stokes_apply(z)) == 0.0);
        SpectralField u(grid);
        u.set_mode({1, 0, 0}, {Complex(1.0, 0.0), Complex(0.0, 0.0), Complex(0.0, 0.0)});
        CHECK_THROWS_AS(stokes_apply(u), std::invalid_argument);
    }

    SUBCASE("energy pairing <Au,u> equals V-norm squared and gradient quadrature") {
        SplitMix64 rng(7);
        auto u = leray_project(random_field(grid, rng));
        double pair = dot_h(stokes_apply(u), u);
        CHECK(pair == doctest::Approx(v_norm(u) * v_norm(u)).epsilon(1e-12));
        // physical-space gradient quadrature oracle
        const Grid& g = *grid;
        double ks = kTwoPi / g.box_length();
        double quad = 0.0;
        for (int c = 0; c < g.dim(); ++c)
            for (int j = 0; j < g.dim(); ++j) {
                std::vector<Complex> der(g.total());
                for (std::size_t idx = 0; idx < g.total(); ++idx)
                    der[idx] = Complex(0.0, ks * g.kvec(idx)[j]) * u.coeff(c, idx);
                auto phys = spectral_to_physical(g, der);
                double cell = std::pow(g.box_length() / g.n(), g.dim());
                for (double v : phys)
                    quad += v * v * cell;
            }
        CHECK(pair == doctest::Approx(quad).epsilon(1e-10));
    }
}

TEST_CASE("norms") {
    auto grid = make_grid(2, 32);
    SpectralField u(grid);
    u.set_mode({0, 1, 0}, {Complex(0.0, -0.5), Complex(0.0, 0.0), Complex(0.0, 0.0)});

    SUBCASE("H norm of (sin x2, 0) is sqrt(2 pi^2)") {
        CHECK(h_norm(u) == doctest::Approx(std::sqrt(2.0 * M_PI * M_PI)).epsilon(1e-13));
    }

    SUBCASE("single lambda=1 mode: V norm equals H norm") {
        CHECK(v_norm(u) == doctest::Approx(h_norm(u)).epsilon(1e-13));
    }

    SUBCASE("Poincare inequality and duality sandwich") {
        SplitMix64 rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            auto w = random_field(grid, rng);
            double l1 = grid->lambda1();
            CHECK(v_norm(w) * v_norm(w) >= l1 * h_norm(w) * h_norm(w) * (1.0 - 1e-13));
            CHECK(vprime_norm(w) <= h_norm(w) / std::sqrt(l1) * (1.0 + 1e-13));
            CHECK(h_norm(w) <= v_norm(w) / std::sqrt(l1) * (1.0 + 1e-13));
        }
    }

    SUBCASE("Parseval vs physical quadrature") {
        SplitMix64 rng(13);
        auto w = random_field(grid, rng);
        auto phys = w.to_physical();
        const Grid& g = *grid;
        double cell = std::pow(g.box_length() / g.n(), g.dim());
        double quad = 0.0;
        for (const auto& compo : phys)
            for (double v : compo)
                quad += v * v * cell;
        CHECK(h_norm(w) * h_norm(w) == doctest::Approx(quad).epsilon(1e-10));
    }

    SUBCASE("Lp norm sanity and domain") {
        CHECK_THROWS_AS(lp_norm(u, 0.5), std::invalid_argument);
        // ||(sin x2,0)||_{L4}^4 = integral sin^4 = (3/8)(2pi)(2pi)
        double l4 = lp_norm(u, 4.0);
        CHECK(std::pow(l4, 4) == doctest::Approx(0.375 * kTwoPi * kTwoPi).epsilon(1e-12));
    }
}

TEST_CASE("galerkin truncation") {
    auto grid = make_grid(2, 32);
    SplitMix64 rng(23);
    ModeSet m{4};
    m.validate(*grid);

    SUBCASE("identity on its range and idempotent") {
        SpectralField u(grid);
        u.set_mode({1, 1, 0}, {Complex(0.3, 0.1), Complex(-0.2, 0.4), Complex(0.0, 0.0)});
        auto t = galerkin_truncate(u, m);
        CHECK(h_norm(t - u) < 1e-15);
        auto tt = galerkin_truncate(t, m);
        CHECK(h_norm(tt - t) < 1e-15);
    }

    SUBCASE("norm non-increasing, equality iff supported") {
        for (int trial = 0; trial < 30; ++trial) {
            auto u = random_field(grid, rng);
            auto t = galerkin_truncate(u, m);
            CHECK(h_norm(t) <= h_norm(u) * (1 + 1e-14));
            CHECK(v_norm(t) <= v_norm(u) * (1 + 1e-14));
            CHECK(vprime_norm(t) <= vprime_norm(u) * (1 + 1e-14));
            bool inside = supported_in(u, m, 0.0);
            if (!inside)
                CHECK(h_norm(t) < h_norm(u));
        }
    }

    SUBCASE("mode sets are nested") {
        for (int c = 1; c < 8; ++c) {
            ModeSet a{c}, b{c + 1};
            CHECK(a.count_retained(*grid) <= b.count_retained(*grid));
        }
        // lambda_1 is the smallest retained eigenvalue
        CHECK(ModeSet{1}.count_retained(*grid) == 4); // (+-1,0),(0,+-1)
    }
}

TEST_CASE("hermitian and divergence defects") {
    auto grid = make_grid(2, 16);
    SplitMix64 rng(31);
    auto u = random_field(grid, rng);
    CHECK(hermitian_defect(u) < 1e-14);
    auto p = leray_project(u);
    CHECK(divergence_defect(p) < 1e-13);
}
