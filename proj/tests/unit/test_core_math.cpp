#include <doctest.h>

#include <cmath>
#include <random>

#include "properpo/core_math.hpp"

using namespace properpo;

TEST_CASE("ProbVector validates entries") {
    CHECK_NOTHROW(ProbVector({0.25, 0.75}));
    CHECK_THROWS_AS(ProbVector({0.5}), InvalidArgument);
    CHECK_THROWS_AS(ProbVector({-0.1, 1.1}), InvalidArgument);
    CHECK_THROWS_AS(ProbVector({0.5, 0.6}), InvalidArgument);
    const auto u = ProbVector::uniform(4);
    CHECK(u[2] == doctest::Approx(0.25));
    CHECK(u.interior());
    const auto e = ProbVector::vertex(3, 1);
    CHECK(e[1] == 1.0);
    CHECK_FALSE(e.interior());
    CHECK(e.support_size() == 1);
    const auto nrm = ProbVector::normalized({1.0, 3.0});
    CHECK(nrm[1] == doctest::Approx(0.75));
}

TEST_CASE("ScalarFn enforces its domain") {
    ScalarFn f([](double x) { return std::sqrt(x); }, {0.0, 1.0});
    CHECK(f(0.25) == doctest::Approx(0.5));
    CHECK_THROWS_AS(f(1.5), DomainError);
    CHECK(f.raw(4.0) == doctest::Approx(2.0));
}

TEST_CASE("simplex_grid enumerations") {
    const auto g = simplex_grid(2, 2);
    REQUIRE(g.size() == 3);
    CHECK(g[0].vec() == std::vector<double>{0.0, 1.0});
    CHECK(g[1].vec() == std::vector<double>{0.5, 0.5});
    CHECK(g[2].vec() == std::vector<double>{1.0, 0.0});

    const auto v = simplex_grid(3, 1);
    REQUIRE(v.size() == 3);
    for (const auto& p : v) CHECK(p.support_size() == 1);

    CHECK(simplex_grid(3, 4).size() == 15);
    // Stars and bars, computed independently.
    for (std::size_t n = 2; n <= 5; ++n)
        for (std::size_t r = 1; r <= 8; ++r) {
            double c = 1.0;
            for (std::size_t k = 1; k < n; ++k) c = c * static_cast<double>(r + k) / static_cast<double>(k);
            CHECK(simplex_grid(n, r).size() == static_cast<std::size_t>(std::llround(c)));
        }
    CHECK_THROWS_AS(simplex_grid(1, 3), InvalidArgument);
    CHECK_THROWS_AS(simplex_grid(3, 0), InvalidArgument);
    for (const auto& p : simplex_grid_interior(3, 6)) CHECK(p.interior());
}

TEST_CASE("quad on smooth and singular integrands") {
    CHECK(quad([](double) { return 1.0; }, 0.0, 1.0, 1e-10) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(quad([](double t) { return 1.0 / (t * t); }, 0.5, 1.0, 1e-10) - 1.0) < 1e-10);
    // Antiderivative of -log(t)/t^2 is (1 + log t)/t.
    const auto F = [](double t) { return (1.0 + std::log(t)) / t; };
    const double exact = F(1.0) - F(0.2);
    CHECK(std::abs(quad([](double t) { return -std::log(t) / (t * t); }, 0.2, 1.0, 1e-8) - exact) < 1e-8);
    // Integrable endpoint singularity: int_0^1 t^{-1/2} = 2.
    CHECK(std::abs(quad([](double t) { return 1.0 / std::sqrt(t); }, 0.0, 1.0, 1e-8) - 2.0) < 1e-6);
    // Additivity over splits.
    auto g = [](double t) { return std::exp(-t) * std::sin(3 * t); };
    const double whole = quad(g, 0.0, 2.0, 1e-11);
    const double parts = quad(g, 0.0, 0.7, 1e-11) + quad(g, 0.7, 2.0, 1e-11);
    CHECK(std::abs(whole - parts) < 2e-11);
}

TEST_CASE("invert_monotone") {
    CHECK(invert_monotone([](double x) { return x; }, 0.3, {0.0, 1.0}, 1e-12) == doctest::Approx(0.3));
    CHECK(invert_monotone(logit, 0.0, {1e-9, 1 - 1e-9}, 1e-12) == doctest::Approx(0.5));
    CHECK(invert_monotone(logit, 2.0, {1e-9, 1 - 1e-9}, 1e-12) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
    CHECK_THROWS_AS(invert_monotone([](double x) { return x; }, 2.0, {0.0, 1.0}, 1e-12), OutOfRange);
    CHECK_THROWS_AS(invert_monotone([](double x) { return std::sin(6 * x); }, 0.1, {0.0, 3.0}, 1e-12),
                    ContractViolation);
    bool sat = false;
    CHECK(invert_monotone_saturating([](double x) { return x; }, 5.0, {0.0, 1.0}, 1e-12, &sat) == 1.0);
    CHECK(sat);
    // Round trip on random points for the catalog links.
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-6, 6);
    for (int k = 0; k < 100; ++k) {
        const double z = U(rng);
        const double p = logistic(z);
        CHECK(std::abs(logit(invert_monotone(logit, z, {1e-12, 1 - 1e-12}, 1e-12)) - z) < 1e-9);
        CHECK(std::abs(invert_monotone(logistic, p, {-40, 40}, 1e-14) - z) < 1e-6);
    }
}

TEST_CASE("finite_diff") {
    CHECK(std::abs(finite_diff([](double x) { return x * x; }, 1.0, 1e-5) - 2.0) < 1e-9);
    const std::vector<double> c{1.5, -2.0, 0.25};
    auto lin = [&](std::span<const double> x) { return c[0] * x[0] + c[1] * x[1] + c[2] * x[2]; };
    const std::vector<double> x{0.3, 0.1, -4.0};
    const auto g = finite_diff(lin, x, 1e-4);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(g[i] - c[i]) < 1e-9);
}

TEST_CASE("stable scalar helpers") {
    CHECK(softplus(800.0) == doctest::Approx(800.0));
    CHECK(softplus(-800.0) >= 0.0);
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(logistic(-800.0) >= 0.0);
    CHECK(logit(logistic(1.3)) == doctest::Approx(1.3));
    std::vector<double> t;
    for (int k = 1; k <= 100; ++k) t.push_back(k);
    CHECK(pairwise_sum(t) == 5050.0);
    const auto l = linspace(-1, 1, 5);
    CHECK(l[1] == doctest::Approx(-0.5));
}
