#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wavemaps/errors.hpp"
#include "wavemaps/selfsim.hpp"

#include <cmath>
#include <numbers>

using namespace wavemaps;

namespace {

constexpr double pi = std::numbers::pi;

const SelfSimilarProfile& profile(int n) {
    static std::vector<SelfSimilarProfile> cache;
    while (static_cast<int>(cache.size()) <= n) cache.push_back(find_profile(static_cast<int>(cache.size())));
    return cache[static_cast<std::size_t>(n)];
}

}  // namespace

TEST_CASE("origin series coefficients") {
    CHECK(origin_cubic_coefficient(2.0) == doctest::Approx(-2.0 / 3.0));
    // 2 arctan(r) = 2r - 2r^3/3 + 2r^5/5
    CHECK(origin_quintic_coefficient(2.0) == doctest::Approx(2.0 / 5.0));
}

TEST_CASE("light-cone series matches 2 arctan") {
    CHECK(lightcone_quadratic_coefficient(1.0) == doctest::Approx(-0.5));
    const double rho = 1.0 - 1e-2;
    SeriesPoint p = lightcone_series(1.0, rho);
    CHECK(std::abs(p.f - 2.0 * std::atan(rho)) < 1e-11);
    CHECK(std::abs(p.df - 2.0 / (1.0 + rho * rho)) < 1e-7);
}

TEST_CASE("single shots") {
    ShootConfig cfg;
    ShotResult l = integrate_from_origin(2.0, cfg);
    CHECK(std::abs(l.f - 2.0 * std::atan(0.5)) < 1e-11);
    CHECK(std::abs(l.df - 2.0 / 1.25) < 1e-10);
    ShotResult r = integrate_from_lightcone(1.0, cfg);
    CHECK(std::abs(r.f - 2.0 * std::atan(0.5)) < 1e-11);
    ShotResult zero = integrate_from_origin(0.0, cfg);
    CHECK(zero.f == 0.0);
    CHECK(zero.df == 0.0);
    ShotResult eq = integrate_from_lightcone(0.0, cfg);
    CHECK(std::abs(eq.f - pi / 2) < 1e-12);
    CHECK(std::abs(eq.df) < 1e-10);
}

TEST_CASE("config validation") {
    ShootConfig cfg;
    cfg.rho_fit = 0.9;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.rho_start = 0.01;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.ode_tol = 1e-3;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("ground state is 2 arctan") {
    const auto& p = profile(0);
    CHECK(std::abs(p.a - 2.0) < 1e-6);
    CHECK(std::abs(p.b - 1.0) < 1e-6);
    CHECK(p.crossings == 0);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.interior.size(); ++i) {
        worst = std::max(worst, std::abs(p.interior.f()[i] - 2.0 * std::atan(p.interior.x()[i])));
    }
    CHECK(worst <= 1e-8);
    CHECK(p.interior.size() >= 1024);
    CHECK(p.interior.f().front() == 0.0);
    CHECK(std::abs(p.interior.f().back() - pi / 2) < 1e-12);
}

TEST_CASE("first excited profile") {
    const auto& p = profile(1);
    MESSAGE("a1 = " << p.a << " b1 = " << p.b);
    CHECK(std::abs(p.a - 21.757413) / 21.757413 < 1e-6);
    CHECK(std::abs(std::abs(p.b) - 0.305664) < 1e-6);
    CHECK(p.b < 0.0);
    CHECK(p.crossings == 1);
}

TEST_CASE("family pattern for n <= 4") {
    double prev_a = 0.0;
    for (int n = 0; n <= 4; ++n) {
        const auto& p = profile(n);
        MESSAGE("n = " << n << " a = " << p.a << " b = " << p.b << " mismatch = " << p.mismatch);
        CHECK(p.a > prev_a);
        CHECK(p.crossings == n);
        CHECK((p.b > 0.0) == (n % 2 == 0));
        CHECK(p.mismatch <= p.config.root_tol);
        prev_a = p.a;
    }
}

TEST_CASE("shooting result does not depend on the fitting point") {
    for (double fit : {0.4, 0.6}) {
        ShootConfig cfg;
        cfg.rho_fit = fit;
        SelfSimilarProfile p = find_profile(2, cfg);
        CHECK(std::abs(p.a - profile(2).a) / p.a < 1e-9);
        CHECK(std::abs(p.b - profile(2).b) < 1e-9);
    }
}

TEST_CASE("general-n search agrees with the seeded search") {
    ShootConfig cfg;
    cfg.a_bracket = Interval{5.0, 100.0};
    SelfSimilarProfile p = find_profile(1, cfg);
    CHECK(std::abs(p.a - profile(1).a) / p.a < 1e-9);
}

TEST_CASE("interior table satisfies the ODE to second order") {
    const auto& p = profile(1);
    auto residual = [&](int nodes) {
        ProfileTable t = uniform_profile(p, 1.0, nodes);
        const double h = 1.0 / (nodes - 1);
        double worst = 0.0;
        for (int i = 1; i < nodes - 1; ++i) {
            const double r = t.x()[static_cast<std::size_t>(i)];
            if (r < 0.1 || r > 0.9) continue;
            const double* f = &t.f()[static_cast<std::size_t>(i)];
            const double d2 = (f[1] - 2.0 * f[0] + f[-1]) / (h * h);
            const double d1 = (f[1] - f[-1]) / (2.0 * h);
            worst = std::max(worst, std::abs(d2 + 2.0 * d1 / r - std::sin(2.0 * f[0]) / (r * r * (1.0 - r * r))));
        }
        return worst;
    };
    const double ratio = residual(1025) / residual(2049);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("exterior extension") {
    SelfSimilarProfile p0 = extend_exterior(profile(0), 5.0);
    CHECK(std::abs(p0.c - pi) < 1e-6);
    CHECK(std::abs(p0.d + 2.0) < 1e-4);
    CHECK(p0.exterior_fit_residual <= 1e-4);
    CHECK(p0.exterior.back() == 5.0);
    CHECK(std::abs(p0.exterior(3.0) - 2.0 * std::atan(3.0)) < 1e-9);

    SelfSimilarProfile p1 = extend_exterior(profile(1), 5.0);
    SelfSimilarProfile p4 = extend_exterior(profile(4), 5.0);
    MESSAGE("c1 = " << p1.c << " c4 = " << p4.c);
    CHECK(std::abs(p4.c - pi / 2) < std::abs(p1.c - pi / 2));
    CHECK(p1.exterior_fit_residual <= 1e-4);

    CHECK_THROWS_AS(extend_exterior(profile(0), 0.5), std::invalid_argument);
}

TEST_CASE("origin branch sampling matches the two-sided table") {
    const auto& p = profile(1);
    std::vector<double> rho;
    for (int i = 1; i < 96; ++i) rho.push_back(0.01 * i);
    const ProfileTable two = sample_profile(p, rho);
    const ProfileTable one = sample_origin_branch(p, rho, 1e-14);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        CHECK(std::abs(one.f()[i] - two.f()[i]) < 1e-8);
        CHECK(std::abs(one.df()[i] - two.df()[i]) < 1e-6);
    }
    CHECK_THROWS_AS(sample_origin_branch(p, std::vector<double>{0.5, 1.0}, 1e-12), std::invalid_argument);
    CHECK_THROWS_AS(sample_origin_branch(p, std::vector<double>{0.5, 0.4}, 1e-12), std::invalid_argument);
}
