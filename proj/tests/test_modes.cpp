#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wavemaps/errors.hpp"
#include "wavemaps/modes.hpp"

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

double gauge0(double r) { return 2.0 * r * r / (1.0 + r * r); }

int sign_changes(const std::vector<double>& v) {
    int count = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if ((v[i] > 0.0) != (v[i - 1] > 0.0) && v[i] != 0.0 && v[i - 1] != 0.0) ++count;
    }
    return count;
}

}  // namespace

TEST_CASE("indicial exponents and light-cone coefficients") {
    const double alpha = origin_mode_exponent();
    CHECK(alpha * (alpha - 1.0) == doctest::Approx(2.0));
    auto [b0, b1] = lightcone_mode_exponents(3.0);
    CHECK(b0 == 0.0);
    CHECK(b1 == -2.0);
    CHECK(b1 * (b1 - 1.0 + 3.0) == doctest::Approx(0.0));
    CHECK(lightcone_mode_slope(1.0) == doctest::Approx(1.0));
    CHECK(lightcone_mode_slope(2.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(lightcone_mode_slope(0.0), std::invalid_argument);
    // second derivative of 2r^2/(1+r^2) at r = 1 is -1
    CHECK(lightcone_mode_curvature(1.0) == doctest::Approx(-0.5));
    CHECK(lightcone_mode_cubic(1.0, 1.0) == doctest::Approx(0.0));
    // 2r^2/(1+r^2) = 2(r^2 - r^4 + r^6 - ...)
    CHECK(origin_mode_k4(1.0, 2.0) == doctest::Approx(-1.0));
    CHECK(origin_mode_k6(1.0, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("potential at the equator value") {
    CHECK(mode_potential(pi / 2, 0.5) == doctest::Approx(-8.0));
    CHECK(mode_potential(pi / 2, 2.0) == doctest::Approx(-0.5));
}

TEST_CASE("closed-form gauge mode solves the mode equation pointwise") {
    for (double r = 0.05; r < 3.0; r += 0.173) {
        const double g = 1.0 + r * r;
        const double v = gauge0(r), dv = 4.0 * r / (g * g), d2v = 4.0 / (g * g) - 16.0 * r * r / (g * g * g);
        CHECK(std::abs(mode_equation_residual(1.0, r, v, dv, d2v, 2.0 * std::atan(r))) < 1e-13);
    }
}

TEST_CASE("gauge mode shots for the ground state") {
    ShootConfig cfg;
    ModeShot l = mode_shoot_origin(1.0, profile(0), cfg);
    // origin normalisation v ~ rho^2 gives v = rho^2/(1+rho^2)
    CHECK(l.v() == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(l.dv() == doctest::Approx(0.64).epsilon(1e-10));
    ModeShot r = mode_shoot_lightcone(1.0, profile(0), cfg);
    CHECK(r.v() == doctest::Approx(gauge0(0.5) / 1.0).epsilon(1e-10));
    CHECK(std::abs(matching_function(1.0, profile(0), cfg)) < 1e-10);
    CHECK_THROWS_AS(mode_shoot_lightcone(0.0, profile(0), cfg), std::invalid_argument);
}

TEST_CASE("ground state has only the gauge mode") {
    SpectrumReport rep = find_eigenvalues(profile(0), {0.1, 50.0}, ShootConfig{});
    REQUIRE(rep.eigenvalues.size() == 1);
    CHECK(std::abs(rep.eigenvalues[0] - 1.0) < 1e-6);
}

TEST_CASE("spectrum of the first excited profile") {
    SpectrumReport rep = find_eigenvalues(profile(1), default_lambda_range(1), ShootConfig{});
    REQUIRE(rep.eigenvalues.size() == 2);
    MESSAGE("lambda = " << rep.eigenvalues[0] << ", " << rep.eigenvalues[1]);
    CHECK(std::abs(rep.eigenvalues[0] - 6.333625) < 1e-4);
    CHECK(std::abs(rep.eigenvalues[1] - 1.0) < 1e-6);

    // the mismatch changes sign across every eigenvalue
    for (double l : rep.eigenvalues) {
        const double below = log_derivative_mismatch(l * (1.0 - 1e-6), profile(1), ShootConfig{});
        const double above = log_derivative_mismatch(l * (1.0 + 1e-6), profile(1), ShootConfig{});
        CHECK(below * above < 0.0);
    }

    for (double fit : {0.4, 0.6}) {
        ShootConfig cfg;
        cfg.rho_fit = fit;
        SpectrumReport other = find_eigenvalues(profile(1), {0.5, 10.0}, cfg);
        REQUIRE(other.eigenvalues.size() == 2);
        CHECK(std::abs(other.eigenvalues[0] - rep.eigenvalues[0]) < 10 * cfg.root_tol * 10.0);
        CHECK(std::abs(other.eigenvalues[1] - rep.eigenvalues[1]) < 10 * cfg.root_tol * 10.0);
    }
}

TEST_CASE("spectrum of the second excited profile") {
    SpectrumReport rep = find_eigenvalues(profile(2), default_lambda_range(2), ShootConfig{});
    REQUIRE(rep.eigenvalues.size() == 3);
    CHECK(std::abs(rep.eigenvalues[0] - 59.07) < 0.05);
    CHECK(std::abs(rep.eigenvalues[1] - 6.304) < 5e-3);
    CHECK(std::abs(rep.eigenvalues[2] - 1.0) < 1e-6);
}

TEST_CASE("gauge residual decays at second order") {
    const double r1 = gauge_mode_check(profile(1), 4096);
    const double r2 = gauge_mode_check(profile(1), 8192);
    MESSAGE("gauge residual " << r1 << " -> " << r2);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
    std::vector<double> rho{0.1, 0.2, 0.3, 0.4}, zero(4, 0.0), f(4, 1.0);
    CHECK(gauge_mode_residual(rho, zero, f, {0.1, 0.4}) == 0.0);
}

TEST_CASE("f_n' has n zeros on (0,1)") {
    for (int n = 0; n <= 4; ++n) {
        std::vector<double> rho;
        for (int i = 0; i < 400; ++i) rho.push_back(1e-7 * std::pow(10.0, 6.0 * i / 400.0));
        for (int i = 1; i < 2000; ++i) rho.push_back(0.1 + 0.9 * i / 2000.0);
        ProfileTable t = sample_profile(profile(n), rho);
        CHECK(sign_changes(t.df()) == n);
    }
}

TEST_CASE("eigenfunctions") {
    ModeProfile g = eigenfunction(profile(0), 1.0);
    CHECK(g.v(1.0) == 1.0);
    CHECK(g.v(0.0) == 0.0);
    for (double r = 0.0; r <= 1.0; r += 0.0625) CHECK(std::abs(g.v(r) - gauge0(r)) < 1e-9);

    // gauge eigenfunction of f_1 is rho^2 f_1' normalised at the light cone
    ModeProfile g1 = eigenfunction(profile(1), 1.0);
    ProfileTable t = sample_profile(profile(1), std::vector<double>{0.2, 0.5, 0.8});
    for (std::size_t i = 0; i < 3; ++i) {
        const double r = t.x()[i];
        CHECK(std::abs(g1.v(r) - r * r * t.df()[i] / profile(1).b) < 1e-7);
    }
}

TEST_CASE("mode extension past the light cone") {
    ModeProfile g = extend_mode(eigenfunction(profile(0), 1.0), 5.0);
    CHECK(g.v.back() == 5.0);
    for (double r = 1.0; r <= 5.0; r += 0.25) CHECK(std::abs(g.v(r) - gauge0(r)) < 1e-8);
    CHECK_THROWS_AS(extend_mode(g, 0.5), std::invalid_argument);

    ModeProfile u = extend_mode(eigenfunction(profile(1), 6.333625328681054), 5.0);
    for (double x : u.v.f()) CHECK(std::isfinite(x));
}
