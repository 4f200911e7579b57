#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wavemaps/errors.hpp"
#include "wavemaps/static_maps.hpp"

#include <cmath>
#include <numbers>

using namespace wavemaps;

namespace {

constexpr double pi = std::numbers::pi;

const StaticProfile& base() {
    static const StaticProfile p = integrate_pendulum({std::log(1e-3), std::log(2e5)});
    return p;
}

// Ground state from an independent solver (direct form, DOP853, matched at r = 1).
constexpr double ground_oracle = -0.0613325159835;

}  // namespace

TEST_CASE("series coefficient and linearisations") {
    // u = X + c X^3 + X^5/35 must leave an O(X^7) residual in u'' + u' - sin 2u
    const double c = pendulum_cubic_coefficient();
    CHECK(c == doctest::Approx(-2.0 / 15.0));
    for (double X : {1e-2, 2e-2}) {
        const double u = X + c * X * X * X + std::pow(X, 5) / 35.0;
        const double u1 = X + 3 * c * X * X * X + 5 * std::pow(X, 5) / 35.0;
        const double u2 = X + 9 * c * X * X * X + 25 * std::pow(X, 5) / 35.0;
        CHECK(std::abs(u2 + u1 - std::sin(2 * u)) < 10 * std::pow(X, 7));
    }
    auto [p1, p2] = pendulum_roots_at_pole();
    CHECK(p1 == doctest::Approx(1.0));
    CHECK(p2 == doctest::Approx(-2.0));
    for (double m : {p1, p2}) CHECK(m * m + m - 2.0 * std::cos(0.0) == doctest::Approx(0.0));
    auto [re, im] = pendulum_roots_at_equator();
    CHECK(re == doctest::Approx(-0.5));
    CHECK(im == doctest::Approx(std::sqrt(7.0) / 2.0));
    // (re + i im)^2 + (re + i im) - 2 cos(pi) = 0
    CHECK(re * re - im * im + re + 2.0 == doctest::Approx(0.0));
    CHECK(2 * re * im + im == doctest::Approx(0.0));
}

TEST_CASE("static profile behaviour at both ends") {
    const auto& p = base();
    const auto [u, ux] = static_state(p, std::log(1e-3));
    CHECK(u / 1e-3 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(ux / 1e-3 == doctest::Approx(1.0).epsilon(1e-6));
    for (double v : p.table.f()) {
        CHECK(v > 0.0);
        CHECK(v < pi);
    }
    CHECK(std::abs(measured_log_frequency(p) / tail_log_frequency() - 1.0) < 0.01);
    MESSAGE("tail amplitude " << p.amplitude << " phase " << p.phase << " residual " << p.tail_fit_residual);
    CHECK(std::isfinite(p.amplitude));
    CHECK(p.tail_fit_residual < 0.01);
    // the fitted tail reproduces the profile far out
    const double x = std::log(1e5);
    const double model = pi / 2 + p.amplitude * std::exp(-x / 2) * std::sin(tail_log_frequency() * x + p.phase);
    CHECK(std::abs(static_state(p, x).first - model) < 1e-3 * p.amplitude * std::exp(-x / 2));
}

TEST_CASE("short range has no tail fit") {
    StaticProfile p = integrate_pendulum({-2.0, 1.0});
    CHECK(std::isnan(p.amplitude));
    CHECK_THROWS_AS(measured_log_frequency(p), DomainTooSmall);
    CHECK_THROWS_AS(integrate_pendulum({1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("dilation covariance") {
    StaticProfile p2 = integrate_pendulum({std::log(1e-3), std::log(1e3)}, {}, 2.0);
    for (double x = -6.0; x < 6.0; x += 0.37) {
        CHECK(std::abs(static_state(p2, x).first - static_state(base(), x + std::log(2.0)).first) < 1e-10);
    }
}

TEST_CASE("Neumann points") {
    const auto& p = base();
    CHECK(neumann_points(p, 0).empty());
    auto r = neumann_points(p, 5);
    REQUIRE(r.size() == 5);
    MESSAGE("r_k = " << r[0] << " " << r[1] << " " << r[2] << " " << r[3] << " " << r[4]);
    for (std::size_t k = 1; k < r.size(); ++k) CHECK(r[k] > r[k - 1]);
    const double ratio = std::exp(2 * pi / std::sqrt(7.0));
    CHECK(std::abs(r[4] / r[3] / ratio - 1.0) < 1e-3);
    CHECK(std::abs(r[4] / r[3] - ratio) < std::abs(r[1] / r[0] - ratio));
    // the scaling mode vanishes at every Neumann point
    for (double rk : r) CHECK(std::abs(static_state(p, std::log(rk)).second) < 1e-12);
    CHECK_THROWS_AS(neumann_points(p, 12), DomainTooSmall);
    CHECK_THROWS_AS(neumann_points(p, -1), std::invalid_argument);
}

TEST_CASE("truncated Neumann family") {
    const double R = 3.0;
    NeumannFamily fam = neumann_family(base(), R, 4, 8193);
    REQUIRE(fam.members.size() == 4);
    for (std::size_t k = 0; k < fam.members.size(); ++k) {
        const ProfileTable& m = fam.members[k];
        CHECK(m.back() == R);
        CHECK(std::abs(m.df().back()) < 1e-10);
        int extrema = 0;
        for (std::size_t i = 2; i + 1 < m.size(); ++i) {
            if ((m.df()[i] > 0.0) != (m.df()[i - 1] > 0.0)) ++extrema;
        }
        CHECK(extrema == static_cast<int>(k));
    }
}

TEST_CASE("crossings and extrema interleave") {
    for (double hi : {10.0, 100.0, 1e3, 1e4, 1e5}) {
        const int e = extrema_count(base(), {1e-3, hi});
        const int c = equator_crossings(base(), {1e-3, hi});
        CHECK(std::abs(e - c) <= 1);
    }
    CHECK_THROWS_AS(extrema_count(base(), {1.0, 1e9}), std::invalid_argument);
}

TEST_CASE("scaling zero mode") {
    const double r1 = zero_mode_residual(base(), 4096);
    const double r2 = zero_mode_residual(base(), 8192);
    MESSAGE("zero-mode residual " << r1 << " -> " << r2);
    CHECK(r1 <= 1e-6);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
    CHECK(zero_mode_nodes(base(), {1e-3, 1e3}) >= 3);
    CHECK(zero_mode_nodes(base(), {1e-3, 1e5}) == extrema_count(base(), {1e-3, 1e5}));
}

TEST_CASE("ground bound state") {
    BoundStateReport a = bound_states(base(), 60.0, 1);
    BoundStateReport b = bound_states(base(), 120.0, 1);
    REQUIRE(a.eigenvalues.size() == 1);
    MESSAGE("k^2 = " << a.eigenvalues[0]);
    CHECK(std::abs(a.eigenvalues[0] - ground_oracle) < 1e-9);
    CHECK(std::abs(a.eigenvalues[0] - b.eigenvalues[0]) < 1e-6);
    CHECK(a.node_counts[0] == 0);
    CHECK_THROWS_AS(bound_states(base(), 20.0, 1), DomainTooSmall);
    CHECK(bound_states(base(), 60.0, 0).eigenvalues.empty());
}

TEST_CASE("excited bound state and log-periodic ratio") {
    BoundStateReport rep = bound_states(base(), 1500.0, 2);
    REQUIRE(rep.eigenvalues.size() == 2);
    CHECK(rep.node_counts[0] == 0);
    CHECK(rep.node_counts[1] == 1);
    const double ratio = rep.eigenvalues[1] / rep.eigenvalues[0];
    MESSAGE("k2_2 / k2_1 = " << ratio);
    CHECK(std::abs(ratio / std::exp(-4 * pi / std::sqrt(7.0)) - 1.0) < 0.03);
}

TEST_CASE("rescaled background scales the spectrum") {
    StaticProfile p2 = integrate_pendulum({std::log(1e-3), std::log(200.0)}, {}, 2.0);
    const double k1 = bound_states(base(), 60.0, 1).eigenvalues[0];
    const double k2 = bound_states(p2, 60.0, 1).eigenvalues[0];
    CHECK(std::abs(k2 / k1 - 4.0) < 1e-9);
}

TEST_CASE("truncated members carry k unstable modes") {
    for (int k = 1; k <= 3; ++k) {
        const double rk = neumann_points(base(), k).back();
        BoundStateReport rep = truncated_bound_states(base(), k, rk);
        CHECK(static_cast<int>(rep.eigenvalues.size()) == k);
        for (std::size_t i = 0; i < rep.node_counts.size(); ++i) CHECK(rep.node_counts[i] == static_cast<int>(i));
        // rescaling to a fixed ball multiplies the spectrum by (r_k / R)^2
        BoundStateReport unit = truncated_bound_states(base(), k, 1.0);
        CHECK(unit.eigenvalues[0] == doctest::Approx(rep.eigenvalues[0] * rk * rk).epsilon(1e-12));
    }
    CHECK(truncated_bound_states(base(), 1, neumann_points(base(), 1)[0]).eigenvalues[0] ==
          doctest::Approx(-0.119562028).epsilon(1e-7));
}
