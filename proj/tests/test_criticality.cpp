#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wavemaps/criticality.hpp"
#include "wavemaps/errors.hpp"

#include <cmath>
#include <numbers>

using namespace wavemaps;

namespace {

RunClassification synthetic(double p, double threshold) {
    RunClassification c;
    c.outcome = p < threshold ? Outcome::Disperse : Outcome::Blowup;
    return c;
}

ProfileTable profile_table(int n, int nodes) { return uniform_profile(find_profile(n), 1.0, nodes); }

ProfileTable arctan_table(double scale, int nodes) {
    std::vector<double> x, f, df;
    for (int i = 0; i < nodes; ++i) {
        const double r = static_cast<double>(i) / (nodes - 1);
        x.push_back(r);
        f.push_back(2.0 * std::atan(scale * r));
        df.push_back(2.0 * scale / (1.0 + scale * scale * r * r));
    }
    return ProfileTable(x, f, df);
}

EvolutionConfig coarse(double t_end = 30.0) {
    EvolutionConfig cfg = make_evolution_config(30.0, 1500, t_end);
    return cfg;
}

}  // namespace

TEST_CASE("outcome names round trip") {
    for (Outcome o : {Outcome::Disperse, Outcome::Blowup, Outcome::Undecided}) {
        CHECK(outcome_from_string(to_string(o)) == o);
    }
    CHECK_THROWS_AS(outcome_from_string("maybe"), std::invalid_argument);
}

TEST_CASE("bisection driver on a known threshold") {
    const double p_star = 0.3;
    const BisectionRecord r = bisect_classifier([&](double p) { return synthetic(p, p_star); }, {0.1, 1.0}, 1e-12);
    CHECK(r.achieved_gap <= 1e-12);
    CHECK(std::abs(r.p_star - p_star) <= 1e-12 * p_star);
    CHECK(r.monotone());
    CHECK(r.lower_outcome == Outcome::Disperse);
    CHECK(r.warnings.empty());
    CHECK(r.iterations.size() > 30);
    for (const BisectionStep& s : r.iterations) CHECK((s.outcome == Outcome::Blowup) == (s.p >= p_star));

    // monotone reparameterisation p -> p^3 recovers the same critical data
    const BisectionRecord c = bisect_classifier([&](double q) { return synthetic(q * q * q, p_star); },
                                                {std::cbrt(0.1), 1.0}, 1e-12);
    CHECK(std::abs(std::pow(c.p_star, 3) - r.p_star) <= 1e-10 * p_star);

    // reversed orientation
    const BisectionRecord rev = bisect_classifier(
        [&](double p) {
            RunClassification k = synthetic(p, p_star);
            k.outcome = k.outcome == Outcome::Blowup ? Outcome::Disperse : Outcome::Blowup;
            return k;
        },
        {0.1, 1.0}, 1e-10);
    CHECK(rev.lower_outcome == Outcome::Blowup);
    CHECK(std::abs(rev.p_star - p_star) <= 1e-10 * p_star);
    CHECK(rev.monotone());
}

TEST_CASE("bisection driver errors and undecided midpoints") {
    auto all_blow = [](double) {
        RunClassification c;
        c.outcome = Outcome::Blowup;
        return c;
    };
    CHECK_THROWS_AS(bisect_classifier(all_blow, {0.1, 1.0}, 1e-6), BracketError);
    CHECK_THROWS_AS(bisect_classifier(all_blow, {1.0, 0.1}, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(bisect_classifier([](double p) { return synthetic(p, 0.5); }, {0.1, 1.0}, 1e-13),
                    std::invalid_argument);

    // an undecided band just above the threshold counts as blowup
    const BisectionRecord r = bisect_classifier(
        [](double p) {
            RunClassification c = synthetic(p, 0.5);
            if (p > 0.5 && p < 0.52) c.outcome = Outcome::Undecided;
            return c;
        },
        {0.1, 1.0}, 1e-8);
    CHECK(!r.warnings.empty());
    CHECK(r.p_star == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("classification of simple data") {
    const EvolutionConfig cfg = coarse();
    InitialDataSpec small;
    small.A = 0.001;
    CHECK(classify_run(small, cfg).outcome == Outcome::Disperse);
    InitialDataSpec vacuum;
    CHECK(classify_run(vacuum, cfg).outcome == Outcome::Disperse);
    InitialDataSpec kink;
    kink.family = DataFamily::Kink;
    for (double s : {0.5, 2.0}) {
        kink.s = s;
        const RunClassification c = classify_run(kink, cfg);
        CHECK(c.outcome == Outcome::Blowup);
        CHECK(!c.retried);
    }
}

TEST_CASE("undecided runs are retried") {
    EvolutionConfig cfg = make_evolution_config(20.0, 400, 0.05);
    InitialDataSpec data;
    data.A = 0.001;
    const RunClassification c = classify_run(data, cfg);
    CHECK(c.retried);
    CHECK(c.outcome == Outcome::Undecided);
    CHECK(c.t_final == doctest::Approx(0.1));
}

TEST_CASE("kink family has no valid bracket") {
    FamilySpec fam;
    fam.base.family = DataFamily::Kink;
    fam.parameter = "s";
    fam.p_lo = 0.5;
    fam.p_hi = 2.0;
    try {
        bisect(fam, 1e-6, coarse());
        FAIL("expected BracketError");
    } catch (const BracketError& e) {
        CHECK(std::string(e.what()).find("bracket invalid") != std::string::npos);
    }
}

TEST_CASE("gaussian family brackets a threshold") {
    FamilySpec fam;
    fam.parameter = "A";
    fam.p_lo = 0.01;
    fam.p_hi = 0.05;
    const BisectionRecord r = bisect(fam, 1e-2, coarse());
    CHECK(r.monotone());
    CHECK(r.achieved_gap <= 1e-2);
    CHECK(r.lower_outcome == Outcome::Disperse);
    MESSAGE("coarse p* " << r.p_star);
    CHECK(r.p_star > 0.018);
    CHECK(r.p_star < 0.024);
    fam.map = [](double q) { return q * q * q; };
    CHECK(fam.at(2.0).A == 8.0);
}

TEST_CASE("scale fit recovers the self-similar scale") {
    const ProfileTable f0 = arctan_table(1.0, 2001);
    RadialGrid g = make_uniform_grid(4.0, 4000);
    std::vector<double> u, ut;
    for (double r : g.nodes()) {
        u.push_back(-ts_solution(0.0, r, 0.05));
        ut.push_back(-ts_rate(0.0, r, 0.05));
    }
    const FieldState s = FieldState::on_grid(g, 0.0, u, ut);
    const ScaleFit fit = fit_scale(s, f0);
    CHECK(fit.sign == -1.0);
    CHECK(fit.scale == doctest::Approx(0.05).epsilon(1e-5));
    CHECK(fit.distance < 1e-5);
}

TEST_CASE("lifetime slope fit") {
    const double lambda = 6.0;
    std::vector<std::pair<double, double>> samples;
    std::vector<int> sides;
    for (int k = 4; k <= 9; ++k) {
        const double x = -k * std::log(10.0);
        samples.emplace_back(x, 1.0 - x / lambda);
        sides.push_back(1);
        samples.emplace_back(x, 0.7 - x / lambda);
        sides.push_back(-1);
    }
    const auto [slope, res] = fit_lifetime_slope(samples, sides);
    CHECK(-1.0 / slope == doctest::Approx(lambda).epsilon(1e-12));
    CHECK(res < 1e-12);
    samples.resize(4);
    sides.resize(4);
    CHECK_THROWS_AS(fit_lifetime_slope(samples, sides), NumericalError);
}

TEST_CASE("K functional closed forms") {
    const KValue k0 = lyapunov_K(arctan_table(1.0, 1025));
    CHECK(!k0.divergent);
    CHECK(std::abs(k0.value - (std::numbers::pi / 4.0 - 1.0)) <= 1e-6);
    const KValue ks = lyapunov_K(profile_table(0, 2049));
    CHECK(std::abs(ks.value - (std::numbers::pi / 4.0 - 1.0)) <= 1e-6);

    const std::vector<double> x{0.0, 0.25, 0.5, 0.75, 1.0};
    const std::vector<double> equator(5, 0.5 * std::numbers::pi), zero(5, 0.0);
    const KValue ke = lyapunov_K(ProfileTable(x, equator, zero));
    CHECK(!ke.divergent);
    CHECK(std::abs(ke.value) < 1e-15);

    const KValue kd = lyapunov_K(arctan_table(2.0, 1025));
    CHECK(kd.divergent);
    CHECK(kd.boundary_offset > 0.1);

    CHECK_THROWS_AS(lyapunov_K(uniform_profile(find_profile(0), 0.9, 100)), std::invalid_argument);
}

TEST_CASE("self-similar profiles are critical points of K") {
    const double d0 = stationarity_defect(profile_table(0, 4097));
    const double d1 = stationarity_defect(profile_table(1, 4097));
    MESSAGE("stationarity defects " << d0 << " " << d1);
    CHECK(d0 <= 1e-6);
    CHECK(d1 <= 1e-6);
    // a non-stationary profile fails
    const ProfileTable off = arctan_table(1.0, 2049);
    std::vector<double> f = off.f(), df = off.df();
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] += 0.1 * bump(off.x()[i], 0.5, 0.3);
        df[i] += 0.1 * bump_slope(off.x()[i], 0.5, 0.3);
    }
    CHECK(std::abs(directional_derivative_K(ProfileTable(off.x(), f, df), 0.5, 0.3)) > 1e-3);
    CHECK_THROWS_AS(directional_derivative_K(off, 0.1, 0.2), std::invalid_argument);
}

TEST_CASE("large data collapse onto the ground profile") {
    EvolutionConfig cfg = make_evolution_config(20.0, 2000, 20.0);
    InitialDataSpec large;
    large.A = 1.0;
    InitialDataSpec kink;
    kink.family = DataFamily::Kink;
    kink.s = 1.0;
    const UniversalityReport rep = universality_check({large, kink}, cfg);
    for (const UniversalityRun& r : rep.runs) {
        REQUIRE(r.distances.size() >= 3);
        MESSAGE("T " << r.T_estimate << " last distance " << r.distances.back().second);
    }
    CHECK(rep.passed);

    InitialDataSpec small;
    small.A = 0.001;
    const UniversalityReport bad = universality_check({small}, cfg);
    CHECK(bad.runs.front().rejected);
    CHECK(!bad.passed);
}

TEST_CASE("transient config validation") {
    TransientConfig cfg;
    cfg.evolution = make_evolution_config(20.0, 400, 1.0);
    CHECK_NOTHROW(cfg.validate());
    cfg.decades = 10;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.decades = 3;
    cfg.departure_distance = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
