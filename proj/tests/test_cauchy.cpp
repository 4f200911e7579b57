#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wavemaps/cauchy.hpp"
#include "wavemaps/errors.hpp"

#include <cmath>
#include <memory>
#include <numbers>

using namespace wavemaps;

namespace {

constexpr double pi = std::numbers::pi;

FieldState ts_state(const RadialGrid& g, double T) {
    std::vector<double> u, ut;
    for (double r : g.nodes()) {
        u.push_back(ts_solution(0.0, r, T));
        ut.push_back(ts_rate(0.0, r, T));
    }
    return FieldState::on_grid(g, 0.0, u, ut);
}

// Max error against the exact solution inside the past cone of the singularity.
double ts_interior_error(int cells, double t_end) {
    const double T = 2.0;
    EvolutionConfig cfg = make_evolution_config(10.0, cells, t_end);
    cfg.stop_on_dispersal = false;
    auto [s, rep] = evolve(ts_state(cfg.grid, T), cfg);
    CHECK(s.t == t_end);
    double err = 0.0;
    for (std::size_t i = 0; i < s.size() && s.r[i] <= T - t_end; ++i) {
        err = std::max(err, std::abs(s.u[i] - ts_solution(t_end, s.r[i], T)));
    }
    return err;
}

FieldState gaussian(double A, double r_max, int cells) {
    InitialDataSpec spec;
    spec.A = A;
    return make_initial_data(spec, make_uniform_grid(r_max, cells));
}

}  // namespace

TEST_CASE("data families") {
    FieldState g = gaussian(1.0, 10.0, 1000);
    CHECK(g.u[0] == 0.0);
    CHECK(field_value(g, 2.0) == doctest::Approx(8.0));
    CHECK(classify_degree(g) == 0);
    InitialDataSpec kink;
    kink.family = DataFamily::Kink;
    kink.s = 0.5;
    FieldState k = make_initial_data(kink, make_uniform_grid(20.0, 2000));
    CHECK(classify_degree(k) == 1);
    CHECK(std::abs(k.u.back() - pi) < 1e-12);
    InitialDataSpec bad;
    bad.s = -1.0;
    CHECK_THROWS_AS(make_initial_data(bad, make_uniform_grid(10.0, 100)), std::invalid_argument);
    CHECK(data_family_from_string(to_string(DataFamily::ProfilePerturbation)) == DataFamily::ProfilePerturbation);
    CHECK_THROWS_AS(data_family_from_string("torus"), std::invalid_argument);
    set_parameter(bad, "epsilon", 0.25);
    CHECK(get_parameter(bad, "epsilon") == 0.25);
    CHECK_THROWS_AS(set_parameter(bad, "omega", 1.0), std::invalid_argument);
}

TEST_CASE("profile perturbation with zero amplitude reproduces the exact solution") {
    auto p = std::make_shared<const SelfSimilarProfile>(find_profile(0));
    InitialDataSpec spec;
    spec.family = DataFamily::ProfilePerturbation;
    spec.profile = p;
    spec.T = 2.0;
    FieldState s = make_initial_data(spec, make_uniform_grid(10.0, 1000));
    for (std::size_t i = 0; i < s.size() && s.r[i] <= 5.0; ++i) {
        CHECK(std::abs(s.u[i] - ts_solution(0.0, s.r[i], 2.0)) < 1e-9);
        CHECK(std::abs(s.ut[i] - ts_rate(0.0, s.r[i], 2.0)) < 1e-9);
    }
    CHECK(s.u.back() == doctest::Approx(pi));
}

TEST_CASE("exact self-similar solution, second-order convergence") {
    const double e1 = ts_interior_error(2048, 1.5);
    const double e2 = ts_interior_error(4096, 1.5);
    MESSAGE("errors " << e1 << " " << e2 << " ratio " << e1 / e2);
    CHECK(e2 <= 1e-3);
    CHECK(e1 / e2 > 3.0);
    CHECK(e1 / e2 < 5.0);
}

TEST_CASE("energy conservation and finite propagation speed") {
    EvolutionConfig cfg = make_evolution_config(20.0, 2000, 6.0);
    cfg.stop_on_dispersal = false;
    InitialDataSpec spec;
    spec.A = 1e-3;
    spec.r0 = 3.0;
    FieldState s0 = make_initial_data(spec, cfg.grid);
    const double e0 = energy(s0, 20.0).total;
    auto [s, rep] = evolve(s0, cfg);
    REQUIRE(s.t == 6.0);
    CHECK(rep.max_level == 0);
    // support of the data is effectively r < 5; nothing reaches r > 5 + t
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.r[i] > 5.0 + 6.0 + 0.5) CHECK(std::abs(s.u[i]) < 1e-10);
    }
    const double e1 = energy(s, 20.0 - 6.0).total;
    CHECK(std::abs(e1 - e0) / e0 < 1e-5);
    CHECK(s.u[0] == 0.0);
}

TEST_CASE("small data disperse, large data blow up") {
    EvolutionConfig cfg = make_evolution_config(20.0, 1000, 60.0);
    auto [s, rep] = evolve(gaussian(0.01, 20.0, 1000), cfg);
    CHECK(rep.status == RunStatus::Dispersed);
    CHECK_FALSE(rep.blew_up);

    EvolutionConfig big = make_evolution_config(10.0, 1000, 10.0);
    auto [sb, rb] = evolve(gaussian(1.0, 10.0, 1000), big);
    MESSAGE("blowup at T = " << rb.T_estimate << " level " << rb.max_level << " steps " << rb.steps);
    CHECK(rb.status == RunStatus::Blowup);
    CHECK(rb.T_estimate > sb.t);
    CHECK(rb.T_estimate - sb.t < 1e-3);
    CHECK(rb.snapshots.size() >= 8);
    CHECK(rb.max_level >= 5);
}

TEST_CASE("vacuum disperses immediately") {
    EvolutionConfig cfg = make_evolution_config(10.0, 200, 5.0);
    auto [s, rep] = evolve(gaussian(0.0, 10.0, 200), cfg);
    CHECK(rep.status == RunStatus::Dispersed);
    CHECK(rep.steps == 0);
}

TEST_CASE("blowup time from an exact gradient history") {
    const double T = 1.7;
    std::vector<double> t, g;
    for (int i = 0; i < 400; ++i) {
        const double ti = T * (1.0 - std::pow(0.97, i));
        t.push_back(ti);
        g.push_back(2.0 / (T - ti));
    }
    CHECK(estimate_blowup_time(ProfileTable(t, g)) == doctest::Approx(T).epsilon(1e-10));
    CHECK_THROWS_AS(estimate_blowup_time(ProfileTable({0.0, 1.0}, {1.0, 2.0})), std::invalid_argument);
    BlowupReport none;
    CHECK_THROWS_AS(estimate_blowup_time(none), std::invalid_argument);
}

TEST_CASE("refinement") {
    EvolutionConfig cfg = make_evolution_config(10.0, 1000, 1.0);
    FieldState smooth = gaussian(0.01, 10.0, 1000);
    CHECK(refine(smooth, cfg).size() == smooth.size());
    CHECK(refinement_level(smooth) == 0);

    FieldState ts = ts_state(cfg.grid, 0.15);
    FieldState fine = refine(ts, cfg);
    REQUIRE(fine.size() > ts.size());
    CHECK(refinement_level(fine) == 1);
    const auto runs = uniform_runs(fine.r);
    CHECK(runs[0].spacing == doctest::Approx(0.5 * cfg.grid.spacing).epsilon(1e-12));
    CHECK(runs[1].spacing == doctest::Approx(cfg.grid.spacing).epsilon(1e-12));
    for (std::size_t i = 0; i < fine.size(); ++i) {
        CHECK(std::abs(fine.u[i] - ts_solution(0.0, fine.r[i], 0.15)) < 1e-5);
    }
    const double e0 = energy(ts, 10.0).total, e1 = energy(fine, 10.0).total;
    MESSAGE("refined energy change " << std::abs(e1 - e0) / e0);
    CHECK(std::abs(e1 - e0) / e0 < 1e-6);
    // a state that no longer needs the finest level drops it again
    FieldState flat = fine;
    for (std::size_t i = 0; i < flat.size(); ++i) flat.u[i] = 1e-3 * std::sin(flat.r[i]);
    FieldState coarse = coarsen(flat, cfg);
    CHECK(refinement_level(coarse) == 0);
    CHECK(coarse.size() == ts.size());
}

TEST_CASE("rescaled profile of the exact solution") {
    const double T = 1.0;
    EvolutionConfig cfg = make_evolution_config(4.0, 4000, 1.0);
    FieldState s = ts_state(cfg.grid, T);
    s.t = 0.5;
    for (std::size_t i = 0; i < s.size(); ++i) s.u[i] = ts_solution(0.5, s.r[i], T);
    ProfileTable p = rescaled_profile(s, T, {0.0, 3.0});
    CHECK(p.front() == 0.0);
    CHECK(p.back() == 3.0);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p.f()[i] - 2.0 * std::atan(p.x()[i])) < 1e-8);
    CHECK_THROWS_AS(rescaled_profile(s, 0.4, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(rescaled_profile(s, T, {0.0, 100.0}), std::invalid_argument);
}

TEST_CASE("config validation") {
    EvolutionConfig cfg = make_evolution_config(10.0, 100, 1.0);
    cfg.cfl = 0.8;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.cfl = 0.25;
    cfg.blowup_gradient = 10.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
