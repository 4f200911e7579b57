#include "commands.hpp"

#include "wavemaps/errors.hpp"
#include "wavemaps/modes.hpp"
#include "wavemaps/similarity.hpp"
#include "wavemaps/static_maps.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

namespace wavemaps::cli {

namespace {

using json = nlohmann::ordered_json;

ParamSpec real(std::string name, std::optional<std::string> def, std::string help,
               std::optional<Interval> bounds = {}) {
    ParamSpec p;
    p.name = std::move(name);
    p.type = ParamType::Real;
    p.default_value = std::move(def);
    p.bounds = bounds;
    p.help = std::move(help);
    return p;
}

ParamSpec integer(std::string name, std::string def, std::string help, std::optional<Interval> bounds = {}) {
    ParamSpec p = real(std::move(name), std::move(def), std::move(help), bounds);
    p.type = ParamType::Integer;
    return p;
}

ParamSpec text(std::string name, std::optional<std::string> def, std::string help,
               std::vector<std::string> choices = {}) {
    ParamSpec p;
    p.name = std::move(name);
    p.type = ParamType::Text;
    p.default_value = std::move(def);
    p.choices = std::move(choices);
    p.help = std::move(help);
    return p;
}

ParamSpec typed(std::string name, ParamType type, std::optional<std::string> def, std::string help) {
    ParamSpec p;
    p.name = std::move(name);
    p.type = type;
    p.default_value = std::move(def);
    p.help = std::move(help);
    return p;
}

ParamSpec required(ParamSpec p) {
    p.required = true;
    p.default_value.reset();
    return p;
}

constexpr double kHuge = 1e300;

std::string fixed(double v, int digits = 10) {
    std::ostringstream s;
    s << std::setprecision(digits) << v;
    return s.str();
}

std::shared_ptr<const SelfSimilarProfile> perturbation_profile(int n, double r_max) {
    return std::make_shared<SelfSimilarProfile>(extend_exterior(find_profile(n), std::max(r_max, 3.0)));
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// selfsim -----------------------------------------------------------------

Schema selfsim_schema() {
    return {integer("n", "0", "profile index (crossings of pi/2 on [0,1))", Interval{0, 6}),
            real("rho_max", "1", "right end of the output table", Interval{0.1, 1e4}),
            integer("nodes", "1025", "output nodes", Interval{4, 1e7}),
            real("rho_start", "1e-4", "series launch offset", Interval{1e-8, 0.1}),
            real("rho_fit", "0.5", "matching abscissa", Interval{0.05, 0.95}),
            real("ode_tol", "1e-12", "integrator relative tolerance", Interval{1e-14, 1e-4}),
            real("root_tol", "1e-10", "matching tolerance", Interval{1e-14, 1e-2})};
}

ShootConfig shoot_from(const ParameterSet& p) {
    ShootConfig sc;
    sc.rho_start = p.real("rho_start");
    sc.rho_fit = p.real("rho_fit");
    sc.ode_tol = p.real("ode_tol");
    sc.root_tol = p.real("root_tol");
    sc.validate();
    return sc;
}

void selfsim(Context& ctx) {
    const int n = ctx.params.integer("n");
    const double rho_max = ctx.params.real("rho_max");
    SelfSimilarProfile prof = find_profile(n, shoot_from(ctx.params));
    if (rho_max >= 3.0) prof = extend_exterior(prof, rho_max);
    const ProfileTable t = uniform_profile(prof, rho_max, ctx.params.integer("nodes"));
    const std::string stem = "selfsim_n" + std::to_string(n);
    ctx.sink.csv(stem + ".csv", {"rho", "f", "df"}, {t.x(), t.f(), t.df()});
    json j{{"n", n}, {"a", prof.a}, {"b", prof.b}, {"mismatch", prof.mismatch}, {"crossings", prof.crossings}};
    if (prof.has_exterior()) {
        j["c"] = prof.c;
        j["d"] = prof.d;
        j["e"] = prof.e;
        j["exterior_fit_residual"] = prof.exterior_fit_residual;
    }
    ctx.sink.text(stem + ".json", j.dump(2) + "\n");
    ctx.out << "n = " << n << "  a = " << fixed(prof.a, 12) << "  b = " << fixed(prof.b, 12) << "\n";
}

// spectrum ----------------------------------------------------------------

Schema spectrum_schema() {
    return {integer("n", "1", "background profile index", Interval{0, 4}),
            real("lambda_lo", std::nullopt, "scan range start (default 0.1)", Interval{1e-6, kHuge}),
            real("lambda_hi", std::nullopt, "scan range end (default 1.5 * 10^(n+1))", Interval{1e-6, kHuge}),
            integer("nodes", "1025", "eigenfunction nodes on [0, 1]", Interval{16, 1e7}),
            real("rho_max", "1", "eigenfunctions are continued to this radius when > 1", Interval{1, 100})};
}

void spectrum(Context& ctx) {
    const int n = ctx.params.integer("n");
    const SelfSimilarProfile prof = find_profile(n);
    Interval range = default_lambda_range(n);
    range.lo = ctx.params.real_or("lambda_lo", range.lo);
    range.hi = ctx.params.real_or("lambda_hi", range.hi);
    if (!(range.hi > range.lo)) throw std::invalid_argument("lambda_hi must exceed lambda_lo");
    const SpectrumReport rep = find_eigenvalues(prof, range, ShootConfig{});
    const std::string stem = "spectrum_n" + std::to_string(n);
    ctx.sink.csv(stem + "_mismatch.csv", {"lambda", "mismatch"},
                 {rep.mismatch_curve.x(), rep.mismatch_curve.f()});
    const double rho_max = ctx.params.real("rho_max");
    for (std::size_t k = 0; k < rep.eigenvalues.size(); ++k) {
        ModeProfile m = eigenfunction(prof, rep.eigenvalues[k], ctx.params.integer("nodes"));
        if (rho_max > 1.0) m = extend_mode(m, rho_max);
        std::vector<double> w(m.v.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = m.v.x()[i] > 0.0 ? m.v.f()[i] / m.v.x()[i] : 0.0;
        ctx.sink.csv(stem + "_mode" + std::to_string(k + 1) + ".csv", {"rho", "v", "dv", "w"},
                     {m.v.x(), m.v.f(), m.v.df(), w});
    }
    json j{{"n", n}, {"range", {range.lo, range.hi}}, {"eigenvalues", rep.eigenvalues},
           {"count", rep.eigenvalues.size()}};
    ctx.sink.text(stem + ".json", j.dump(2) + "\n");
    ctx.out << "n = " << n << "  eigenvalues:";
    for (double l : rep.eigenvalues) ctx.out << " " << fixed(l);
    ctx.out << "\n";
}

// static ------------------------------------------------------------------

Schema static_schema() {
    return {real("r_min", "1e-3", "inner end of the profile", Interval{1e-8, 1}),
            real("r_max", "1e4", "outer end of the profile", Interval{10, 1e12}),
            real("nodes_per_unit", "256", "table nodes per unit of ln r", Interval{8, 1e5}),
            integer("bound_count", "1", "number of bound states", Interval{0, 5}),
            real("domain_radius", "60", "truncation radius for the bound states", Interval{1, 1e9}),
            integer("neumann_count", "3", "number of extrema reported", Interval{0, 50})};
}

void static_maps(Context& ctx) {
    const StaticProfile p = integrate_pendulum({std::log(ctx.params.real("r_min")), std::log(ctx.params.real("r_max"))},
                                               {}, 1.0, ctx.params.real("nodes_per_unit"));
    std::vector<double> r, dudr;
    for (std::size_t i = 0; i < p.table.size(); ++i) {
        r.push_back(std::exp(p.table.x()[i]));
        dudr.push_back(p.table.df()[i] / r.back());
    }
    ctx.sink.csv("static_profile.csv", {"r", "u", "du_dr"}, {r, p.table.f(), dudr});
    json j{{"tail_amplitude", finite_or_null(p.amplitude)},
           {"tail_phase", finite_or_null(p.phase)},
           {"tail_fit_residual", finite_or_null(p.tail_fit_residual)},
           {"tail_log_frequency", tail_log_frequency()},
           {"measured_log_frequency", measured_log_frequency(p)}};
    j["neumann_points"] = neumann_points(p, ctx.params.integer("neumann_count"));
    const int count = ctx.params.integer("bound_count");
    if (count > 0) {
        const BoundStateReport b = bound_states(p, ctx.params.real("domain_radius"), count);
        j["bound_states"] = b.eigenvalues;
        j["bound_state_nodes"] = b.node_counts;
        ctx.out << "ground state k^2 = " << fixed(b.eigenvalues.front()) << "\n";
    }
    ctx.sink.text("static.json", j.dump(2) + "\n");
}

// evolve ------------------------------------------------------------------

void write_state(OutputSink& sink, const std::string& name, const FieldState& s) {
    sink.csv(name, {"r", "u", "u_t"}, {s.r, s.u, s.ut});
}

void evolve_cmd(Context& ctx) {
    const EvolutionConfig cfg = evolution_from(ctx.params);
    const InitialDataSpec spec = data_from(ctx.params, cfg.grid.r_max);
    auto [state, rep] = evolve(make_initial_data(spec, cfg.grid), cfg);
    ctx.sink.csv("evolve_gradient.csv", {"t", "u_r_origin"}, {rep.gradient_history.x(), rep.gradient_history.f()});
    write_state(ctx.sink, "evolve_final.csv", state);
    json snaps = json::array();
    for (std::size_t k = 0; k < rep.timed_snapshots.size(); ++k) {
        const std::string name = "evolve_snapshot_" + std::to_string(k) + ".csv";
        write_state(ctx.sink, name, rep.timed_snapshots[k]);
        snaps.push_back({{"file", name}, {"t", rep.timed_snapshots[k].t}});
    }
    json collapse = json::array();
    for (std::size_t k = 0; k < rep.snapshots.size(); ++k) {
        const std::string name = "evolve_collapse_" + std::to_string(k) + ".csv";
        write_state(ctx.sink, name, rep.snapshots[k]);
        collapse.push_back({{"file", name}, {"t", rep.snapshots[k].t}});
    }
    json j{{"status", to_string(rep.status)},
           {"blew_up", rep.blew_up},
           {"T_estimate", rep.T_estimate},
           {"t_final", state.t},
           {"steps", rep.steps},
           {"max_level", rep.max_level},
           {"level_cap_reached", rep.level_cap_reached},
           {"initial_energy", rep.initial_energy},
           {"notes", rep.notes},
           {"snapshots", snaps},
           {"collapse_snapshots", collapse},
           {"data", data_to_json(spec)},
           {"evolution", evolution_to_json(cfg)}};
    ctx.sink.text("evolve.json", j.dump(2) + "\n");
    ctx.out << "status " << to_string(rep.status) << "  t = " << fixed(state.t);
    if (rep.blew_up) ctx.out << "  T = " << fixed(rep.T_estimate, 12);
    ctx.out << "\n";
}

// simevolve ---------------------------------------------------------------

Schema simevolve_schema() {
    Schema s{text("source", "profile", "initial data: profile f_n, a CSV table, or Cauchy data",
                  {"profile", "table", "cauchy"}),
             integer("n", "0", "profile index (source and comparison target)", Interval{0, 4}),
             text("from_profile", std::nullopt, "CSV table x,f[,df] covering [0, rho_max] (source = table)"),
             real("gauge_epsilon", "0", "start on the gauge orbit f_n(rho / (1 + epsilon e^tau))",
                  Interval{-0.5, 0.5}),
             real("T_guess", "1", "blowup-time guess of the similarity frame", Interval{1e-12, kHuge}),
             real("rho_max", "3", "outer end of the similarity grid", Interval{1.2, 50}),
             integer("n_cells", "2048", "similarity grid cells", Interval{16, 1e7}),
             real("sim_cfl", "0.5", "Courant factor of the similarity evolution", Interval{1e-6, 0.5}),
             real("tau_start", "0", "initial tau for profile and table sources", Interval{-50, 50}),
             real("tau_end", "5", "final tau", Interval{-50, 100}),
             real("snapshot_every", "0.5", "tau spacing of snapshots", Interval{1e-6, 100}),
             real("t_start", "0", "Cauchy source: physical time of the handoff", Interval{0, kHuge})};
    return s + data_schema("kink", "0.02") + evolution_schema("20,2000", "10");
}

void simevolve(Context& ctx) {
    const ParameterSet& p = ctx.params;
    SimilarityConfig sc;
    sc.T_guess = p.real("T_guess");
    sc.rho_max = p.real("rho_max");
    sc.n_cells = p.integer("n_cells");
    sc.cfl = p.real("sim_cfl");
    sc.validate();
    const int n = p.integer("n");
    const SelfSimilarProfile prof = find_profile(n);
    const std::string source = p.text("source");
    SimilarityState state;
    if (source == "profile") {
        const double eps = p.real("gauge_epsilon");
        state = eps != 0.0 ? gauge_orbit(prof, eps, p.real("tau_start"), sc)
                           : similarity_from_profile(prof, sc, p.real("tau_start"));
    } else if (source == "table") {
        if (!p.has("from_profile")) throw ConfigError("source = table needs from_profile");
        state = similarity_from_table(load_csv(p.text("from_profile")), sc, p.real("tau_start"));
    } else {
        EvolutionConfig cfg = evolution_from(p);
        const double t0 = p.real("t_start");
        if (!(t0 < sc.T_guess)) throw std::invalid_argument("t_start must precede T_guess");
        FieldState f = make_initial_data(data_from(p, cfg.grid.r_max), cfg.grid);
        if (t0 > 0.0) {
            cfg.t_end = t0;
            cfg.stop_on_dispersal = false;
            auto [end, rep] = evolve(f, cfg);
            if (rep.blew_up || std::abs(end.t - t0) > 1e-12 * std::max(1.0, t0)) {
                throw NumericalError("Cauchy run ended at t = " + fixed(end.t) + " before t_start");
            }
            f = end;
        }
        state = to_similarity(f, sc);
    }
    const double tau_end = p.real("tau_end");
    if (!(tau_end > state.tau)) throw std::invalid_argument("tau_end must exceed the initial tau");
    const ProfileTable target = uniform_profile(prof, 1.0, 1025);
    std::vector<double> taus, dist, eps;
    json snaps = json::array();
    auto record = [&](const SimilarityState& s) {
        const std::string name = "simevolve_snapshot_" + std::to_string(snaps.size()) + ".csv";
        ctx.sink.csv(name, {"rho", "u", "u_tau"}, {s.grid.nodes(), s.u, s.utau});
        const double d = profile_distance(s, target, {0.0, 1.0});
        const GaugeFit g = fit_gauge(s, target);
        snaps.push_back({{"file", name}, {"tau", s.tau}, {"distance", d}, {"gauge_epsilon", g.epsilon}});
        taus.push_back(s.tau);
        dist.push_back(d);
        eps.push_back(g.epsilon);
    };
    record(state);
    const double every = p.real("snapshot_every");
    const double tau0 = state.tau;
    for (int k = 1; state.tau < tau_end; ++k) {
        const double next = std::min(tau0 + k * every, tau_end);
        state = evolve_similarity(state, next, sc);
        record(state);
    }
    ctx.sink.csv("simevolve_history.csv", {"tau", "distance", "gauge_epsilon"}, {taus, dist, eps});
    json j{{"source", source}, {"n", n}, {"tau_end", state.tau}, {"final_distance", dist.back()},
           {"snapshots", snaps}};
    ctx.sink.text("simevolve.json", j.dump(2) + "\n");
    ctx.out << "tau = " << fixed(state.tau) << "  distance to f_" << n << " = " << fixed(dist.back(), 6) << "\n";
}

// bisect ------------------------------------------------------------------

Schema bisect_schema() {
    Schema s{text("param", "A", "family parameter to bisect",
                  {"A", "r0", "s", "T", "epsilon", "bump_center", "bump_width"}),
             required(real("lo", std::nullopt, "bracket start")),
             required(real("hi", std::nullopt, "bracket end")),
             real("tol", "1e-10", "relative bracket width", Interval{1e-12, 0.5})};
    return s + data_schema("gaussian", "0.02") + evolution_schema("100,5000", "200");
}

void bisect_cmd(Context& ctx) {
    const EvolutionConfig cfg = evolution_from(ctx.params);
    FamilySpec fam;
    fam.base = data_from(ctx.params, cfg.grid.r_max);
    fam.parameter = ctx.params.text("param");
    fam.p_lo = ctx.params.real("lo");
    fam.p_hi = ctx.params.real("hi");
    const BisectionRecord rec = bisect(fam, ctx.params.real("tol"), cfg);
    write_record(ctx.sink, "bisection", rec, fam, cfg);
    ctx.out << "p* = " << fixed(rec.p_star, 17) << "  gap = " << rec.achieved_gap << "  iterations "
            << rec.iterations.size() << (rec.monotone() ? "" : "  (non-monotone)") << "\n";
}

// transient ---------------------------------------------------------------

Schema transient_schema() {
    return {required(text("record", std::nullopt, "bisection.json from the bisect subcommand")),
            integer("first_decade", "5", "smallest k in p* (1 +- 10^-k)", Interval{1, 11}),
            integer("decades", "4", "number of decades", Interval{1, 11}),
            real("departure_distance", "0.1", "distance to f_1 that ends the transient", Interval{1e-4, 1}),
            typed("sensitivity", ParamType::RealList, "0.05,0.2", "extra thresholds for the sensitivity check"),
            integer("sample_every", "4", "scale fit every this many steps", Interval{1, 1e6}),
            real("min_gradient", "5", "scale fits start once |u_r(t,0)| exceeds this", Interval{0, kHuge})};
}

void transient_cmd(Context& ctx) {
    const StoredRecord stored = load_record(ctx.params.text("record"));
    TransientConfig tc;
    tc.evolution = stored.evolution;
    tc.first_decade = ctx.params.integer("first_decade");
    tc.decades = ctx.params.integer("decades");
    tc.departure_distance = ctx.params.real("departure_distance");
    tc.sensitivity_distances = ctx.params.reals("sensitivity");
    tc.sample_every = ctx.params.integer("sample_every");
    tc.min_gradient = ctx.params.real("min_gradient");
    const TransientFit fit = transient_analysis(stored.family, stored.record, tc);
    std::vector<double> x, y;
    for (const auto& [a, b] : fit.samples) {
        x.push_back(a);
        y.push_back(b);
    }
    ctx.sink.csv("transient_samples.csv", {"log_offset", "tau_star"}, {x, y});
    json runs = json::array();
    for (std::size_t i = 0; i < fit.runs.size(); ++i) {
        const TransientSample& s = fit.runs[i];
        const std::string name = "transient_run_" + std::to_string(i) + ".csv";
        std::vector<double> t, L, d;
        for (const ScalePoint& q : s.scale_history) {
            t.push_back(q.t);
            L.push_back(q.scale);
            d.push_back(q.distance);
        }
        ctx.sink.csv(name, {"t", "scale", "distance"}, {t, L, d});
        std::vector<double> kt, kv;
        for (const auto& [a, b] : s.k_history) {
            kt.push_back(a);
            kv.push_back(b);
        }
        const std::string kname = "transient_K_" + std::to_string(i) + ".csv";
        ctx.sink.csv(kname, {"t", "K"}, {kt, kv});
        json sens = json::array();
        for (double v : s.tau_sensitivity) sens.push_back(finite_or_null(v));
        runs.push_back({{"p", s.p},
                        {"side", s.side},
                        {"log_offset", s.log_offset},
                        {"outcome", to_string(s.outcome)},
                        {"usable", s.usable},
                        {"min_distance", finite_or_null(s.min_distance)},
                        {"t_star", finite_or_null(s.t_star)},
                        {"tau_star", finite_or_null(s.tau_star)},
                        {"scale_tau_star", finite_or_null(s.scale_tau_star)},
                        {"tau_sensitivity", sens},
                        {"departure_coefficient", s.departure_coefficient},
                        {"shape_mismatch", finite_or_null(s.shape_mismatch)},
                        {"K_monotone", s.k_monotone},
                        {"scale_history", name},
                        {"K_history", kname}});
    }
    json sens = json::array();
    for (double v : fit.lambda_sensitivity) sens.push_back(finite_or_null(v));
    json j{{"lambda_estimate", fit.lambda_estimate},
           {"slope", fit.slope},
           {"fit_residual", fit.fit_residual},
           {"samples", fit.samples},
           {"sensitivity_distances", tc.sensitivity_distances},
           {"lambda_sensitivity", sens},
           {"lambda_scale_clock", finite_or_null(fit.lambda_scale_clock)},
           {"intermediate_time",
            {{"T", fit.intermediate.T},
             {"beta", fit.intermediate.beta},
             {"mu", fit.intermediate.mu},
             {"residual", fit.intermediate.residual},
             {"points", fit.intermediate.points},
             {"spread", fit.intermediate_spread}}},
           {"opposite_departure", fit.opposite_departure},
           {"notes", fit.notes},
           {"runs", runs}};
    ctx.sink.text("transient.json", j.dump(2) + "\n");
    ctx.out << "lambda = " << fixed(fit.lambda_estimate, 6) << "  residual " << fixed(fit.fit_residual, 3)
            << "  samples " << fit.samples.size() << "\n";
}

}  // namespace

Schema operator+(Schema a, const Schema& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

Schema data_schema(const std::string& family, const std::string& amplitude) {
    return {text("family", family, "initial data family", {"gaussian", "kink", "profile_perturbation"}),
            real("A", amplitude, "gaussian amplitude"),
            real("r0", "2", "gaussian center"),
            real("s", "1", "gaussian or kink width", Interval{1e-12, kHuge}),
            integer("profile_n", "1", "profile perturbation: index of f_n", Interval{0, 4}),
            real("T", "1", "profile perturbation: blowup time of f_n(r / (T - t))", Interval{1e-12, kHuge}),
            real("epsilon", "0", "profile perturbation: bump amplitude"),
            real("bump_center", "0.5", "profile perturbation: bump center", Interval{0, kHuge}),
            real("bump_width", "0.25", "profile perturbation: bump width", Interval{1e-12, kHuge}),
            real("cutoff_radius", "0", "profile perturbation: blend radius (<= 0: r_max / 2)")};
}

Schema evolution_schema(const std::string& grid, const std::string& t_end) {
    return {typed("grid", ParamType::Grid, grid, "r_max,n_cells of the base grid"),
            real("cfl", "0.25", "Courant factor", Interval{1e-6, 0.5}),
            real("t_end", t_end, "final time", Interval{0, kHuge}),
            real("refine_threshold", "0.1", "refinement trigger for max |u_r| h", Interval{1e-6, 1}),
            integer("max_refine_levels", "24", "cap on nested levels", Interval{0, 60}),
            integer("level_cells", "1024", "fine cells per refined level", Interval{16, 1e8}),
            real("blowup_gradient", "1e4", "|u_r(t,0)| that declares blowup", Interval{1, kHuge}),
            real("dispersal_radius", "5", "inner radius of the dispersal test", Interval{0, kHuge}),
            real("dispersal_fraction", "1e-6", "inner energy fraction of the dispersal test", Interval{0, 1}),
            integer("dispersal_steps", "100", "steps the dispersal test must hold", Interval{1, 1e9}),
            typed("stop_on_dispersal", ParamType::Flag, "true", "stop once dispersal is detected"),
            text("outer_boundary", "sommerfeld", "outer boundary condition", {"sommerfeld", "bayliss_turkel"}),
            typed("snapshot_times", ParamType::RealList, std::nullopt, "extra output times")};
}

InitialDataSpec data_from(const ParameterSet& p, double r_max) {
    InitialDataSpec s;
    s.family = data_family_from_string(p.text("family"));
    s.A = p.real("A");
    s.r0 = p.real("r0");
    s.s = p.real("s");
    s.T = p.real("T");
    s.epsilon = p.real("epsilon");
    s.bump_center = p.real("bump_center");
    s.bump_width = p.real("bump_width");
    s.cutoff_radius = p.real("cutoff_radius");
    if (s.family == DataFamily::ProfilePerturbation) s.profile = perturbation_profile(p.integer("profile_n"), r_max);
    s.validate();
    return s;
}

EvolutionConfig evolution_from(const ParameterSet& p) {
    EvolutionConfig c;
    c.grid = p.grid("grid");
    c.cfl = p.real("cfl");
    c.t_end = p.real("t_end");
    c.refine_threshold = p.real("refine_threshold");
    c.max_refine_levels = p.integer("max_refine_levels");
    c.level_cells = p.integer("level_cells");
    c.blowup_gradient = p.real("blowup_gradient");
    c.dispersal_radius = p.real("dispersal_radius");
    c.dispersal_fraction = p.real("dispersal_fraction");
    c.dispersal_steps = p.integer("dispersal_steps");
    c.stop_on_dispersal = p.flag("stop_on_dispersal");
    c.outer_boundary = outer_boundary_from_string(p.text("outer_boundary"));
    if (p.has("snapshot_times")) c.snapshot_times = p.reals("snapshot_times");
    c.validate();
    return c;
}

nlohmann::ordered_json data_to_json(const InitialDataSpec& s) {
    json j{{"family", to_string(s.family)}, {"A", s.A}, {"r0", s.r0}, {"s", s.s}};
    if (s.family == DataFamily::ProfilePerturbation) {
        j["profile_n"] = s.profile ? s.profile->n : 1;
        j["T"] = s.T;
        j["epsilon"] = s.epsilon;
        j["bump_center"] = s.bump_center;
        j["bump_width"] = s.bump_width;
        j["cutoff_radius"] = s.cutoff_radius;
    }
    return j;
}

InitialDataSpec data_from_json(const nlohmann::json& j, double r_max) {
    InitialDataSpec s;
    s.family = data_family_from_string(j.at("family").get<std::string>());
    s.A = j.at("A").get<double>();
    s.r0 = j.at("r0").get<double>();
    s.s = j.at("s").get<double>();
    if (s.family == DataFamily::ProfilePerturbation) {
        s.profile = perturbation_profile(j.at("profile_n").get<int>(), r_max);
        s.T = j.at("T").get<double>();
        s.epsilon = j.at("epsilon").get<double>();
        s.bump_center = j.at("bump_center").get<double>();
        s.bump_width = j.at("bump_width").get<double>();
        s.cutoff_radius = j.at("cutoff_radius").get<double>();
    }
    s.validate();
    return s;
}

nlohmann::ordered_json evolution_to_json(const EvolutionConfig& c) {
    return json{{"r_max", c.grid.r_max},
                {"n_cells", c.grid.n_cells},
                {"cfl", c.cfl},
                {"t_end", c.t_end},
                {"refine_threshold", c.refine_threshold},
                {"max_refine_levels", c.max_refine_levels},
                {"level_cells", c.level_cells},
                {"blowup_gradient", c.blowup_gradient},
                {"dispersal_radius", c.dispersal_radius},
                {"dispersal_fraction", c.dispersal_fraction},
                {"dispersal_steps", c.dispersal_steps},
                {"stop_on_dispersal", c.stop_on_dispersal},
                {"outer_boundary", to_string(c.outer_boundary)},
                {"snapshot_times", c.snapshot_times}};
}

EvolutionConfig evolution_from_json(const nlohmann::json& j) {
    EvolutionConfig c;
    c.grid = make_uniform_grid(j.at("r_max").get<double>(), j.at("n_cells").get<int>());
    c.cfl = j.at("cfl").get<double>();
    c.t_end = j.at("t_end").get<double>();
    c.refine_threshold = j.at("refine_threshold").get<double>();
    c.max_refine_levels = j.at("max_refine_levels").get<int>();
    c.level_cells = j.at("level_cells").get<int>();
    c.blowup_gradient = j.at("blowup_gradient").get<double>();
    c.dispersal_radius = j.at("dispersal_radius").get<double>();
    c.dispersal_fraction = j.at("dispersal_fraction").get<double>();
    c.dispersal_steps = j.at("dispersal_steps").get<int>();
    c.stop_on_dispersal = j.at("stop_on_dispersal").get<bool>();
    c.outer_boundary = outer_boundary_from_string(j.at("outer_boundary").get<std::string>());
    c.snapshot_times = j.at("snapshot_times").get<std::vector<double>>();
    c.validate();
    return c;
}

nlohmann::ordered_json record_to_json(const BisectionRecord& r, const FamilySpec& family, const EvolutionConfig& cfg) {
    json iters = json::array();
    for (const BisectionStep& s : r.iterations) {
        iters.push_back({{"p", s.p},
                         {"outcome", to_string(s.outcome)},
                         {"retried", s.retried},
                         {"t_final", s.t_final},
                         {"max_level", s.max_level},
                         {"steps", s.steps},
                         {"T_estimate", s.T_estimate}});
    }
    return json{{"parameter", r.parameter},
                {"p_lo", r.p_lo},
                {"p_hi", r.p_hi},
                {"p_star", r.p_star},
                {"achieved_gap", r.achieved_gap},
                {"requested_tol", r.requested_tol},
                {"lower_outcome", to_string(r.lower_outcome)},
                {"monotone", r.monotone()},
                {"warnings", r.warnings},
                {"iterations", iters},
                {"family",
                 {{"data", data_to_json(family.base)},
                  {"parameter", family.parameter},
                  {"p_lo", family.p_lo},
                  {"p_hi", family.p_hi}}},
                {"evolution", evolution_to_json(cfg)}};
}

void write_record(OutputSink& sink, const std::string& name, const BisectionRecord& r, const FamilySpec& family,
                  const EvolutionConfig& cfg) {
    sink.text(name + ".json", record_to_json(r, family, cfg).dump(2) + "\n");
    std::vector<double> idx, p, outcome, t_final, level, steps, T;
    for (std::size_t i = 0; i < r.iterations.size(); ++i) {
        const BisectionStep& s = r.iterations[i];
        idx.push_back(static_cast<double>(i));
        p.push_back(s.p);
        outcome.push_back(s.outcome == Outcome::Blowup ? 1.0 : (s.outcome == Outcome::Disperse ? 0.0 : -1.0));
        t_final.push_back(s.t_final);
        level.push_back(s.max_level);
        steps.push_back(static_cast<double>(s.steps));
        T.push_back(s.T_estimate);
    }
    sink.csv(name + "_iterations.csv", {"iteration", "p", "blowup", "t_final", "max_level", "steps", "T_estimate"},
             {idx, p, outcome, t_final, level, steps, T});
}

StoredRecord load_record(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read record " + path);
    nlohmann::json j;
    try {
        in >> j;
        StoredRecord s;
        s.evolution = evolution_from_json(j.at("evolution"));
        const auto& fam = j.at("family");
        s.family.base = data_from_json(fam.at("data"), s.evolution.grid.r_max);
        s.family.parameter = fam.at("parameter").get<std::string>();
        s.family.p_lo = fam.at("p_lo").get<double>();
        s.family.p_hi = fam.at("p_hi").get<double>();
        BisectionRecord& r = s.record;
        r.parameter = j.at("parameter").get<std::string>();
        r.p_lo = j.at("p_lo").get<double>();
        r.p_hi = j.at("p_hi").get<double>();
        r.p_star = j.at("p_star").get<double>();
        r.achieved_gap = j.at("achieved_gap").get<double>();
        r.requested_tol = j.at("requested_tol").get<double>();
        r.lower_outcome = outcome_from_string(j.at("lower_outcome").get<std::string>());
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        for (const auto& it : j.at("iterations")) {
            BisectionStep st;
            st.p = it.at("p").get<double>();
            st.outcome = outcome_from_string(it.at("outcome").get<std::string>());
            st.retried = it.at("retried").get<bool>();
            st.t_final = it.at("t_final").get<double>();
            st.max_level = it.at("max_level").get<int>();
            st.steps = it.at("steps").get<long>();
            st.T_estimate = it.at("T_estimate").get<double>();
            r.iterations.push_back(st);
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed record " + path + ": " + e.what());
    }
}

const std::vector<Command>& commands() {
    static const std::vector<Command> list{
        {"selfsim", "self-similar profile f_n and its parameters", selfsim_schema(), selfsim},
        {"spectrum", "unstable modes of f_n", spectrum_schema(), spectrum},
        {"static", "static solution, tail, extrema and bound states", static_schema(), static_maps},
        {"evolve", "Cauchy evolution of one data set",
         data_schema("gaussian", "0.02") + evolution_schema("20,2000", "10"), evolve_cmd},
        {"simevolve", "evolution in similarity variables", simevolve_schema(), simevolve},
        {"bisect", "threshold bisection over a data family", bisect_schema(), bisect_cmd},
        {"transient", "lifetime scaling around a finished bisection", transient_schema(), transient_cmd},
        {"figdata", "CSV data of the figures", figure_schema(), figdata},
    };
    return list;
}

}  // namespace wavemaps::cli
