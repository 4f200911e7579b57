#include "commands.hpp"

#include "wavemaps/errors.hpp"
#include "wavemaps/modes.hpp"
#include "wavemaps/similarity.hpp"
#include "wavemaps/static_maps.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace wavemaps::cli {

namespace {

using json = nlohmann::ordered_json;

ParamSpec param(std::string name, ParamType type, std::optional<std::string> def, std::string help,
                std::optional<Interval> bounds = {}) {
    ParamSpec p;
    p.name = std::move(name);
    p.type = type;
    p.default_value = std::move(def);
    p.bounds = bounds;
    p.help = std::move(help);
    return p;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    x.back() = b;
    return x;
}

// Figure 1: the first five profiles.
void figure1(Context& ctx) {
    const double rho_max = ctx.params.real("rho_max");
    const int nodes = ctx.params.integer("nodes");
    for (int n = 0; n <= 4; ++n) {
        const ProfileTable t = uniform_profile(find_profile(n), rho_max, nodes);
        ctx.sink.csv("fig1_f" + std::to_string(n) + ".csv", {"rho", "f"}, {t.x(), t.f()});
    }
}

// Figure 2: unstable and gauge modes of f_1 as perturbations v / rho, unit slope at the origin.
void figure2(Context& ctx) {
    const double rho_max = ctx.params.real("rho_max");
    const SelfSimilarProfile p1 = find_profile(1);
    const SpectrumReport rep = find_eigenvalues(p1, default_lambda_range(1), ShootConfig{});
    if (rep.eigenvalues.size() != 2) throw NumericalError("expected two unstable modes of f_1");
    json j = json::array();
    const char* names[2] = {"unstable", "gauge"};
    for (int k = 0; k < 2; ++k) {
        const double lambda = rep.eigenvalues[static_cast<std::size_t>(k)];
        ModeProfile m = eigenfunction(p1, lambda, ctx.params.integer("nodes"));
        if (rho_max > 1.0) m = extend_mode(m, rho_max);
        const double r1 = m.v.x()[1];
        const double series = r1 * r1 * (1.0 + r1 * r1 * (origin_mode_k4(lambda, p1.a) +
                                                           r1 * r1 * origin_mode_k6(lambda, p1.a)));
        const double c = m.v.f()[1] / series;
        std::vector<double> w(m.v.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = m.v.x()[i] > 0.0 ? m.v.f()[i] / (c * m.v.x()[i]) : 0.0;
        const std::string name = std::string("fig2_") + names[k] + ".csv";
        ctx.sink.csv(name, {"rho", "w"}, {m.v.x(), w});
        j.push_back({{"file", name}, {"lambda", lambda}});
    }
    ctx.sink.text("fig2.json", j.dump(2) + "\n");
}

// Figure 3: the static solution.
void figure3(Context& ctx) {
    const StaticProfile p = integrate_pendulum({std::log(1e-3), std::log(ctx.params.real("r_max"))});
    std::vector<double> r{0.0}, u{0.0};
    for (std::size_t i = 0; i < p.table.size(); ++i) {
        r.push_back(std::exp(p.table.x()[i]));
        u.push_back(p.table.f()[i]);
    }
    ctx.sink.csv("fig3_static.csv", {"r", "u"}, {r, u});
}

StoredRecord gaussian_threshold(Context& ctx) {
    if (ctx.params.has("record")) return load_record(ctx.params.text("record"));
    StoredRecord s;
    s.evolution = make_evolution_config(ctx.params.grid("grid").r_max, ctx.params.grid("grid").n_cells,
                                        ctx.params.real("t_end"));
    s.family.parameter = "A";
    s.family.p_lo = ctx.params.real("lo");
    s.family.p_hi = ctx.params.real("hi");
    s.record = bisect(s.family, ctx.params.real("tol"), s.evolution);
    write_record(ctx.sink, "fig_bisection", s.record, s.family, s.evolution);
    ctx.out << "p* = " << s.record.p_star << "\n";
    return s;
}

std::pair<double, double> sub_super(const BisectionRecord& r) {
    return r.lower_outcome == Outcome::Disperse ? std::pair{r.p_lo, r.p_hi} : std::pair{r.p_hi, r.p_lo};
}

struct ScaleTrack {
    std::vector<double> t, scale, distance, sign;
};

ScaleTrack track(const InitialDataSpec& spec, const EvolutionConfig& cfg, const ProfileTable& f1,
                 std::vector<FieldState>* frames = nullptr) {
    ScaleTrack out;
    long n = 0;
    auto [state, rep] = evolve(make_initial_data(spec, cfg.grid), cfg, [&](const FieldState& s) {
        if (++n % 4 != 0 || std::abs(origin_gradient(s)) < 5.0) return true;
        const ScaleFit f = fit_scale(s, f1);
        out.t.push_back(s.t);
        out.scale.push_back(f.scale);
        out.distance.push_back(f.distance);
        out.sign.push_back(f.sign);
        return true;
    });
    if (frames) *frames = rep.timed_snapshots;
    return out;
}

// Figure 4: marginal gaussian pair against f_1 in the fitted frame of the supercritical run.
void figure4(Context& ctx) {
    const StoredRecord st = gaussian_threshold(ctx);
    const auto [p_sub, p_super] = sub_super(st.record);
    const ProfileTable f1 = uniform_profile(find_profile(1), 1.0, 4001);
    EvolutionConfig cfg = st.evolution;
    cfg.stop_on_dispersal = true;
    const ScaleTrack sup = track(st.family.at(p_super), cfg, f1);
    const ScaleTrack sub = track(st.family.at(p_sub), cfg, f1);
    ctx.sink.csv("fig4_super_distance.csv", {"t", "scale", "distance"}, {sup.t, sup.scale, sup.distance});
    ctx.sink.csv("fig4_sub_distance.csv", {"t", "scale", "distance"}, {sub.t, sub.scale, sub.distance});

    // frame times: the supercritical fitted clock -ln L crosses evenly spaced levels
    const double spacing = ctx.params.real("frame_spacing");
    std::vector<double> times;
    double level = -std::log(sup.scale.front());
    for (std::size_t i = 0; i < sup.t.size(); ++i) {
        if (sup.distance[i] > 1.0) break;
        if (-std::log(sup.scale[i]) >= level) {
            times.push_back(sup.t[i]);
            level = -std::log(sup.scale[i]) + spacing;
        }
    }
    const double t_sub_end = sub.t.empty() ? 0.0 : sub.t.back();
    std::erase_if(times, [&](double t) { return t >= t_sub_end; });
    if (times.empty()) throw NumericalError("figure 4: no common frames");
    EvolutionConfig fc = cfg;
    fc.snapshot_times = times;
    std::vector<FieldState> fsup, fsub;
    track(st.family.at(p_super), fc, f1, &fsup);
    track(st.family.at(p_sub), fc, f1, &fsub);
    const std::size_t frames = std::min(fsup.size(), fsub.size());
    const double window = ctx.params.real("frame_rho_max");
    const std::vector<double> rho = linspace(0.0, window, 301);
    const ProfileTable f1w = uniform_profile(find_profile(1), window, 301);
    json index = json::array();
    for (std::size_t k = 0; k < frames; ++k) {
        const ScaleFit fit = fit_scale(fsup[k], f1);
        std::vector<double> us, up;
        for (double x : rho) {
            up.push_back(fit.sign * field_value(fsup[k], fit.scale * x));
            us.push_back(fit.sign * field_value(fsub[k], fit.scale * x));
        }
        const std::string name = "fig4_frame_" + std::to_string(k) + ".csv";
        ctx.sink.csv(name, {"rho", "u_sub", "u_super", "f1"}, {rho, us, up, f1w.f()});
        index.push_back({{"file", name}, {"t", fsup[k].t}, {"scale", fit.scale}, {"tau_scale", -std::log(fit.scale)}});
    }
    json j{{"p_sub", p_sub}, {"p_super", p_super}, {"frames", index}};
    ctx.sink.text("fig4.json", j.dump(2) + "\n");
}

// Figure 5: departure rate of the supercritical run against the unstable mode.
void figure5(Context& ctx) {
    const StoredRecord st = gaussian_threshold(ctx);
    const DepartureShape d = departure_shape(st.family.at(sub_super(st.record).second), st.evolution);
    ctx.sink.csv("fig5_departure.csv", {"rho", "rate", "mode"}, {d.rho, d.rate, d.mode});
    json j{{"lambda", d.lambda}, {"coefficient", d.coefficient}, {"mismatch", d.mismatch}, {"t", d.t},
           {"distance", d.distance}};
    ctx.sink.text("fig5.json", j.dump(2) + "\n");
    ctx.out << "departure mismatch " << d.mismatch << "\n";
}

// Figures 6 and 7: kink data in similarity variables against the gauge-deformed f_0.
void figure67(Context& ctx, int figure) {
    InitialDataSpec kink;
    kink.family = DataFamily::Kink;
    kink.s = ctx.params.real("kink_s");
    const RadialGrid g = ctx.params.grid("kink_grid");
    EvolutionConfig cfg = make_evolution_config(g.r_max, g.n_cells, ctx.params.real("t_end"));
    cfg.blowup_gradient = ctx.params.real("kink_blowup_gradient");
    auto [end, rep] = evolve(make_initial_data(kink, cfg.grid), cfg);
    if (!rep.blew_up) throw NumericalError("figure " + std::to_string(figure) + ": kink run did not blow up");
    const double T = rep.T_estimate;
    const double tau_split = ctx.params.real("tau_split");
    const double step = ctx.params.real("tau_step");
    const double tau_last = std::log(cfg.blowup_gradient / 8.0);
    std::vector<double> taus;
    for (double tau = std::ceil(-std::log(T)); tau <= tau_last; tau += step) {
        if ((figure == 6) == (tau <= tau_split)) taus.push_back(tau);
    }
    if (taus.empty()) throw NumericalError("figure " + std::to_string(figure) + ": no frames in range");
    cfg.snapshot_times.clear();
    for (double tau : taus) cfg.snapshot_times.push_back(T - std::exp(-tau));
    auto [end2, rep2] = evolve(make_initial_data(kink, cfg.grid), cfg);
    SimilarityConfig sc;
    sc.T_guess = T;
    sc.rho_max = ctx.params.real("frame_rho_max");
    sc.n_cells = 1024;
    const ProfileTable f0 = uniform_profile(find_profile(0), 2.0 * sc.rho_max, 4097);
    const std::string prefix = "fig" + std::to_string(figure);
    std::vector<double> tv, ev, etav, resv;
    json index = json::array();
    for (std::size_t k = 0; k < rep2.timed_snapshots.size(); ++k) {
        const SimilarityState s = to_similarity(rep2.timed_snapshots[k], sc);
        const GaugeFit fit = fit_gauge(s, f0, {0.0, 1.0});
        std::vector<double> moving(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) moving[i] = f0(s.rho(i) / (1.0 + fit.eta));
        const std::string name = prefix + "_frame_" + std::to_string(k) + ".csv";
        ctx.sink.csv(name, {"rho", "u", "f0_moving"}, {s.grid.nodes(), s.u, moving});
        index.push_back({{"file", name}, {"tau", s.tau}, {"epsilon", fit.epsilon}, {"eta", fit.eta}});
        tv.push_back(s.tau);
        ev.push_back(fit.epsilon);
        etav.push_back(fit.eta);
        resv.push_back(fit.residual);
    }
    ctx.sink.csv(prefix + "_gauge.csv", {"tau", "epsilon", "eta", "residual"}, {tv, ev, etav, resv});
    json j{{"kink_s", kink.s}, {"T", T}, {"frames", index}};
    ctx.sink.text(prefix + ".json", j.dump(2) + "\n");
}

}  // namespace

Schema figure_schema() {
    ParamSpec figure = param("figure", ParamType::Integer, std::nullopt, "figure number 1..7", Interval{1, 7});
    figure.required = true;
    return {figure,
            param("nodes", ParamType::Integer, "501", "profile and mode nodes (figures 1, 2)", Interval{16, 1e7}),
            param("rho_max", ParamType::Real, "5", "profile and mode extent (figures 1, 2)", Interval{1, 100}),
            param("r_max", ParamType::Real, "100", "static solution extent (figure 3)", Interval{1, 1e12}),
            param("record", ParamType::Text, std::nullopt, "existing bisection.json (figures 4, 5)"),
            param("lo", ParamType::Real, "0.01", "gaussian amplitude bracket start (figures 4, 5)"),
            param("hi", ParamType::Real, "0.05", "gaussian amplitude bracket end (figures 4, 5)"),
            param("tol", ParamType::Real, "1e-10", "bisection tolerance (figures 4, 5)", Interval{1e-12, 0.5}),
            param("grid", ParamType::Grid, "100,5000", "threshold grid (figures 4, 5)"),
            param("t_end", ParamType::Real, "200", "final time of each run", Interval{0, 1e300}),
            param("frame_spacing", ParamType::Real, "0.5", "fitted-clock spacing of frames (figure 4)",
                  Interval{1e-3, 10}),
            param("frame_rho_max", ParamType::Real, "3", "frame extent in rho (figures 4, 6, 7)", Interval{1.2, 20}),
            param("kink_s", ParamType::Real, "1", "kink width (figures 6, 7)", Interval{1e-6, 1e6}),
            param("kink_grid", ParamType::Grid, "20,4000", "kink grid (figures 6, 7)"),
            param("kink_blowup_gradient", ParamType::Real, "1e6", "kink run stops at this |u_r(t,0)|",
                  Interval{100, 1e12}),
            param("tau_split", ParamType::Real, "6", "figure 6 shows tau <= tau_split, figure 7 the rest"),
            param("tau_step", ParamType::Real, "1", "tau spacing of frames (figures 6, 7)", Interval{1e-3, 10})};
}

void figdata(Context& ctx) {
    const int fig = ctx.params.integer("figure");
    switch (fig) {
        case 1: figure1(ctx); break;
        case 2: figure2(ctx); break;
        case 3: figure3(ctx); break;
        case 4: figure4(ctx); break;
        case 5: figure5(ctx); break;
        default: figure67(ctx, fig); break;
    }
    ctx.out << "figure " << fig << ": " << ctx.sink.files().size() << " files\n";
}

}  // namespace wavemaps::cli
