#include "wavemaps/criticality.hpp"

#include "wavemaps/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace wavemaps {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRelTolFloor = 1e-12;

Outcome outcome_of(RunStatus status) {
    switch (status) {
        case RunStatus::Blowup: return Outcome::Blowup;
        case RunStatus::Dispersed: return Outcome::Disperse;
        case RunStatus::ReachedEnd: return Outcome::Undecided;
    }
    return Outcome::Undecided;
}

Outcome other(Outcome o) { return o == Outcome::Disperse ? Outcome::Blowup : Outcome::Disperse; }

BisectionStep step_of(double p, const RunClassification& c) {
    BisectionStep s;
    s.p = p;
    s.outcome = c.outcome;
    s.retried = c.retried;
    s.t_final = c.t_final;
    s.max_level = c.report.max_level;
    s.steps = c.report.steps;
    s.T_estimate = c.report.blew_up ? c.report.T_estimate : 0.0;
    return s;
}

std::string format_double(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// Samples of sign * u(t, L rho_j) on rho_j in [0, 1].
std::vector<double> scaled_samples(const FieldState& state, double scale, double sign, int nodes) {
    std::vector<double> out(static_cast<std::size_t>(nodes));
    for (int j = 0; j < nodes; ++j) {
        const double rho = static_cast<double>(j) / (nodes - 1);
        out[static_cast<std::size_t>(j)] = sign * field_value(state, scale * rho);
    }
    return out;
}

std::vector<double> unit_nodes(int nodes, double extent = 1.0) {
    std::vector<double> rho(static_cast<std::size_t>(nodes));
    for (int j = 0; j < nodes; ++j) rho[static_cast<std::size_t>(j)] = extent * j / (nodes - 1);
    return rho;
}

// Unstable mode of f_1 as a perturbation of u (the stored eigenfunction is rho times it).
struct UnstableMode {
    double lambda = 0.0;
    ProfileTable v;

    double operator()(double rho) const { return rho > 0.0 ? v(rho) / rho : 0.0; }
};

UnstableMode unstable_mode(const SelfSimilarProfile& background) {
    const SpectrumReport spec = find_eigenvalues(background, default_lambda_range(background.n), ShootConfig{});
    if (spec.eigenvalues.empty()) throw NumericalError("no unstable eigenvalue found");
    const ModeProfile m = eigenfunction(background, spec.eigenvalues.front());
    return {m.lambda, m.v};
}

struct ShapeFit {
    double coefficient = 0.0;
    double gauge = 0.0;
    double mismatch = 0.0;
};

// Least squares rate ~ c * mode + d * rho f', mismatch relative to sup |c * mode|.
ShapeFit fit_departure_shape(const std::vector<double>& rho, const std::vector<double>& rate,
                             const UnstableMode& mode, const ProfileTable& f1, double window) {
    double mm = 0.0, mg = 0.0, gg = 0.0, mr = 0.0, gr = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < rho.size() && rho[j] <= window; ++j) idx.push_back(j);
    for (std::size_t j : idx) {
        const double m = mode(rho[j]);
        const double g = rho[j] * f1.slope(rho[j]);
        mm += m * m;
        mg += m * g;
        gg += g * g;
        mr += m * rate[j];
        gr += g * rate[j];
    }
    const double det = mm * gg - mg * mg;
    if (!(det > 0.0)) return {0.0, 0.0, kNaN};
    const double c = (mr * gg - gr * mg) / det;
    const double d = (gr * mm - mr * mg) / det;
    double err = 0.0, scale = 0.0;
    for (std::size_t j : idx) {
        const double m = mode(rho[j]);
        const double g = rho[j] * f1.slope(rho[j]);
        err = std::max(err, std::abs(rate[j] - c * m - d * g));
        scale = std::max(scale, std::abs(c * m));
    }
    return {c, d, scale > 0.0 ? err / scale : kNaN};
}

}  // namespace

std::string to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Disperse: return "disperse";
        case Outcome::Blowup: return "blowup";
        case Outcome::Undecided: return "undecided";
    }
    return "undecided";
}

Outcome outcome_from_string(const std::string& name) {
    if (name == "disperse") return Outcome::Disperse;
    if (name == "blowup") return Outcome::Blowup;
    if (name == "undecided") return Outcome::Undecided;
    throw std::invalid_argument("unknown outcome '" + name + "'");
}

RunClassification classify_run(const InitialDataSpec& spec, const EvolutionConfig& cfg) {
    auto attempt = [&](EvolutionConfig c) {
        c.stop_on_dispersal = true;
        auto [state, report] = evolve(make_initial_data(spec, c.grid), c);
        RunClassification out;
        out.outcome = outcome_of(report.status);
        out.t_final = state.t;
        out.report = std::move(report);
        return out;
    };
    RunClassification first = attempt(cfg);
    if (first.outcome != Outcome::Undecided) return first;
    EvolutionConfig retry = cfg;
    retry.t_end = 2.0 * cfg.t_end;
    retry.grid = make_uniform_grid(cfg.grid.r_max, 2 * cfg.grid.n_cells);
    RunClassification second = attempt(retry);
    second.retried = true;
    return second;
}

InitialDataSpec FamilySpec::at(double p) const {
    InitialDataSpec spec = base;
    set_parameter(spec, parameter, map ? map(p) : p);
    return spec;
}

bool BisectionRecord::monotone() const {
    const Outcome upper = other(lower_outcome);
    double max_lower = -std::numeric_limits<double>::infinity();
    double min_upper = std::numeric_limits<double>::infinity();
    for (const BisectionStep& s : iterations) {
        if (s.outcome == lower_outcome) max_lower = std::max(max_lower, s.p);
        if (s.outcome == upper) min_upper = std::min(min_upper, s.p);
    }
    return max_lower < min_upper;
}

BisectionRecord bisect_classifier(const ParameterClassifier& classify, Interval bracket, double rel_tol,
                                  const std::string& parameter, int max_iterations) {
    if (!(bracket.lo < bracket.hi)) throw std::invalid_argument("bracket must satisfy lo < hi");
    if (!(rel_tol >= kRelTolFloor)) throw std::invalid_argument("relative tolerance below the binary64 floor 1e-12");
    BisectionRecord rec;
    rec.parameter = parameter;
    rec.requested_tol = rel_tol;
    const RunClassification lo = classify(bracket.lo);
    rec.iterations.push_back(step_of(bracket.lo, lo));
    const RunClassification hi = classify(bracket.hi);
    rec.iterations.push_back(step_of(bracket.hi, hi));
    if (lo.outcome == Outcome::Undecided || hi.outcome == Outcome::Undecided || lo.outcome == hi.outcome) {
        throw BracketError("bracket invalid: " + parameter + " = " + format_double(bracket.lo) + " gives " +
                           to_string(lo.outcome) + ", " + parameter + " = " + format_double(bracket.hi) + " gives " +
                           to_string(hi.outcome));
    }
    rec.lower_outcome = lo.outcome;
    double a = bracket.lo, b = bracket.hi;
    for (int it = 0; it < max_iterations; ++it) {
        const double mid = 0.5 * (a + b);
        if ((b - a) <= rel_tol * std::abs(mid) || mid <= a || mid >= b) break;
        const RunClassification c = classify(mid);
        rec.iterations.push_back(step_of(mid, c));
        Outcome o = c.outcome;
        if (o == Outcome::Undecided) {
            rec.warnings.push_back("undecided at " + parameter + " = " + format_double(mid) +
                                   " after retry, counted as blowup");
            o = Outcome::Blowup;
        }
        (o == rec.lower_outcome ? a : b) = mid;
    }
    rec.p_lo = a;
    rec.p_hi = b;
    rec.p_star = 0.5 * (a + b);
    rec.achieved_gap = (b - a) / std::abs(rec.p_star);
    if (rec.achieved_gap > rel_tol) {
        rec.warnings.push_back("iteration limit reached at relative gap " + format_double(rec.achieved_gap));
    }
    if (!rec.monotone()) rec.warnings.push_back("outcomes are not monotone in " + parameter);
    return rec;
}

BisectionRecord bisect(const FamilySpec& family, double rel_tol, const EvolutionConfig& cfg) {
    cfg.validate();
    family.base.validate();
    return bisect_classifier([&](double p) { return classify_run(family.at(p), cfg); },
                             {family.p_lo, family.p_hi}, rel_tol, family.parameter);
}

ScaleFit fit_scale(const FieldState& state, const ProfileTable& target, int nodes, double extent) {
    if (nodes < 8) throw std::invalid_argument("scale fit needs at least 8 nodes");
    if (!(extent > 0.0) || target.back() < extent) throw std::invalid_argument("target must cover the fit extent");
    const double g = origin_gradient(state);
    if (g == 0.0) throw std::invalid_argument("scale fit needs a nonzero origin slope");
    const double sign = g > 0.0 ? 1.0 : -1.0;
    const std::vector<double> rho = unit_nodes(nodes, extent);
    std::vector<double> f(rho.size());
    for (std::size_t j = 0; j < rho.size(); ++j) f[j] = target(rho[j]);
    const double L0 = std::abs(target.slope(0.0) / g);
    const double L_max = std::min(4.0 * L0, state.r_max() / extent);
    auto cost = [&](double lnL) {
        const double L = std::exp(lnL);
        double c = 0.0;
        for (std::size_t j = 0; j < rho.size(); ++j) {
            const double d = sign * field_value(state, L * rho[j]) - f[j];
            c += d * d;
        }
        return c;
    };
    const auto best = boost::math::tools::brent_find_minima(cost, std::log(0.25 * L0), std::log(L_max), 40);
    ScaleFit out;
    out.scale = std::exp(best.first);
    out.sign = sign;
    for (std::size_t j = 0; j < rho.size(); ++j) {
        out.distance = std::max(out.distance, std::abs(sign * field_value(state, out.scale * rho[j]) - f[j]));
    }
    return out;
}

void TransientConfig::validate() const {
    evolution.validate();
    if (first_decade < 1 || decades < 1 || first_decade + decades - 1 > 11) {
        throw std::invalid_argument("offset decades must lie in 1..11");
    }
    if (!(departure_distance > 0.0)) throw std::invalid_argument("departure distance must be positive");
    for (double d : sensitivity_distances) {
        if (!(d > 0.0)) throw std::invalid_argument("sensitivity distances must be positive");
    }
    if (sample_every < 1 || fit_nodes < 8) throw std::invalid_argument("invalid sampling settings");
    if (!(shape_window > 0.0 && shape_window <= 1.0)) throw std::invalid_argument("shape window must lie in (0, 1]");
    if (!(k_endpoint_width > 0.0 && k_endpoint_width < 0.5)) throw std::invalid_argument("invalid K endpoint width");
}

std::pair<double, double> fit_lifetime_slope(const std::vector<std::pair<double, double>>& samples,
                                             const std::vector<int>& sides) {
    if (samples.size() != sides.size()) throw std::invalid_argument("one side label per sample");
    if (samples.size() < 5) throw NumericalError("fewer than 5 usable transients");
    double xm[2] = {0.0, 0.0}, ym[2] = {0.0, 0.0};
    int count[2] = {0, 0};
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int k = sides[i] > 0 ? 1 : 0;
        xm[k] += samples[i].first;
        ym[k] += samples[i].second;
        ++count[k];
    }
    for (int k = 0; k < 2; ++k) {
        if (count[k] > 0) {
            xm[k] /= count[k];
            ym[k] /= count[k];
        }
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int k = sides[i] > 0 ? 1 : 0;
        const double dx = samples[i].first - xm[k];
        sxx += dx * dx;
        sxy += dx * (samples[i].second - ym[k]);
    }
    if (!(sxx > 0.0)) throw NumericalError("lifetime samples share one offset");
    const double slope = sxy / sxx;
    double res = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int k = sides[i] > 0 ? 1 : 0;
        res = std::max(res, std::abs(samples[i].second - ym[k] - slope * (samples[i].first - xm[k])));
    }
    return {slope, res};
}

IntermediateTime fit_intermediate_time(const std::vector<ScalePoint>& history, double max_scale,
                                       double plateau_margin) {
    double best = std::numeric_limits<double>::infinity();
    for (const ScalePoint& q : history) best = std::min(best, q.distance);
    std::size_t end = 0;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (history[i].distance <= best + plateau_margin) end = i;
    }
    std::vector<ScalePoint> pts;
    for (std::size_t i = 0; i <= end && i < history.size(); ++i) {
        if (history[i].scale < max_scale) pts.push_back(history[i]);
    }
    if (pts.size() < 8) throw NumericalError("too few approach samples for the intermediate blowup time");
    const double lo = pts.back().t + 0.25 * pts.back().scale;
    const double hi = pts.back().t + 4.0 * pts.back().scale;
    constexpr double mu_lo = 0.05, mu_hi = 3.0;
    // for fixed T and mu the correction amplitude is linear
    auto inner = [&](double T, double mu, double& beta) {
        double num = 0.0, den = 0.0;
        for (const ScalePoint& q : pts) {
            const double x = T - q.t;
            const double w = std::pow(x, mu);
            num += w * (q.scale / x - 1.0);
            den += w * w;
        }
        beta = num / den;
        double sum = 0.0;
        for (const ScalePoint& q : pts) {
            const double x = T - q.t;
            const double r = q.scale / x - 1.0 - beta * std::pow(x, mu);
            sum += r * r;
        }
        return sum;
    };
    auto minimise = [](const std::function<double(double)>& f, double a, double b) {
        constexpr int scan = 32;
        int k = 0;
        double fk = f(a);
        for (int i = 1; i <= scan; ++i) {
            const double v = f(a + (b - a) * i / scan);
            if (v < fk) {
                fk = v;
                k = i;
            }
        }
        const double l = a + (b - a) * std::max(k - 1, 0) / scan, r = a + (b - a) * std::min(k + 1, scan) / scan;
        return boost::math::tools::brent_find_minima(f, l, r, 50).first;
    };
    auto model = [&](double T, double& beta, double& mu) {
        mu = minimise([&](double m) {
            double b = 0.0;
            return inner(T, m, b);
        }, mu_lo, mu_hi);
        return inner(T, mu, beta);
    };
    IntermediateTime out;
    out.T = minimise([&](double T) {
        double beta = 0.0, mu = 0.0;
        return model(T, beta, mu);
    }, lo, hi);
    model(out.T, out.beta, out.mu);
    for (const ScalePoint& q : pts) {
        const double x = out.T - q.t;
        out.residual = std::max(out.residual, std::abs(x * (1.0 + out.beta * std::pow(x, out.mu)) / q.scale - 1.0));
    }
    out.points = static_cast<int>(pts.size());
    return out;
}

namespace {

TransientSample transient_run(const InitialDataSpec& spec, const TransientConfig& cfg, const ProfileTable& f1,
                              const UnstableMode& mode) {
    TransientSample out;
    const std::vector<double> rho = unit_nodes(cfg.fit_nodes);
    std::vector<double> f1_nodes(rho.size());
    for (std::size_t j = 0; j < rho.size(); ++j) f1_nodes[j] = f1(rho[j]);
    std::vector<double> thresholds{cfg.departure_distance};
    thresholds.insert(thresholds.end(), cfg.sensitivity_distances.begin(), cfg.sensitivity_distances.end());
    std::vector<double> last_below(thresholds.size(), kNaN);
    double scale_at_star = kNaN;
    const double max_threshold = *std::max_element(thresholds.begin(), thresholds.end());
    const double stop_distance = 5.0 * max_threshold;
    double best = std::numeric_limits<double>::infinity();
    bool below = false, left = false, departed = false, shape_done = false;
    double prev_tau = kNaN;
    std::vector<double> prev_dev;
    long n = 0;
    EvolutionConfig ecfg = cfg.evolution;
    ecfg.stop_on_dispersal = true;
    auto observer = [&](const FieldState& s) {
        if (departed || ++n % cfg.sample_every != 0) return true;
        if (std::abs(origin_gradient(s)) < cfg.min_gradient) return true;
        const ScaleFit fit = fit_scale(s, f1, cfg.fit_nodes);
        out.scale_history.push_back({s.t, fit.scale, fit.distance});
        const double tau = -std::log(fit.scale);
        best = std::min(best, fit.distance);
        for (std::size_t k = 0; k < thresholds.size(); ++k) {
            if (fit.distance < thresholds[k]) last_below[k] = s.t;
        }
        if (fit.distance < cfg.departure_distance) scale_at_star = fit.scale;
        const std::vector<double> u = scaled_samples(s, fit.scale, fit.sign, cfg.fit_nodes);
        std::vector<double> dev(u.size());
        for (std::size_t j = 0; j < u.size(); ++j) dev[j] = u[j] - f1_nodes[j];
        if (fit.distance < 2.0 * cfg.departure_distance) {
            const KValue K = lyapunov_K(ProfileTable(rho, u), cfg.k_endpoint_width, 0.0);
            if (!out.k_history.empty() && K.value > out.k_history.back().second) out.k_monotone = false;
            out.k_history.emplace_back(s.t, K.value);
        }
        if (fit.distance < cfg.departure_distance) below = true;
        if (below && !shape_done && fit.distance >= cfg.shape_distance && !prev_dev.empty() && tau > prev_tau &&
            best < cfg.shape_distance) {
            std::vector<double> rate(dev.size());
            for (std::size_t j = 0; j < dev.size(); ++j) rate[j] = (dev[j] - prev_dev[j]) / (tau - prev_tau);
            out.shape_mismatch = fit_departure_shape(rho, rate, mode, f1, cfg.shape_window).mismatch;
            shape_done = true;
        }
        if (below && fit.distance >= cfg.departure_distance && out.departure_coefficient == 0.0) {
            double mm = 0.0, md = 0.0;
            for (std::size_t j = 0; j < rho.size() && rho[j] <= cfg.shape_window; ++j) {
                mm += mode(rho[j]) * mode(rho[j]);
                md += mode(rho[j]) * dev[j];
            }
            out.departure_coefficient = mm > 0.0 ? md / mm : 0.0;
        }
        if (below && fit.distance >= max_threshold) left = true;
        if (below && fit.distance > stop_distance) departed = true;
        prev_tau = tau;
        prev_dev = std::move(dev);
        return true;
    };
    auto [state, report] = evolve(make_initial_data(spec, ecfg.grid), ecfg, observer);
    out.outcome = outcome_of(report.status);
    out.min_distance = std::isfinite(best) ? best : kNaN;
    out.t_star = last_below[0];
    out.scale_tau_star = -std::log(scale_at_star);
    out.t_sensitivity.assign(last_below.begin() + 1, last_below.end());
    if (!shape_done) out.shape_mismatch = kNaN;
    out.usable = std::isfinite(out.t_star) && left && out.outcome != Outcome::Undecided;
    return out;
}

double clock(double T, double t) { return std::isfinite(t) && t < T ? -std::log(T - t) : kNaN; }

double lambda_from(const std::vector<TransientSample>& runs, const std::function<double(const TransientSample&)>& tau) {
    std::vector<std::pair<double, double>> ss;
    std::vector<int> sd;
    for (const TransientSample& s : runs) {
        const double v = tau(s);
        if (!s.usable || !std::isfinite(v)) continue;
        ss.emplace_back(s.log_offset, v);
        sd.push_back(s.side);
    }
    try {
        const double sl = fit_lifetime_slope(ss, sd).first;
        return sl < 0.0 ? -1.0 / sl : kNaN;
    } catch (const NumericalError&) {
        return kNaN;
    }
}

}  // namespace

TransientFit transient_analysis(const FamilySpec& family, const BisectionRecord& record, const TransientConfig& cfg) {
    cfg.validate();
    if (!(record.p_star != 0.0 && std::isfinite(record.p_star))) throw std::invalid_argument("record has no p*");
    const SelfSimilarProfile p1 = find_profile(1);
    const ProfileTable f1 = uniform_profile(p1, 1.0, 4001);
    const UnstableMode mode = unstable_mode(p1);
    TransientFit fit;
    const Outcome upper = other(record.lower_outcome);
    for (int k = cfg.first_decade; k < cfg.first_decade + cfg.decades; ++k) {
        for (int side : {1, -1}) {
            const double p = record.p_star * (1.0 + side * std::pow(10.0, -k));
            TransientSample s = transient_run(family.at(p), cfg, f1, mode);
            s.p = p;
            s.side = side;
            s.log_offset = std::log(std::abs(p - record.p_star));
            const Outcome expected = (p > record.p_star) ? upper : record.lower_outcome;
            if (s.outcome != expected) {
                fit.notes.push_back("run at offset 1e-" + std::to_string(k) + " side " + std::to_string(side) +
                                    " ended as " + to_string(s.outcome));
                s.usable = false;
            }
            fit.runs.push_back(std::move(s));
        }
    }

    // intermediate blowup time from the closest usable run on each side
    std::vector<IntermediateTime> ends;
    for (int side : {1, -1}) {
        const TransientSample* closest = nullptr;
        for (const TransientSample& s : fit.runs) {
            if (s.usable && s.side == side && (!closest || s.log_offset < closest->log_offset)) closest = &s;
        }
        if (!closest) continue;
        try {
            ends.push_back(fit_intermediate_time(closest->scale_history));
        } catch (const NumericalError& e) {
            fit.notes.push_back(std::string("intermediate time fit failed: ") + e.what());
        }
    }
    if (ends.empty()) throw NumericalError("no intermediate blowup time could be fitted");
    fit.intermediate = ends.front();
    if (ends.size() == 2) {
        fit.intermediate.T = 0.5 * (ends[0].T + ends[1].T);
        fit.intermediate.residual = std::max(ends[0].residual, ends[1].residual);
        fit.intermediate_spread = std::abs(ends[0].T - ends[1].T);
    }
    const double T1 = fit.intermediate.T;
    for (TransientSample& s : fit.runs) {
        s.tau_star = clock(T1, s.t_star);
        s.tau_sensitivity.clear();
        for (double t : s.t_sensitivity) s.tau_sensitivity.push_back(clock(T1, t));
        if (s.usable && !std::isfinite(s.tau_star)) {
            s.usable = false;
            fit.notes.push_back("departure after the intermediate blowup time at p = " + format_double(s.p));
        }
    }

    std::vector<std::pair<double, double>> samples;
    std::vector<int> sides;
    for (const TransientSample& s : fit.runs) {
        if (!s.usable) continue;
        samples.emplace_back(s.log_offset, s.tau_star);
        sides.push_back(s.side);
    }
    fit.samples = samples;
    const auto [slope, res] = fit_lifetime_slope(samples, sides);
    if (!(slope < 0.0)) throw NumericalError("lifetime slope is not negative");
    fit.slope = slope;
    fit.fit_residual = res;
    fit.lambda_estimate = -1.0 / slope;
    for (std::size_t t = 0; t < cfg.sensitivity_distances.size(); ++t) {
        fit.lambda_sensitivity.push_back(lambda_from(fit.runs, [&](const TransientSample& s) {
            return s.tau_sensitivity[t];
        }));
    }
    fit.lambda_scale_clock = lambda_from(fit.runs, [](const TransientSample& s) { return s.scale_tau_star; });

    int up_sign = 0, down_sign = 0;
    bool consistent = true;
    for (const TransientSample& s : fit.runs) {
        if (!s.usable) continue;
        const int sg = s.departure_coefficient > 0.0 ? 1 : (s.departure_coefficient < 0.0 ? -1 : 0);
        int& ref = s.side > 0 ? up_sign : down_sign;
        if (sg == 0 || (ref != 0 && ref != sg)) consistent = false;
        ref = sg;
    }
    fit.opposite_departure = consistent && up_sign != 0 && down_sign != 0 && up_sign == -down_sign;
    return fit;
}

DepartureShape departure_shape(const InitialDataSpec& spec, const EvolutionConfig& cfg, double shape_distance,
                               double window, int fit_nodes, int sample_every, double min_gradient) {
    if (!(shape_distance > 0.0) || !(window > 0.0 && window <= 1.0) || fit_nodes < 16 || sample_every < 1) {
        throw std::invalid_argument("departure_shape: invalid settings");
    }
    const SelfSimilarProfile p1 = find_profile(1);
    const ProfileTable f1 = uniform_profile(p1, 1.0, 4001);
    const UnstableMode mode = unstable_mode(p1);
    const std::vector<double> rho = unit_nodes(fit_nodes);
    DepartureShape out;
    out.lambda = mode.lambda;
    double best = std::numeric_limits<double>::infinity();
    double prev_tau = kNaN;
    std::vector<double> prev_dev;
    bool done = false;
    long n = 0;
    EvolutionConfig ecfg = cfg;
    ecfg.stop_on_dispersal = true;
    auto observer = [&](const FieldState& s) {
        if (++n % sample_every != 0 || std::abs(origin_gradient(s)) < min_gradient) return true;
        const ScaleFit fit = fit_scale(s, f1, fit_nodes);
        const double tau = -std::log(fit.scale);
        const std::vector<double> u = scaled_samples(s, fit.scale, fit.sign, fit_nodes);
        std::vector<double> dev(u.size());
        for (std::size_t j = 0; j < u.size(); ++j) dev[j] = u[j] - f1(rho[j]);
        if (best < shape_distance && fit.distance >= shape_distance && !prev_dev.empty() && tau > prev_tau) {
            std::vector<double> rate(dev.size());
            for (std::size_t j = 0; j < dev.size(); ++j) rate[j] = (dev[j] - prev_dev[j]) / (tau - prev_tau);
            const ShapeFit sf = fit_departure_shape(rho, rate, mode, f1, window);
            for (std::size_t j = 0; j < rho.size() && rho[j] <= window; ++j) {
                out.rho.push_back(rho[j]);
                out.rate.push_back(rate[j] - sf.gauge * rho[j] * f1.slope(rho[j]));
                out.mode.push_back(sf.coefficient * mode(rho[j]));
            }
            out.coefficient = sf.coefficient;
            out.mismatch = sf.mismatch;
            out.t = s.t;
            out.distance = fit.distance;
            done = true;
            return false;
        }
        best = std::min(best, fit.distance);
        prev_tau = tau;
        prev_dev = std::move(dev);
        return true;
    };
    evolve(make_initial_data(spec, ecfg.grid), ecfg, observer);
    if (!done) throw NumericalError("departure_shape: the run never approached and left f_1");
    return out;
}

MarginalPair marginal_pair(const FamilySpec& family, const BisectionRecord& record, const EvolutionConfig& cfg,
                           int sample_every, double min_gradient) {
    const ProfileTable f1 = uniform_profile(find_profile(1), 1.0, 4001);
    MarginalPair out;
    out.p_lo = record.p_lo;
    out.p_hi = record.p_hi;
    auto run = [&](double p, std::vector<std::pair<double, double>>& hist, double& min_d) {
        long n = 0;
        min_d = std::numeric_limits<double>::infinity();
        EvolutionConfig c = cfg;
        c.stop_on_dispersal = true;
        auto [state, report] = evolve(make_initial_data(family.at(p), c.grid), c, [&](const FieldState& s) {
            if (++n % sample_every != 0 || std::abs(origin_gradient(s)) < min_gradient) return true;
            const ScaleFit fit = fit_scale(s, f1);
            hist.emplace_back(s.t, fit.distance);
            min_d = std::min(min_d, fit.distance);
            return true;
        });
        if (!std::isfinite(min_d)) min_d = kNaN;
        return outcome_of(report.status);
    };
    out.lo_outcome = run(record.p_lo, out.lo_distance, out.lo_min_distance);
    out.hi_outcome = run(record.p_hi, out.hi_distance, out.hi_min_distance);
    return out;
}

UniversalityReport universality_check(const std::vector<InitialDataSpec>& specs, const EvolutionConfig& cfg,
                                      double window_hi, double tolerance) {
    if (!(window_hi > 0.0 && window_hi <= 1.0)) throw std::invalid_argument("window must lie in (0, 1]");
    const ProfileTable f0 = uniform_profile(find_profile(0), 1.0, 2001);
    UniversalityReport rep;
    rep.tolerance = tolerance;
    rep.passed = !specs.empty();
    for (const InitialDataSpec& spec : specs) {
        UniversalityRun run;
        run.spec = spec;
        const RunClassification c = classify_run(spec, cfg);
        run.outcome = c.outcome;
        if (c.outcome != Outcome::Blowup) {
            run.rejected = true;
            rep.passed = false;
            rep.runs.push_back(std::move(run));
            continue;
        }
        run.T_estimate = c.report.T_estimate;
        for (const FieldState& snap : c.report.snapshots) {
            const double g = origin_gradient(snap);
            if (std::abs(g) > 0.25 * cfg.blowup_gradient) break;
            run.distances.emplace_back(snap.t, fit_scale(snap, f0, 201, window_hi).distance);
        }
        // pairs already below tolerance / 10 sit at the discretisation floor
        auto settled = [&](double earlier, double later) {
            return later < earlier || std::max(earlier, later) < 0.1 * tolerance;
        };
        const std::size_t m = run.distances.size();
        run.passed = m >= 3 && settled(run.distances[m - 2].second, run.distances[m - 1].second) &&
                     settled(run.distances[m - 3].second, run.distances[m - 2].second) &&
                     run.distances[m - 1].second < tolerance;
        rep.passed = rep.passed && run.passed;
        rep.runs.push_back(std::move(run));
    }
    return rep;
}

KValue lyapunov_K(const ProfileTable& u, double endpoint_width, double boundary_tol) {
    if (u.empty() || u.front() > 0.0 || u.back() < 1.0) throw std::invalid_argument("profile must cover [0, 1]");
    if (!(endpoint_width > 0.0 && endpoint_width < 0.5)) throw std::invalid_argument("invalid endpoint width");
    const double half_pi = 0.5 * std::numbers::pi;
    auto integrand = [&](double rho) {
        const double du = u.slope(rho);
        const double s = std::sin(u(rho) - half_pi);
        return 0.5 * (rho * rho * du * du - 2.0 * s * s / (1.0 - rho * rho));
    };
    using GL = boost::math::quadrature::gauss<double, 10>;
    const double upper = 1.0 - endpoint_width;
    double total = 0.0;
    double a = 0.0;
    for (double x : u.x()) {
        if (x <= a) continue;
        const double b = std::min(x, upper);
        total += GL::integrate(integrand, a, b);
        a = b;
        if (a >= upper) break;
    }
    KValue out;
    out.boundary_offset = std::abs(u(1.0) - half_pi);
    out.divergent = out.boundary_offset > boundary_tol;
    if (out.divergent) {
        out.value = total;
        return out;
    }
    // u = pi/2 + u1 (rho - 1) on the last piece
    const double u1 = u.slope(1.0);
    const double h = endpoint_width;
    const double kinetic = 0.5 * u1 * u1 * (h - h * h + h * h * h / 3.0);
    const double potential = -u1 * u1 * (-h - 2.0 * std::log1p(-0.5 * h));
    out.value = total + kinetic + potential;
    return out;
}

double bump(double rho, double center, double width) {
    const double x = (rho - center) / width;
    if (std::abs(x) >= 1.0) return 0.0;
    const double w = 1.0 - x * x;
    return w * w * w * w;
}

double bump_slope(double rho, double center, double width) {
    const double x = (rho - center) / width;
    if (std::abs(x) >= 1.0) return 0.0;
    const double w = 1.0 - x * x;
    return -8.0 * x * w * w * w / width;
}

double directional_derivative_K(const ProfileTable& u, double center, double width, double step) {
    if (!(center - width > 0.0 && center + width < 1.0)) throw std::invalid_argument("bump must lie inside (0, 1)");
    auto shifted = [&](double amp) {
        std::vector<double> f(u.size()), df(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double x = u.x()[i];
            f[i] = u.f()[i] + amp * bump(x, center, width);
            df[i] = (u.has_derivative() ? u.df()[i] : u.slope(x)) + amp * bump_slope(x, center, width);
        }
        return ProfileTable(u.x(), std::move(f), std::move(df));
    };
    const KValue plus = lyapunov_K(shifted(step));
    const KValue minus = lyapunov_K(shifted(-step));
    return (plus.value - minus.value) / (2.0 * step);
}

double stationarity_defect(const ProfileTable& u, int count, unsigned seed, double step) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> centers(0.1, 0.9);
    std::uniform_real_distribution<double> fraction(0.2, 0.9);
    double worst = 0.0;
    for (int i = 0; i < count; ++i) {
        const double c = centers(rng);
        const double w = fraction(rng) * std::min(c, 1.0 - c);
        worst = std::max(worst, std::abs(directional_derivative_K(u, c, w, step)));
    }
    return worst;
}

}  // namespace wavemaps
