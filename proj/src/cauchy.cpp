#include "wavemaps/cauchy.hpp"

#include "wavemaps/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace wavemaps {

namespace {

constexpr double pi = std::numbers::pi;

// (sin z - z) for the nonlinear remainder; the series avoids cancellation.
double sin_remainder(double z) {
    if (std::abs(z) < 0.05) {
        const double z2 = z * z;
        return z * z2 * (-1.0 / 6.0 + z2 * (1.0 / 120.0 + z2 * (-1.0 / 5040.0 + z2 / 362880.0)));
    }
    return std::sin(z) - z;
}

double smootherstep(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

// Three-point first derivative at interior node i on arbitrary spacing.
double slope_at(const std::vector<double>& r, const std::vector<double>& u, std::size_t i) {
    const double hm = r[i] - r[i - 1], hp = r[i + 1] - r[i];
    return (-hp * hp * u[i - 1] + (hp * hp - hm * hm) * u[i] + hm * hm * u[i + 1]) / (hm * hp * (hm + hp));
}

// max |u_r| h over the inner half of the finest level
double finest_indicator(const FieldState& s) {
    const UniformRun fine = uniform_runs(s.r).front();
    const double R = s.r[fine.end];
    double ind = 0.0;
    for (std::size_t i = 1; i < fine.end && s.r[i] <= 0.5 * R; ++i) {
        ind = std::max(ind, std::abs(slope_at(s.r, s.u, i)) * fine.spacing);
    }
    return ind;
}

// Energy on [0, radius] from the nodes that can influence it.
double inner_energy(const FieldState& s, double radius) {
    auto it = std::lower_bound(s.r.begin(), s.r.end(), radius);
    const std::size_t k = std::min(s.size(), static_cast<std::size_t>(it - s.r.begin()) + 5);
    if (k == s.size()) return energy(s, radius).total;
    FieldState head;
    head.t = s.t;
    head.r.assign(s.r.begin(), s.r.begin() + static_cast<std::ptrdiff_t>(k));
    head.u.assign(s.u.begin(), s.u.begin() + static_cast<std::ptrdiff_t>(k));
    head.ut.assign(s.ut.begin(), s.ut.begin() + static_cast<std::ptrdiff_t>(k));
    return energy(head, radius).total;
}

double min_spacing(const FieldState& s) { return s.r[1] - s.r[0]; }

struct LineFit {
    double intercept;
    double slope;
    double max_residual;
    double spread;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double worst = 0.0, lo = y.front(), hi = y.front();
    for (std::size_t i = 0; i < x.size(); ++i) {
        worst = std::max(worst, std::abs(y[i] - intercept - slope * x[i]));
        lo = std::min(lo, y[i]);
        hi = std::max(hi, y[i]);
    }
    return {intercept, slope, worst, hi - lo};
}

// Samples of 1/u_r(t, 0) with u_r above the floor.
void inverse_gradient_window(const ProfileTable& h, double floor, std::vector<double>& t, std::vector<double>& y) {
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (std::abs(h.f()[i]) >= floor) {
            t.push_back(h.x()[i]);
            y.push_back(1.0 / std::abs(h.f()[i]));
        }
    }
}

// Blowup declaration: over the last decade of growth 1/|u_r(t, 0)| is linear in t.
bool blowup_confirmed(const std::vector<double>& ts, const std::vector<double>& gs) {
    const double floor = std::abs(gs.back()) / 10.0;
    std::vector<double> t, y;
    for (std::size_t i = ts.size(); i-- > 0 && std::abs(gs[i]) >= floor;) {
        t.push_back(ts[i]);
        y.push_back(1.0 / std::abs(gs[i]));
    }
    if (t.size() < 10) return false;
    const LineFit fit = fit_line(t, y);
    return fit.slope < 0.0 && fit.max_residual < 0.05 * fit.spread;
}

class Stepper {
public:
    explicit Stepper(OuterBoundary outer) : outer_(outer) {}

    void step(FieldState& s, double dt) {
        const std::size_t n = s.size();
        resize(n);
        evolution_rhs(s, k1u_, k1v_, outer_);
        stage(s, 0.5 * dt, k1u_, k1v_);
        evolution_rhs(tmp_, k2u_, k2v_, outer_);
        stage(s, 0.5 * dt, k2u_, k2v_);
        evolution_rhs(tmp_, k3u_, k3v_, outer_);
        stage(s, dt, k3u_, k3v_);
        evolution_rhs(tmp_, k4u_, k4v_, outer_);
        const double w = dt / 6.0;
        for (std::size_t i = 0; i < n; ++i) {
            s.u[i] += w * (k1u_[i] + 2.0 * (k2u_[i] + k3u_[i]) + k4u_[i]);
            s.ut[i] += w * (k1v_[i] + 2.0 * (k2v_[i] + k3v_[i]) + k4v_[i]);
        }
        s.u[0] = 0.0;
        s.t += dt;
    }

private:
    void resize(std::size_t n) {
        for (auto* v : {&k1u_, &k1v_, &k2u_, &k2v_, &k3u_, &k3v_, &k4u_, &k4v_}) v->resize(n);
    }

    void stage(const FieldState& s, double h, const std::vector<double>& du, const std::vector<double>& dv) {
        tmp_.r = s.r;
        tmp_.t = s.t;
        tmp_.u.resize(s.size());
        tmp_.ut.resize(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            tmp_.u[i] = s.u[i] + h * du[i];
            tmp_.ut[i] = s.ut[i] + h * dv[i];
        }
    }

    OuterBoundary outer_;
    FieldState tmp_;
    std::vector<double> k1u_, k1v_, k2u_, k2v_, k3u_, k3v_, k4u_, k4v_;
};

std::string describe_abort(const FieldState& s, int level) {
    std::ostringstream os;
    double umax = 0.0;
    for (double v : s.u) {
        if (std::isfinite(v)) umax = std::max(umax, std::abs(v));
    }
    os << "non-finite field at t = " << s.t << " (level " << level << ", h_min = " << min_spacing(s)
       << ", max finite |u| = " << umax << ") without a blowup declaration";
    return os.str();
}

}  // namespace

void EvolutionConfig::validate() const {
    if (!(grid.r_max > 0.0) || grid.n_cells < 8) throw std::invalid_argument("evolution grid is not set");
    if (!(cfl > 0.0 && cfl <= 0.5)) throw std::invalid_argument("cfl must lie in (0, 0.5]");
    if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
    if (!(refine_threshold > 0.0)) throw std::invalid_argument("refine_threshold must be positive");
    if (max_refine_levels < 0) throw std::invalid_argument("max_refine_levels must be non-negative");
    if (level_cells < 16 || level_cells % 2 != 0) throw std::invalid_argument("level_cells must be even and >= 16");
    if (!(blowup_gradient >= 1e3)) throw std::invalid_argument("blowup_gradient must be at least 1e3");
    if (!(dispersal_radius > 0.0 && dispersal_fraction > 0.0) || dispersal_steps < 1) {
        throw std::invalid_argument("invalid dispersal criterion");
    }
}

EvolutionConfig make_evolution_config(double r_max, int n_cells, double t_end, double cfl) {
    EvolutionConfig cfg;
    cfg.grid = make_uniform_grid(r_max, n_cells);
    cfg.t_end = t_end;
    cfg.cfl = cfl;
    return cfg;
}

std::string to_string(DataFamily family) {
    switch (family) {
        case DataFamily::Gaussian: return "gaussian";
        case DataFamily::Kink: return "kink";
        case DataFamily::ProfilePerturbation: return "profile_perturbation";
    }
    return "unknown";
}

DataFamily data_family_from_string(const std::string& name) {
    if (name == "gaussian") return DataFamily::Gaussian;
    if (name == "kink") return DataFamily::Kink;
    if (name == "profile_perturbation" || name == "profile") return DataFamily::ProfilePerturbation;
    throw std::invalid_argument("unknown data family '" + name + "'");
}

std::string to_string(OuterBoundary b) {
    return b == OuterBoundary::Sommerfeld ? "sommerfeld" : "bayliss_turkel";
}

OuterBoundary outer_boundary_from_string(const std::string& name) {
    if (name == "sommerfeld") return OuterBoundary::Sommerfeld;
    if (name == "bayliss_turkel") return OuterBoundary::BaylissTurkel;
    throw std::invalid_argument("unknown outer boundary '" + name + "'");
}

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::Blowup: return "blowup";
        case RunStatus::Dispersed: return "dispersed";
        case RunStatus::ReachedEnd: return "reached_end";
    }
    return "unknown";
}

void InitialDataSpec::validate() const {
    switch (family) {
        case DataFamily::Gaussian:
            if (!(s > 0.0) || !(r0 >= 0.0) || !std::isfinite(A)) {
                throw std::invalid_argument("gaussian data need s > 0, r0 >= 0 and finite A");
            }
            break;
        case DataFamily::Kink:
            if (!(s > 0.0)) throw std::invalid_argument("kink data need s > 0");
            break;
        case DataFamily::ProfilePerturbation:
            if (!profile) throw std::invalid_argument("profile perturbation needs a base profile");
            if (!(T > 0.0) || !(bump_width > 0.0) || !(bump_center > 0.0) || !std::isfinite(epsilon)) {
                throw std::invalid_argument("profile perturbation needs T > 0, a positive bump and finite epsilon");
            }
            break;
    }
}

void set_parameter(InitialDataSpec& spec, const std::string& name, double value) {
    if (name == "A") spec.A = value;
    else if (name == "r0") spec.r0 = value;
    else if (name == "s") spec.s = value;
    else if (name == "T") spec.T = value;
    else if (name == "epsilon") spec.epsilon = value;
    else if (name == "bump_center") spec.bump_center = value;
    else if (name == "bump_width") spec.bump_width = value;
    else if (name == "cutoff_radius") spec.cutoff_radius = value;
    else throw std::invalid_argument("unknown data parameter '" + name + "'");
}

double get_parameter(const InitialDataSpec& spec, const std::string& name) {
    if (name == "A") return spec.A;
    if (name == "r0") return spec.r0;
    if (name == "s") return spec.s;
    if (name == "T") return spec.T;
    if (name == "epsilon") return spec.epsilon;
    if (name == "bump_center") return spec.bump_center;
    if (name == "bump_width") return spec.bump_width;
    if (name == "cutoff_radius") return spec.cutoff_radius;
    throw std::invalid_argument("unknown data parameter '" + name + "'");
}

FieldState make_initial_data(const InitialDataSpec& spec, const RadialGrid& grid) {
    spec.validate();
    const std::vector<double> r = grid.nodes();
    std::vector<double> u(r.size()), ut(r.size());
    switch (spec.family) {
        case DataFamily::Gaussian:
            for (std::size_t i = 0; i < r.size(); ++i) {
                const double x = (r[i] - spec.r0) / spec.s;
                const double e = std::exp(-x * x * x * x);
                u[i] = spec.A * r[i] * r[i] * r[i] * e;
                ut[i] = spec.A * e * r[i] * r[i] * (3.0 - 4.0 * r[i] * x * x * x / spec.s);
            }
            break;
        case DataFamily::Kink:
            for (std::size_t i = 0; i < r.size(); ++i) u[i] = pi * std::tanh(r[i] / spec.s);
            break;
        case DataFamily::ProfilePerturbation: {
            const double T = spec.T;
            std::vector<double> rho(r.size());
            for (std::size_t i = 0; i < r.size(); ++i) rho[i] = r[i] / T;
            const ProfileTable f = sample_profile(*spec.profile, rho);
            const double rc = spec.cutoff_radius > 0.0 ? spec.cutoff_radius : 0.5 * grid.r_max;
            const double wc = 0.5 * rc;
            const double rho_c = rc / T;
            const double at_cut = spec.profile->has_exterior()
                                      ? spec.profile->c
                                      : sample_profile(*spec.profile, std::vector<double>{0.5 * rho_c, rho_c}).f()[1];
            const double far = pi * std::round(at_cut / pi);
            const double c3 = spec.bump_center * spec.bump_center * spec.bump_center;
            for (std::size_t i = 0; i < r.size(); ++i) {
                const double chi = 1.0 - smootherstep((r[i] - rc) / wc);
                const double x = (r[i] - spec.bump_center) / spec.bump_width;
                const double bump = spec.epsilon * r[i] * r[i] * r[i] / c3 * std::exp(-x * x * x * x);
                u[i] = chi * f.f()[i] + (1.0 - chi) * far + bump;
                ut[i] = chi * r[i] * f.df()[i] / (T * T);
            }
            break;
        }
    }
    u[0] = 0.0;
    return FieldState::on_grid(grid, 0.0, std::move(u), std::move(ut));
}

double ts_solution(double t, double r, double T) { return 2.0 * std::atan(r / (T - t)); }

double ts_rate(double t, double r, double T) {
    const double d = T - t;
    return 2.0 * r / (d * d + r * r);
}

void evolution_rhs(const FieldState& s, std::vector<double>& du, std::vector<double>& dut, OuterBoundary outer) {
    const std::size_t n = s.size();
    du.resize(n);
    dut.resize(n);
    const auto& r = s.r;
    const auto& u = s.u;
    for (std::size_t i = 0; i < n; ++i) du[i] = s.ut[i];
    du[0] = 0.0;
    dut[0] = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hm = r[i] - r[i - 1], hp = r[i + 1] - r[i];
        const double den = hm * hp * (hm + hp);
        const double ur = (-hp * hp * u[i - 1] + (hp * hp - hm * hm) * u[i] + hm * hm * u[i + 1]) / den;
        const double urr = 2.0 * (hp * u[i - 1] - (hm + hp) * u[i] + hm * u[i + 1]) / den;
        const double ri = r[i];
        const double inv2 = 1.0 / (ri * ri);
        dut[i] = urr + 2.0 * ur / ri - 2.0 * u[i] * inv2 - sin_remainder(2.0 * u[i]) * inv2;
    }
    const std::size_t N = n - 1;
    const double h = r[N] - r[N - 1];
    const double R = r[N];
    const double vr = (3.0 * s.ut[N] - 4.0 * s.ut[N - 1] + s.ut[N - 2]) / (2.0 * h);
    if (outer == OuterBoundary::Sommerfeld) {
        // (d_t + d_r)(r u) = 0, differentiated in time
        dut[N] = -vr - s.ut[N] / R;
    } else {
        // (d_t + d_r + 3/r)(d_t + d_r + 1/r) u = 0 with u_rr eliminated by the linearised equation
        const double ur = (3.0 * u[N] - 4.0 * u[N - 1] + u[N - 2]) / (2.0 * h);
        dut[N] = -vr - 2.0 * s.ut[N] / R - ur / R - 2.0 * u[N] / (R * R);
    }
}

double origin_gradient(const FieldState& s) {
    const double h = s.r[1];
    return (8.0 * s.u[1] - s.u[2]) / (6.0 * h);
}

int refinement_level(const FieldState& state) { return static_cast<int>(uniform_runs(state.r).size()) - 1; }

FieldState refine(const FieldState& state, const EvolutionConfig& cfg) {
    const auto runs = uniform_runs(state.r);
    const int level = static_cast<int>(runs.size()) - 1;
    if (level >= cfg.max_refine_levels) return state;
    const std::size_t end = runs.front().end;
    if (finest_indicator(state) <= cfg.refine_threshold) return state;

    const std::size_t split = std::min(end / 2, static_cast<std::size_t>(cfg.level_cells / 2));
    if (split < 4) return state;
    FieldState out;
    out.t = state.t;
    for (std::size_t j = 0; j <= 2 * split; ++j) {
        if (j % 2 == 0) {
            out.r.push_back(state.r[j / 2]);
            out.u.push_back(state.u[j / 2]);
            out.ut.push_back(state.ut[j / 2]);
        } else {
            const double x = 0.5 * (state.r[(j - 1) / 2] + state.r[(j + 1) / 2]);
            out.r.push_back(x);
            out.u.push_back(field_value(state, x));
            out.ut.push_back(field_rate(state, x));
        }
    }
    for (std::size_t i = split + 1; i < state.size(); ++i) {
        out.r.push_back(state.r[i]);
        out.u.push_back(state.u[i]);
        out.ut.push_back(state.ut[i]);
    }
    out.u[0] = 0.0;
    return out;
}

FieldState coarsen(const FieldState& state, const EvolutionConfig& cfg) {
    const auto runs = uniform_runs(state.r);
    if (runs.size() < 2) return state;
    const UniformRun& fine = runs.front();
    const double parent = runs[1].spacing;
    if (fine.end % 2 != 0 || std::abs(parent - 2.0 * fine.spacing) > 1e-9 * parent) return state;
    double indicator = 0.0;
    for (std::size_t i = 1; i < fine.end; ++i) {
        indicator = std::max(indicator, std::abs(slope_at(state.r, state.u, i)) * parent);
    }
    if (indicator >= 0.25 * cfg.refine_threshold) return state;
    FieldState out;
    out.t = state.t;
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (i < fine.end && i % 2 == 1) continue;
        out.r.push_back(state.r[i]);
        out.u.push_back(state.u[i]);
        out.ut.push_back(state.ut[i]);
    }
    return out;
}

std::pair<FieldState, BlowupReport> evolve(FieldState state, const EvolutionConfig& cfg,
                                           const StepObserver& observer) {
    cfg.validate();
    validate(state);
    if (state.size() < 8) throw std::invalid_argument("state needs at least 8 nodes");
    state.u[0] = 0.0;

    BlowupReport rep;
    std::vector<double> hist_t, hist_g;
    const double E0 = energy(state, state.r_max()).total;
    rep.initial_energy = E0;
    const double r_disp = std::min(cfg.dispersal_radius, state.r_max());

    std::vector<double> targets;
    for (double t : cfg.snapshot_times) {
        if (t > state.t && t < cfg.t_end) targets.push_back(t);
    }
    std::sort(targets.begin(), targets.end());
    targets.push_back(cfg.t_end);
    std::size_t next_target = 0;

    hist_t.push_back(state.t);
    hist_g.push_back(origin_gradient(state));
    double next_snapshot = 10.0;
    double window_start = 0.0;
    int quiet = 0;
    bool finished = false;

    if (E0 == 0.0 && cfg.stop_on_dispersal) {
        rep.status = RunStatus::Dispersed;
        finished = true;
    }

    Stepper stepper(cfg.outer_boundary);
    int level = refinement_level(state);
    while (!finished) {
        // regrid
        for (;;) {
            FieldState finer = refine(state, cfg);
            if (finer.size() == state.size()) break;
            state = std::move(finer);
            ++level;
        }
        if (level >= cfg.max_refine_levels) {
            const double ind = finest_indicator(state);
            if (ind > cfg.refine_threshold && !rep.level_cap_reached) {
                rep.level_cap_reached = true;
                rep.notes.push_back("refinement level cap reached at t = " + std::to_string(state.t));
            }
            if (ind > 4.0 * cfg.refine_threshold) {
                rep.notes.push_back("unresolved at the level cap, run stopped at t = " + std::to_string(state.t));
                break;
            }
        }
        if (level > 0) {
            FieldState coarser = coarsen(state, cfg);
            if (coarser.size() != state.size()) {
                state = std::move(coarser);
                --level;
            }
        }
        rep.max_level = std::max(rep.max_level, level);

        const double target = targets[next_target];
        double dt = cfg.cfl * min_spacing(state);
        bool lands = false;
        if (state.t + dt >= target - 1e-9 * dt) {
            dt = target - state.t;
            lands = true;
        }
        stepper.step(state, dt);
        if (lands) state.t = target;
        ++rep.steps;
        if (!state.is_finite()) throw InstabilityAbort(describe_abort(state, level));

        const double g = origin_gradient(state);
        if (state.t > hist_t.back()) {
            hist_t.push_back(state.t);
            hist_g.push_back(g);
        }
        while (std::abs(g) >= next_snapshot) {
            rep.snapshots.push_back(state);
            next_snapshot *= 2.0;
        }
        if (lands) {
            if (next_target + 1 < targets.size()) rep.timed_snapshots.push_back(state);
            ++next_target;
        }

        if (std::abs(g) > cfg.blowup_gradient && blowup_confirmed(hist_t, hist_g)) {
            rep.status = RunStatus::Blowup;
            rep.blew_up = true;
            break;
        }
        if (cfg.stop_on_dispersal) {
            const double e = inner_energy(state, r_disp);
            if (e < cfg.dispersal_fraction * E0) {
                if (quiet++ == 0) window_start = e;
            } else {
                quiet = 0;
            }
            if (quiet > cfg.dispersal_steps && e < window_start) {
                rep.status = RunStatus::Dispersed;
                break;
            }
        }
        if (observer && !observer(state)) {
            rep.notes.push_back("stopped by observer at t = " + std::to_string(state.t));
            break;
        }
        if (next_target >= targets.size()) break;
    }

    rep.gradient_history = hist_t.size() >= 2 ? ProfileTable(hist_t, hist_g) : ProfileTable();
    if (rep.blew_up) rep.T_estimate = estimate_blowup_time(rep);
    return {std::move(state), std::move(rep)};
}

double estimate_blowup_time(const ProfileTable& h) {
    if (h.size() < 10) throw std::invalid_argument("gradient history too short for a blowup fit");
    double peak = 0.0;
    for (double g : h.f()) peak = std::max(peak, std::abs(g));
    std::vector<double> t, y;
    inverse_gradient_window(h, std::max(10.0, peak / 100.0), t, y);
    if (t.size() < 10) throw std::invalid_argument("fewer than 10 gradient samples above the fit floor");
    const LineFit fit = fit_line(t, y);
    if (!(fit.slope < 0.0)) throw std::invalid_argument("1/u_r(t,0) is not decreasing");
    return -fit.intercept / fit.slope;
}

double estimate_blowup_time(const BlowupReport& report) {
    if (!report.blew_up) throw std::invalid_argument("run did not blow up");
    return estimate_blowup_time(report.gradient_history);
}

ProfileTable rescaled_profile(const FieldState& state, double T, Interval rho_window) {
    const double d = T - state.t;
    if (!(d > 0.0)) throw std::invalid_argument("rescaling needs t < T");
    if (!(rho_window.lo >= 0.0 && rho_window.hi > rho_window.lo)) {
        throw std::invalid_argument("rho window must satisfy 0 <= lo < hi");
    }
    if (d * rho_window.hi > state.r_max()) throw std::invalid_argument("rho window exceeds the grid");
    std::vector<double> rho, u;
    auto push = [&](double x) {
        if (!rho.empty() && x <= rho.back()) return;
        rho.push_back(x);
        u.push_back(field_value(state, d * x));
    };
    push(rho_window.lo);
    for (double r : state.r) {
        const double x = r / d;
        if (x > rho_window.lo && x < rho_window.hi) push(x);
    }
    push(rho_window.hi);
    return ProfileTable(std::move(rho), std::move(u));
}

}  // namespace wavemaps
