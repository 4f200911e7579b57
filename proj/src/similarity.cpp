#include "wavemaps/similarity.hpp"

#include "wavemaps/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wavemaps {

namespace {

double sin_remainder(double z) {
    if (std::abs(z) < 0.05) {
        const double z2 = z * z;
        return z * z2 * (-1.0 / 6.0 + z2 * (1.0 / 120.0 + z2 * (-1.0 / 5040.0 + z2 / 362880.0)));
    }
    return std::sin(z) - z;
}

SimilarityState empty_state(const SimilarityConfig& cfg, double tau) {
    cfg.validate();
    SimilarityState s;
    s.tau = tau;
    s.grid = cfg.grid();
    s.u.assign(static_cast<std::size_t>(s.grid.n_nodes()), 0.0);
    s.utau.assign(s.u.size(), 0.0);
    return s;
}

void require_compatible(const SimilarityState& s, const SimilarityConfig& cfg) {
    if (s.grid.n_cells != cfg.n_cells || std::abs(s.grid.r_max - cfg.rho_max) > 1e-12 * cfg.rho_max) {
        throw std::invalid_argument("similarity state grid differs from the config");
    }
    if (s.u.size() != s.utau.size() || static_cast<int>(s.u.size()) != s.grid.n_nodes()) {
        throw std::invalid_argument("similarity state sample count mismatch");
    }
}

class Rk4 {
public:
    void step(SimilarityState& s, double dt) {
        const std::size_t n = s.size();
        similarity_rhs(s, k1u_, k1v_);
        stage(s, 0.5 * dt, k1u_, k1v_);
        similarity_rhs(tmp_, k2u_, k2v_);
        stage(s, 0.5 * dt, k2u_, k2v_);
        similarity_rhs(tmp_, k3u_, k3v_);
        stage(s, dt, k3u_, k3v_);
        similarity_rhs(tmp_, k4u_, k4v_);
        const double w = dt / 6.0;
        for (std::size_t i = 0; i < n; ++i) {
            s.u[i] += w * (k1u_[i] + 2.0 * (k2u_[i] + k3u_[i]) + k4u_[i]);
            s.utau[i] += w * (k1v_[i] + 2.0 * (k2v_[i] + k3v_[i]) + k4v_[i]);
        }
        s.u[0] = 0.0;
        s.utau[0] = 0.0;
        s.tau += dt;
    }

private:
    void stage(const SimilarityState& s, double h, const std::vector<double>& du, const std::vector<double>& dv) {
        tmp_.grid = s.grid;
        tmp_.tau = s.tau;
        tmp_.u.resize(s.size());
        tmp_.utau.resize(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            tmp_.u[i] = s.u[i] + h * du[i];
            tmp_.utau[i] = s.utau[i] + h * dv[i];
        }
    }

    SimilarityState tmp_;
    std::vector<double> k1u_, k1v_, k2u_, k2v_, k3u_, k3v_, k4u_, k4v_;
};

bool finite(const SimilarityState& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s.u[i]) || !std::isfinite(s.utau[i])) return false;
    }
    return true;
}

double drift_at(const SimilarityState& s, const ProfileTable& target, double rho) {
    const FieldState f = s.as_field();
    return field_value(f, rho) - target(rho);
}

}  // namespace

void SimilarityConfig::validate() const {
    if (!(T_guess > 0.0)) throw std::invalid_argument("T_guess must be positive");
    if (!(rho_max > 1.5)) throw std::invalid_argument("rho_max must exceed 1.5");
    if (n_cells < 16) throw std::invalid_argument("similarity grid needs at least 16 cells");
    if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("cfl must lie in (0, 1]");
    if (std::isnan(dtau)) throw std::invalid_argument("dtau must be a number");
}

double SimilarityConfig::step() const {
    if (dtau > 0.0) return dtau;
    return cfl * (rho_max / n_cells) / (rho_max + 1.0);
}

FieldState SimilarityState::as_field() const { return FieldState::on_grid(grid, tau, u, utau); }

SimilarityState similarity_from_profile(const SelfSimilarProfile& p, const SimilarityConfig& cfg, double tau) {
    SimilarityState s = empty_state(cfg, tau);
    const ProfileTable f = sample_profile(p, s.grid.nodes());
    s.u = f.f();
    s.u[0] = 0.0;
    return s;
}

SimilarityState similarity_from_table(const ProfileTable& f, const SimilarityConfig& cfg, double tau) {
    SimilarityState s = empty_state(cfg, tau);
    if (f.front() > 0.0 || f.back() < cfg.rho_max * (1.0 - 1e-12)) {
        throw std::invalid_argument("profile table does not cover [0, rho_max]");
    }
    for (std::size_t i = 1; i < s.size(); ++i) s.u[i] = f(std::min(s.rho(i), f.back()));
    return s;
}

SimilarityState gauge_orbit(const SelfSimilarProfile& p, double epsilon, double tau, const SimilarityConfig& cfg) {
    SimilarityState s = empty_state(cfg, tau);
    const double eta = epsilon * std::exp(tau);
    if (!(1.0 + eta > 0.0)) throw std::invalid_argument("gauge orbit has left the admissible range");
    std::vector<double> x = s.grid.nodes();
    for (double& v : x) v /= 1.0 + eta;
    const ProfileTable f = sample_profile(p, x);
    for (std::size_t i = 1; i < s.size(); ++i) {
        s.u[i] = f.f()[i];
        s.utau[i] = -f.df()[i] * x[i] * eta / (1.0 + eta);
    }
    return s;
}

SimilarityState to_similarity(const FieldState& state, const SimilarityConfig& cfg) {
    cfg.validate();
    validate(state);
    const double d = cfg.T_guess - state.t;
    if (!(d > 0.0)) throw std::invalid_argument("similarity map needs t < T_guess");
    if (d * cfg.rho_max > state.r_max() * (1.0 + 1e-12)) {
        throw std::invalid_argument("similarity window exceeds the physical grid");
    }
    SimilarityState s = empty_state(cfg, -std::log(d));
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double r = std::min(d * s.rho(i), state.r_max());
        s.u[i] = field_value(state, r);
        s.utau[i] = d * field_rate(state, r);
    }
    const std::vector<double> rho = s.grid.nodes();
    const std::vector<double> du = radial_derivative(rho, s.u);
    for (std::size_t i = 1; i < s.size(); ++i) s.utau[i] -= rho[i] * du[i];
    return s;
}

void similarity_rhs(const SimilarityState& s, std::vector<double>& du, std::vector<double>& dv) {
    const std::size_t n = s.size();
    du.resize(n);
    dv.resize(n);
    const double h = s.grid.spacing;
    const double inv_h = 1.0 / h, inv_h2 = inv_h * inv_h;
    const auto& u = s.u;
    const auto& p = s.utau;
    du[0] = 0.0;
    dv[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double rho = s.rho(i);
        double ur, urr;
        if (rho < 1.0 - 2.0 * h && i + 1 < n) {
            ur = 0.5 * (u[i + 1] - u[i - 1]) * inv_h;
            urr = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
        } else {
            ur = 0.5 * (3.0 * u[i] - 4.0 * u[i - 1] + u[i - 2]) * inv_h;
            urr = (2.0 * u[i] - 5.0 * u[i - 1] + 4.0 * u[i - 2] - u[i - 3]) * inv_h2;
        }
        // odd reflection supplies the ghost value at i = 1
        const double p2 = i >= 2 ? p[i - 2] : -p[1];
        const double pr = 0.5 * (3.0 * p[i] - 4.0 * p[i - 1] + p2) * inv_h;
        const double inv2 = 1.0 / (rho * rho);
        du[i] = p[i];
        dv[i] = -p[i] - 2.0 * rho * pr + (1.0 - rho * rho) * (urr + 2.0 * ur / rho) - 2.0 * u[i] * inv2 -
                sin_remainder(2.0 * u[i]) * inv2;
    }
}

SimilarityState evolve_similarity(SimilarityState state, double tau_end, const SimilarityConfig& cfg,
                                  const SimilarityObserver& observer) {
    cfg.validate();
    require_compatible(state, cfg);
    if (!(tau_end >= state.tau)) throw std::invalid_argument("tau_end precedes the state");
    const double dt_max = cfg.step();
    Rk4 rk;
    while (state.tau < tau_end) {
        double dt = dt_max;
        bool lands = false;
        if (state.tau + dt >= tau_end - 1e-9 * dt) {
            dt = tau_end - state.tau;
            lands = true;
        }
        rk.step(state, dt);
        if (lands) state.tau = tau_end;
        if (!finite(state)) {
            std::ostringstream os;
            os << "non-finite similarity field at tau = " << state.tau << " (h = " << state.grid.spacing
               << ", dtau = " << dt_max << ")";
            throw InstabilityAbort(os.str());
        }
        if (observer && !observer(state)) break;
    }
    return state;
}

double profile_distance(const SimilarityState& state, const ProfileTable& target, Interval window) {
    if (!(window.lo >= 0.0 && window.hi > window.lo)) throw std::invalid_argument("invalid distance window");
    if (window.hi > state.grid.r_max * (1.0 + 1e-12) || window.lo < target.front() ||
        window.hi > target.back() * (1.0 + 1e-12)) {
        throw std::invalid_argument("distance window exceeds a table");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double x = state.rho(i);
        if (x < window.lo || x > window.hi) continue;
        d = std::max(d, std::abs(state.u[i] - target(std::min(x, target.back()))));
    }
    return d;
}

GaugeFit fit_gauge(const SimilarityState& state, const ProfileTable& target, Interval window) {
    if (!(window.lo >= 0.0 && window.hi > window.lo) || window.hi > state.grid.r_max) {
        throw std::invalid_argument("invalid gauge window");
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i < state.size(); ++i) {
        if (state.rho(i) >= window.lo && state.rho(i) <= window.hi) idx.push_back(i);
    }
    if (idx.size() < 4) throw std::invalid_argument("gauge window holds too few nodes");
    // Gauss-Newton on eta for u ~ f(rho / (1 + eta))
    double eta = 0.0, res = 0.0;
    for (int it = 0; it < 30; ++it) {
        double jj = 0.0, jr = 0.0;
        res = 0.0;
        for (std::size_t i : idx) {
            const double x = state.rho(i) / (1.0 + eta);
            if (x > target.back()) throw std::invalid_argument("gauge fit left the target table");
            const double r = state.u[i] - target(x);
            const double j = -target.slope(x) * x / (1.0 + eta);
            jj += j * j;
            jr += j * r;
            res += r * r;
        }
        if (jj == 0.0) break;
        const double step = jr / jj;
        eta += step;
        if (!(1.0 + eta > 0.0)) throw NumericalError("gauge fit diverged");
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(eta))) break;
    }
    res = 0.0;
    for (std::size_t i : idx) {
        const double r = state.u[i] - target(state.rho(i) / (1.0 + eta));
        res = std::max(res, std::abs(r));
    }
    return {eta * std::exp(-state.tau), eta, res};
}

GaugeTuneResult gauge_tune(const SimilarityRun& run, Interval bracket, const ProfileTable& target, double probe_rho,
                           int max_iterations) {
    if (!(bracket.hi > bracket.lo)) throw std::invalid_argument("gauge bracket must satisfy lo < hi");
    GaugeTuneResult out;
    auto eval = [&](double p, GaugeFit& fit) {
        const SimilarityState s = run(p);
        fit = fit_gauge(s, target);
        out.history.emplace_back(p, fit.epsilon);
        const double tol = 1e-6 * std::exp(-s.tau);
        return std::pair{drift_at(s, target, probe_rho), std::abs(fit.epsilon) < tol};
    };
    double lo = bracket.lo, hi = bracket.hi;
    GaugeFit flo, fhi;
    auto [dlo, okl] = eval(lo, flo);
    if (okl) return {lo, flo, 0, true, out.history};
    auto [dhi, okh] = eval(hi, fhi);
    if (okh) return {hi, fhi, 0, true, out.history};
    if ((dlo > 0.0) == (dhi > 0.0)) {
        throw BracketError("gauge drift has the same sign at both ends of the bracket");
    }
    out.parameter = std::abs(flo.epsilon) < std::abs(fhi.epsilon) ? lo : hi;
    out.fit = std::abs(flo.epsilon) < std::abs(fhi.epsilon) ? flo : fhi;
    for (int it = 1; it <= max_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        GaugeFit fm;
        auto [dm, ok] = eval(mid, fm);
        out.iterations = it;
        if (std::abs(fm.epsilon) < std::abs(out.fit.epsilon)) {
            out.parameter = mid;
            out.fit = fm;
        }
        if (ok) {
            out.parameter = mid;
            out.fit = fm;
            out.converged = true;
            break;
        }
        if ((dm > 0.0) == (dlo > 0.0)) {
            lo = mid;
            dlo = dm;
        } else {
            hi = mid;
        }
    }
    return out;
}

}  // namespace wavemaps
