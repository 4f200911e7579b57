#include "wavemaps/modes.hpp"

#include "wavemaps/errors.hpp"
#include "wavemaps/ode.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace wavemaps {

namespace {

using State4 = ode::State<4>;

// Background profile co-integrated with the scaled Pruefer form of the mode
// equation, v = A sin(theta), rho v' = A cos(theta). The last component is
// log(A / rho^2), which stays bounded near the origin.
struct PrueferRhs {
    double lambda;

    void operator()(double rho, const State4& y, State4& dy) const {
        const double one_m = 1.0 - rho * rho;
        const double p = 2.0 * lambda * rho / one_m;
        const double q = (lambda * (lambda - 1.0) + mode_potential(y[0], rho)) / one_m;
        const double s = std::sin(y[2]), c = std::cos(y[2]);
        const double inv = 1.0 / rho;
        dy[0] = y[1];
        dy[1] = profile_second_derivative(rho, y[0], y[1]);
        dy[2] = c * c * inv - s * c * (inv + p) - rho * q * s * s;
        dy[3] = s * c * (inv + rho * q) + c * c * (inv + p) - 2.0 * inv;
    }
};

// Background with the mode equation in direct form, used past the light cone.
struct DirectRhs {
    double lambda;

    void operator()(double rho, const State4& y, State4& dy) const {
        const double one_m = 1.0 - rho * rho;
        dy[0] = y[1];
        dy[1] = profile_second_derivative(rho, y[0], y[1]);
        dy[2] = y[3];
        dy[3] = (2.0 * lambda * rho * y[3] + (lambda * (lambda - 1.0) + mode_potential(y[0], rho)) * y[2]) / one_m;
    }
};

double origin_launch(double lambda, const SelfSimilarProfile& bg, const ShootConfig& cfg) {
    return std::min(origin_launch_point(bg.a, cfg), 1e-3 / std::max(lambda, 1.0));
}

double lightcone_offset(double lambda, const ShootConfig& cfg) {
    return std::min(cfg.rho_start, 1e-3 / std::max(lambda, 1.0));
}

struct SeriesMode {
    double v;
    double dv;
};

SeriesMode origin_mode_series(double lambda, double a, double rho) {
    const double k4 = origin_mode_k4(lambda, a), k6 = origin_mode_k6(lambda, a);
    const double r2 = rho * rho;
    return {r2 * (1.0 + r2 * (k4 + r2 * k6)), rho * (2.0 + r2 * (4.0 * k4 + 6.0 * k6 * r2))};
}

SeriesMode lightcone_mode_series(double lambda, double b, double rho) {
    const double s = rho - 1.0;
    const double c = lightcone_mode_slope(lambda), d = lightcone_mode_curvature(lambda);
    const double e = lightcone_mode_cubic(lambda, b);
    return {1.0 + s * (c + s * (d + s * e)), c + s * (2.0 * d + 3.0 * e * s)};
}

ode::Options mode_options(double tol, double first_step) {
    ode::Options opt;
    opt.rel_tol = tol;
    opt.abs_tol = tol * 1e-8;
    opt.first_step = first_step;
    return opt;
}

void require_background(const SelfSimilarProfile& bg) {
    if (bg.interior.empty() || bg.interior.front() > 0.0 || bg.interior.back() < 1.0) {
        throw std::invalid_argument("background profile table must cover [0, 1]");
    }
}

State4 pruefer_state(SeriesPoint f, SeriesMode m, double rho) {
    return {f.f, f.df, std::atan2(m.v, rho * m.dv), std::log(std::hypot(m.v, rho * m.dv)) - 2.0 * std::log(rho)};
}

double log_amplitude(const State4& y, double rho) { return y[3] + 2.0 * std::log(rho); }

State4 origin_state(double lambda, const SelfSimilarProfile& bg, double r0) {
    return pruefer_state(origin_series(bg.a, r0), origin_mode_series(lambda, bg.a, r0), r0);
}

State4 lightcone_state(double lambda, const SelfSimilarProfile& bg, double rho) {
    return pruefer_state(lightcone_series(bg.b, rho), lightcone_mode_series(lambda, bg.b, rho), rho);
}

ModeShot shoot_left(double lambda, const SelfSimilarProfile& bg, const ShootConfig& cfg, double tol) {
    const double r0 = origin_launch(lambda, bg, cfg);
    State4 y = ode::integrate<4>(PrueferRhs{lambda}, origin_state(lambda, bg, r0), r0, cfg.rho_fit,
                                 mode_options(tol, 0.01 * r0));
    return {y[2], log_amplitude(y, cfg.rho_fit), cfg.rho_fit};
}

ModeShot shoot_right(double lambda, const SelfSimilarProfile& bg, const ShootConfig& cfg, double tol) {
    const double s0 = lightcone_offset(lambda, cfg);
    State4 y = ode::integrate<4>(PrueferRhs{lambda}, lightcone_state(lambda, bg, 1.0 - s0), 1.0 - s0,
                                 cfg.rho_fit, mode_options(tol, 0.01 * s0));
    return {y[2], log_amplitude(y, cfg.rho_fit), cfg.rho_fit};
}

}  // namespace

double ModeShot::v() const { return std::exp(log_amplitude) * std::sin(theta); }
double ModeShot::dv() const { return std::exp(log_amplitude) * std::cos(theta) / rho; }
double ModeShot::log_derivative() const { return std::cos(theta) / (rho * std::sin(theta)); }

double origin_mode_exponent() { return 2.0; }

std::pair<double, double> lightcone_mode_exponents(double lambda) { return {0.0, 1.0 - lambda}; }

double lightcone_mode_slope(double lambda) {
    if (lambda == 0.0) throw std::invalid_argument("light-cone series is singular at lambda = 0");
    return (2.0 + lambda * (1.0 - lambda)) / (2.0 * lambda);
}

double lightcone_mode_curvature(double lambda) {
    if (lambda == 0.0 || lambda == -1.0) throw std::invalid_argument("light-cone series is singular");
    const double l2 = lambda * lambda;
    return (l2 * l2 - 5.0 * l2 - 8.0 * lambda + 4.0) / (8.0 * lambda * (lambda + 1.0));
}

double lightcone_mode_cubic(double lambda, double b) {
    if (lambda == 0.0 || lambda == -1.0 || lambda == -2.0) {
        throw std::invalid_argument("light-cone series is singular");
    }
    const double l = lambda, l2 = l * l, l3 = l2 * l;
    const double num = 32.0 * b * b * l2 + 32.0 * b * b * l + l3 * l3 + 3.0 * l3 * l2 - 5.0 * l2 * l2 -
                       39.0 * l3 - 68.0 * l2 + 12.0 * l + 32.0;
    return -num / (48.0 * l * (l + 1.0) * (l + 2.0));
}

double origin_mode_k4(double lambda, double a) {
    return (lambda * lambda + 3.0 * lambda + 2.0 - 4.0 * a * a) / 10.0;
}

double origin_mode_k6(double lambda, double a) {
    const double a2 = a * a, l = lambda, l2 = l * l;
    return (40.0 * a2 * a2 - 8.0 * a2 * l2 - 40.0 * a2 * l - 72.0 * a2 + l2 * l2 + 10.0 * l2 * l + 35.0 * l2 +
            50.0 * l + 24.0) /
           280.0;
}

double mode_potential(double f, double rho) { return 2.0 * std::cos(2.0 * f) / (rho * rho); }

double mode_equation_residual(double lambda, double rho, double v, double dv, double d2v, double f) {
    return -(1.0 - rho * rho) * d2v + 2.0 * lambda * rho * dv + lambda * (lambda - 1.0) * v +
           mode_potential(f, rho) * v;
}

ModeShot mode_shoot_origin(double lambda, const SelfSimilarProfile& background, const ShootConfig& cfg) {
    cfg.validate();
    require_background(background);
    return shoot_left(lambda, background, cfg, cfg.ode_tol);
}

ModeShot mode_shoot_lightcone(double lambda, const SelfSimilarProfile& background, const ShootConfig& cfg) {
    cfg.validate();
    require_background(background);
    if (lambda == 0.0) throw std::invalid_argument("lambda = 0 is not admissible at the light cone");
    return shoot_right(lambda, background, cfg, cfg.ode_tol);
}

double matching_function(double lambda, const SelfSimilarProfile& background, const ShootConfig& cfg) {
    const ModeShot l = mode_shoot_origin(lambda, background, cfg);
    const ModeShot r = mode_shoot_lightcone(lambda, background, cfg);
    return std::sin(l.theta - r.theta);
}

double log_derivative_mismatch(double lambda, const SelfSimilarProfile& background, const ShootConfig& cfg) {
    const ModeShot l = mode_shoot_origin(lambda, background, cfg);
    const ModeShot r = mode_shoot_lightcone(lambda, background, cfg);
    return l.log_derivative() - r.log_derivative();
}

Interval default_lambda_range(int n) {
    if (n < 0) throw std::invalid_argument("profile index must be non-negative");
    return {0.1, 1.5 * std::pow(10.0, n + 1)};
}

SpectrumReport find_eigenvalues(const SelfSimilarProfile& background, Interval lambda_range,
                                const ShootConfig& cfg) {
    cfg.validate();
    require_background(background);
    if (!(lambda_range.lo > 0.0 && lambda_range.hi > lambda_range.lo)) {
        throw std::invalid_argument("lambda range must satisfy 0 < lo < hi");
    }
    const double scan_tol = std::max(cfg.ode_tol, 1e-10);

    std::vector<double> grid;
    for (double l = lambda_range.lo; l < lambda_range.hi;) {
        grid.push_back(l);
        l += l < 2.5 ? 0.05 : 0.02 * l;
    }
    if (lambda_range.hi - grid.back() < 1e-9 * lambda_range.hi) grid.back() = lambda_range.hi;
    else grid.push_back(lambda_range.hi);

    std::vector<double> w(grid.size()), m(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const ModeShot l = shoot_left(grid[i], background, cfg, scan_tol);
        const ModeShot r = shoot_right(grid[i], background, cfg, scan_tol);
        w[i] = std::sin(l.theta - r.theta);
        m[i] = l.log_derivative() - r.log_derivative();
    }

    auto polish_fn = [&](double l) {
        const ModeShot a = shoot_left(l, background, cfg, cfg.ode_tol);
        const ModeShot b = shoot_right(l, background, cfg, cfg.ode_tol);
        return std::sin(a.theta - b.theta);
    };
    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (w[i] == 0.0) {
            roots.push_back(grid[i]);
            continue;
        }
        if (w[i] * w[i + 1] >= 0.0) continue;
        double lo = grid[i], hi = grid[i + 1];
        double flo = polish_fn(lo), fhi = polish_fn(hi);
        if (flo * fhi > 0.0) {
            // The tight-tolerance values disagree with the scan: either a root sits
            // on a grid node or two roots share the cell.
            const double mid = 0.5 * (lo + hi);
            const double fmid = polish_fn(mid);
            if (flo * fmid <= 0.0) hi = mid, fhi = fmid;
            else if (fmid * fhi <= 0.0) lo = mid, flo = fmid;
            else {
                roots.push_back(std::abs(flo) < std::abs(fhi) ? lo : hi);
                continue;
            }
        }
        std::uintmax_t iters = 200;
        const double tol = cfg.root_tol;
        auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol * std::max(1.0, std::abs(a)); };
        auto bracket = boost::math::tools::toms748_solve(polish_fn, lo, hi, flo, fhi, stop, iters);
        roots.push_back(0.5 * (bracket.first + bracket.second));
    }
    if (w.back() == 0.0) roots.push_back(grid.back());
    std::sort(roots.begin(), roots.end(), std::greater<>());

    SpectrumReport rep;
    rep.n = background.n;
    rep.eigenvalues = std::move(roots);
    rep.mismatch_curve = ProfileTable(grid, m);
    rep.range = lambda_range;
    return rep;
}

ModeProfile eigenfunction(const SelfSimilarProfile& background, double lambda, int nodes) {
    const ShootConfig& cfg = background.config;
    require_background(background);
    if (nodes < 16) throw std::invalid_argument("eigenfunction needs at least 16 nodes");
    if (!(lambda > 0.0)) throw std::invalid_argument("eigenfunction needs lambda > 0");

    std::vector<double> x(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) x[static_cast<std::size_t>(i)] = static_cast<double>(i) / (nodes - 1);
    x.back() = 1.0;
    std::vector<double> v(x.size()), dv(x.size());

    const double r0 = origin_launch(lambda, background, cfg);
    const double s0 = lightcone_offset(lambda, cfg);
    const double fit = cfg.rho_fit;

    std::vector<double> left_x{r0}, right_x{1.0 - s0};
    std::vector<std::size_t> left_i, right_i;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > r0 && x[i] < fit) {
            left_x.push_back(x[i]);
            left_i.push_back(i);
        }
    }
    left_x.push_back(fit);
    for (std::size_t k = x.size(); k-- > 0;) {
        if (x[k] < 1.0 - s0 && x[k] > fit) {
            right_x.push_back(x[k]);
            right_i.push_back(k);
        }
    }
    right_x.push_back(fit);

    auto left = ode::sample<4>(PrueferRhs{lambda}, origin_state(lambda, background, r0), left_x,
                               mode_options(cfg.ode_tol, 0.01 * r0));
    auto right = ode::sample<4>(PrueferRhs{lambda}, lightcone_state(lambda, background, 1.0 - s0), right_x,
                                mode_options(cfg.ode_tol, 0.01 * s0));
    const State4& lf = left.back();
    const State4& rf = right.back();
    const double sign = std::cos(lf[2] - rf[2]) >= 0.0 ? 1.0 : -1.0;
    const double shift = rf[3] - lf[3];

    for (std::size_t k = 0; k < left_i.size(); ++k) {
        const State4& s = left[k + 1];
        const double amp = sign * std::exp(log_amplitude(s, x[left_i[k]]) + shift);
        v[left_i[k]] = amp * std::sin(s[2]);
        dv[left_i[k]] = amp * std::cos(s[2]) / x[left_i[k]];
    }
    for (std::size_t k = 0; k < right_i.size(); ++k) {
        const State4& s = right[k + 1];
        const double amp = std::exp(log_amplitude(s, x[right_i[k]]));
        v[right_i[k]] = amp * std::sin(s[2]);
        dv[right_i[k]] = amp * std::cos(s[2]) / x[right_i[k]];
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= r0) {
            const SeriesMode m = origin_mode_series(lambda, background.a, x[i]);
            const double scale = sign * std::exp(shift);
            v[i] = scale * m.v;
            dv[i] = scale * m.dv;
        } else if (x[i] >= 1.0 - s0) {
            const SeriesMode m = lightcone_mode_series(lambda, background.b, x[i]);
            v[i] = m.v;
            dv[i] = m.dv;
        } else if (x[i] == fit) {
            const double amp = std::exp(log_amplitude(rf, fit));
            v[i] = amp * std::sin(rf[2]);
            dv[i] = amp * std::cos(rf[2]) / fit;
        }
    }
    v.back() = 1.0;

    ModeProfile mp;
    mp.lambda = lambda;
    mp.n = background.n;
    mp.background_a = background.a;
    mp.background_b = background.b;
    mp.config = cfg;
    mp.v = ProfileTable(std::move(x), std::move(v), std::move(dv));
    return mp;
}

ModeProfile extend_mode(const ModeProfile& mode, double rho_max) {
    if (!(rho_max >= 1.0)) throw std::invalid_argument("mode extension needs rho_max >= 1");
    const auto& x = mode.v.x();
    if (x.back() >= rho_max) return mode;
    const double h = x[1] - x[0];

    std::vector<double> nx, nv, ndv;
    for (std::size_t i = 0; i < x.size() && x[i] <= 1.0; ++i) {
        nx.push_back(x[i]);
        nv.push_back(mode.v.f()[i]);
        ndv.push_back(mode.v.df()[i]);
    }
    const double s0 = lightcone_offset(mode.lambda, mode.config);
    std::vector<double> outer{1.0 + s0};
    for (int k = 1;; ++k) {
        const double r = 1.0 + k * h;
        if (r >= rho_max - 1e-12 * rho_max) break;
        if (r > 1.0 + s0) outer.push_back(r);
        else {
            const SeriesMode m = lightcone_mode_series(mode.lambda, mode.background_b, r);
            nx.push_back(r);
            nv.push_back(m.v);
            ndv.push_back(m.dv);
        }
    }
    outer.push_back(rho_max);
    const SeriesPoint f = lightcone_series(mode.background_b, 1.0 + s0);
    const SeriesMode m = lightcone_mode_series(mode.lambda, mode.background_b, 1.0 + s0);
    ode::Options opt = mode_options(mode.config.ode_tol, 0.01 * s0);
    std::vector<State4> states;
    try {
        states = ode::sample<4>(DirectRhs{mode.lambda}, State4{f.f, f.df, m.v, m.dv}, outer, opt);
    } catch (const IntegrationFailure& e) {
        throw IntegrationFailure(std::string("mode extension failed: ") + e.what());
    }
    for (std::size_t k = 1; k < states.size(); ++k) {
        if (std::abs(states[k][2]) > 1e250) throw IntegrationFailure("mode extension overflowed");
        nx.push_back(outer[k]);
        nv.push_back(states[k][2]);
        ndv.push_back(states[k][3]);
    }
    ModeProfile out = mode;
    out.v = ProfileTable(std::move(nx), std::move(nv), std::move(ndv));
    return out;
}

double gauge_mode_residual(std::span<const double> rho, std::span<const double> w, std::span<const double> f,
                           Interval window) {
    if (rho.size() != w.size() || rho.size() != f.size() || rho.size() < 3) {
        throw std::invalid_argument("gauge residual: inconsistent samples");
    }
    const double h = rho[1] - rho[0];
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < rho.size(); ++i) {
        const double r = rho[i];
        if (r < window.lo - 1e-12 || r > window.hi + 1e-12) continue;
        const double d2 = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h);
        const double d1 = (w[i + 1] - w[i - 1]) / (2.0 * h);
        worst = std::max(worst, std::abs(mode_equation_residual(1.0, r, w[i], d1, d2, f[i])));
    }
    return worst;
}

double gauge_mode_check(const SelfSimilarProfile& background, int cells, Interval window) {
    if (cells < 16) throw std::invalid_argument("gauge check needs at least 16 cells");
    if (!(window.lo > 0.0 && window.hi < 1.0 && window.hi > window.lo)) {
        throw std::invalid_argument("gauge check window must lie inside (0, 1)");
    }
    const double h = 1.0 / cells;
    const int first = std::max(1, static_cast<int>(std::floor(window.lo / h)) - 1);
    const int last = std::min(cells - 1, static_cast<int>(std::ceil(window.hi / h)) + 1);
    std::vector<double> rho;
    for (int i = first; i <= last; ++i) rho.push_back(i * h);
    ProfileTable t = sample_origin_branch(background, rho, 1e-14);
    std::vector<double> w(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) w[i] = rho[i] * rho[i] * t.df()[i];
    return gauge_mode_residual(rho, w, t.f(), window);
}

}  // namespace wavemaps
