#include "wavemaps/selfsim.hpp"

#include "wavemaps/errors.hpp"
#include "wavemaps/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace wavemaps {

namespace {

constexpr double half_pi = std::numbers::pi / 2.0;
constexpr double blown_level = 10.0;

using State2 = ode::State<2>;

void profile_rhs(double rho, const State2& y, State2& dy) {
    dy[0] = y[1];
    dy[1] = profile_second_derivative(rho, y[0], y[1]);
}

ode::Options shot_options(const ShootConfig& cfg, double first_step) {
    ode::Options opt;
    opt.rel_tol = cfg.ode_tol;
    opt.abs_tol = cfg.ode_tol * 1e-2;
    opt.first_step = first_step;
    return opt;
}

// Counts sign changes of f - pi/2 along accepted steps.
struct CrossingCounter {
    int count = 0;
    bool started = false;
    bool above = false;

    void observe(double f) {
        if (f == half_pi) return;
        bool now = f > half_pi;
        if (started && now != above) ++count;
        above = now;
        started = true;
    }
};

struct StopShot {};

// Crossings of pi/2 of the origin shot on [launch, rho_end], stopping early
// once the trajectory leaves the band |f - pi/2| <= blown_level.
int origin_crossings(double a, double rho_end, const ShootConfig& cfg) {
    const double r0 = origin_launch_point(a, cfg);
    SeriesPoint p = origin_series(a, r0);
    CrossingCounter counter;
    try {
        ode::integrate<2>(profile_rhs, State2{p.f, p.df}, r0, rho_end, shot_options(cfg, 0.01 * r0),
                          [&](double, const State2& y) {
                              counter.observe(y[0]);
                              if (std::abs(y[0] - half_pi) > blown_level) throw StopShot{};
                          });
    } catch (const StopShot&) {
    }
    return counter.count;
}

double max_abs(const std::array<double, 2>& v) { return std::max(std::abs(v[0]), std::abs(v[1])); }

constexpr std::array<std::pair<double, double>, 5> reference_table{{
    {2.0, 1.0},
    {21.757413, 0.305664},
    {234.50147, 0.0932163},
    {2522.0683, 0.0284312},
    {27113.388, 0.0086717},
}};

}  // namespace

void ShootConfig::validate() const {
    if (!(rho_start > 0.0 && rho_start <= 1e-3)) {
        throw std::invalid_argument("rho_start must lie in (0, 1e-3]");
    }
    if (!(rho_fit >= 0.3 && rho_fit <= 0.7)) throw std::invalid_argument("rho_fit must lie in [0.3, 0.7]");
    if (!(ode_tol > 0.0 && ode_tol <= 1e-6)) throw std::invalid_argument("ode_tol must lie in (0, 1e-6]");
    if (!(root_tol > 0.0 && root_tol <= 1e-6)) throw std::invalid_argument("root_tol must lie in (0, 1e-6]");
    if (a_bracket && !(a_bracket->lo > 0.0 && a_bracket->hi > a_bracket->lo)) {
        throw std::invalid_argument("a bracket must satisfy 0 < lo < hi");
    }
    if (b_bracket && !(b_bracket->hi > b_bracket->lo)) {
        throw std::invalid_argument("b bracket must satisfy lo < hi");
    }
    if (table_nodes < 1024) throw std::invalid_argument("table_nodes must be at least 1024");
}

double origin_cubic_coefficient(double a) { return a / 5.0 - 2.0 * a * a * a / 15.0; }

double origin_quintic_coefficient(double a) {
    const double a2 = a * a;
    return a * (a2 * a2 - 3.0 * a2 + 3.0) / 35.0;
}

SeriesPoint origin_series(double a, double rho) {
    const double c3 = origin_cubic_coefficient(a);
    const double c5 = origin_quintic_coefficient(a);
    const double r2 = rho * rho;
    return {rho, rho * (a + r2 * (c3 + r2 * c5)), a + r2 * (3.0 * c3 + 5.0 * c5 * r2)};
}

double lightcone_quadratic_coefficient(double b) { return -b / 2.0; }

SeriesPoint lightcone_series(double b, double rho) {
    const double s = rho - 1.0;
    const double e2 = -b / 2.0;
    const double e3 = b / 6.0;
    const double e4 = -b * (b * b - 1.0) / 18.0;
    const double f = half_pi + s * (b + s * (e2 + s * (e3 + s * e4)));
    const double df = b + s * (2.0 * e2 + s * (3.0 * e3 + s * 4.0 * e4));
    return {rho, f, df};
}

double profile_second_derivative(double rho, double f, double df) {
    return -2.0 * df / rho + std::sin(2.0 * f) / (rho * rho * (1.0 - rho * rho));
}

double origin_launch_point(double a, const ShootConfig& cfg) {
    const double scale = std::abs(a);
    return scale > 0.0 ? std::min(cfg.rho_start, 1e-3 / scale) : cfg.rho_start;
}

ShotResult integrate_from_origin(double a, const ShootConfig& cfg) {
    cfg.validate();
    if (a == 0.0) return {0.0, 0.0, 0};
    const double r0 = origin_launch_point(a, cfg);
    const SeriesPoint p = origin_series(a, r0);
    CrossingCounter counter;
    State2 y = ode::integrate<2>(profile_rhs, State2{p.f, p.df}, r0, cfg.rho_fit,
                                 shot_options(cfg, 0.01 * r0), [&](double rho, const State2& s) {
                                     counter.observe(s[0]);
                                     if (std::abs(s[0]) > blown_level) {
                                         throw BlownShot("origin shot left |f| <= 10", rho);
                                     }
                                 });
    return {y[0], y[1], counter.count};
}

ShotResult integrate_from_lightcone(double b, const ShootConfig& cfg) {
    cfg.validate();
    const double r0 = 1.0 - cfg.rho_start;
    const SeriesPoint p = lightcone_series(b, r0);
    CrossingCounter counter;
    State2 y = ode::integrate<2>(profile_rhs, State2{p.f, p.df}, r0, cfg.rho_fit,
                                 shot_options(cfg, 0.01 * cfg.rho_start),
                                 [&](double rho, const State2& s) {
                                     counter.observe(s[0]);
                                     if (std::abs(s[0]) > blown_level) {
                                         throw BlownShot("light-cone shot left |f| <= 10", rho);
                                     }
                                 });
    return {y[0], y[1], counter.count};
}

std::optional<std::pair<double, double>> reference_parameters(int n) {
    if (n < 0 || n >= static_cast<int>(reference_table.size())) return std::nullopt;
    return reference_table[static_cast<std::size_t>(n)];
}

SelfSimilarProfile find_profile(int n, const ShootConfig& cfg) {
    cfg.validate();
    if (n < 0) throw std::invalid_argument("profile index must be non-negative");

    // Bracket a_n by the change of the crossing count from n to n + 1.
    constexpr double count_end = 1.0 - 1e-6;
    Interval bracket;
    if (cfg.a_bracket) {
        bracket = *cfg.a_bracket;
    } else if (auto ref = reference_parameters(n)) {
        bracket = {0.8 * ref->first, 1.2 * ref->first};
    } else {
        double lo = 0.5;
        double hi = lo;
        while (origin_crossings(hi, count_end, cfg) <= n) {
            lo = hi;
            hi *= 1.5;
            if (hi > 1e12) throw ShootingFailure("no a bracket found below 1e12", hi, 0.0, 0.0);
        }
        bracket = {lo, hi};
    }
    const int count_lo = origin_crossings(bracket.lo, count_end, cfg);
    const int count_hi = origin_crossings(bracket.hi, count_end, cfg);
    if (count_lo > n || count_hi < n + 1) {
        std::ostringstream msg;
        msg << "a bracket [" << bracket.lo << ", " << bracket.hi << "] does not enclose a_" << n
            << " (crossing counts " << count_lo << ", " << count_hi << ")";
        throw ShootingFailure(msg.str(), bracket.lo, 0.0, 0.0);
    }
    double lo = bracket.lo, hi = bracket.hi;
    while ((hi - lo) > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (origin_crossings(mid, count_end, cfg) <= n) lo = mid; else hi = mid;
    }
    double a = 0.5 * (lo + hi);

    double b;
    if (cfg.b_bracket) {
        b = 0.5 * (cfg.b_bracket->lo + cfg.b_bracket->hi);
    } else if (auto ref = reference_parameters(n)) {
        b = (n % 2 == 0 ? 1.0 : -1.0) * ref->second;
    } else {
        const double r0 = origin_launch_point(a, cfg);
        const SeriesPoint p = origin_series(a, r0);
        State2 y = ode::integrate<2>(profile_rhs, State2{p.f, p.df}, r0, 1.0 - 1e-3,
                                     shot_options(cfg, 0.01 * r0));
        b = (half_pi - y[0]) / 1e-3;
    }

    auto residual = [&](double aa, double bb) {
        ShotResult l = integrate_from_origin(aa, cfg);
        ShotResult r = integrate_from_lightcone(bb, cfg);
        return std::array<double, 2>{l.f - r.f, l.df - r.df};
    };

    std::array<double, 2> res = residual(a, b);
    double norm = max_abs(res);
    for (int iter = 0; iter < 60 && norm > cfg.root_tol; ++iter) {
        const double da = 1e-7 * a;
        const double db = 1e-7 * std::max(std::abs(b), 1e-3);
        ShotResult l0 = integrate_from_origin(a, cfg), l1 = integrate_from_origin(a + da, cfg);
        ShotResult r0 = integrate_from_lightcone(b, cfg), r1 = integrate_from_lightcone(b + db, cfg);
        const double j00 = (l1.f - l0.f) / da, j10 = (l1.df - l0.df) / da;
        const double j01 = -(r1.f - r0.f) / db, j11 = -(r1.df - r0.df) / db;
        const double det = j00 * j11 - j01 * j10;
        if (det == 0.0 || !std::isfinite(det)) break;
        const double step_a = -(j11 * res[0] - j01 * res[1]) / det;
        const double step_b = -(-j10 * res[0] + j00 * res[1]) / det;
        double damping = 1.0;
        bool improved = false;
        while (damping > 1e-6) {
            const double ta = a + damping * step_a, tb = b + damping * step_b;
            if (ta > 0.0) {
                try {
                    auto tr = residual(ta, tb);
                    if (max_abs(tr) < norm) {
                        a = ta;
                        b = tb;
                        res = tr;
                        norm = max_abs(tr);
                        improved = true;
                        break;
                    }
                } catch (const BlownShot&) {
                }
            }
            damping *= 0.5;
        }
        if (!improved) break;
    }
    if (norm > cfg.root_tol) {
        std::ostringstream msg;
        msg << "shooting for n = " << n << " stalled with mismatch " << norm;
        throw ShootingFailure(msg.str(), a, b, norm);
    }

    SelfSimilarProfile p;
    p.n = n;
    p.a = a;
    p.b = b;
    p.mismatch = norm;
    p.config = cfg;
    p.crossings = integrate_from_origin(a, cfg).crossings + integrate_from_lightcone(b, cfg).crossings;
    if (p.crossings != n) {
        std::ostringstream msg;
        msg << "profile converged with " << p.crossings << " crossings, expected " << n;
        throw ShootingFailure(msg.str(), a, b, norm);
    }
    p.interior = uniform_profile(p, 1.0, cfg.table_nodes);
    return p;
}

ProfileTable sample_profile(const SelfSimilarProfile& p, std::span<const double> rho) {
    const ShootConfig& cfg = p.config;
    const std::size_t n = rho.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (!(rho[i] > rho[i - 1])) throw std::invalid_argument("sample abscissae must increase");
    }
    if (n > 0 && rho.front() < 0.0) throw std::invalid_argument("sample abscissae must be non-negative");
    std::vector<double> f(n), df(n);
    const double r0 = origin_launch_point(p.a, cfg);
    const double s0 = cfg.rho_start;

    std::vector<std::size_t> left, right, outer;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rho[i];
        if (x <= r0) {
            SeriesPoint sp = origin_series(p.a, x);
            f[i] = sp.f;
            df[i] = sp.df;
        } else if (std::abs(x - 1.0) <= s0) {
            SeriesPoint sp = lightcone_series(p.b, x);
            f[i] = sp.f;
            df[i] = sp.df;
        } else if (x <= cfg.rho_fit) {
            left.push_back(i);
        } else if (x < 1.0) {
            right.push_back(i);
        } else {
            outer.push_back(i);
        }
    }
    auto run = [&](const std::vector<std::size_t>& idx, double start, SeriesPoint launch, bool reverse,
                   double first) {
        if (idx.empty()) return;
        std::vector<double> xs{start};
        if (reverse) {
            for (auto it = idx.rbegin(); it != idx.rend(); ++it) xs.push_back(rho[*it]);
        } else {
            for (std::size_t i : idx) xs.push_back(rho[i]);
        }
        auto states = ode::sample<2>(profile_rhs, State2{launch.f, launch.df}, xs,
                                     shot_options(cfg, first));
        for (std::size_t k = 1; k < states.size(); ++k) {
            const std::size_t i = reverse ? idx[idx.size() - k] : idx[k - 1];
            f[i] = states[k][0];
            df[i] = states[k][1];
        }
    };
    run(left, r0, origin_series(p.a, r0), false, 0.01 * r0);
    run(right, 1.0 - s0, lightcone_series(p.b, 1.0 - s0), true, 0.01 * s0);
    if (!outer.empty()) {
        const double start = 1.0 + s0;
        std::vector<double> xs{start};
        for (std::size_t i : outer) xs.push_back(rho[i]);
        SeriesPoint launch = lightcone_series(p.b, start);
        auto states = ode::sample<2>(profile_rhs, State2{launch.f, launch.df}, xs,
                                     shot_options(cfg, 0.01 * s0));
        for (std::size_t k = 1; k < states.size(); ++k) {
            f[outer[k - 1]] = states[k][0];
            df[outer[k - 1]] = states[k][1];
        }
    }
    return ProfileTable(std::vector<double>(rho.begin(), rho.end()), std::move(f), std::move(df));
}

ProfileTable sample_origin_branch(const SelfSimilarProfile& p, std::span<const double> rho, double rel_tol) {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("sample tolerance must be positive");
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (rho[i] < 0.0 || rho[i] >= 1.0) throw std::invalid_argument("origin branch samples must lie in [0, 1)");
        if (i > 0 && !(rho[i] > rho[i - 1])) throw std::invalid_argument("sample abscissae must increase");
    }
    ShootConfig cfg = p.config;
    cfg.ode_tol = rel_tol;
    const double r0 = origin_launch_point(p.a, cfg);
    std::vector<double> f(rho.size()), df(rho.size());
    std::vector<double> xs{r0};
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (rho[i] <= r0) {
            const SeriesPoint sp = origin_series(p.a, rho[i]);
            f[i] = sp.f;
            df[i] = sp.df;
        } else {
            xs.push_back(rho[i]);
            idx.push_back(i);
        }
    }
    if (!idx.empty()) {
        const SeriesPoint launch = origin_series(p.a, r0);
        auto states = ode::sample<2>(profile_rhs, State2{launch.f, launch.df}, xs, shot_options(cfg, 0.01 * r0));
        for (std::size_t k = 1; k < states.size(); ++k) {
            f[idx[k - 1]] = states[k][0];
            df[idx[k - 1]] = states[k][1];
        }
    }
    return ProfileTable(std::vector<double>(rho.begin(), rho.end()), std::move(f), std::move(df));
}

ProfileTable uniform_profile(const SelfSimilarProfile& p, double rho_max, int nodes) {
    if (!(rho_max > 0.0) || nodes < 4) throw std::invalid_argument("uniform_profile: bad grid");
    std::vector<double> xs(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) xs[static_cast<std::size_t>(i)] = rho_max * i / (nodes - 1);
    xs.back() = rho_max;
    return sample_profile(p, xs);
}

SelfSimilarProfile extend_exterior(SelfSimilarProfile p, double rho_max) {
    if (!(rho_max >= 3.0)) throw std::invalid_argument("exterior extension needs rho_max >= 3");

    std::vector<double> xs;
    const double h = 1.0 / 1024.0;
    const double uniform_end = std::min(rho_max, 10.0);
    const int m = static_cast<int>(std::ceil((uniform_end - 1.0) / h));
    for (int i = 0; i <= m; ++i) xs.push_back(1.0 + (uniform_end - 1.0) * i / m);
    while (xs.back() < rho_max) {
        const double next = xs.back() * (1.0 + 1.0 / 512.0);
        xs.push_back(next >= rho_max || rho_max - next < 1e-9 * rho_max ? rho_max : next);
    }
    ProfileTable table = sample_profile(p, xs);

    // Least squares of c + d/rho + e/rho^2 over the last decade up to R.
    const double R = std::max(rho_max, 1000.0);
    const double lo = R / 10.0;
    constexpr int fit_points = 201;
    std::vector<double> fx(fit_points);
    for (int i = 0; i < fit_points; ++i) {
        fx[static_cast<std::size_t>(i)] = lo * std::pow(10.0, static_cast<double>(i) / (fit_points - 1));
    }
    fx.back() = R;
    ProfileTable fit = sample_profile(p, fx);
    double ata[3][3] = {}, atb[3] = {};
    for (int i = 0; i < fit_points; ++i) {
        const double z = lo / fx[static_cast<std::size_t>(i)];
        const double basis[3] = {1.0, z, z * z};
        for (int r = 0; r < 3; ++r) {
            atb[r] += basis[r] * fit.f()[static_cast<std::size_t>(i)];
            for (int c = 0; c < 3; ++c) ata[r][c] += basis[r] * basis[c];
        }
    }
    // Gaussian elimination on the 3x3 normal equations
    for (int k = 0; k < 3; ++k) {
        for (int r = k + 1; r < 3; ++r) {
            const double fct = ata[r][k] / ata[k][k];
            for (int c = k; c < 3; ++c) ata[r][c] -= fct * ata[k][c];
            atb[r] -= fct * atb[k];
        }
    }
    double coef[3];
    for (int k = 2; k >= 0; --k) {
        double s = atb[k];
        for (int c = k + 1; c < 3; ++c) s -= ata[k][c] * coef[c];
        coef[k] = s / ata[k][k];
    }
    double worst = 0.0;
    for (int i = 0; i < fit_points; ++i) {
        const double z = lo / fx[static_cast<std::size_t>(i)];
        const double model = coef[0] + z * (coef[1] + z * coef[2]);
        worst = std::max(worst, std::abs(model - fit.f()[static_cast<std::size_t>(i)]));
    }
    p.exterior = std::move(table);
    p.c = coef[0];
    p.d = coef[1] * lo;
    p.e = coef[2] * lo * lo;
    p.exterior_fit_residual = worst;
    return p;
}

}  // namespace wavemaps
