#include "wavemaps/static_maps.hpp"

#include "wavemaps/errors.hpp"
#include "wavemaps/ode.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wavemaps {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double half_pi = pi / 2.0;

using State2 = ode::State<2>;
using State4 = ode::State<4>;

void pendulum_rhs(double, const State2& y, State2& dy) {
    dy[0] = y[1];
    dy[1] = std::sin(2.0 * y[0]) - y[1];
}

// Background pendulum with the Pruefer form of the linearised static equation
// in x = ln r: v = A sin(theta), v_x = A cos(theta).
struct BoundRhs {
    double k2;

    void operator()(double x, const State4& y, State4& dy) const {
        const double q = 2.0 * std::cos(2.0 * y[0]) - k2 * std::exp(2.0 * x);
        const double s = std::sin(y[2]), c = std::cos(y[2]);
        dy[0] = y[1];
        dy[1] = std::sin(2.0 * y[0]) - y[1];
        dy[2] = c * c + s * c - q * s * s;
        dy[3] = s * c * (1.0 + q) - c * c;
    }
};

ode::Options options(const ShootConfig& cfg) {
    ode::Options opt;
    opt.rel_tol = cfg.ode_tol;
    opt.abs_tol = cfg.ode_tol * 1e-4;
    return opt;
}

State2 launch_series(double scale, double x) {
    const double X = scale * std::exp(x);
    const double X2 = X * X;
    const double c3 = pendulum_cubic_coefficient();
    return {X * (1.0 + X2 * (c3 + X2 / 35.0)), X * (1.0 + X2 * (3.0 * c3 + X2 / 7.0))};
}

struct TailFit {
    double amplitude;
    double phase;
    double residual;
};

TailFit fit_tail(const ProfileTable& t, double scale) {
    const double nan = std::nan("");
    const double shift = std::log(scale);
    const double hi = t.back() + shift;
    if (hi < 7.0) return {nan, nan, nan};
    const double lo = std::max(5.0, 0.5 * hi);
    const double w = tail_log_frequency();
    double ss = 0, sc = 0, cc = 0, ys = 0, yc = 0;
    std::vector<double> xs, ys_;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double x = t.x()[i] + shift;
        if (x < lo) continue;
        const double y = std::exp(0.5 * x) * (t.f()[i] - half_pi);
        const double s = std::sin(w * x), c = std::cos(w * x);
        ss += s * s;
        sc += s * c;
        cc += c * c;
        ys += y * s;
        yc += y * c;
        xs.push_back(x);
        ys_.push_back(y);
    }
    if (xs.size() < 50) return {nan, nan, nan};
    const double det = ss * cc - sc * sc;
    const double A = (ys * cc - yc * sc) / det;
    const double B = (yc * ss - ys * sc) / det;
    const double amp = std::hypot(A, B);
    double sq = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys_[i] - A * std::sin(w * xs[i]) - B * std::cos(w * xs[i]);
        sq += r * r;
    }
    return {amp, std::atan2(B, A), std::sqrt(sq / static_cast<double>(xs.size())) / amp};
}

// Zeros of g sampled on the table, polished on the re-integrated profile.
template <class Slope>
std::vector<double> polished_zeros(const ProfileTable& t, const std::vector<double>& g, Slope&& slope,
                                   std::size_t limit) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < t.size() && out.size() < limit; ++i) {
        if (g[i] == 0.0) {
            out.push_back(t.x()[i]);
            continue;
        }
        if (g[i] * g[i + 1] >= 0.0) continue;
        double lo = t.x()[i], hi = t.x()[i + 1];
        double flo = slope(lo), fhi = slope(hi);
        if (flo == 0.0) {
            out.push_back(lo);
            continue;
        }
        if (fhi == 0.0 || flo * fhi > 0.0) {
            out.push_back(fhi == 0.0 || std::abs(fhi) < std::abs(flo) ? hi : lo);
            continue;
        }
        std::uintmax_t iters = 100;
        auto stop = [](double a, double b) { return std::abs(b - a) <= 4e-15 * std::max(1.0, std::abs(a)); };
        auto br = boost::math::tools::toms748_solve(slope, lo, hi, flo, fhi, stop, iters);
        out.push_back(0.5 * (br.first + br.second));
    }
    return out;
}

std::vector<double> extrema_x(const StaticProfile& p, std::size_t limit) {
    return polished_zeros(p.table, p.table.df(), [&](double x) { return static_state(p, x).second; }, limit);
}

int sign_changes_in(const ProfileTable& t, const std::vector<double>& g, Interval r_window) {
    const double lo = std::log(r_window.lo), hi = std::log(r_window.hi);
    int count = 0;
    double prev = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double x = t.x()[i];
        if (x < lo || x > hi || g[i] == 0.0) continue;
        if (prev != 0.0 && (prev > 0.0) != (g[i] > 0.0)) ++count;
        prev = g[i];
    }
    return count;
}

void require_window(const StaticProfile& p, Interval r_window) {
    if (!(r_window.lo > 0.0 && r_window.hi > r_window.lo)) {
        throw std::invalid_argument("radius window must satisfy 0 < lo < hi");
    }
    if (std::log(r_window.hi) > p.table.back()) {
        throw std::invalid_argument("radius window exceeds the profile range");
    }
}

// Left Pruefer state from the launch point, with v = r + q r^3.
State4 left_state(const StaticProfile& p, double k2) {
    const double x0 = p.x_launch;
    const State2 u = launch_series(p.scale, x0);
    const double r = std::exp(x0), r2 = r * r;
    const double q = -(4.0 * p.scale * p.scale + k2) / 10.0;
    const double v = r * (1.0 + q * r2), vx = r * (1.0 + 3.0 * q * r2);
    return {u[0], u[1], std::atan2(v, vx), std::log(std::hypot(v, vx))};
}

State4 shoot_left(const StaticProfile& p, double k2, double x_end) {
    ode::Options opt = options(p.config);
    opt.first_step = 1e-3;
    return ode::integrate<4>(BoundRhs{k2}, left_state(p, k2), p.x_launch, x_end, opt);
}

// Roots of g over k2 in [-k2_max, -k2_min] on a logarithmic grid in |k2|.
template <class G>
std::vector<double> scan_k2(G&& g, double k2_min, double k2_max) {
    const int per_decade = 48;
    const int n = std::max(8, static_cast<int>(std::ceil(per_decade * std::log10(k2_max / k2_min))));
    std::vector<double> grid(static_cast<std::size_t>(n) + 1), values(grid.size());
    for (int i = 0; i <= n; ++i) {
        grid[static_cast<std::size_t>(i)] = -k2_max * std::pow(k2_min / k2_max, static_cast<double>(i) / n);
        values[static_cast<std::size_t>(i)] = g(grid[static_cast<std::size_t>(i)]);
    }
    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (values[i] == 0.0) {
            roots.push_back(grid[i]);
            continue;
        }
        if (values[i] * values[i + 1] >= 0.0) continue;
        std::uintmax_t iters = 200;
        auto stop = [](double a, double b) { return std::abs(b - a) <= 1e-13 * std::abs(a); };
        auto br = boost::math::tools::toms748_solve(g, grid[i], grid[i + 1], values[i], values[i + 1], stop, iters);
        roots.push_back(0.5 * (br.first + br.second));
    }
    return roots;
}

int floor_pi(double theta) { return static_cast<int>(std::floor(theta / pi)); }


// Two-sided Pruefer shooting of the linearised static equation: regular
// launch at the origin, prescribed angle at the outer radius, matched at
// scale * r = 1 (or midway in ln r for small outer radii).
template <class OuterAngle>
class MatchedShooter {
public:
    MatchedShooter(const StaticProfile& p, double outer_radius, OuterAngle outer_angle)
        : p_(p), x_out_(std::log(outer_radius)), outer_angle_(outer_angle) {
        if (x_out_ > p.table.back()) throw std::invalid_argument("outer radius exceeds the profile range");
        const auto [u, ux] = static_state(p, x_out_);
        u_out_ = u;
        ux_out_ = ux;
        x_match_ = -std::log(p.scale);
        if (x_match_ >= x_out_) x_match_ = 0.5 * (p.x_launch + x_out_);
        opt_ = options(p.config);
        opt_.first_step = 1e-3;
    }

    double left(double k2) const { return shoot_left(p_, k2, x_match_)[2]; }

    double right(double k2) const {
        const State4 y0{u_out_, ux_out_, outer_angle_(k2), 0.0};
        return ode::integrate<4>(BoundRhs{k2}, y0, x_out_, x_match_, opt_)[2];
    }

    double matching(double k2) const { return std::sin(left(k2) - right(k2)); }

    /// Zeros of the matched eigenfunction: the angle only crosses multiples
    /// of pi upward in x.
    int nodes(double k2) const {
        return floor_pi(left(k2)) + floor_pi(outer_angle_(k2)) - floor_pi(right(k2));
    }

    /// Eigenvalues with k2 in [-k2_max, -k2_min], most negative first.
    std::vector<double> roots(double k2_min, double k2_max) const {
        std::vector<double> r = scan_k2([this](double k2) { return matching(k2); }, k2_min, k2_max);
        std::sort(r.begin(), r.end());
        return r;
    }

private:
    const StaticProfile& p_;
    double x_out_;
    OuterAngle outer_angle_;
    double u_out_ = 0.0;
    double ux_out_ = 0.0;
    double x_match_ = 0.0;
    ode::Options opt_;
};

}  // namespace

double tail_log_frequency() { return std::sqrt(7.0) / 2.0; }

double pendulum_cubic_coefficient() { return -2.0 / 15.0; }

std::pair<double, double> pendulum_roots_at_pole() {
    // m^2 + m - 2 = 0
    const double disc = std::sqrt(1.0 + 8.0);
    return {(-1.0 + disc) / 2.0, (-1.0 - disc) / 2.0};
}

std::pair<double, double> pendulum_roots_at_equator() {
    // m^2 + m + 2 = 0
    return {-0.5, std::sqrt(8.0 - 1.0) / 2.0};
}

StaticProfile integrate_pendulum(Interval x_range, const ShootConfig& cfg, double scale, double nodes_per_unit) {
    cfg.validate();
    if (!(x_range.hi > x_range.lo)) throw std::invalid_argument("x range must be non-empty");
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
    if (!(nodes_per_unit >= 16.0)) throw std::invalid_argument("need at least 16 nodes per unit of ln r");

    const double x0 = std::log(cfg.rho_start / scale);
    const auto n = static_cast<std::size_t>(std::ceil(x_range.width() * nodes_per_unit));
    std::vector<double> x(n + 1), u(n + 1), du(n + 1);
    for (std::size_t i = 0; i <= n; ++i) x[i] = x_range.lo + x_range.width() * static_cast<double>(i) / n;
    x.back() = x_range.hi;

    std::vector<double> ahead{x0};
    std::size_t first = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        if (x[i] <= x0) {
            const State2 s = launch_series(scale, x[i]);
            u[i] = s[0];
            du[i] = s[1];
            first = i + 1;
        } else {
            ahead.push_back(x[i]);
        }
    }
    if (ahead.size() > 1) {
        ode::Options opt = options(cfg);
        opt.first_step = 1e-3;
        std::vector<State2> states;
        try {
            states = ode::sample<2>(pendulum_rhs, launch_series(scale, x0), ahead, opt);
        } catch (const IntegrationFailure& e) {
            throw IntegrationFailure(std::string("pendulum integration failed: ") + e.what());
        }
        for (std::size_t k = 1; k < states.size(); ++k) {
            u[first + k - 1] = states[k][0];
            du[first + k - 1] = states[k][1];
        }
    }

    StaticProfile p;
    p.table = ProfileTable(std::move(x), std::move(u), std::move(du));
    p.scale = scale;
    p.x_launch = x0;
    p.config = cfg;
    const TailFit fit = fit_tail(p.table, scale);
    p.amplitude = fit.amplitude;
    p.phase = fit.phase;
    p.tail_fit_residual = fit.residual;
    return p;
}

std::pair<double, double> static_state(const StaticProfile& p, double x) {
    if (x <= p.x_launch) {
        const State2 s = launch_series(p.scale, x);
        return {s[0], s[1]};
    }
    const auto& xs = p.table.x();
    if (x > xs.back()) throw std::out_of_range("abscissa beyond the static profile range");
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    State2 y;
    double x_start;
    if (it == xs.begin() || *(it - 1) <= p.x_launch) {
        x_start = p.x_launch;
        y = launch_series(p.scale, x_start);
    } else {
        const auto i = static_cast<std::size_t>(it - xs.begin() - 1);
        x_start = xs[i];
        y = {p.table.f()[i], p.table.df()[i]};
        if (x_start == x) return {y[0], y[1]};
    }
    ode::Options opt = options(p.config);
    y = ode::integrate<2>(pendulum_rhs, y, x_start, x, opt);
    return {y[0], y[1]};
}

std::vector<double> neumann_points(const StaticProfile& p, int k_max) {
    if (k_max < 0) throw std::invalid_argument("k_max must be non-negative");
    if (k_max == 0) return {};
    std::vector<double> x = extrema_x(p, static_cast<std::size_t>(k_max));
    if (static_cast<int>(x.size()) < k_max) {
        throw DomainTooSmall("profile range holds " + std::to_string(x.size()) + " Neumann points, " +
                             std::to_string(k_max) + " requested");
    }
    for (double& v : x) v = std::exp(v);
    return x;
}

NeumannFamily neumann_family(const StaticProfile& p, double R, int k_max, int nodes) {
    if (!(R > 0.0)) throw std::invalid_argument("outer radius must be positive");
    if (nodes < 16) throw std::invalid_argument("need at least 16 nodes per member");
    NeumannFamily fam;
    fam.R = R;
    fam.points = neumann_points(p, k_max);
    for (double rk : fam.points) {
        const double a = rk / R;
        std::vector<double> r(static_cast<std::size_t>(nodes)), u(r.size()), du(r.size());
        for (int i = 0; i < nodes; ++i) r[static_cast<std::size_t>(i)] = R * i / (nodes - 1);
        r.back() = R;
        u[0] = 0.0;
        du[0] = a * p.scale;
        for (std::size_t i = 1; i < r.size(); ++i) {
            const double x = i + 1 == r.size() ? std::log(rk) : std::log(a * r[i]);
            const auto [ui, ux] = static_state(p, x);
            u[i] = ui;
            du[i] = ux / r[i];
        }
        fam.members.emplace_back(std::move(r), std::move(u), std::move(du));
    }
    return fam;
}

double measured_log_frequency(const StaticProfile& p) {
    std::vector<double> ex = extrema_x(p, p.table.size());
    const double shift = std::log(p.scale);
    std::vector<double> tail;
    for (double x : ex) {
        if (x + shift >= 2.0) tail.push_back(x);
    }
    if (tail.size() < 3) throw DomainTooSmall("fewer than three tail extrema in the profile range");
    const double spacing = (tail.back() - tail.front()) / static_cast<double>(tail.size() - 1);
    return pi / spacing;
}

int extrema_count(const StaticProfile& p, Interval r_window) {
    require_window(p, r_window);
    return sign_changes_in(p.table, p.table.df(), r_window);
}

int equator_crossings(const StaticProfile& p, Interval r_window) {
    require_window(p, r_window);
    std::vector<double> g(p.table.f());
    for (double& v : g) v -= half_pi;
    return sign_changes_in(p.table, g, r_window);
}

double zero_mode_residual(const StaticProfile& p, int nodes, Interval r_window) {
    require_window(p, r_window);
    if (nodes < 8) throw std::invalid_argument("need at least 8 nodes");
    const double h = r_window.width() / (nodes - 1);
    std::vector<double> xs(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) xs[static_cast<std::size_t>(i)] = std::log(r_window.lo + i * h);
    const auto [u0, ux0] = static_state(p, xs.front());
    ode::Options opt = options(p.config);
    opt.first_step = 1e-4;
    const std::vector<State2> s = ode::sample<2>(pendulum_rhs, State2{u0, ux0}, xs, opt);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        const double r = r_window.lo + static_cast<double>(i) * h;
        const double vm = s[i - 1][1], v = s[i][1], vp = s[i + 1][1];
        const double d2 = (vp - 2.0 * v + vm) / (h * h);
        const double d1 = (vp - vm) / (2.0 * h);
        const double res = -d2 - 2.0 * d1 / r + 2.0 * std::cos(2.0 * s[i][0]) / (r * r) * v;
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

int zero_mode_nodes(const StaticProfile& p, Interval r_window) {
    require_window(p, r_window);
    const int per_unit = 64;
    const double lo = std::log(r_window.lo), hi = std::log(r_window.hi);
    const int n = std::max(16, static_cast<int>(std::ceil((hi - lo) * per_unit)));
    std::vector<double> xs(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / n;
    const auto [u0, ux0] = static_state(p, lo);
    const std::vector<State2> s = ode::sample<2>(pendulum_rhs, State2{u0, ux0}, xs, options(p.config));
    int count = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        // v = r u'(r) = du/dx
        if (s[i][1] != 0.0 && s[i - 1][1] != 0.0 && (s[i][1] > 0.0) != (s[i - 1][1] > 0.0)) ++count;
    }
    return count;
}

BoundStateReport bound_states(const StaticProfile& p, double domain_radius, int count) {
    if (count < 0) throw std::invalid_argument("count must be non-negative");
    if (!(domain_radius > 1.0 / p.scale)) throw std::invalid_argument("domain radius must exceed the matching radius");
    if (std::log(domain_radius) > p.table.back()) throw std::invalid_argument("domain radius exceeds the profile range");

    BoundStateReport rep;
    rep.domain_radius = domain_radius;
    if (count == 0) return rep;
    // decaying tail v ~ exp(-kappa r) / r
    MatchedShooter shooter(p, domain_radius, [domain_radius](double k2) {
        return std::atan2(1.0, -std::sqrt(-k2) * domain_radius - 1.0);
    });
    const double k2_max = 10.0 * p.scale * p.scale;
    const double k2_min = std::pow(8.0 / domain_radius, 2);
    std::vector<double> roots = k2_min < k2_max ? shooter.roots(k2_min, k2_max) : std::vector<double>{};
    if (static_cast<int>(roots.size()) < count) {
        throw DomainTooSmall("domain radius " + std::to_string(domain_radius) + " resolves " +
                             std::to_string(roots.size()) + " bound states, " + std::to_string(count) +
                             " requested");
    }
    roots.resize(static_cast<std::size_t>(count));
    for (double k2 : roots) rep.node_counts.push_back(shooter.nodes(k2));
    rep.eigenvalues = std::move(roots);
    return rep;
}

BoundStateReport truncated_bound_states(const StaticProfile& p, int k, double R) {
    if (k < 1) throw std::invalid_argument("member index starts at 1");
    if (!(R > 0.0)) throw std::invalid_argument("outer radius must be positive");
    const double rk = neumann_points(p, k).back();
    MatchedShooter shooter(p, rk, [](double) { return pi / 2.0; });

    const double k2_max = 10.0 * p.scale * p.scale;
    const double k2_min = 1e-4 / (rk * rk);
    BoundStateReport rep;
    rep.domain_radius = R;
    const double factor = (rk / R) * (rk / R);
    for (double k2 : shooter.roots(k2_min, k2_max)) {
        rep.eigenvalues.push_back(k2 * factor);
        rep.node_counts.push_back(shooter.nodes(k2));
    }
    return rep;
}

}  // namespace wavemaps
