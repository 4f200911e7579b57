#include "wavemaps/radial_core.hpp"

#include "wavemaps/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace wavemaps {

namespace {

double lagrange_n(const double* xs, const double* ys, int m, double x) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
        double w = 1.0;
        for (int k = 0; k < m; ++k) {
            if (k != j) w *= (x - xs[k]) / (xs[j] - xs[k]);
        }
        sum += w * ys[j];
    }
    return sum;
}

double lagrange_n_derivative(const double* xs, const double* ys, int m, double x) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
        double denom = 1.0;
        for (int k = 0; k < m; ++k) {
            if (k != j) denom *= xs[j] - xs[k];
        }
        double numer = 0.0;
        for (int skip = 0; skip < m; ++skip) {
            if (skip == j) continue;
            double prod = 1.0;
            for (int k = 0; k < m; ++k) {
                if (k != j && k != skip) prod *= x - xs[k];
            }
            numer += prod;
        }
        sum += ys[j] * numer / denom;
    }
    return sum;
}

// Four-node stencil around r with odd reflection through the origin.
struct Stencil {
    double xs[4];
    double ys[4];
};

Stencil odd_stencil(const std::vector<double>& r, const std::vector<double>& y, double x) {
    const std::size_t n = r.size();
    auto it = std::upper_bound(r.begin(), r.end(), x);
    std::ptrdiff_t k = std::clamp<std::ptrdiff_t>(it - r.begin() - 1, 0, static_cast<std::ptrdiff_t>(n) - 2);
    std::ptrdiff_t start = std::min<std::ptrdiff_t>(k - 1, static_cast<std::ptrdiff_t>(n) - 4);
    Stencil s{};
    for (int j = 0; j < 4; ++j) {
        std::ptrdiff_t idx = start + j;
        if (idx < 0) {
            s.xs[j] = -r[static_cast<std::size_t>(-idx)];
            s.ys[j] = -y[static_cast<std::size_t>(-idx)];
        } else {
            s.xs[j] = r[static_cast<std::size_t>(idx)];
            s.ys[j] = y[static_cast<std::size_t>(idx)];
        }
    }
    return s;
}

double sample_at(const FieldState& state, const std::vector<double>& y, double x) {
    if (state.r.size() < 4) throw std::invalid_argument("field state needs at least 4 nodes");
    if (!(x >= 0.0 && x <= state.r.back())) {
        throw std::out_of_range("radius " + std::to_string(x) + " outside [0, " +
                                std::to_string(state.r.back()) + "]");
    }
    auto it = std::lower_bound(state.r.begin(), state.r.end(), x);
    if (it != state.r.end() && *it == x) return y[static_cast<std::size_t>(it - state.r.begin())];
    Stencil s = odd_stencil(state.r, y, x);
    return lagrange4(s.xs, s.ys, x);
}

void simpson_run(const std::vector<double>& v, std::size_t b, std::size_t m, double h, double& acc) {
    // m cells starting at node b
    if (m == 0) return;
    if (m == 1) {
        acc += 0.5 * h * (v[b] + v[b + 1]);
        return;
    }
    std::size_t even = (m % 2 == 0) ? m : m - 3;
    double s = 0.0;
    for (std::size_t i = 0; i < even; i += 2) {
        s += v[b + i] + 4.0 * v[b + i + 1] + v[b + i + 2];
    }
    acc += s * h / 3.0;
    if (even != m) {
        std::size_t j = b + even;
        acc += 3.0 * h / 8.0 * (v[j] + 3.0 * v[j + 1] + 3.0 * v[j + 2] + v[j + 3]);
    }
}

}  // namespace

std::vector<double> RadialGrid::nodes() const {
    std::vector<double> out(static_cast<std::size_t>(n_nodes()));
    for (int i = 0; i < n_nodes(); ++i) out[static_cast<std::size_t>(i)] = node(i);
    return out;
}

RadialGrid make_uniform_grid(double r_max, int n_cells) {
    if (!(r_max > 0.0) || !std::isfinite(r_max)) {
        throw std::invalid_argument("grid radius must be positive, got " + std::to_string(r_max));
    }
    if (n_cells < 8) {
        throw std::invalid_argument("grid needs at least 8 cells, got " + std::to_string(n_cells));
    }
    return RadialGrid{r_max, n_cells, r_max / n_cells};
}

FieldState FieldState::on_grid(const RadialGrid& grid, double t, std::vector<double> u,
                               std::vector<double> ut) {
    FieldState s;
    s.r = grid.nodes();
    s.t = t;
    s.u = std::move(u);
    s.ut = std::move(ut);
    if (s.u.size() != s.r.size() || s.ut.size() != s.r.size()) {
        throw std::invalid_argument("field samples do not match grid size");
    }
    return s;
}

bool FieldState::is_finite() const {
    auto fin = [](double x) { return std::isfinite(x); };
    return std::all_of(u.begin(), u.end(), fin) && std::all_of(ut.begin(), ut.end(), fin);
}

void validate(const FieldState& state) {
    const std::size_t n = state.r.size();
    if (n < 4 || state.u.size() != n || state.ut.size() != n) {
        throw InvalidState("field state has inconsistent sizes");
    }
    if (state.r.front() != 0.0) throw InvalidState("first node must be the origin");
    for (std::size_t i = 1; i < n; ++i) {
        if (!(state.r[i] > state.r[i - 1])) throw InvalidState("nodes must be strictly increasing");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(state.u[i]) || !std::isfinite(state.ut[i])) {
            std::ostringstream msg;
            msg << "non-finite sample at node " << i << " (r = " << state.r[i] << ")";
            throw InvalidState(msg.str());
        }
    }
}

double field_value(const FieldState& state, double r) { return sample_at(state, state.u, r); }
double field_rate(const FieldState& state, double r) { return sample_at(state, state.ut, r); }

double lagrange4(const double* xs, const double* ys, double x) { return lagrange_n(xs, ys, 4, x); }

double lagrange4_derivative(const double* xs, const double* ys, double x) {
    return lagrange_n_derivative(xs, ys, 4, x);
}

ProfileTable::ProfileTable(std::vector<double> x, std::vector<double> f, std::vector<double> df)
    : x_(std::move(x)), f_(std::move(f)), df_(std::move(df)) {
    if (x_.size() < 2) throw std::invalid_argument("profile table needs at least 2 samples");
    if (f_.size() != x_.size()) throw std::invalid_argument("profile table value count mismatch");
    if (!df_.empty() && df_.size() != x_.size()) {
        throw std::invalid_argument("profile table slope count mismatch");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
        if (!(x_[i] > x_[i - 1])) {
            throw std::invalid_argument("profile table abscissae must be strictly increasing");
        }
    }
}

std::size_t ProfileTable::stencil_start(double x) const {
    if (!(x >= x_.front() && x <= x_.back())) {
        std::ostringstream msg;
        msg << "query " << x << " outside table range [" << x_.front() << ", " << x_.back() << "]";
        throw std::out_of_range(msg.str());
    }
    const std::size_t n = x_.size();
    if (n <= 4) return 0;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin() - 1, 0));
    k = std::min(k, n - 2);
    std::size_t start = k == 0 ? 0 : k - 1;
    return std::min(start, n - 4);
}

double ProfileTable::operator()(double x) const {
    std::size_t s = stencil_start(x);
    auto it = std::lower_bound(x_.begin(), x_.end(), x);
    if (it != x_.end() && *it == x) return f_[static_cast<std::size_t>(it - x_.begin())];
    int m = static_cast<int>(std::min<std::size_t>(4, x_.size()));
    return lagrange_n(&x_[s], &f_[s], m, x);
}

double ProfileTable::slope(double x) const {
    std::size_t s = stencil_start(x);
    int m = static_cast<int>(std::min<std::size_t>(4, x_.size()));
    if (has_derivative()) return lagrange_n(&x_[s], &df_[s], m, x);
    return lagrange_n_derivative(&x_[s], &f_[s], m, x);
}

double interpolate(const ProfileTable& table, double x) { return table(x); }

void write_csv(const ProfileTable& table, std::ostream& out) {
    out << (table.has_derivative() ? "x,f,df\n" : "x,f\n");
    out << std::setprecision(17);
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << table.x()[i] << ',' << table.f()[i];
        if (table.has_derivative()) out << ',' << table.df()[i];
        out << '\n';
    }
}

ProfileTable read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty profile CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> names;
    {
        std::istringstream head(line);
        std::string cell;
        while (std::getline(head, cell, ',')) names.push_back(cell);
    }
    bool named = names.size() == 2 || names.size() == 3;
    for (const std::string& n : names) {
        char* end = nullptr;
        std::strtod(n.c_str(), &end);
        if (n.empty() || end != n.c_str()) named = false;
    }
    if (!named) throw std::invalid_argument("unexpected profile CSV header '" + line + "'");
    const bool with_slope = names.size() == 3;
    std::vector<double> x, f, df;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> cols;
        while (std::getline(row, cell, ',')) {
            try {
                cols.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::invalid_argument("bad number on CSV line " + std::to_string(lineno));
            }
        }
        if (cols.size() != (with_slope ? 3u : 2u)) {
            throw std::invalid_argument("wrong column count on CSV line " + std::to_string(lineno));
        }
        x.push_back(cols[0]);
        f.push_back(cols[1]);
        if (with_slope) df.push_back(cols[2]);
    }
    return ProfileTable(std::move(x), std::move(f), std::move(df));
}

void save_csv(const ProfileTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(table, out);
}

ProfileTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_csv(in);
}

std::vector<UniformRun> uniform_runs(std::span<const double> r) {
    std::vector<UniformRun> runs;
    if (r.size() < 2) return runs;
    std::size_t b = 0;
    double h = r[1] - r[0];
    for (std::size_t i = 2; i < r.size(); ++i) {
        double d = r[i] - r[i - 1];
        if (std::abs(d - h) > 1e-9 * h) {
            runs.push_back({b, i - 1, h});
            b = i - 1;
            h = d;
        }
    }
    runs.push_back({b, r.size() - 1, h});
    return runs;
}

std::vector<double> radial_derivative(std::span<const double> r, std::span<const double> u) {
    if (r.size() != u.size()) throw std::invalid_argument("derivative: size mismatch");
    const std::size_t n = r.size();
    std::vector<double> du(n, 0.0);
    if (n < 2) return du;
    auto runs = uniform_runs(r);
    // Runs are visited from the outside in so that the shared node takes the
    // value from the finer (inner) run.
    for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
        const std::size_t b = it->begin, e = it->end;
        const double h = it->spacing;
        const std::size_t m = e - b;
        if (m < 4) {
            const int m3 = static_cast<int>(std::min<std::size_t>(3, n));
            for (std::size_t i = b; i <= e; ++i) {
                std::size_t lo = std::min(i == 0 ? 0 : i - 1, n - static_cast<std::size_t>(m3));
                du[i] = lagrange_n_derivative(&r[lo], &u[lo], m3, r[i]);
            }
            continue;
        }
        const double c = 1.0 / (12.0 * h);
        for (std::size_t i = b; i <= e; ++i) {
            if (i >= b + 2 && i + 2 <= e) {
                du[i] = (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) * c;
            } else if (i == b) {
                du[i] = (-25.0 * u[i] + 48.0 * u[i + 1] - 36.0 * u[i + 2] + 16.0 * u[i + 3] - 3.0 * u[i + 4]) * c;
            } else if (i == b + 1) {
                du[i] = (-3.0 * u[i - 1] - 10.0 * u[i] + 18.0 * u[i + 1] - 6.0 * u[i + 2] + u[i + 3]) * c;
            } else if (i == e) {
                du[i] = (25.0 * u[i] - 48.0 * u[i - 1] + 36.0 * u[i - 2] - 16.0 * u[i - 3] + 3.0 * u[i - 4]) * c;
            } else {
                du[i] = (3.0 * u[i + 1] + 10.0 * u[i] - 18.0 * u[i - 1] + 6.0 * u[i - 2] - u[i - 3]) * c;
            }
        }
    }
    return du;
}

double integrate_samples(std::span<const double> r, std::span<const double> values, double upper) {
    if (r.size() != values.size()) throw std::invalid_argument("integrate: size mismatch");
    if (r.size() < 4) throw std::invalid_argument("integrate: need at least 4 samples");
    if (upper < r.front()) throw std::invalid_argument("integrate: upper limit below range");
    if (upper > r.back() * (1.0 + 1e-12)) {
        throw std::out_of_range("integrate: upper limit beyond sampled range");
    }
    upper = std::min(upper, r.back());
    std::vector<double> v(values.begin(), values.end());
    double acc = 0.0;
    for (const auto& run : uniform_runs(r)) {
        if (r[run.begin] >= upper) break;
        std::size_t last = run.end;
        while (last > run.begin && r[last] > upper) --last;
        simpson_run(v, run.begin, last - run.begin, run.spacing, acc);
        if (last < run.end && r[last] < upper) {
            // partial cell [r[last], upper] on the local cubic
            const std::size_t n = r.size();
            std::size_t s = last == 0 ? 0 : last - 1;
            s = std::min(s, n - 4);
            const double a = r[last], bnd = upper;
            const double mid = 0.5 * (a + bnd), half = 0.5 * (bnd - a);
            static const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
            static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
            for (int q = 0; q < 3; ++q) {
                acc += half * gw[q] * lagrange_n(&r[s], &v[s], 4, mid + half * gx[q]);
            }
            break;
        }
    }
    return acc;
}

EnergyReport energy(const FieldState& state, double r_cutoff) {
    validate(state);
    if (!(r_cutoff >= 0.0) || r_cutoff > state.r.back() * (1.0 + 1e-12)) {
        throw std::invalid_argument("energy cutoff must lie in [0, r_max]");
    }
    const std::size_t n = state.size();
    auto ur = radial_derivative(state.r, state.u);
    std::vector<double> kin(n), grad(n), pot(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r2 = state.r[i] * state.r[i];
        kin[i] = 0.5 * r2 * state.ut[i] * state.ut[i];
        grad[i] = 0.5 * r2 * ur[i] * ur[i];
        const double s = std::sin(state.u[i]);
        pot[i] = s * s;
    }
    EnergyReport rep;
    rep.r_cutoff = r_cutoff;
    rep.regular_origin = state.regular_at_origin();
    if (r_cutoff == 0.0) return rep;
    rep.kinetic = integrate_samples(state.r, kin, r_cutoff);
    rep.gradient = integrate_samples(state.r, grad, r_cutoff);
    rep.potential = integrate_samples(state.r, pot, r_cutoff);
    rep.total = rep.kinetic + rep.gradient + rep.potential;
    return rep;
}

int classify_degree(const FieldState& state) {
    validate(state);
    const double edge = state.u.back();
    const double m = std::round(edge / std::numbers::pi);
    if (std::abs(edge - m * std::numbers::pi) > 0.1) {
        std::ostringstream msg;
        msg << "boundary value u(r_max) = " << edge << " is not within 0.1 of a multiple of pi";
        throw NonClassifiable(msg.str());
    }
    return static_cast<int>(m);
}

}  // namespace wavemaps
