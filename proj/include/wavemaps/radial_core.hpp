#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace wavemaps {

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Uniform grid on [0, r_max] with nodes i*spacing, i = 0..n_cells.
struct RadialGrid {
    double r_max = 0.0;
    int n_cells = 0;
    double spacing = 0.0;

    int n_nodes() const { return n_cells + 1; }
    double node(int i) const { return i * spacing; }
    std::vector<double> nodes() const;
};

/// Throws std::invalid_argument unless r_max > 0 and n_cells >= 8.
RadialGrid make_uniform_grid(double r_max, int n_cells);

/// Radial Cauchy data at time t.
///
/// Node coordinates are stored explicitly so that refined meshes (piecewise
/// uniform, finer towards the origin) share the same representation as
/// uniform grids. Node 0 is always the origin.
struct FieldState {
    std::vector<double> r;
    double t = 0.0;
    std::vector<double> u;
    std::vector<double> ut;

    static FieldState on_grid(const RadialGrid& grid, double t, std::vector<double> u,
                              std::vector<double> ut);

    std::size_t size() const { return r.size(); }
    double r_max() const { return r.back(); }
    bool is_finite() const;
    bool regular_at_origin() const { return !u.empty() && u.front() == 0.0; }
};

/// Structural checks: matching sizes, r[0] = 0, strictly increasing nodes,
/// finite samples. Throws InvalidState.
void validate(const FieldState& state);

/// Value of u (and of u_t) at an arbitrary radius by 4-point Lagrange
/// interpolation on the state nodes, using odd reflection at the origin.
double field_value(const FieldState& state, double r);
double field_rate(const FieldState& state, double r);

/// Sampled function with cubic interpolation.
class ProfileTable {
public:
    ProfileTable() = default;
    ProfileTable(std::vector<double> x, std::vector<double> f, std::vector<double> df = {});

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& f() const { return f_; }
    const std::vector<double>& df() const { return df_; }
    bool has_derivative() const { return !df_.empty(); }
    std::size_t size() const { return x_.size(); }
    bool empty() const { return x_.empty(); }
    double front() const { return x_.front(); }
    double back() const { return x_.back(); }
    Interval range() const { return {x_.front(), x_.back()}; }

    /// Cubic interpolation of the values; throws std::out_of_range outside the range.
    double operator()(double x) const;
    /// Slope: interpolated stored slopes if present, else the derivative of
    /// the local cubic.
    double slope(double x) const;

private:
    std::size_t stencil_start(double x) const;

    std::vector<double> x_;
    std::vector<double> f_;
    std::vector<double> df_;
};

double interpolate(const ProfileTable& table, double x);

/// CSV with header "x,f" or "x,f,df", 17 significant digits. Reading accepts any
/// two or three column names (the third column is the slope).
void write_csv(const ProfileTable& table, std::ostream& out);
ProfileTable read_csv(std::istream& in);
void save_csv(const ProfileTable& table, const std::string& path);
ProfileTable load_csv(const std::string& path);

struct EnergyReport {
    double total = 0.0;
    double kinetic = 0.0;
    double gradient = 0.0;
    double potential = 0.0;
    double r_cutoff = 0.0;
    /// False when the state violates u(0) = 0; the numbers are still the
    /// functional evaluated on the samples.
    bool regular_origin = true;
};

/// Energy 1/2 * int_0^rc (r^2 u_t^2 + r^2 u_r^2 + 2 sin^2 u) dr.
EnergyReport energy(const FieldState& state, double r_cutoff);

/// Nearest m with u(r_max) ~ m*pi; throws NonClassifiable outside a 0.1 band.
int classify_degree(const FieldState& state);

/// Fourth-order first derivative on a piecewise-uniform mesh (one-sided
/// near the ends of each uniform run).
std::vector<double> radial_derivative(std::span<const double> r, std::span<const double> u);

/// Composite Simpson integral of sampled values over [r.front(), upper].
/// Uniform runs are integrated separately; a partial final cell is handled
/// by Gauss-Legendre on the local cubic.
double integrate_samples(std::span<const double> r, std::span<const double> values, double upper);

/// Maximal uniform runs as inclusive node index ranges; neighbouring runs
/// share their boundary node.
struct UniformRun {
    std::size_t begin;
    std::size_t end;
    double spacing;
};
std::vector<UniformRun> uniform_runs(std::span<const double> r);

/// 4-point Lagrange interpolation on arbitrary abscissae xs[0..3].
double lagrange4(const double* xs, const double* ys, double x);
double lagrange4_derivative(const double* xs, const double* ys, double x);

}  // namespace wavemaps
