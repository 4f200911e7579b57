#pragma once

#include "wavemaps/radial_core.hpp"
#include "wavemaps/selfsim.hpp"

#include <vector>

namespace wavemaps {

/// Regular static solution u(r) = u_S(scale * r) sampled in x = ln r.
struct StaticProfile {
    /// x, u and du/dx on a uniform x grid.
    ProfileTable table;
    double scale = 1.0;
    /// Tail u - pi/2 ~ amplitude / sqrt(scale r) * sin(omega ln(scale r) + phase);
    /// NaN when the range does not reach the asymptotic region.
    double amplitude = 0.0;
    double phase = 0.0;
    double tail_fit_residual = 0.0;
    /// Series launch abscissa in x.
    double x_launch = 0.0;
    ShootConfig config;
};

struct NeumannFamily {
    double R = 0.0;
    /// Radii with u'(r_k) = 0, increasing.
    std::vector<double> points;
    /// u_k(r) = u(r_k r / R) on [0, R] with columns r, u, du/dr.
    std::vector<ProfileTable> members;
};

struct BoundStateReport {
    /// Negative eigenvalues, most negative first.
    std::vector<double> eigenvalues;
    double domain_radius = 0.0;
    /// Interior node count of each eigenfunction.
    std::vector<int> node_counts;
};

/// Frequency in ln r of the tail oscillation, sqrt(7)/2.
double tail_log_frequency();

/// Coefficient c of u = X + c X^3 at small X = scale * r.
double pendulum_cubic_coefficient();

/// Characteristic roots of the linearised pendulum at u = 0 ({1, -2}) and at
/// u = pi/2 (real and imaginary parts of the complex pair).
std::pair<double, double> pendulum_roots_at_pole();
std::pair<double, double> pendulum_roots_at_equator();

/// Integrate u'' + u' - sin(2u) = 0 in x = ln r over x_range. The launch sits
/// at scale * r = cfg.rho_start.
StaticProfile integrate_pendulum(Interval x_range, const ShootConfig& cfg = {}, double scale = 1.0,
                                 double nodes_per_unit = 256.0);

/// u and du/dx at x, re-integrated from the nearest stored node.
std::pair<double, double> static_state(const StaticProfile& p, double x);

/// Extrema of the profile in r, from successive zeros of du/dx.
std::vector<double> neumann_points(const StaticProfile& p, int k_max);

/// Truncated finite-energy members built from the first k_max Neumann points.
NeumannFamily neumann_family(const StaticProfile& p, double R, int k_max, int nodes = 1025);

/// Mean log-frequency of the tail from the spacing of the last extrema.
double measured_log_frequency(const StaticProfile& p);

/// Counts over r in the window.
int extrema_count(const StaticProfile& p, Interval r_window);
int equator_crossings(const StaticProfile& p, Interval r_window);

/// Finite-difference residual of the linearised static equation at k^2 = 0
/// for the scaling mode v = r u' on a uniform r grid.
double zero_mode_residual(const StaticProfile& p, int nodes = 4096, Interval r_window = {1.0, 7.0});

/// Nodes of the scaling mode in the window.
int zero_mode_nodes(const StaticProfile& p, Interval r_window);

/// Lowest `count` bound states of -v'' - 2v'/r + 2cos(2u)/r^2 v = k^2 v with a
/// decaying tail imposed at domain_radius. Throws DomainTooSmall when fewer
/// states are resolved.
BoundStateReport bound_states(const StaticProfile& p, double domain_radius, int count);

/// Negative spectrum of the same operator around the k-th truncated member on
/// [0, R] with v'(R) = 0.
BoundStateReport truncated_bound_states(const StaticProfile& p, int k, double R);

}  // namespace wavemaps
