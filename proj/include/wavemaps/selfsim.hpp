#pragma once

#include "wavemaps/radial_core.hpp"

#include <optional>
#include <span>
#include <vector>

namespace wavemaps {

/// Settings shared by the two-point shooters.
struct ShootConfig {
    /// Distance of the series launch points from the singular endpoints.
    double rho_start = 1e-4;
    /// Matching abscissa.
    double rho_fit = 0.5;
    /// Relative tolerance of the adaptive integrator.
    double ode_tol = 1e-12;
    /// Target for the sup-norm of the matching mismatch.
    double root_tol = 1e-10;
    /// Optional search intervals for the origin slope a and the light-cone slope b.
    std::optional<Interval> a_bracket;
    std::optional<Interval> b_bracket;
    /// Node count of the resampled interior table.
    int table_nodes = 4097;

    /// Throws std::invalid_argument on out-of-range settings.
    void validate() const;
};

/// Value and slope of a trajectory at the fitting point.
struct ShotResult {
    double f = 0.0;
    double df = 0.0;
    /// Crossings of pi/2 observed along the shot.
    int crossings = 0;
};

/// Regular self-similar profile with index n (number of crossings of pi/2 on [0,1)).
struct SelfSimilarProfile {
    int n = 0;
    double a = 0.0;  ///< slope at the origin
    double b = 0.0;  ///< slope at the light cone, f'(1)
    ProfileTable interior;
    ProfileTable exterior;  ///< empty until extend_exterior
    double c = 0.0;         ///< large-rho limit
    double d = 0.0;         ///< 1/rho coefficient
    double e = 0.0;         ///< 1/rho^2 coefficient
    double exterior_fit_residual = 0.0;
    double mismatch = 0.0;
    int crossings = 0;
    ShootConfig config;

    bool has_exterior() const { return !exterior.empty(); }
};

/// Point on a local series solution: abscissa, value, slope.
struct SeriesPoint {
    double rho;
    double f;
    double df;
};

/// Origin series f = a r + c3 r^3 + c5 r^5.
double origin_cubic_coefficient(double a);
double origin_quintic_coefficient(double a);
SeriesPoint origin_series(double a, double rho);

/// Light-cone series in s = rho - 1: pi/2 + b s - (b/2) s^2 + (b/6) s^3 - b(b^2-1)/18 s^4.
double lightcone_quadratic_coefficient(double b);
SeriesPoint lightcone_series(double b, double rho);

/// Right-hand side of the profile ODE: returns f''.
double profile_second_derivative(double rho, double f, double df);

/// Launch abscissa used at the origin for slope a.
double origin_launch_point(double a, const ShootConfig& cfg);

ShotResult integrate_from_origin(double a, const ShootConfig& cfg);
ShotResult integrate_from_lightcone(double b, const ShootConfig& cfg);

/// Solve the two-point problem for the n-th profile.
SelfSimilarProfile find_profile(int n, const ShootConfig& cfg = {});

/// Values and slopes of the profile with parameters (a, b) at ascending
/// abscissae in [0, rho_end], re-integrating from both endpoints.
ProfileTable sample_profile(const SelfSimilarProfile& p, std::span<const double> rho);

/// Same samples from a single trajectory launched at the origin with slope a, so
/// the values are smooth in rho (no matching seam). Abscissae must lie in [0, 1).
ProfileTable sample_origin_branch(const SelfSimilarProfile& p, std::span<const double> rho, double rel_tol);

/// Uniform resampling on [0, rho_max] with the given node count.
ProfileTable uniform_profile(const SelfSimilarProfile& p, double rho_max, int nodes);

/// Continue the profile past the light cone and fit its large-rho tail.
SelfSimilarProfile extend_exterior(SelfSimilarProfile p, double rho_max);

/// Seed values (a_n, |b_n|) for n <= 4, used to open the search brackets.
std::optional<std::pair<double, double>> reference_parameters(int n);

}  // namespace wavemaps
