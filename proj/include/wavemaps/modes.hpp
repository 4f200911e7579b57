#pragma once

#include "wavemaps/radial_core.hpp"
#include "wavemaps/selfsim.hpp"

#include <span>
#include <utility>
#include <vector>

namespace wavemaps {

/// Eigenfunction of the linearised similarity equation around a profile.
struct ModeProfile {
    double lambda = 0.0;
    int n = 0;  ///< background index
    double background_a = 0.0;
    double background_b = 0.0;
    ShootConfig config;
    /// v and v' on [0, rho_max], normalised to v(1) = 1.
    ProfileTable v;
};

struct SpectrumReport {
    int n = 0;
    /// Positive eigenvalues in descending order.
    std::vector<double> eigenvalues;
    /// Log-derivative mismatch at the fitting point over the scan.
    ProfileTable mismatch_curve;
    Interval range;
};

/// Shot state at the fitting point. The solution is carried in scaled Pruefer
/// form v = exp(log_amplitude) sin(theta), rho v' = exp(log_amplitude) cos(theta).
struct ModeShot {
    double theta = 0.0;
    double log_amplitude = 0.0;
    double rho = 1.0;

    double v() const;
    double dv() const;
    /// v'/v
    double log_derivative() const;
};

/// Regular indicial exponent at the origin (root of alpha(alpha-1) = 2).
double origin_mode_exponent();
/// Both light-cone exponents {0, 1 - lambda}; only the first is admissible.
std::pair<double, double> lightcone_mode_exponents(double lambda);

/// Coefficients of the regular light-cone series v = 1 + C s + D s^2 + E s^3, s = rho - 1.
double lightcone_mode_slope(double lambda);
double lightcone_mode_curvature(double lambda);
double lightcone_mode_cubic(double lambda, double b);

/// Origin series v = rho^2 (1 + k4 rho^2 + k6 rho^4).
double origin_mode_k4(double lambda, double a);
double origin_mode_k6(double lambda, double a);

/// Potential 2 cos(2f) / rho^2.
double mode_potential(double f, double rho);

/// Pointwise residual -(1-rho^2) v'' + 2 lambda rho v' + lambda(lambda-1) v + V v.
double mode_equation_residual(double lambda, double rho, double v, double dv, double d2v, double f);

ModeShot mode_shoot_origin(double lambda, const SelfSimilarProfile& background, const ShootConfig& cfg);
ModeShot mode_shoot_lightcone(double lambda, const SelfSimilarProfile& background, const ShootConfig& cfg);

/// sin(theta_left - theta_right) at the fitting point: continuous in lambda,
/// zero exactly at eigenvalues.
double matching_function(double lambda, const SelfSimilarProfile& background, const ShootConfig& cfg);
/// (v'/v)_left - (v'/v)_right at the fitting point.
double log_derivative_mismatch(double lambda, const SelfSimilarProfile& background, const ShootConfig& cfg);

/// (0.1, 1.5 * 10^(n+1)].
Interval default_lambda_range(int n);

/// Scan the range for sign changes of the matching function and polish each root.
SpectrumReport find_eigenvalues(const SelfSimilarProfile& background, Interval lambda_range,
                                const ShootConfig& cfg);

/// Eigenfunction on a uniform grid of [0, 1].
ModeProfile eigenfunction(const SelfSimilarProfile& background, double lambda, int nodes = 2049);

/// Continue an eigenfunction past the light cone to rho_max.
ModeProfile extend_mode(const ModeProfile& mode, double rho_max);

/// Second-order finite-difference residual of the mode equation at lambda = 1
/// for w = rho^2 f' sampled on a uniform grid with the given cell count.
double gauge_mode_check(const SelfSimilarProfile& background, int cells = 4096,
                        Interval window = {0.05, 0.95});

/// Same residual for arbitrary uniformly sampled w and background f.
double gauge_mode_residual(std::span<const double> rho, std::span<const double> w,
                           std::span<const double> f, Interval window);

}  // namespace wavemaps
