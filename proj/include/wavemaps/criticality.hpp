#pragma once

#include "wavemaps/cauchy.hpp"
#include "wavemaps/modes.hpp"
#include "wavemaps/selfsim.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace wavemaps {

enum class Outcome { Disperse, Blowup, Undecided };

std::string to_string(Outcome outcome);
Outcome outcome_from_string(const std::string& name);

struct RunClassification {
    Outcome outcome = Outcome::Undecided;
    bool retried = false;
    /// Report of the last run performed.
    BlowupReport report;
    double t_final = 0.0;
};

/// Evolve and classify. An undecided run is repeated once with doubled t_end and
/// halved spacing. InstabilityAbort propagates.
RunClassification classify_run(const InitialDataSpec& spec, const EvolutionConfig& cfg);

/// One-parameter family of initial data: the named scalar of base is set to
/// map(p) (identity when map is empty).
struct FamilySpec {
    InitialDataSpec base;
    std::string parameter = "A";
    double p_lo = 0.0;
    double p_hi = 0.0;
    std::function<double(double)> map;

    InitialDataSpec at(double p) const;
};

struct BisectionStep {
    double p = 0.0;
    Outcome outcome = Outcome::Undecided;
    bool retried = false;
    double t_final = 0.0;
    int max_level = 0;
    long steps = 0;
    /// Blowup-time estimate for collapsing runs, else 0.
    double T_estimate = 0.0;
};

struct BisectionRecord {
    std::string parameter;
    std::vector<BisectionStep> iterations;
    double p_lo = 0.0;
    double p_hi = 0.0;
    double p_star = 0.0;
    double achieved_gap = 0.0;
    double requested_tol = 0.0;
    /// Outcome at the lower end of the bracket (the upper end has the other one).
    Outcome lower_outcome = Outcome::Disperse;
    std::vector<std::string> warnings;

    /// Every Blowup parameter lies on the Blowup side of every Disperse parameter.
    bool monotone() const;
};

/// Classifier used by the bisection driver.
using ParameterClassifier = std::function<RunClassification(double)>;

/// Bisection on an arbitrary classifier; the ends must classify differently
/// (BracketError otherwise). Undecided midpoints count as Blowup with a warning.
BisectionRecord bisect_classifier(const ParameterClassifier& classify, Interval bracket, double rel_tol,
                                  const std::string& parameter = "p", int max_iterations = 200);

/// Bisection over a data family; rel_tol must be at least 1e-12.
BisectionRecord bisect(const FamilySpec& family, double rel_tol, const EvolutionConfig& cfg);

/// Gauge-fitted comparison of a physical state with a self-similar profile:
/// u(t, L rho) ~ sign * f(rho) on rho in [0, extent] with the scale L fitted.
struct ScaleFit {
    double scale = 0.0;
    double sign = 1.0;
    double distance = 0.0;
};

/// Least-squares scale fit on nodes rho_j = extent * j / (nodes - 1); the search
/// covers a factor 4 around f'(0) / |u_r(t, 0)|. Throws std::invalid_argument if
/// u_r(t, 0) = 0.
ScaleFit fit_scale(const FieldState& state, const ProfileTable& target, int nodes = 201, double extent = 1.0);

struct TransientConfig {
    EvolutionConfig evolution;
    /// Offsets p* (1 +- 10^-k) for k = first_decade .. first_decade + decades - 1.
    int first_decade = 5;
    int decades = 6;
    /// Distance to f_1 that defines the transient window.
    double departure_distance = 0.1;
    /// Extra thresholds for the sensitivity check.
    std::vector<double> sensitivity_distances{0.05, 0.2};
    /// Scale fit every this many steps once |u_r(t, 0)| exceeds min_gradient.
    int sample_every = 4;
    double min_gradient = 5.0;
    int fit_nodes = 201;
    /// Departure-shape diagnostic window in rho and the distance at which it is taken.
    double shape_window = 0.5;
    double shape_distance = 0.05;
    /// Regularisation width for the K history.
    double k_endpoint_width = 1e-3;

    void validate() const;
};

struct ScalePoint {
    double t = 0.0;
    double scale = 0.0;
    double distance = 0.0;
};

struct TransientSample {
    double p = 0.0;
    /// +1 above p*, -1 below.
    int side = 0;
    double log_offset = 0.0;
    Outcome outcome = Outcome::Undecided;
    double min_distance = 0.0;
    /// Last time with distance below departure_distance; NaN if never below.
    double t_star = 0.0;
    /// -ln(T_1 - t_star) with the fitted intermediate blowup time T_1.
    double tau_star = 0.0;
    /// -ln L at t_star (fitted-scale clock, diagnostic).
    double scale_tau_star = 0.0;
    /// Same as t_star / tau_star for the sensitivity thresholds (NaN where unusable).
    std::vector<double> t_sensitivity;
    std::vector<double> tau_sensitivity;
    /// The distance exceeded every threshold after the approach and the outcome is decided.
    bool usable = false;
    /// Coefficient of the unstable mode in u - f_1 on the shape window at departure.
    double departure_coefficient = 0.0;
    /// Sup-norm mismatch of the departing rate against mode + gauge, relative to the mode part.
    double shape_mismatch = 0.0;
    /// Regularised K (t, K) along the run near f_1 and whether it was non-increasing.
    std::vector<std::pair<double, double>> k_history;
    bool k_monotone = true;
    std::vector<ScalePoint> scale_history;
};

/// Blowup time of the intermediate self-similar phase from a fitted-scale
/// history: L = (T - t)(1 + beta (T - t)^mu) with mu in [0.05, 3] on the approach
/// (scale below max_scale, up to the last sample within plateau_margin of the
/// closest approach). T is searched in [t + L / 4, t + 4 L] at the last sample.
struct IntermediateTime {
    double T = 0.0;
    double beta = 0.0;
    double mu = 0.0;
    /// Max relative misfit of the scale model.
    double residual = 0.0;
    int points = 0;
};

/// Throws NumericalError with fewer than 8 approach samples.
IntermediateTime fit_intermediate_time(const std::vector<ScalePoint>& history, double max_scale = 0.1,
                                       double plateau_margin = 1e-3);

struct TransientFit {
    double lambda_estimate = 0.0;
    /// (ln|p - p*|, tau*) of the usable samples.
    std::vector<std::pair<double, double>> samples;
    double fit_residual = 0.0;
    double slope = 0.0;
    /// lambda from each sensitivity threshold (NaN when fewer than 5 samples).
    std::vector<double> lambda_sensitivity;
    /// Same fit on the fitted-scale clock -ln L (diagnostic).
    double lambda_scale_clock = 0.0;
    /// Intermediate blowup time (mean over the closest run on each side) and the
    /// spread between the sides.
    IntermediateTime intermediate;
    double intermediate_spread = 0.0;
    /// Departure coefficients have opposite signs on the two sides.
    bool opposite_departure = false;
    std::vector<TransientSample> runs;
    std::vector<std::string> notes;
};

/// Linear fit tau* = c + slope ln|p - p*| with one intercept per side; returns
/// (slope, max residual). Throws NumericalError with fewer than 5 samples.
std::pair<double, double> fit_lifetime_slope(const std::vector<std::pair<double, double>>& samples,
                                             const std::vector<int>& sides);

/// Lifetime scaling around the critical parameter of a finished bisection. The
/// departure time of each run is the last time its fitted-scale distance to f_1
/// is below the threshold; tau* = -ln(T_1 - t*) uses the intermediate blowup
/// time of the closest runs. Throws NumericalError when fewer than 5 transients
/// are usable.
TransientFit transient_analysis(const FamilySpec& family, const BisectionRecord& record,
                                const TransientConfig& cfg);

/// Rate of departure from f_1, d(u - f_1)/d(-ln L) on the fitted-scale profile,
/// with its gauge component removed, against the fitted multiple of the
/// unstable mode (as a perturbation of u, i.e. v / rho).
struct DepartureShape {
    std::vector<double> rho;
    std::vector<double> rate;
    std::vector<double> mode;
    double coefficient = 0.0;
    double lambda = 0.0;
    /// Sup-norm mismatch relative to sup |mode| on the window.
    double mismatch = 0.0;
    double t = 0.0;
    double distance = 0.0;
};

/// Taken at the first sample whose distance to f_1 reaches shape_distance after
/// having been below it. Throws NumericalError if that never happens.
DepartureShape departure_shape(const InitialDataSpec& spec, const EvolutionConfig& cfg, double shape_distance = 0.05,
                               double window = 0.5, int fit_nodes = 201, int sample_every = 4,
                               double min_gradient = 5.0);

/// Runs at the two ends of the final bracket.
struct MarginalPair {
    double p_lo = 0.0;
    double p_hi = 0.0;
    Outcome lo_outcome = Outcome::Undecided;
    Outcome hi_outcome = Outcome::Undecided;
    /// (t, distance to f_1) along each run, sampled after |u_r(t, 0)| > min_gradient.
    std::vector<std::pair<double, double>> lo_distance;
    std::vector<std::pair<double, double>> hi_distance;
    double lo_min_distance = 0.0;
    double hi_min_distance = 0.0;
};

MarginalPair marginal_pair(const FamilySpec& family, const BisectionRecord& record, const EvolutionConfig& cfg,
                           int sample_every = 4, double min_gradient = 5.0);

struct UniversalityRun {
    InitialDataSpec spec;
    Outcome outcome = Outcome::Undecided;
    bool rejected = false;
    double T_estimate = 0.0;
    /// (t, distance to f_0 on the window) at each collapse snapshot.
    std::vector<std::pair<double, double>> distances;
    bool passed = false;
};

struct UniversalityReport {
    std::vector<UniversalityRun> runs;
    double tolerance = 0.02;
    bool passed = false;
};

/// Each spec must blow up; its last three reliable snapshots, rescaled by the
/// fitted scale, must approach f_0 on rho in [0, window_hi] monotonically (pairs
/// below tolerance / 10 count as settled) and end below tolerance. Snapshots after |u_r(t, 0)| exceeds blowup_gradient / 4 are
/// not used.
UniversalityReport universality_check(const std::vector<InitialDataSpec>& specs, const EvolutionConfig& cfg,
                                      double window_hi = 0.5, double tolerance = 0.02);

/// K[u] = int_0^1 (rho^2 u'^2 - 2 cos^2 u / (1 - rho^2)) / 2 drho.
struct KValue {
    double value = 0.0;
    /// |u(1) - pi/2| exceeds the boundary tolerance: the integral diverges and
    /// value holds the part on [0, 1 - endpoint_width].
    bool divergent = false;
    double boundary_offset = 0.0;
};

/// Piecewise Gauss-Legendre on [0, 1 - endpoint_width] plus the closed-form
/// endpoint piece for u = pi/2 + u'(1)(rho - 1). Throws std::invalid_argument
/// if the table does not reach rho = 1.
KValue lyapunov_K(const ProfileTable& u, double endpoint_width = 1e-3, double boundary_tol = 1e-6);

/// Compactly supported bump (1 - x^2)^4, x = (rho - center) / width.
double bump(double rho, double center, double width);
double bump_slope(double rho, double center, double width);

/// Central difference of K along a bump: (K[u + d b] - K[u - d b]) / (2 d).
double directional_derivative_K(const ProfileTable& u, double center, double width, double step = 1e-4);

/// Largest |directional derivative| over count random bumps inside (0, 1).
double stationarity_defect(const ProfileTable& u, int count = 20, unsigned seed = 1, double step = 1e-4);

}  // namespace wavemaps
