#pragma once

#include "wavemaps/radial_core.hpp"
#include "wavemaps/selfsim.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace wavemaps {

/// Outgoing condition at r_max: Sommerfeld on r u, or the second-order
/// Bayliss-Turkel condition (exact for linear outgoing waves of this equation).
enum class OuterBoundary { Sommerfeld, BaylissTurkel };

std::string to_string(OuterBoundary b);
OuterBoundary outer_boundary_from_string(const std::string& name);

struct EvolutionConfig {
    RadialGrid grid;
    double cfl = 0.25;
    double t_end = 10.0;
    /// Refinement trigger for max |u_r| * h over the inner half of the finest level.
    double refine_threshold = 0.1;
    int max_refine_levels = 24;
    /// Fine cells per refined level (caps the extent of each nested region).
    int level_cells = 1024;
    double blowup_gradient = 1e4;
    /// Dispersal: energy on [0, dispersal_radius] below dispersal_fraction of the
    /// initial energy for dispersal_steps steps and lower than when it first dropped there.
    double dispersal_radius = 5.0;
    double dispersal_fraction = 1e-6;
    int dispersal_steps = 100;
    bool stop_on_dispersal = true;
    OuterBoundary outer_boundary = OuterBoundary::Sommerfeld;
    /// Extra output times; the step schedule lands on each exactly.
    std::vector<double> snapshot_times;

    /// Throws std::invalid_argument on out-of-range settings.
    void validate() const;
};

/// Evolution config on a uniform grid with defaults elsewhere.
EvolutionConfig make_evolution_config(double r_max, int n_cells, double t_end, double cfl = 0.25);

enum class DataFamily { Gaussian, Kink, ProfilePerturbation };

std::string to_string(DataFamily family);
DataFamily data_family_from_string(const std::string& name);

struct InitialDataSpec {
    DataFamily family = DataFamily::Gaussian;
    /// Gaussian: phi = A r^3 exp(-((r - r0)/s)^4), psi = phi'. Kink: phi = pi tanh(r/s), psi = 0.
    double A = 0.0;
    double r0 = 2.0;
    double s = 1.0;
    /// Profile perturbation: the self-similar solution f(r/(T - t)) at t = 0 plus
    /// epsilon * (r/w)^3 exp(-((r - bump_center)/bump_width)^4) in phi.
    std::shared_ptr<const SelfSimilarProfile> profile;
    double T = 1.0;
    double epsilon = 0.0;
    double bump_center = 0.5;
    double bump_width = 0.25;
    /// The profile is blended smoothly into the nearest multiple of pi beyond
    /// this radius (keeps the energy finite); <= 0 selects r_max / 2.
    double cutoff_radius = 0.0;

    void validate() const;
};

/// Set a named scalar parameter (A, r0, s, T, epsilon, bump_center, bump_width).
void set_parameter(InitialDataSpec& spec, const std::string& name, double value);
double get_parameter(const InitialDataSpec& spec, const std::string& name);

FieldState make_initial_data(const InitialDataSpec& spec, const RadialGrid& grid);

/// Closed-form ground-state self-similar solution 2 arctan(r / (T - t)) and its rate.
double ts_solution(double t, double r, double T);
double ts_rate(double t, double r, double T);

enum class RunStatus { Blowup, Dispersed, ReachedEnd };

std::string to_string(RunStatus status);

struct BlowupReport {
    RunStatus status = RunStatus::ReachedEnd;
    bool blew_up = false;
    double T_estimate = 0.0;
    /// u_r(t, 0) against t, one sample per step.
    ProfileTable gradient_history;
    /// States recorded each time |u_r(t, 0)| doubles past 10.
    std::vector<FieldState> snapshots;
    /// States at the configured snapshot times.
    std::vector<FieldState> timed_snapshots;
    long steps = 0;
    int max_level = 0;
    bool level_cap_reached = false;
    double initial_energy = 0.0;
    std::vector<std::string> notes;
};

/// Called after every step; returning false stops the run.
using StepObserver = std::function<bool(const FieldState&)>;

/// Method-of-lines evolution of u_tt = u_rr + 2u_r/r - sin(2u)/r^2.
/// Throws InstabilityAbort on non-finite values without a blowup declaration.
std::pair<FieldState, BlowupReport> evolve(FieldState state, const EvolutionConfig& cfg,
                                           const StepObserver& observer = {});

/// Right-hand side (u_t, u_tt) on the state nodes.
void evolution_rhs(const FieldState& state, std::vector<double>& du, std::vector<double>& dut,
                   OuterBoundary outer = OuterBoundary::Sommerfeld);

/// One-sided odd-parity estimate of u_r at the origin.
double origin_gradient(const FieldState& state);

/// Zero crossing of a least-squares line through 1/|u_r(t, 0)| using samples with
/// |u_r| above max(10, peak / 100). Throws std::invalid_argument for non-blowup
/// reports or fewer than 10 usable samples.
double estimate_blowup_time(const BlowupReport& report);
double estimate_blowup_time(const ProfileTable& gradient_history);

/// u(t, (T - t) rho) at the state nodes inside the window (plus its endpoints).
ProfileTable rescaled_profile(const FieldState& state, double T, Interval rho_window);

/// Number of refinement levels encoded in the node layout.
int refinement_level(const FieldState& state);

/// Add one nested level when the trigger fires, else return the state unchanged.
FieldState refine(const FieldState& state, const EvolutionConfig& cfg);

/// Drop the finest level when its parent spacing resolves it again.
FieldState coarsen(const FieldState& state, const EvolutionConfig& cfg);

}  // namespace wavemaps
