#pragma once

#include "wavemaps/radial_core.hpp"
#include "wavemaps/selfsim.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace wavemaps {

struct SimilarityConfig {
    /// Blowup-time guess in tau = -ln(T - t), rho = r / (T - t).
    double T_guess = 1.0;
    double rho_max = 3.0;
    int n_cells = 2048;
    /// Courant factor against the largest characteristic speed rho_max + 1.
    double cfl = 0.5;
    /// Fixed step; <= 0 selects cfl * h / (rho_max + 1).
    double dtau = 0.0;

    void validate() const;
    RadialGrid grid() const { return make_uniform_grid(rho_max, n_cells); }
    double step() const;
};

struct SimilarityState {
    double tau = 0.0;
    RadialGrid grid;
    std::vector<double> u;
    std::vector<double> utau;

    std::size_t size() const { return u.size(); }
    double rho(std::size_t i) const { return grid.node(static_cast<int>(i)); }
    /// Same samples viewed as a radial field (rho as r, tau as t).
    FieldState as_field() const;
};

/// Stationary data u = f(rho) from a self-similar profile.
SimilarityState similarity_from_profile(const SelfSimilarProfile& p, const SimilarityConfig& cfg, double tau = 0.0);

/// Stationary data from a tabulated profile covering [0, rho_max].
SimilarityState similarity_from_table(const ProfileTable& f, const SimilarityConfig& cfg, double tau = 0.0);

/// Point on the gauge orbit f(rho / (1 + epsilon e^tau)) with its tau derivative.
SimilarityState gauge_orbit(const SelfSimilarProfile& p, double epsilon, double tau, const SimilarityConfig& cfg);

/// Map a physical state at time t < T_guess to similarity variables.
SimilarityState to_similarity(const FieldState& state, const SimilarityConfig& cfg);

/// Right-hand side (u_tau, u_tautau) of the similarity-variable wave map equation.
void similarity_rhs(const SimilarityState& state, std::vector<double>& du, std::vector<double>& dutau);

/// Called after every step; returning false stops the run.
using SimilarityObserver = std::function<bool(const SimilarityState&)>;

/// RK4 method of lines up to tau_end (landing exactly). Throws InstabilityAbort on
/// non-finite samples.
SimilarityState evolve_similarity(SimilarityState state, double tau_end, const SimilarityConfig& cfg,
                                  const SimilarityObserver& observer = {});

/// Max |u - target| over the state nodes inside window.
double profile_distance(const SimilarityState& state, const ProfileTable& target, Interval window);

struct GaugeFit {
    /// u ~ target(rho / (1 + eta)) with eta = epsilon e^tau; epsilon = T - T_guess.
    double epsilon = 0.0;
    double eta = 0.0;
    double residual = 0.0;
};

/// Least-squares gauge deformation of the target that best matches the state on window.
GaugeFit fit_gauge(const SimilarityState& state, const ProfileTable& target, Interval window = {0.0, 1.0});

/// Produces the similarity state at the end of the tuning window for a parameter value.
using SimilarityRun = std::function<SimilarityState(double)>;

struct GaugeTuneResult {
    double parameter = 0.0;
    GaugeFit fit;
    int iterations = 0;
    bool converged = false;
    /// (parameter, fitted epsilon) for every run.
    std::vector<std::pair<double, double>> history;
};

/// Bisect the parameter on the sign of u - target at probe_rho until
/// |epsilon| < 1e-6 e^{-tau_end}. Throws BracketError when the ends drift the same way.
GaugeTuneResult gauge_tune(const SimilarityRun& run, Interval bracket, const ProfileTable& target,
                           double probe_rho = 0.5, int max_iterations = 80);

}  // namespace wavemaps
