#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "swarmloc/swarm.hpp"

namespace swarmloc {

/// Flat mobile-node coordinate vector [x_1,y_1,z_1, ..., x_m,y_m,z_m], length
/// 3 * n_mobile, meters.
using OptimizationVector = std::vector<double>;

OptimizationVector pack_positions(std::span<const Point3> positions);
std::vector<Point3> unpack_positions(std::span<const double> coords);

struct SolverSettings {
    Bounds bounds;
    /// Refinement acceptance threshold on the distance-residual RMSE. Unset
    /// means derive it from the known noise SD when simulating (0.05 m
    /// fallback otherwise).
    std::optional<double> rmse_threshold;
    int max_restarts = 10;
    double perturbation_magnitude = 0.01;  // meters, per coordinate
    int max_inner_iterations = 100;
    double convergence_tol = 1e-10;  // relative objective decrease
    double step_tol = 1e-9;         // meters
    std::uint64_t rng_seed = 0;
    /// Perturb the best-so-far solution instead of the previous
    /// initialization when restarting.
    bool perturb_best = false;

    double resolved_rmse_threshold(std::optional<double> noise_sd = std::nullopt) const {
        if (rmse_threshold) return *rmse_threshold;
        return noise_sd ? *noise_sd : 0.05;
    }

    void validate() const {
        bounds.validate();
        if (max_restarts < 1) throw validation_error("solver: max_restarts must be >= 1");
        if (perturbation_magnitude < 0)
            throw validation_error("solver: perturbation_magnitude must be >= 0");
        if (!(convergence_tol > 0) || !(step_tol > 0))
            throw validation_error("solver: tolerances must be > 0");
        if (max_inner_iterations < 1)
            throw validation_error("solver: max_inner_iterations must be >= 1");
        if (rmse_threshold && *rmse_threshold < 0)
            throw validation_error("solver: rmse_threshold must be >= 0");
    }
};

struct SolveResult {
    std::vector<Point3> positions;
    double rmse = 0.0;  // final objective value, meters
    int inner_iterations = 0;
    int restarts_used = 0;  // solve invocations (1 = no restart)
    bool converged = false;
    double elapsed_s = 0.0;
};

/// sqrt(mean of squared residuals d_ij - dhat_ij(x)) over all valid pairs
/// that involve at least one mobile node. Anchor-anchor pairs carry constant
/// residuals and are excluded from the residual set.
double objective_rmse(const OptimizationVector& x, const RangingFrame& frame,
                      const SwarmConfig& config);

/// Exact analytic gradient of objective_rmse. Returns the zero vector at a
/// perfect fit (the minimizing subgradient). Throws numeric_error when a
/// reconstructed distance falls below the 1e-9 m guard.
OptimizationVector objective_gradient(const OptimizationVector& x,
                                      const RangingFrame& frame,
                                      const SwarmConfig& config);

/// Single bound-constrained minimization run from `init`: Gauss-Newton
/// curvature from the residual Jacobian, backtracking line search on the
/// objective, iterates projected onto the bounds. Never returns a point worse
/// than the (projected) initialization.
SolveResult solve_frame(const RangingFrame& frame, const SwarmConfig& config,
                        const OptimizationVector& init, const SolverSettings& settings);

/// solve_frame plus the perturbed-restart refinement loop: when the residual
/// RMSE stays above the threshold, the run is repeated (up to max_restarts
/// total) from the previous initialization nudged by +/-perturbation per
/// coordinate, and the best run is returned.
SolveResult refine_with_restarts(const RangingFrame& frame, const SwarmConfig& config,
                                 const OptimizationVector& init,
                                 const SolverSettings& settings);

/// Per-frame tracking: frame 0 starts from first_init, every later frame
/// warm-starts from the previous frame's estimate.
std::vector<SolveResult> track_sequence(std::span<const RangingFrame> frames,
                                        const SwarmConfig& config,
                                        const OptimizationVector& first_init,
                                        const SolverSettings& settings);

}  // namespace swarmloc
