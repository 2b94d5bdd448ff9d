#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swarmloc/filtering.hpp"
#include "swarmloc/solver.hpp"
#include "swarmloc/swarm.hpp"
#include "swarmloc/synthesis.hpp"

namespace swarmloc {

struct PositionError {
    double e3d = 0.0;                      // meters
    std::array<double, 3> per_axis{};      // signed, estimated - truth
};

/// 3D error and signed per-axis components of one estimate.
PositionError position_error(const Point3& estimated, const Point3& truth);

struct ErrorStats {
    std::size_t n = 0;
    double mean_3d = 0.0;
    double sd_3d = 0.0;                          // n-1 denominator, 0 for n == 1
    std::array<double, 3> per_axis_abs_mean{};   // mean |component|
    std::array<double, 3> per_axis_sd{};         // SD of signed components
    double p50 = 0.0;
    double p95 = 0.0;
};

ErrorStats summarize_errors(std::span<const PositionError> errors);

struct NormalitySummary {
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    std::string verdict;  // "approximately_normal" | "non_normal" | "degenerate"
};

/// Moment-based screening; advisory only.
NormalitySummary normality_assessment(std::span<const double> values,
                                      double skew_threshold = 0.5,
                                      double kurtosis_threshold = 1.0);

struct TestReport {
    std::string test_name;      // "wilcoxon_signed_rank" | "paired_t"
    double statistic = 0.0;     // signed; negates when inputs are swapped
    double p_value = 1.0;       // two-sided
    double mean_difference = 0.0;  // mean(a - b), meters
    double ci_low = 0.0;        // t-based 95% CI of the mean difference
    double ci_high = 0.0;
    NormalitySummary normality_a;
    NormalitySummary normality_b;
};

/// Paired signed-rank test on a - b. Zero differences are dropped, ties get
/// average ranks. Exact enumeration p-value for up to 12 nonzero differences,
/// normal approximation with tie and continuity corrections above. The
/// statistic is the rank sum of positive differences centered at its null
/// mean.
TestReport wilcoxon_signed_rank(std::span<const double> paired_a,
                                std::span<const double> paired_b);

TestReport paired_t_test(std::span<const double> paired_a,
                         std::span<const double> paired_b);

namespace detail {
/// Exact two-sided p by dynamic programming over signed rank sums.
double wilcoxon_exact_two_sided_p(std::span<const double> ranks, double w_plus);
/// Normal approximation with tie correction and continuity correction.
double wilcoxon_normal_two_sided_p(std::span<const double> ranks, double w_plus);
}  // namespace detail

enum class Method { swarm, trilateration };

struct SweepGrid {
    std::vector<double> bias_levels;       // meters, strictly increasing
    std::vector<double> random_sd_levels;  // meters, strictly increasing
    int trials_per_cell = 3;
    int frames_per_trial = 1200;
    std::uint64_t base_seed = 1;

    void validate() const;

    /// The published sensitivity grid: bias {0, 0.5, 1, 2} cm, random error
    /// SD {0, 0.5, 1, 2, 4, 5, 6, 8, 10, 12} cm.
    static SweepGrid paper_grid();
};

struct CellRuntime {
    double swarm_mean_s = 0.0;
    double swarm_sd_s = 0.0;
    double tri_mean_s = 0.0;
    double tri_sd_s = 0.0;
};

struct CellResult {
    double bias = 0.0;
    double random_sd = 0.0;
    ErrorStats swarm;
    ErrorStats trilateration;
    TestReport paired_test;
    CellRuntime runtime;
    bool failed = false;
    std::string error;
};

struct SweepResult {
    SweepGrid grid;
    std::string config_digest;
    std::vector<CellResult> cells;
};

/// Full bias x random-SD sensitivity sweep. Each cell synthesizes seeded
/// trials, filters once, runs both estimators on the same frames, and pairs
/// their per-estimate 3D errors for the significance test. Trajectories are
/// shared across cells (per-trial seeds), noise seeds are derived per
/// (bias, sd, trial). Per-cell failures are recorded and the sweep continues.
SweepResult run_sweep(const SweepGrid& grid, const SwarmConfig& config,
                      const SolverSettings& solver_settings,
                      const FilterSettings& filter_settings, int jobs = 1);

struct RuntimeStats {
    double mean_s = 0.0;
    double sd_s = 0.0;
    std::size_t n = 0;
};

/// Wall-clock per-frame cost of one estimator over a frame sequence. The
/// first five warm-up frames are excluded. Requires >= 30 frames.
RuntimeStats measure_runtime(Method method, std::span<const RangingFrame> frames,
                             const SwarmConfig& config, const SolverSettings& settings,
                             const OptimizationVector* first_init = nullptr);

}  // namespace swarmloc
