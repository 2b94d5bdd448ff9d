#include "swarmloc/evaluation.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numeric>
#include <thread>

#include "swarmloc/rng.hpp"
#include "swarmloc/trilateration.hpp"

namespace swarmloc {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double percentile_linear(std::span<const double> sorted, double q) {
    if (sorted.size() == 1) return sorted[0];
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double sample_sd(std::span<const double> values, double mean) {
    if (values.size() < 2) return 0.0;
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

NormalitySummary compute_normality(std::span<const double> values, double skew_threshold,
                                   double kurtosis_threshold) {
    NormalitySummary out;
    const auto n = static_cast<double>(values.size());
    if (values.size() < 8) {
        out.verdict = "insufficient_n";
        return out;
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 <= 1e-30) {
        out.verdict = "degenerate";
        return out;
    }
    out.skewness = m3 / std::pow(m2, 1.5);
    out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    out.verdict = (std::abs(out.skewness) < skew_threshold &&
                   std::abs(out.excess_kurtosis) < kurtosis_threshold)
                      ? "approximately_normal"
                      : "non_normal";
    return out;
}

std::vector<double> paired_differences(std::span<const double> a,
                                       std::span<const double> b, std::size_t min_len,
                                       const char* who) {
    if (a.size() != b.size())
        throw validation_error(std::string(who) + ": inputs must have equal length");
    if (a.size() < min_len)
        throw validation_error(std::string(who) + ": need at least " +
                               std::to_string(min_len) + " pairs");
    std::vector<double> d(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
    return d;
}

// Average ranks of |d| for the nonzero differences, plus the group sizes of
// tied |d| (for the variance correction).
struct RankedDifferences {
    std::vector<double> ranks;   // rank of |d_k|
    std::vector<bool> positive;  // sign of d_k
    std::vector<std::size_t> tie_groups;
};

RankedDifferences rank_differences(std::span<const double> diffs) {
    std::vector<double> nonzero;
    nonzero.reserve(diffs.size());
    for (double d : diffs)
        if (d != 0.0) nonzero.push_back(d);
    RankedDifferences out;
    if (nonzero.empty()) return out;

    std::vector<std::size_t> order(nonzero.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(nonzero[x]) < std::abs(nonzero[y]);
    });

    out.ranks.resize(nonzero.size());
    out.positive.resize(nonzero.size());
    for (std::size_t k = 0; k < nonzero.size(); ++k)
        out.positive[order[k]] = nonzero[order[k]] > 0.0;

    std::size_t k = 0;
    while (k < order.size()) {
        std::size_t end = k + 1;
        while (end < order.size() &&
               std::abs(nonzero[order[end]]) == std::abs(nonzero[order[k]]))
            ++end;
        const double avg_rank = (static_cast<double>(k + 1) + static_cast<double>(end)) / 2.0;
        for (std::size_t m = k; m < end; ++m) out.ranks[order[m]] = avg_rank;
        out.tie_groups.push_back(end - k);
        k = end;
    }
    return out;
}

void fill_mean_and_ci(TestReport& report, std::span<const double> diffs) {
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(diffs.size());
    report.mean_difference = mean;
    const double sd = sample_sd(diffs, mean);
    if (sd == 0.0 || diffs.size() < 2) {
        report.ci_low = report.ci_high = mean;
        return;
    }
    const boost::math::students_t_distribution<double> dist(
        static_cast<double>(diffs.size() - 1));
    const double margin = boost::math::quantile(dist, 0.975) * sd /
                          std::sqrt(static_cast<double>(diffs.size()));
    report.ci_low = mean - margin;
    report.ci_high = mean + margin;
}

}  // namespace

PositionError position_error(const Point3& estimated, const Point3& truth) {
    if (!estimated.is_finite() || !truth.is_finite())
        throw validation_error("position_error: non-finite input");
    PositionError out;
    out.e3d = euclidean_distance(estimated, truth);
    out.per_axis = {estimated.x - truth.x, estimated.y - truth.y, estimated.z - truth.z};
    return out;
}

ErrorStats summarize_errors(std::span<const PositionError> errors) {
    if (errors.empty()) throw validation_error("summarize_errors: empty input");
    ErrorStats stats;
    stats.n = errors.size();
    const double n = static_cast<double>(errors.size());

    std::vector<double> e3d(errors.size());
    for (std::size_t k = 0; k < errors.size(); ++k) {
        e3d[k] = errors[k].e3d;
        stats.mean_3d += errors[k].e3d;
        for (std::size_t ax = 0; ax < 3; ++ax)
            stats.per_axis_abs_mean[ax] += std::abs(errors[k].per_axis[ax]);
    }
    stats.mean_3d /= n;
    for (auto& v : stats.per_axis_abs_mean) v /= n;

    stats.sd_3d = sample_sd(e3d, stats.mean_3d);
    for (std::size_t ax = 0; ax < 3; ++ax) {
        double mean_ax = 0.0;
        for (const auto& e : errors) mean_ax += e.per_axis[ax];
        mean_ax /= n;
        double acc = 0.0;
        for (const auto& e : errors)
            acc += (e.per_axis[ax] - mean_ax) * (e.per_axis[ax] - mean_ax);
        stats.per_axis_sd[ax] = errors.size() < 2 ? 0.0 : std::sqrt(acc / (n - 1.0));
    }

    std::sort(e3d.begin(), e3d.end());
    stats.p50 = percentile_linear(e3d, 0.50);
    stats.p95 = percentile_linear(e3d, 0.95);
    return stats;
}

NormalitySummary normality_assessment(std::span<const double> values, double skew_threshold,
                                      double kurtosis_threshold) {
    if (values.size() < 8)
        throw validation_error("normality_assessment: need at least 8 values");
    return compute_normality(values, skew_threshold, kurtosis_threshold);
}

namespace detail {

double wilcoxon_exact_two_sided_p(std::span<const double> ranks, double w_plus) {
    // Ranks are integers or half-integers; doubling makes everything exact.
    std::int64_t total2 = 0;
    std::vector<std::int64_t> r2(ranks.size());
    for (std::size_t k = 0; k < ranks.size(); ++k) {
        r2[k] = std::llround(2.0 * ranks[k]);
        total2 += r2[k];
    }
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(total2) + 1, 0);
    counts[0] = 1;
    std::int64_t reached = 0;
    for (std::int64_t rk : r2) {
        reached += rk;
        for (std::int64_t s = reached; s >= rk; --s)
            counts[static_cast<std::size_t>(s)] +=
                counts[static_cast<std::size_t>(s - rk)];
    }
    // Null distribution of 2*W+ is symmetric about total2 / 2 (an integer,
    // since sum of ranks is n(n+1)/2 and total2 = n(n+1)).
    const std::int64_t mu2 = total2 / 2;
    const std::int64_t dev = std::llabs(std::llround(2.0 * w_plus) - mu2);
    std::uint64_t extreme = 0, all = 0;
    for (std::int64_t s = 0; s <= total2; ++s) {
        const std::uint64_t c = counts[static_cast<std::size_t>(s)];
        all += c;
        if (std::llabs(s - mu2) >= dev) extreme += c;
    }
    return static_cast<double>(extreme) / static_cast<double>(all);
}

double wilcoxon_normal_two_sided_p(std::span<const double> ranks, double w_plus) {
    const double n = static_cast<double>(ranks.size());
    const double mu = n * (n + 1.0) / 4.0;
    double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    // Tie correction: subtract (t^3 - t)/48 per tied group.
    std::vector<double> sorted(ranks.begin(), ranks.end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t k = 0;
    while (k < sorted.size()) {
        std::size_t end = k + 1;
        while (end < sorted.size() && sorted[end] == sorted[k]) ++end;
        const double t = static_cast<double>(end - k);
        var -= (t * t * t - t) / 48.0;
        k = end;
    }
    if (var <= 0.0) return 1.0;
    const double dev = w_plus - mu;
    const double cc = dev > 0.0 ? 0.5 : (dev < 0.0 ? -0.5 : 0.0);
    const double z = (dev - cc) / std::sqrt(var);
    return 2.0 * normal_cdf(-std::abs(z));
}

}  // namespace detail

TestReport wilcoxon_signed_rank(std::span<const double> paired_a,
                                std::span<const double> paired_b) {
    const std::vector<double> diffs =
        paired_differences(paired_a, paired_b, 6, "wilcoxon_signed_rank");
    const RankedDifferences ranked = rank_differences(diffs);
    if (ranked.ranks.empty())
        throw numeric_error("wilcoxon_signed_rank: all differences are zero");

    double w_plus = 0.0;
    for (std::size_t k = 0; k < ranked.ranks.size(); ++k)
        if (ranked.positive[k]) w_plus += ranked.ranks[k];

    const double n_eff = static_cast<double>(ranked.ranks.size());
    TestReport report;
    report.test_name = "wilcoxon_signed_rank";
    report.statistic = w_plus - n_eff * (n_eff + 1.0) / 4.0;
    report.p_value = ranked.ranks.size() <= 12
                         ? detail::wilcoxon_exact_two_sided_p(ranked.ranks, w_plus)
                         : detail::wilcoxon_normal_two_sided_p(ranked.ranks, w_plus);
    fill_mean_and_ci(report, diffs);
    report.normality_a = compute_normality(paired_a, 0.5, 1.0);
    report.normality_b = compute_normality(paired_b, 0.5, 1.0);
    return report;
}

TestReport paired_t_test(std::span<const double> paired_a,
                         std::span<const double> paired_b) {
    const std::vector<double> diffs =
        paired_differences(paired_a, paired_b, 2, "paired_t_test");
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(diffs.size());
    const double sd = sample_sd(diffs, mean);
    if (sd == 0.0)
        throw numeric_error("paired_t_test: zero-variance differences (degenerate test)");

    const double n = static_cast<double>(diffs.size());
    TestReport report;
    report.test_name = "paired_t";
    report.statistic = mean / (sd / std::sqrt(n));
    const boost::math::students_t_distribution<double> dist(n - 1.0);
    report.p_value = 2.0 * boost::math::cdf(dist, -std::abs(report.statistic));
    fill_mean_and_ci(report, diffs);
    report.normality_a = compute_normality(paired_a, 0.5, 1.0);
    report.normality_b = compute_normality(paired_b, 0.5, 1.0);
    return report;
}

void SweepGrid::validate() const {
    auto check_levels = [](const std::vector<double>& levels, const char* name) {
        if (levels.empty())
            throw validation_error(std::string("sweep grid: empty ") + name + " list");
        for (std::size_t k = 0; k < levels.size(); ++k) {
            if (levels[k] < 0.0 || !std::isfinite(levels[k]))
                throw validation_error(std::string("sweep grid: invalid ") + name + " level");
            if (k > 0 && levels[k] <= levels[k - 1])
                throw validation_error(std::string("sweep grid: ") + name +
                                       " levels must be strictly increasing");
        }
    };
    check_levels(bias_levels, "bias");
    check_levels(random_sd_levels, "random_sd");
    if (trials_per_cell < 1) throw validation_error("sweep grid: trials_per_cell must be >= 1");
    if (frames_per_trial < 1) throw validation_error("sweep grid: frames_per_trial must be >= 1");
}

SweepGrid SweepGrid::paper_grid() {
    SweepGrid grid;
    grid.bias_levels = {0.0, 0.005, 0.01, 0.02};
    grid.random_sd_levels = {0.0, 0.005, 0.01, 0.02, 0.04, 0.05, 0.06, 0.08, 0.10, 0.12};
    return grid;
}

namespace {

std::uint64_t trial_motion_seed(const SweepGrid& grid, int trial) {
    return mix_seed(mix_seed(grid.base_seed, 0x6d6f74696f6eULL), static_cast<std::uint64_t>(trial));
}

std::uint64_t cell_noise_seed(const SweepGrid& grid, double bias, double sd, int trial) {
    const std::uint64_t level_hash = mix_seed(hash_double(bias), hash_double(sd));
    return grid.base_seed ^ mix_seed(level_hash, static_cast<std::uint64_t>(trial));
}

CellResult evaluate_cell(const SweepGrid& grid, const SwarmConfig& config,
                         const SolverSettings& solver_settings,
                         const FilterSettings& filter_settings,
                         std::span<const Trajectory> trajectories, double bias, double sd) {
    CellResult cell;
    cell.bias = bias;
    cell.random_sd = sd;
    try {
        std::vector<PositionError> swarm_errors;
        std::vector<PositionError> tri_errors;
        std::vector<double> swarm_e3d, tri_e3d;
        std::vector<double> swarm_times, tri_times;

        for (int trial = 0; trial < grid.trials_per_cell; ++trial) {
            const Trajectory& traj = trajectories[static_cast<std::size_t>(trial)];

            ErrorModel model;
            model.bias = bias;
            model.random_sd = sd;
            model.rng_seed = cell_noise_seed(grid, bias, sd, trial);
            const std::vector<RangingFrame> raw =
                synthesize_rangings(traj, config, model, Topology::swarm);

            FilterSettings filter = filter_settings;
            filter.sample_rate = config.update_rate;
            const std::vector<RangingFrame> frames = filter_frame_history(raw, filter);

            SolverSettings settings = solver_settings;
            settings.rmse_threshold = solver_settings.resolved_rmse_threshold(sd);
            settings.rng_seed = mix_seed(model.rng_seed, 0x736f6c76ULL);

            // First-frame initialization: truth plus the standard 10 cm
            // per-axis offset (prior-knowledge stand-in).
            std::vector<Point3> init_positions;
            for (int m = 0; m < config.n_mobile; ++m) {
                Point3 p = traj.samples.front()
                               .positions[static_cast<std::size_t>(kAnchorCount + m)];
                p = p + Point3{0.10, 0.10, 0.10};
                init_positions.push_back(config.bounds.clamp(p));
            }

            const std::vector<SolveResult> swarm_results =
                track_sequence(frames, config, pack_positions(init_positions), settings);
            const std::vector<FrameEstimate> tri_results =
                trilaterate_sequence(frames, config);

            for (std::size_t f = 0; f < frames.size(); ++f) {
                swarm_times.push_back(swarm_results[f].elapsed_s);
                tri_times.push_back(tri_results[f].elapsed_s);
                for (int m = 0; m < config.n_mobile; ++m) {
                    const Point3& truth =
                        traj.samples[f].positions[static_cast<std::size_t>(kAnchorCount + m)];
                    const NodeEstimate& tri_node =
                        tri_results[f].nodes[static_cast<std::size_t>(m)];
                    if (!tri_node.valid) continue;  // keep the pairing aligned
                    const PositionError se = position_error(
                        swarm_results[f].positions[static_cast<std::size_t>(m)], truth);
                    const PositionError te = position_error(tri_node.position, truth);
                    swarm_errors.push_back(se);
                    tri_errors.push_back(te);
                    swarm_e3d.push_back(se.e3d);
                    tri_e3d.push_back(te.e3d);
                }
            }
        }

        cell.swarm = summarize_errors(swarm_errors);
        cell.trilateration = summarize_errors(tri_errors);
        cell.paired_test = wilcoxon_signed_rank(swarm_e3d, tri_e3d);

        double mean_s = 0.0, mean_t = 0.0;
        for (double v : swarm_times) mean_s += v;
        for (double v : tri_times) mean_t += v;
        mean_s /= static_cast<double>(swarm_times.size());
        mean_t /= static_cast<double>(tri_times.size());
        cell.runtime = {mean_s, sample_sd(swarm_times, mean_s), mean_t,
                        sample_sd(tri_times, mean_t)};
    } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
    }
    return cell;
}

}  // namespace

SweepResult run_sweep(const SweepGrid& grid, const SwarmConfig& config,
                      const SolverSettings& solver_settings,
                      const FilterSettings& filter_settings, int jobs) {
    grid.validate();
    config.validate();
    if (jobs < 1) throw validation_error("run_sweep: jobs must be >= 1");

    // Trajectories are reused across cells (one per trial), so every cell
    // sees the same motion and differs only in the injected errors.
    std::vector<Trajectory> trajectories;
    trajectories.reserve(static_cast<std::size_t>(grid.trials_per_cell));
    const double duration =
        static_cast<double>(grid.frames_per_trial) / config.update_rate;
    for (int trial = 0; trial < grid.trials_per_cell; ++trial)
        trajectories.push_back(generate_trajectory(config, duration,
                                                   trial_motion_seed(grid, trial),
                                                   config.update_rate));

    struct CellSpec {
        double bias;
        double sd;
    };
    std::vector<CellSpec> specs;
    for (double bias : grid.bias_levels)
        for (double sd : grid.random_sd_levels) specs.push_back({bias, sd});

    SweepResult result;
    result.grid = grid;
    result.cells.resize(specs.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= specs.size()) return;
            result.cells[k] = evaluate_cell(grid, config, solver_settings, filter_settings,
                                            trajectories, specs[k].bias, specs[k].sd);
        }
    };

    const int n_workers = std::min<int>(jobs, static_cast<int>(specs.size()));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::future<void>> futures;
        futures.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w)
            futures.push_back(std::async(std::launch::async, worker));
        for (auto& f : futures) f.get();
    }
    return result;
}

RuntimeStats measure_runtime(Method method, std::span<const RangingFrame> frames,
                             const SwarmConfig& config, const SolverSettings& settings,
                             const OptimizationVector* first_init) {
    config.validate();
    constexpr std::size_t kWarmup = 5;
    if (frames.size() < 30)
        throw validation_error("measure_runtime: need at least 30 frames");

    std::vector<double> times;
    if (method == Method::trilateration) {
        const auto results = trilaterate_sequence(frames, config);
        for (std::size_t f = kWarmup; f < results.size(); ++f)
            times.push_back(results[f].elapsed_s);
    } else {
        OptimizationVector init;
        if (first_init != nullptr) {
            init = *first_init;
        } else {
            // Deterministic spread around the bounds center.
            const Point3 c = config.bounds.center();
            std::vector<Point3> spread;
            for (int m = 0; m < config.n_mobile; ++m) {
                const double ang = 2.0 * 3.141592653589793 * m /
                                   std::max(1, config.n_mobile);
                spread.push_back(config.bounds.clamp(
                    {c.x + 0.3 * std::cos(ang), c.y + 0.3 * std::sin(ang),
                     c.z + 0.05 * (m % 2 == 0 ? 1.0 : -1.0)}));
            }
            init = pack_positions(spread);
        }
        const auto results = track_sequence(frames, config, init, settings);
        for (std::size_t f = kWarmup; f < results.size(); ++f)
            times.push_back(results[f].elapsed_s);
    }

    RuntimeStats stats;
    stats.n = times.size();
    for (double t : times) stats.mean_s += t;
    stats.mean_s /= static_cast<double>(times.size());
    stats.sd_s = sample_sd(times, stats.mean_s);
    return stats;
}

}  // namespace swarmloc
