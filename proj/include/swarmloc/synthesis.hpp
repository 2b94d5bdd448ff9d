#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "swarmloc/swarm.hpp"

namespace swarmloc {

struct TrajectorySample {
    double timestamp = 0.0;              // seconds
    std::vector<Point3> positions;       // one per node, anchors first
};

/// Time-ordered ground-truth positions of every node, uniformly sampled.
struct Trajectory {
    double sample_rate = 0.0;            // samples per second
    std::vector<TrajectorySample> samples;

    int node_count() const {
        return samples.empty() ? 0 : static_cast<int>(samples.front().positions.size());
    }
};

enum class NoiseDistribution { gaussian, uniform };

/// Additive measurement error: constant bias plus a zero-mean random
/// component of the configured SD. For the uniform distribution the
/// half-width is sd * sqrt(3) so the SD matches.
struct ErrorModel {
    double bias = 0.0;        // meters
    double random_sd = 0.0;   // meters
    NoiseDistribution distribution = NoiseDistribution::gaussian;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (random_sd < 0.0) throw validation_error("error model: random_sd must be >= 0");
        if (!std::isfinite(bias)) throw validation_error("error model: non-finite bias");
    }
};

/// The standard 9-node measurement fixture: three anchors near the floor of
/// the [-2,2] x [-2,2] x [0,2] region and six mobile nodes, ranging at 4 Hz.
SwarmConfig default_config();

/// Smooth seeded ground-truth motion: per-axis low-pass-filtered random walks
/// drive a slowly rotating cluster of mobile nodes; anchors stay fixed. The
/// result respects the bounds, the speed cap, and keeps mobile-mobile
/// distances predominantly in [0.2, 2] m.
Trajectory generate_trajectory(const SwarmConfig& config, double duration_s,
                               std::uint64_t motion_seed, double sample_rate);

/// Checks timestamps (strictly increasing, uniform within 1e-9 s), bounds,
/// node count, and the per-node speed cap.
void validate_trajectory(const Trajectory& traj, const SwarmConfig& config,
                         double max_speed = 2.0);

Trajectory load_trajectory_csv(const std::filesystem::path& path, const SwarmConfig& config);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

/// Decimation by selection: keeps every (sample_rate / target_rate)-th sample
/// starting from the first. The ratio must be integral.
Trajectory downsample(const Trajectory& traj, double target_rate);

/// Synthetic ranging frames: true pairwise distance + bias + seeded random
/// error per measurement. Draws are keyed by (frame index, pair), so star
/// frames are exact projections of swarm frames under the same seed.
/// Distances are clamped below at 1e-6 m and flagged.
std::vector<RangingFrame> synthesize_rangings(const Trajectory& traj,
                                              const SwarmConfig& config,
                                              const ErrorModel& model, Topology topology);

std::vector<RangingFrame> load_rangings_csv(const std::filesystem::path& path);
void write_rangings_csv(const std::filesystem::path& path,
                        std::span<const RangingFrame> frames);

}  // namespace swarmloc
