#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "swarmloc/rng.hpp"
#include "swarmloc/swarm.hpp"
#include "swarmloc/synthesis.hpp"

namespace test_helpers {

using swarmloc::Point3;

// 3x3 rotation from a random unit quaternion.
struct Rotation {
    std::array<std::array<double, 3>, 3> m;

    Point3 apply(const Point3& p) const {
        return {m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
                m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
                m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z};
    }
};

inline Rotation random_rotation(swarmloc::SplitMix& rng) {
    double q[4];
    double norm = 0.0;
    for (double& c : q) {
        c = rng.next_gaussian();
        norm += c * c;
    }
    norm = std::sqrt(norm);
    for (double& c : q) c /= norm;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Rotation r;
    r.m = {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
            {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
            {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
    return r;
}

inline Point3 random_point_in(const swarmloc::Bounds& b, swarmloc::SplitMix& rng) {
    return {rng.next_uniform(b.min.x, b.max.x), rng.next_uniform(b.min.y, b.max.y),
            rng.next_uniform(b.min.z, b.max.z)};
}

// Distance recomputed at extended precision.
inline long double distance_oracle(const Point3& a, const Point3& b) {
    const long double dx = static_cast<long double>(a.x) - b.x;
    const long double dy = static_cast<long double>(a.y) - b.y;
    const long double dz = static_cast<long double>(a.z) - b.z;
    return sqrtl(dx * dx + dy * dy + dz * dz);
}

// A complete zero-noise swarm frame for the given mobile positions.
inline swarmloc::RangingFrame exact_frame(const swarmloc::SwarmConfig& config,
                                          const std::vector<Point3>& mobiles,
                                          double timestamp = 0.0) {
    swarmloc::RangingFrame frame;
    frame.timestamp = timestamp;
    const auto pairs = swarmloc::enumerate_pairs(config, swarmloc::Topology::swarm);
    const auto dists = swarmloc::reconstruct_distances(config, mobiles, pairs);
    for (std::size_t k = 0; k < pairs.size(); ++k)
        frame.measurements.push_back({pairs[k], dists[k], true, false});
    return frame;
}

}  // namespace test_helpers
