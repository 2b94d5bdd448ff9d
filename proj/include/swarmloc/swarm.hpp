#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "swarmloc/geometry.hpp"

namespace swarmloc {

using NodeId = std::int32_t;

inline constexpr int kAnchorCount = 3;

inline bool is_anchor(NodeId id) { return id < kAnchorCount; }

/// Unordered node pair stored with i < j.
struct NodePair {
    NodeId i = 0;
    NodeId j = 0;

    auto operator<=>(const NodePair&) const = default;
};

enum class Topology { swarm, star };

/// Node roster: three anchors plus n_mobile mobile nodes, the measurement
/// bounds, and the ranging update rate.
struct SwarmConfig {
    AnchorSet anchors;
    int n_mobile = 6;
    Bounds bounds;
    double update_rate = 4.0;  // ranging cycles per second

    int node_count() const { return kAnchorCount + n_mobile; }

    void validate() const {
        anchors.validate();
        bounds.validate();
        if (n_mobile < 1) throw validation_error("config: n_mobile must be >= 1");
        if (!(update_rate > 0.0)) throw validation_error("config: update_rate must be > 0");
    }
};

struct PairMeasurement {
    NodePair pair;
    double distance = 0.0;  // meters
    bool valid = true;
    bool clamped = false;  // synthesis clamped a non-positive distance
};

/// One update cycle's pairwise distance measurements, sorted by pair.
struct RangingFrame {
    double timestamp = 0.0;  // seconds
    std::vector<PairMeasurement> measurements;

    const PairMeasurement* find(NodePair p) const;
    PairMeasurement* find(NodePair p);
};

/// n(n-1)/2 pairwise measurements of a fully connected swarm cycle.
std::int64_t swarm_pair_count(int n);

/// n_anchor * n_tag anchor-to-mobile measurements of a star cycle.
std::int64_t star_pair_count(int n_anchor, int n_tag);

/// All pairs of the given topology in lexicographic order.
std::vector<NodePair> enumerate_pairs(const SwarmConfig& config, Topology topology);

/// Distances implied by candidate mobile positions, one per input pair.
/// Anchor coordinates come from the config, mobile coordinates from
/// `mobile_positions` (index 0 is node 3).
std::vector<double> reconstruct_distances(const SwarmConfig& config,
                                          std::span<const Point3> mobile_positions,
                                          std::span<const NodePair> pairs);

}  // namespace swarmloc
