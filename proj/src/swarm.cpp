#include "swarmloc/swarm.hpp"

#include <algorithm>

namespace swarmloc {

namespace {

bool pair_less(const PairMeasurement& m, NodePair p) { return m.pair < p; }

}  // namespace

const PairMeasurement* RangingFrame::find(NodePair p) const {
    auto it = std::lower_bound(measurements.begin(), measurements.end(), p, pair_less);
    if (it == measurements.end() || !(it->pair == p)) return nullptr;
    return &*it;
}

PairMeasurement* RangingFrame::find(NodePair p) {
    auto it = std::lower_bound(measurements.begin(), measurements.end(), p, pair_less);
    if (it == measurements.end() || !(it->pair == p)) return nullptr;
    return &*it;
}

std::int64_t swarm_pair_count(int n) {
    if (n < 2) throw validation_error("swarm_pair_count: need at least 2 nodes");
    return static_cast<std::int64_t>(n) * (n - 1) / 2;
}

std::int64_t star_pair_count(int n_anchor, int n_tag) {
    if (n_anchor < 1 || n_tag < 1)
        throw validation_error("star_pair_count: counts must be >= 1");
    return static_cast<std::int64_t>(n_anchor) * n_tag;
}

std::vector<NodePair> enumerate_pairs(const SwarmConfig& config, Topology topology) {
    config.validate();
    const int n = config.node_count();
    std::vector<NodePair> pairs;
    if (topology == Topology::swarm) {
        pairs.reserve(static_cast<std::size_t>(swarm_pair_count(n)));
        for (NodeId i = 0; i < n; ++i)
            for (NodeId j = i + 1; j < n; ++j) pairs.push_back({i, j});
    } else {
        pairs.reserve(static_cast<std::size_t>(star_pair_count(kAnchorCount, config.n_mobile)));
        for (NodeId i = 0; i < kAnchorCount; ++i)
            for (NodeId j = kAnchorCount; j < n; ++j) pairs.push_back({i, j});
    }
    return pairs;
}

std::vector<double> reconstruct_distances(const SwarmConfig& config,
                                          std::span<const Point3> mobile_positions,
                                          std::span<const NodePair> pairs) {
    if (static_cast<int>(mobile_positions.size()) != config.n_mobile)
        throw validation_error("reconstruct_distances: mobile position count mismatch");

    auto node_position = [&](NodeId id) -> const Point3& {
        return is_anchor(id) ? config.anchors.positions[static_cast<std::size_t>(id)]
                             : mobile_positions[static_cast<std::size_t>(id - kAnchorCount)];
    };

    std::vector<double> out;
    out.reserve(pairs.size());
    for (const NodePair& p : pairs)
        out.push_back(euclidean_distance(node_position(p.i), node_position(p.j)));
    return out;
}

}  // namespace swarmloc
