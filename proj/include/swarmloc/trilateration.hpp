#pragma once

#include <span>
#include <vector>

#include "swarmloc/swarm.hpp"

namespace swarmloc {

struct NodeEstimate {
    Point3 position;
    bool valid = false;       // false when an anchor range was missing
    bool degenerate = false;  // sphere discriminant clamped
    bool ambiguous = false;   // bounds did not single out one candidate
    double range_rmse = 0.0;  // RMS anchor-range residual at the estimate
};

struct FrameEstimate {
    double timestamp = 0.0;
    std::vector<NodeEstimate> nodes;  // one per mobile node
    double elapsed_s = 0.0;
};

/// Closed-form baseline: per mobile node, trilaterate from the three anchor
/// ranges of the frame and keep the in-bounds candidate. Nodes with a missing
/// anchor range are marked invalid; the rest are still estimated.
FrameEstimate trilaterate_frame(const RangingFrame& frame, const SwarmConfig& config);

/// Memoryless mapping of trilaterate_frame over a sequence.
std::vector<FrameEstimate> trilaterate_sequence(std::span<const RangingFrame> frames,
                                                const SwarmConfig& config);

}  // namespace swarmloc
