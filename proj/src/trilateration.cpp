#include "swarmloc/trilateration.hpp"

#include <chrono>
#include <cmath>

namespace swarmloc {

FrameEstimate trilaterate_frame(const RangingFrame& frame, const SwarmConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    FrameEstimate out;
    out.timestamp = frame.timestamp;
    out.nodes.resize(static_cast<std::size_t>(config.n_mobile));

    for (int m = 0; m < config.n_mobile; ++m) {
        const NodeId node = kAnchorCount + m;
        std::array<double, 3> ranges{};
        bool complete = true;
        for (NodeId a = 0; a < kAnchorCount; ++a) {
            const PairMeasurement* meas = frame.find({a, node});
            if (meas == nullptr || !meas->valid) {
                complete = false;
                break;
            }
            ranges[static_cast<std::size_t>(a)] = meas->distance;
        }
        NodeEstimate& est = out.nodes[static_cast<std::size_t>(m)];
        if (!complete) continue;  // marked invalid, other nodes still estimated

        const TrilaterationResult candidates = trilaterate(config.anchors, ranges);
        const SelectedPoint picked =
            select_in_bounds(candidates.first, candidates.second, config.bounds);
        est.valid = true;
        est.position = picked.point;
        est.degenerate = candidates.degenerate;
        est.ambiguous = picked.ambiguous;

        double sum_sq = 0.0;
        for (std::size_t a = 0; a < 3; ++a) {
            const double res =
                euclidean_distance(picked.point, config.anchors.positions[a]) - ranges[a];
            sum_sq += res * res;
        }
        est.range_rmse = std::sqrt(sum_sq / 3.0);
    }

    out.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<FrameEstimate> trilaterate_sequence(std::span<const RangingFrame> frames,
                                                const SwarmConfig& config) {
    std::vector<FrameEstimate> out;
    out.reserve(frames.size());
    for (const RangingFrame& frame : frames) out.push_back(trilaterate_frame(frame, config));
    return out;
}

}  // namespace swarmloc
