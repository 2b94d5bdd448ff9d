#pragma once

#include <span>
#include <vector>

#include "swarmloc/swarm.hpp"

namespace swarmloc {

/// Moving-average smoothing window, expressed as a duration so the sample
/// count follows the update rate.
struct FilterSettings {
    double window_seconds = 0.5;
    double sample_rate = 4.0;

    void validate() const {
        if (!(window_seconds > 0.0))
            throw validation_error("filter: window_seconds must be > 0");
        if (!(sample_rate > 0.0))
            throw validation_error("filter: sample_rate must be > 0");
    }
};

/// round(window_seconds * sample_rate), floored at 1 sample.
int window_from_rate(const FilterSettings& settings);

/// Zero-phase smoothing: length-w moving average applied forward, then again
/// on the reversed series, with the series mirrored at both ends (w-1 samples
/// of reflection padding). Output length equals input length.
std::vector<double> filter_series(std::span<const double> values,
                                  const FilterSettings& settings);
std::vector<double> filter_series(std::span<const double> values, int window);

/// Applies filter_series to every pair's distance series across the frame
/// history. Timestamps and validity masks are preserved; a pair that is not
/// valid in every frame is passed through unfiltered.
std::vector<RangingFrame> filter_frame_history(std::span<const RangingFrame> frames,
                                               const FilterSettings& settings);

}  // namespace swarmloc
