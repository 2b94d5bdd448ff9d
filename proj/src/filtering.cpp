#include "swarmloc/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace swarmloc {

namespace {

// Mirror an out-of-range index about the series ends (the end samples are not
// duplicated). Bounces until the index lands inside [0, n).
std::ptrdiff_t reflect_index(std::ptrdiff_t t, std::ptrdiff_t n) {
    if (n == 1) return 0;
    while (t < 0 || t >= n) {
        if (t < 0) t = -t;
        if (t >= n) t = 2 * (n - 1) - t;
    }
    return t;
}

// Causal length-w moving average with reflected edges.
std::vector<double> moving_average(std::span<const double> x, int w) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    std::vector<double> y(x.size());
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        double acc = 0.0;
        for (int k = 0; k < w; ++k) acc += x[static_cast<std::size_t>(reflect_index(t - k, n))];
        y[static_cast<std::size_t>(t)] = acc / w;
    }
    return y;
}

}  // namespace

int window_from_rate(const FilterSettings& settings) {
    settings.validate();
    const auto w = static_cast<int>(std::llround(settings.window_seconds * settings.sample_rate));
    return std::max(1, w);
}

std::vector<double> filter_series(std::span<const double> values, int window) {
    if (values.empty()) throw validation_error("filter_series: empty series");
    if (window < 1) throw validation_error("filter_series: window must be >= 1");
    for (double v : values)
        if (!std::isfinite(v)) throw validation_error("filter_series: non-finite sample");
    if (window == 1) return {values.begin(), values.end()};

    std::vector<double> forward = moving_average(values, window);
    std::reverse(forward.begin(), forward.end());
    std::vector<double> backward = moving_average(forward, window);
    std::reverse(backward.begin(), backward.end());
    return backward;
}

std::vector<double> filter_series(std::span<const double> values,
                                  const FilterSettings& settings) {
    return filter_series(values, window_from_rate(settings));
}

std::vector<RangingFrame> filter_frame_history(std::span<const RangingFrame> frames,
                                               const FilterSettings& settings) {
    const int window = window_from_rate(settings);
    if (frames.empty()) return {};

    const std::size_t n_pairs = frames[0].measurements.size();
    for (std::size_t f = 1; f < frames.size(); ++f) {
        if (frames[f].measurements.size() != n_pairs)
            throw validation_error("filter_frame_history: frame " + std::to_string(f) +
                                   " has a different pair set");
        for (std::size_t k = 0; k < n_pairs; ++k)
            if (!(frames[f].measurements[k].pair == frames[0].measurements[k].pair))
                throw validation_error("filter_frame_history: frame " + std::to_string(f) +
                                       " has a different pair set");
        if (!(frames[f].timestamp > frames[f - 1].timestamp))
            throw validation_error("filter_frame_history: timestamps not strictly increasing at frame " +
                                   std::to_string(f));
    }

    std::vector<RangingFrame> out(frames.begin(), frames.end());
    std::vector<double> series(frames.size());
    for (std::size_t k = 0; k < n_pairs; ++k) {
        bool all_valid = true;
        for (std::size_t f = 0; f < frames.size(); ++f) {
            all_valid = all_valid && frames[f].measurements[k].valid;
            series[f] = frames[f].measurements[k].distance;
        }
        if (!all_valid) continue;
        const std::vector<double> smoothed = filter_series(series, window);
        for (std::size_t f = 0; f < frames.size(); ++f)
            out[f].measurements[k].distance = smoothed[f];
    }
    return out;
}

}  // namespace swarmloc
