#include "swarmloc/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "swarmloc/rng.hpp"

namespace swarmloc {

namespace {

constexpr double kMinDistance = 1e-6;      // synthesis clamp floor, meters
constexpr double kPairBandLow = 0.2;       // typical mobile-mobile distances
constexpr double kPairBandHigh = 2.0;
constexpr double kBandMinFraction = 0.9;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Trajectory generation
// ---------------------------------------------------------------------------

// Triple moving average of a cumulative random walk: C2-smooth, zero phase is
// irrelevant here, only smoothness matters.
std::vector<double> smooth_walk(SplitMix& rng, std::size_t n, int window) {
    std::vector<double> walk(n);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += rng.next_gaussian();
        walk[k] = acc;
    }
    for (int pass = 0; pass < 3; ++pass) {
        std::vector<double> out(n);
        double running = 0.0;
        std::size_t count = 0;
        // trailing-window average; edge windows shrink
        for (std::size_t k = 0; k < n; ++k) {
            running += walk[k];
            ++count;
            if (count > static_cast<std::size_t>(window)) {
                running -= walk[k - static_cast<std::size_t>(window)];
                --count;
            }
            out[k] = running / static_cast<double>(count);
        }
        walk.swap(out);
    }
    return walk;
}

// Rescale a smooth series to (mid +/- half) with per-step increments capped at
// max_step.
void fit_series(std::vector<double>& s, double mid, double half, double max_step) {
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double max_dev = 0.0, max_inc = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        s[k] -= mean;
        max_dev = std::max(max_dev, std::abs(s[k]));
        if (k > 0) max_inc = std::max(max_inc, std::abs(s[k] - s[k - 1]));
    }
    double scale = 1.0;
    if (max_dev > 0.0) scale = half / max_dev;
    if (max_inc > 0.0) scale = std::min(scale, max_step / max_inc);
    for (double& v : s) v = mid + v * scale;
}

std::array<Point3, 3> rotation_rows(double yaw, double pitch, double roll) {
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    const double cr = std::cos(roll), sr = std::sin(roll);
    // R = Rz(yaw) * Ry(pitch) * Rx(roll), rows returned
    return {Point3{cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr},
            Point3{sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr},
            Point3{-sp, cp * sr, cp * cr}};
}

Point3 rotate(const std::array<Point3, 3>& rows, const Point3& p) {
    return {rows[0].dot(p), rows[1].dot(p), rows[2].dot(p)};
}

// Evenly spread unit directions (Fibonacci sphere).
std::vector<Point3> unit_directions(int count) {
    std::vector<Point3> dirs;
    dirs.reserve(static_cast<std::size_t>(count));
    const double golden_angle = 2.399963229728653;
    for (int k = 0; k < count; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * k;
        dirs.push_back({r * std::cos(phi), r * std::sin(phi), z});
    }
    return dirs;
}

}  // namespace

SwarmConfig default_config() {
    SwarmConfig config;
    config.anchors.positions = {Point3{-2.0, -2.0, 0.2}, Point3{2.0, -2.0, 0.2},
                                Point3{0.0, 2.0, 0.4}};
    config.n_mobile = 6;
    config.bounds = Bounds{{-2.0, -2.0, 0.0}, {2.0, 2.0, 2.0}};
    config.update_rate = 4.0;
    return config;
}

Trajectory generate_trajectory(const SwarmConfig& config, double duration_s,
                               std::uint64_t motion_seed, double sample_rate) {
    config.validate();
    if (!(sample_rate > 0.0)) throw validation_error("generate_trajectory: sample_rate must be > 0");
    if (!(duration_s > 0.0)) throw validation_error("generate_trajectory: duration must be > 0");
    const auto n_samples = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    if (n_samples < 1)
        throw validation_error("generate_trajectory: duration shorter than one sample period");

    const double dt = 1.0 / sample_rate;
    const int n_mobile = config.n_mobile;

    // Cluster layout: unit directions scaled so the smallest base separation
    // clears the 0.2 m band floor with breathing and jitter applied.
    std::vector<Point3> base = unit_directions(n_mobile);
    double min_chord = 2.0;
    for (std::size_t a = 0; a + 1 < base.size(); ++a)
        for (std::size_t b = a + 1; b < base.size(); ++b)
            min_chord = std::min(min_chord, euclidean_distance(base[a], base[b]));
    double radius = 0.35;
    if (n_mobile > 1) radius = std::clamp(0.34 / min_chord, 0.2, 0.6);
    for (Point3& d : base) d = d * radius;

    const double breathing_span = 0.1;   // relative cluster scale wobble
    const double jitter_amp = 0.03;      // per-node independent wobble, meters
    const double margin = radius * (1.0 + breathing_span) + jitter_amp + 0.05;

    const Point3 lo = config.bounds.min, hi = config.bounds.max;
    const double half_x = (hi.x - lo.x) / 2 - margin;
    const double half_y = (hi.y - lo.y) / 2 - margin;
    const double z_range = hi.z - lo.z;
    const double half_z = std::min(z_range / 2 - margin, 0.10 * z_range);
    if (half_x <= 0.0 || half_y <= 0.0 || half_z <= 0.0)
        throw validation_error("generate_trajectory: bounds too small for the node cluster");
    const double mid_x = (lo.x + hi.x) / 2;
    const double mid_y = (lo.y + hi.y) / 2;
    // The cluster roams the upper half of the height range, clear of the
    // anchor plane near the floor.
    const double mid_z = std::min(lo.z + 0.575 * z_range, hi.z - margin - half_z);

    SplitMix rng(motion_seed);
    const int smooth_window = std::max(1, static_cast<int>(std::llround(2.5 * sample_rate)));

    std::vector<double> cx = smooth_walk(rng, n_samples, smooth_window);
    std::vector<double> cy = smooth_walk(rng, n_samples, smooth_window);
    std::vector<double> cz = smooth_walk(rng, n_samples, smooth_window);
    fit_series(cx, mid_x, half_x, 0.80 * dt);
    fit_series(cy, mid_y, half_y, 0.80 * dt);
    fit_series(cz, mid_z, half_z, 0.40 * dt);

    std::vector<double> yaw = smooth_walk(rng, n_samples, smooth_window);
    std::vector<double> pitch = smooth_walk(rng, n_samples, smooth_window);
    std::vector<double> roll = smooth_walk(rng, n_samples, smooth_window);
    fit_series(yaw, 0.0, 6.0, 0.50 * dt);
    fit_series(pitch, 0.0, 1.0, 0.25 * dt);
    fit_series(roll, 0.0, 1.0, 0.25 * dt);

    std::vector<double> breathing = smooth_walk(rng, n_samples, smooth_window);
    fit_series(breathing, 1.0, breathing_span, 0.10 * dt);

    std::vector<std::vector<double>> jitter;
    jitter.reserve(static_cast<std::size_t>(n_mobile) * 3);
    for (int k = 0; k < n_mobile * 3; ++k) {
        std::vector<double> j = smooth_walk(rng, n_samples, smooth_window);
        fit_series(j, 0.0, jitter_amp, 0.05 * dt);
        jitter.push_back(std::move(j));
    }

    Trajectory traj;
    traj.sample_rate = sample_rate;
    traj.samples.resize(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
        TrajectorySample& sample = traj.samples[s];
        sample.timestamp = static_cast<double>(s) / sample_rate;
        sample.positions.reserve(static_cast<std::size_t>(config.node_count()));
        for (const Point3& a : config.anchors.positions) sample.positions.push_back(a);
        const auto rot = rotation_rows(yaw[s], pitch[s], roll[s]);
        const Point3 center{cx[s], cy[s], cz[s]};
        for (int m = 0; m < n_mobile; ++m) {
            const auto mu = static_cast<std::size_t>(m);
            Point3 p = center + rotate(rot, base[mu]) * breathing[s];
            p.x += jitter[mu * 3][s];
            p.y += jitter[mu * 3 + 1][s];
            p.z += jitter[mu * 3 + 2][s];
            sample.positions.push_back(config.bounds.clamp(p));
        }
    }

    validate_trajectory(traj, config);

    if (n_mobile > 1) {
        std::size_t in_band = 0, total = 0;
        for (const auto& sample : traj.samples) {
            for (int a = 0; a < n_mobile; ++a) {
                for (int b = a + 1; b < n_mobile; ++b) {
                    const double d = euclidean_distance(
                        sample.positions[static_cast<std::size_t>(kAnchorCount + a)],
                        sample.positions[static_cast<std::size_t>(kAnchorCount + b)]);
                    ++total;
                    if (d >= kPairBandLow && d <= kPairBandHigh) ++in_band;
                }
            }
        }
        if (static_cast<double>(in_band) < kBandMinFraction * static_cast<double>(total))
            throw validation_error(
                "generate_trajectory: mobile separations left the [0.2, 2] m band");
    }
    return traj;
}

void validate_trajectory(const Trajectory& traj, const SwarmConfig& config,
                         double max_speed) {
    if (traj.samples.empty()) throw validation_error("trajectory: empty");
    if (!(traj.sample_rate > 0.0)) throw validation_error("trajectory: sample_rate must be > 0");
    const double dt = 1.0 / traj.sample_rate;
    const int n = config.node_count();
    for (std::size_t s = 0; s < traj.samples.size(); ++s) {
        const auto& sample = traj.samples[s];
        if (static_cast<int>(sample.positions.size()) != n)
            throw validation_error("trajectory: sample " + std::to_string(s) +
                                   " has wrong node count");
        for (const Point3& p : sample.positions) {
            if (!p.is_finite())
                throw validation_error("trajectory: non-finite position at sample " +
                                       std::to_string(s));
            if (!config.bounds.contains(p))
                throw validation_error("trajectory: out-of-bounds position at sample " +
                                       std::to_string(s));
        }
        if (s > 0) {
            const double gap = sample.timestamp - traj.samples[s - 1].timestamp;
            if (!(gap > 0.0))
                throw validation_error("trajectory: timestamps not strictly increasing at sample " +
                                       std::to_string(s));
            if (std::abs(gap - dt) > 1e-9)
                throw validation_error("trajectory: non-uniform timestamp at sample " +
                                       std::to_string(s));
            for (int k = 0; k < n; ++k) {
                const double step = euclidean_distance(
                    sample.positions[static_cast<std::size_t>(k)],
                    traj.samples[s - 1].positions[static_cast<std::size_t>(k)]);
                if (step > max_speed * dt * (1.0 + 1e-9))
                    throw validation_error("trajectory: speed cap exceeded at sample " +
                                           std::to_string(s));
            }
        }
    }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot open for writing: " + path.string());
    out << "t";
    const int n = traj.node_count();
    for (int k = 0; k < n; ++k)
        out << ",node_" << k << "_x,node_" << k << "_y,node_" << k << "_z";
    out << "\n";
    for (const auto& sample : traj.samples) {
        out << format_double(sample.timestamp);
        for (const Point3& p : sample.positions)
            out << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
                << format_double(p.z);
        out << "\n";
    }
    if (!out) throw validation_error("write failed: " + path.string());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double parse_double_field(const std::string& field, const std::string& context) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0')
        throw validation_error(context + ": not a number: '" + field + "'");
    return v;
}

}  // namespace

Trajectory load_trajectory_csv(const std::filesystem::path& path, const SwarmConfig& config) {
    config.validate();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw validation_error(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv_line(line);
    const int n = config.node_count();
    if (static_cast<int>(header.size()) != 1 + 3 * n)
        throw validation_error(path.string() + ": header has " +
                               std::to_string(header.size()) + " columns, expected " +
                               std::to_string(1 + 3 * n) + " for " + std::to_string(n) +
                               " nodes (node-count mismatch)");
    if (header[0] != "t") throw validation_error(path.string() + ": first column must be 't'");
    for (int k = 0; k < n; ++k) {
        const std::string base = "node_" + std::to_string(k) + "_";
        const auto col = static_cast<std::size_t>(1 + 3 * k);
        if (header[col] != base + "x" || header[col + 1] != base + "y" ||
            header[col + 2] != base + "z")
            throw validation_error(path.string() + ": unexpected column names for node " +
                                   std::to_string(k));
    }

    Trajectory traj;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string context = path.string() + ": row " + std::to_string(row);
        if (fields.size() != header.size())
            throw validation_error(context + ": wrong field count");
        TrajectorySample sample;
        sample.timestamp = parse_double_field(fields[0], context);
        sample.positions.reserve(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const auto col = static_cast<std::size_t>(1 + 3 * k);
            sample.positions.push_back({parse_double_field(fields[col], context),
                                        parse_double_field(fields[col + 1], context),
                                        parse_double_field(fields[col + 2], context)});
        }
        if (!traj.samples.empty() && sample.timestamp <= traj.samples.back().timestamp)
            throw validation_error(context + ": duplicate or non-increasing timestamp");
        traj.samples.push_back(std::move(sample));
    }
    if (traj.samples.size() < 2)
        throw validation_error(path.string() + ": need at least 2 samples");

    const double span = traj.samples.back().timestamp - traj.samples.front().timestamp;
    traj.sample_rate = static_cast<double>(traj.samples.size() - 1) / span;
    validate_trajectory(traj, config);
    return traj;
}

Trajectory downsample(const Trajectory& traj, double target_rate) {
    if (!(target_rate > 0.0)) throw validation_error("downsample: target_rate must be > 0");
    if (traj.samples.empty()) throw validation_error("downsample: empty trajectory");
    const double ratio = traj.sample_rate / target_rate;
    const auto stride = static_cast<std::size_t>(std::llround(ratio));
    if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio)
        throw validation_error("downsample: target rate must divide the sample rate evenly");

    Trajectory out;
    out.sample_rate = target_rate;
    out.samples.reserve(traj.samples.size() / stride + 1);
    for (std::size_t s = 0; s < traj.samples.size(); s += stride)
        out.samples.push_back(traj.samples[s]);
    return out;
}

std::vector<RangingFrame> synthesize_rangings(const Trajectory& traj,
                                              const SwarmConfig& config,
                                              const ErrorModel& model, Topology topology) {
    config.validate();
    model.validate();
    if (traj.node_count() != config.node_count())
        throw validation_error("synthesize_rangings: trajectory node count mismatch");

    const std::vector<NodePair> pairs = enumerate_pairs(config, topology);
    const double uniform_half = model.random_sd * std::sqrt(3.0);

    std::vector<RangingFrame> frames;
    frames.reserve(traj.samples.size());
    for (std::size_t f = 0; f < traj.samples.size(); ++f) {
        const auto& sample = traj.samples[f];
        RangingFrame frame;
        frame.timestamp = sample.timestamp;
        frame.measurements.reserve(pairs.size());
        for (const NodePair& p : pairs) {
            const double d_true =
                euclidean_distance(sample.positions[static_cast<std::size_t>(p.i)],
                                   sample.positions[static_cast<std::size_t>(p.j)]);
            double noise = 0.0;
            if (model.random_sd > 0.0) {
                // Keyed by (frame, pair): star synthesis projects the swarm
                // draw for the same seed, and iteration order never matters.
                const std::uint64_t pair_key =
                    (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.i)) << 32) |
                    static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.j));
                SplitMix draw(mix_seed(mix_seed(model.rng_seed, f), pair_key));
                noise = model.distribution == NoiseDistribution::gaussian
                            ? model.random_sd * draw.next_gaussian()
                            : draw.next_uniform(-uniform_half, uniform_half);
            }
            double d = d_true + model.bias + noise;
            bool clamped = false;
            if (d < kMinDistance) {
                d = kMinDistance;
                clamped = true;
            }
            frame.measurements.push_back({p, d, true, clamped});
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

void write_rangings_csv(const std::filesystem::path& path,
                        std::span<const RangingFrame> frames) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot open for writing: " + path.string());
    out << "t,i,j,d,valid\n";
    for (const RangingFrame& frame : frames)
        for (const PairMeasurement& m : frame.measurements)
            out << format_double(frame.timestamp) << ',' << m.pair.i << ',' << m.pair.j
                << ',' << format_double(m.distance) << ',' << (m.valid ? 1 : 0) << "\n";
    if (!out) throw validation_error("write failed: " + path.string());
}

std::vector<RangingFrame> load_rangings_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw validation_error(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,i,j,d,valid")
        throw validation_error(path.string() + ": expected header 't,i,j,d,valid'");

    std::vector<RangingFrame> frames;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string context = path.string() + ": row " + std::to_string(row);
        if (fields.size() != 5) throw validation_error(context + ": wrong field count");
        const double t = parse_double_field(fields[0], context);
        const double iv = parse_double_field(fields[1], context);
        const double jv = parse_double_field(fields[2], context);
        const auto i = static_cast<NodeId>(iv);
        const auto j = static_cast<NodeId>(jv);
        if (static_cast<double>(i) != iv || static_cast<double>(j) != jv || i < 0 || j < 0)
            throw validation_error(context + ": node ids must be non-negative integers");
        if (i >= j) throw validation_error(context + ": pair must have i < j");
        const double d = parse_double_field(fields[3], context);
        if (!(d > 0.0) || !std::isfinite(d))
            throw validation_error(context + ": distance must be positive and finite");
        const std::string& valid_field = fields[4];
        if (valid_field != "0" && valid_field != "1")
            throw validation_error(context + ": valid flag must be 0 or 1");

        if (frames.empty() || frames.back().timestamp != t) {
            if (!frames.empty() && t < frames.back().timestamp)
                throw validation_error(context + ": timestamps must be non-decreasing");
            frames.push_back(RangingFrame{t, {}});
        }
        frames.back().measurements.push_back({{i, j}, d, valid_field == "1", false});
    }
    for (RangingFrame& frame : frames)
        std::sort(frame.measurements.begin(), frame.measurements.end(),
                  [](const PairMeasurement& a, const PairMeasurement& b) {
                      return a.pair < b.pair;
                  });
    return frames;
}

}  // namespace swarmloc
