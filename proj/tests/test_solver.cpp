#include <doctest.h>

#include <cmath>
#include <string>

#include "helpers.hpp"
#include "swarmloc/solver.hpp"
#include "swarmloc/synthesis.hpp"

using namespace swarmloc;
using test_helpers::exact_frame;
using test_helpers::random_point_in;

namespace {

SwarmConfig fixture(int n_mobile = 6) {
    SwarmConfig config = default_config();
    config.n_mobile = n_mobile;
    return config;
}

SolverSettings settings_for(const SwarmConfig& config) {
    SolverSettings s;
    s.bounds = config.bounds;
    s.rng_seed = 42;
    return s;
}

std::vector<Point3> random_mobiles(const SwarmConfig& config, SplitMix& rng,
                                   double z_min = 0.4) {
    std::vector<Point3> out;
    for (int m = 0; m < config.n_mobile; ++m) {
        Point3 p = random_point_in(config.bounds, rng);
        p.x = rng.next_uniform(-1.4, 1.4);
        p.y = rng.next_uniform(-1.4, 1.4);
        p.z = rng.next_uniform(z_min, 1.8);
        out.push_back(p);
    }
    return out;
}

// Independent objective recomputation at extended precision.
double objective_oracle(const OptimizationVector& x, const RangingFrame& frame,
                        const SwarmConfig& config) {
    long double sum = 0.0L;
    std::size_t count = 0;
    const auto mobiles = unpack_positions(x);
    auto pos = [&](NodeId id) {
        return is_anchor(id) ? config.anchors.positions[static_cast<std::size_t>(id)]
                             : mobiles[static_cast<std::size_t>(id - kAnchorCount)];
    };
    for (const auto& m : frame.measurements) {
        if (!m.valid || (is_anchor(m.pair.i) && is_anchor(m.pair.j))) continue;
        const long double r =
            static_cast<long double>(m.distance) -
            test_helpers::distance_oracle(pos(m.pair.i), pos(m.pair.j));
        sum += r * r;
        ++count;
    }
    return static_cast<double>(sqrtl(sum / static_cast<long double>(count)));
}

OptimizationVector central_difference_gradient(const OptimizationVector& x,
                                               const RangingFrame& frame,
                                               const SwarmConfig& config,
                                               double h = 1e-6) {
    OptimizationVector grad(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) {
        OptimizationVector hi = x, lo = x;
        hi[c] += h;
        lo[c] -= h;
        grad[c] = (objective_rmse(hi, frame, config) - objective_rmse(lo, frame, config)) /
                  (2.0 * h);
    }
    return grad;
}

void check_gradient_close(const OptimizationVector& analytic,
                          const OptimizationVector& fd, double rel_tol = 1e-5) {
    REQUIRE(analytic.size() == fd.size());
    for (std::size_t c = 0; c < analytic.size(); ++c) {
        const double denom = std::max(std::abs(fd[c]), 1e-10);
        const double rel = std::abs(analytic[c] - fd[c]) / denom;
        CHECK((rel <= rel_tol || std::abs(analytic[c] - fd[c]) <= 1e-12));
    }
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("objective is zero at ground truth on a clean frame") {
    const SwarmConfig config = fixture(3);
    SplitMix rng(401);
    const auto mobiles = random_mobiles(config, rng);
    const auto frame = exact_frame(config, mobiles);
    CHECK(objective_rmse(pack_positions(mobiles), frame, config) <= 1e-15);
}

TEST_CASE("constant bias shifts the objective by exactly the bias") {
    const SwarmConfig config = fixture(4);
    SplitMix rng(402);
    const auto mobiles = random_mobiles(config, rng);
    auto frame = exact_frame(config, mobiles);
    const double bias = 0.0173;
    for (auto& m : frame.measurements) m.distance += bias;
    CHECK(std::abs(objective_rmse(pack_positions(mobiles), frame, config) - bias) < 1e-12);
}

TEST_CASE("objective matches the extended-precision oracle") {
    const SwarmConfig config = fixture(2);  // 5-node system
    SplitMix rng(403);
    const auto truth = random_mobiles(config, rng);
    auto frame = exact_frame(config, truth);
    for (auto& m : frame.measurements) m.distance += rng.next_uniform(-0.2, 0.2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = pack_positions(random_mobiles(config, rng));
        CHECK(objective_rmse(x, frame, config) ==
              doctest::Approx(objective_oracle(x, frame, config)).epsilon(1e-13));
    }
}

TEST_CASE("gradient vanishes at a perfect fit") {
    const SwarmConfig config = fixture(3);
    SplitMix rng(404);
    const auto mobiles = random_mobiles(config, rng);
    const auto frame = exact_frame(config, mobiles);
    for (double g : objective_gradient(pack_positions(mobiles), frame, config))
        CHECK(g == 0.0);
}

TEST_CASE("gradient matches central differences, single mobile") {
    SwarmConfig config = fixture(1);
    SplitMix rng(405);
    const auto truth = random_mobiles(config, rng);
    auto frame = exact_frame(config, truth);
    for (auto& m : frame.measurements) m.distance += rng.next_uniform(-0.05, 0.05);
    const auto x = pack_positions(random_mobiles(config, rng));
    check_gradient_close(objective_gradient(x, frame, config),
                         central_difference_gradient(x, frame, config));
}

TEST_CASE("gradient matches central differences, full 9-node fixture") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(406);
    const auto truth = random_mobiles(config, rng);
    auto frame = exact_frame(config, truth);
    for (auto& m : frame.measurements) m.distance += rng.next_uniform(-0.05, 0.05);
    const auto x = pack_positions(random_mobiles(config, rng));
    check_gradient_close(objective_gradient(x, frame, config),
                         central_difference_gradient(x, frame, config));
}

TEST_CASE("gradient property: 100 random instances") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(407);
    for (int instance = 0; instance < 100; ++instance) {
        const auto truth = random_mobiles(config, rng);
        auto frame = exact_frame(config, truth);
        for (auto& m : frame.measurements) m.distance += rng.next_uniform(-0.08, 0.08);
        const auto x = pack_positions(random_mobiles(config, rng));
        check_gradient_close(objective_gradient(x, frame, config),
                             central_difference_gradient(x, frame, config));
    }
}

TEST_CASE("gradient rejects coincident nodes") {
    const SwarmConfig config = fixture(1);
    const std::vector<Point3> at_anchor = {config.anchors.positions[0]};
    auto frame = exact_frame(config, {{0.5, 0.5, 1.0}});
    CHECK_THROWS_AS(objective_gradient(pack_positions(at_anchor), frame, config),
                    numeric_error);
}

TEST_CASE("solve from ground truth stays put") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(408);
    const auto truth = random_mobiles(config, rng);
    const auto frame = exact_frame(config, truth);
    const auto result =
        solve_frame(frame, config, pack_positions(truth), settings_for(config));
    CHECK(result.rmse <= 1e-12);
    CHECK(result.inner_iterations <= 1);
    for (int m = 0; m < config.n_mobile; ++m)
        CHECK(euclidean_distance(result.positions[static_cast<std::size_t>(m)],
                                 truth[static_cast<std::size_t>(m)]) < 1e-9);
}

TEST_CASE("solve recovers truth from a perturbed start on a clean frame") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(409);
    const auto truth = random_mobiles(config, rng);
    const auto frame = exact_frame(config, truth);
    OptimizationVector init = pack_positions(truth);
    for (double& c : init) c += 0.1;
    const auto result = solve_frame(frame, config, init, settings_for(config));
    for (int m = 0; m < config.n_mobile; ++m)
        CHECK(euclidean_distance(result.positions[static_cast<std::size_t>(m)],
                                 truth[static_cast<std::size_t>(m)]) < 1e-6);
}

TEST_CASE("zero-noise exactness from inits within 0.25 m per coordinate") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(410);
    for (int instance = 0; instance < 10; ++instance) {
        const auto truth = random_mobiles(config, rng, 0.6);
        const auto frame = exact_frame(config, truth);
        OptimizationVector init = pack_positions(truth);
        for (double& c : init) c += rng.next_uniform(-0.25, 0.25);
        const auto result = solve_frame(frame, config, init, settings_for(config));
        for (int m = 0; m < config.n_mobile; ++m)
            CHECK(euclidean_distance(result.positions[static_cast<std::size_t>(m)],
                                     truth[static_cast<std::size_t>(m)]) < 1e-6);
    }
}

TEST_CASE("descent: noisy frame never ends above the initialization") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(411);
    const auto truth = random_mobiles(config, rng);
    auto frame = exact_frame(config, truth);
    for (auto& m : frame.measurements) m.distance += 0.05 * rng.next_gaussian();
    const auto init = pack_positions(truth);
    const double f_init = objective_rmse(init, frame, config);
    const auto result = solve_frame(frame, config, init, settings_for(config));
    CHECK(result.rmse <= f_init);
}

TEST_CASE("bound feasibility of returned positions") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(412);
    const auto truth = random_mobiles(config, rng);
    auto frame = exact_frame(config, truth);
    for (auto& m : frame.measurements) m.distance += 0.3 * rng.next_gaussian();
    OptimizationVector init = pack_positions(truth);
    for (double& c : init) c += rng.next_uniform(-0.5, 0.5);
    const auto result = solve_frame(frame, config, init, settings_for(config));
    for (const Point3& p : result.positions) CHECK(config.bounds.contains(p));
}

TEST_CASE("underdetermined frames are rejected") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(413);
    const auto truth = random_mobiles(config, rng);
    auto frame = exact_frame(config, truth);
    int kept = 0;
    for (auto& m : frame.measurements) {
        if (m.pair.i == 3 || m.pair.j == 3) {
            if (kept < 2)
                ++kept;  // leave node 3 only two constraints
            else
                m.valid = false;
        }
    }
    CHECK_THROWS_AS(
        solve_frame(frame, config, pack_positions(truth), settings_for(config)),
        numeric_error);
}

TEST_CASE("refinement returns immediately once under the threshold") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(414);
    const auto truth = random_mobiles(config, rng);
    const auto frame = exact_frame(config, truth);
    OptimizationVector init = pack_positions(truth);
    for (double& c : init) c += 0.05;
    const auto result = refine_with_restarts(frame, config, init, settings_for(config));
    CHECK(result.restarts_used == 1);
    CHECK(result.converged);
    CHECK(result.rmse <= 1e-10);
}

TEST_CASE("threshold zero on a noisy frame exhausts all ten runs") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(415);
    const auto truth = random_mobiles(config, rng);
    auto frame = exact_frame(config, truth);
    for (auto& m : frame.measurements) m.distance += 0.05 * rng.next_gaussian();
    SolverSettings settings = settings_for(config);
    settings.rmse_threshold = 0.0;
    const auto result =
        refine_with_restarts(frame, config, pack_positions(truth), settings);
    CHECK(result.restarts_used == 10);
    CHECK_FALSE(result.converged);
    CHECK(result.rmse > 0.0);
}

TEST_CASE("best-of-restarts is monotone in the restart budget") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(416);
    const auto truth = random_mobiles(config, rng);
    auto frame = exact_frame(config, truth);
    for (auto& m : frame.measurements) m.distance += 0.08 * rng.next_gaussian();
    SolverSettings settings = settings_for(config);
    settings.rmse_threshold = 0.0;
    OptimizationVector init = pack_positions(truth);
    for (double& c : init) c += 0.2;

    double previous = 1e300;
    for (int budget = 1; budget <= 10; ++budget) {
        settings.max_restarts = budget;
        const auto result = refine_with_restarts(frame, config, init, settings);
        CHECK(result.rmse <= previous + 1e-15);
        previous = result.rmse;
    }
}

TEST_CASE("identical seeds reproduce identical results") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(417);
    const auto truth = random_mobiles(config, rng);
    auto frame = exact_frame(config, truth);
    for (auto& m : frame.measurements) m.distance += 0.10 * rng.next_gaussian();
    SolverSettings settings = settings_for(config);
    settings.rmse_threshold = 0.0;
    OptimizationVector init = pack_positions(truth);
    for (double& c : init) c += 0.15;

    const auto a = refine_with_restarts(frame, config, init, settings);
    const auto b = refine_with_restarts(frame, config, init, settings);
    CHECK(a.rmse == b.rmse);
    CHECK(a.inner_iterations == b.inner_iterations);
    CHECK(a.restarts_used == b.restarts_used);
    REQUIRE(a.positions.size() == b.positions.size());
    for (std::size_t m = 0; m < a.positions.size(); ++m)
        CHECK(a.positions[m] == b.positions[m]);
}

TEST_CASE("tracking a static swarm with clean frames") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(418);
    const auto truth = random_mobiles(config, rng);
    std::vector<RangingFrame> frames;
    for (int f = 0; f < 20; ++f)
        frames.push_back(exact_frame(config, truth, f / config.update_rate));
    OptimizationVector init = pack_positions(truth);
    for (double& c : init) c += 0.05;
    const auto results = track_sequence(frames, config, init, settings_for(config));
    REQUIRE(results.size() == frames.size());
    for (const auto& res : results) {
        CHECK(res.rmse <= 1e-10);
        for (int m = 0; m < config.n_mobile; ++m)
            CHECK(euclidean_distance(res.positions[static_cast<std::size_t>(m)],
                                     truth[static_cast<std::size_t>(m)]) < 1e-6);
    }
}

TEST_CASE("tracking a moving swarm with clean frames") {
    const SwarmConfig config = fixture(6);
    const Trajectory traj = generate_trajectory(config, 30.0, 419, config.update_rate);
    const auto frames = synthesize_rangings(traj, config, ErrorModel{}, Topology::swarm);
    OptimizationVector init;
    for (int m = 0; m < config.n_mobile; ++m) {
        const Point3& p = traj.samples[0].positions[static_cast<std::size_t>(kAnchorCount + m)];
        init.push_back(p.x + 0.1);
        init.push_back(p.y + 0.1);
        init.push_back(p.z + 0.1);
    }
    const auto results = track_sequence(frames, config, init, settings_for(config));
    for (std::size_t f = 0; f < frames.size(); ++f)
        for (int m = 0; m < config.n_mobile; ++m)
            CHECK(euclidean_distance(
                      results[f].positions[static_cast<std::size_t>(m)],
                      traj.samples[f].positions[static_cast<std::size_t>(kAnchorCount + m)]) <
                  1e-4);
}

TEST_CASE("tracking reports the failing frame index") {
    const SwarmConfig config = fixture(6);
    SplitMix rng(420);
    const auto truth = random_mobiles(config, rng);
    std::vector<RangingFrame> frames;
    for (int f = 0; f < 4; ++f)
        frames.push_back(exact_frame(config, truth, f / config.update_rate));
    for (auto& m : frames[2].measurements) m.valid = false;

    try {
        track_sequence(frames, config, pack_positions(truth), settings_for(config));
        FAIL("expected numeric_error");
    } catch (const numeric_error& e) {
        CHECK(std::string(e.what()).find("frame 2") != std::string::npos);
    }
}

TEST_CASE("pack/unpack round trip") {
    const std::vector<Point3> points = {{1, 2, 3}, {-0.5, 0.25, 1.75}};
    CHECK(unpack_positions(pack_positions(points)) == points);
    CHECK_THROWS_AS(unpack_positions(std::vector<double>{1.0, 2.0}), validation_error);
}

}  // TEST_SUITE
