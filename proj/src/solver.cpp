#include "swarmloc/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "swarmloc/rng.hpp"

namespace swarmloc {

namespace {

constexpr double kGuardDistance = 1e-9;   // meters, floor for gradient denominators
constexpr double kObjectiveFloor = 1e-15; // treat as a perfect fit

struct ResidualPair {
    NodePair pair;
    double measured;
};

// Valid pairs that involve at least one mobile node; anchor-anchor residuals
// are constant in x and excluded.
std::vector<ResidualPair> residual_pairs(const RangingFrame& frame) {
    std::vector<ResidualPair> out;
    out.reserve(frame.measurements.size());
    for (const auto& m : frame.measurements) {
        if (!m.valid) continue;
        if (is_anchor(m.pair.i) && is_anchor(m.pair.j)) continue;
        out.push_back({m.pair, m.distance});
    }
    return out;
}

void check_x_size(const OptimizationVector& x, const SwarmConfig& config) {
    if (static_cast<int>(x.size()) != 3 * config.n_mobile)
        throw validation_error("solver: optimization vector length must be 3 * n_mobile");
}

Point3 node_position(const SwarmConfig& config, std::span<const double> x, NodeId id) {
    if (is_anchor(id)) return config.anchors.positions[static_cast<std::size_t>(id)];
    const std::size_t base = static_cast<std::size_t>(id - kAnchorCount) * 3;
    return {x[base], x[base + 1], x[base + 2]};
}

double objective_over(std::span<const ResidualPair> pairs, const SwarmConfig& config,
                      std::span<const double> x) {
    double sum_sq = 0.0;
    for (const auto& rp : pairs) {
        const double dhat = euclidean_distance(node_position(config, x, rp.pair.i),
                                               node_position(config, x, rp.pair.j));
        const double r = rp.measured - dhat;
        sum_sq += r * r;
    }
    return std::sqrt(sum_sq / static_cast<double>(pairs.size()));
}

OptimizationVector project_onto(const Bounds& bounds, const OptimizationVector& x) {
    OptimizationVector out = x;
    for (std::size_t k = 0; k < out.size(); k += 3) {
        const Point3 p = bounds.clamp({out[k], out[k + 1], out[k + 2]});
        out[k] = p.x;
        out[k + 1] = p.y;
        out[k + 2] = p.z;
    }
    return out;
}

// Separate coincident nodes so gradient denominators stay above the guard.
void nudge_coincident(std::span<const ResidualPair> pairs, const SwarmConfig& config,
                      OptimizationVector& x) {
    for (int pass = 0; pass < 4; ++pass) {
        bool clean = true;
        for (const auto& rp : pairs) {
            const Point3 pi = node_position(config, x, rp.pair.i);
            const Point3 pj = node_position(config, x, rp.pair.j);
            if (euclidean_distance(pi, pj) >= kGuardDistance) continue;
            clean = false;
            const NodeId mobile = is_anchor(rp.pair.j) ? rp.pair.i : rp.pair.j;
            x[static_cast<std::size_t>(mobile - kAnchorCount) * 3 + 2] += kGuardDistance;
        }
        if (clean) return;
    }
}

void require_determined(std::span<const ResidualPair> pairs, const SwarmConfig& config) {
    if (pairs.size() < static_cast<std::size_t>(3 * config.n_mobile))
        throw numeric_error("solver: underdetermined frame (" + std::to_string(pairs.size()) +
                            " constraints for " + std::to_string(3 * config.n_mobile) +
                            " unknowns)");
    std::vector<int> per_mobile(static_cast<std::size_t>(config.n_mobile), 0);
    for (const auto& rp : pairs) {
        if (!is_anchor(rp.pair.i)) ++per_mobile[static_cast<std::size_t>(rp.pair.i - kAnchorCount)];
        if (!is_anchor(rp.pair.j)) ++per_mobile[static_cast<std::size_t>(rp.pair.j - kAnchorCount)];
    }
    for (std::size_t m = 0; m < per_mobile.size(); ++m)
        if (per_mobile[m] < 3)
            throw numeric_error("solver: underdetermined frame (mobile node " +
                                std::to_string(m + kAnchorCount) + " has " +
                                std::to_string(per_mobile[m]) + " constraints)");
}

// Residual vector and Jacobian of r_k = d_k - dhat_k(x).
void residuals_and_jacobian(std::span<const ResidualPair> pairs, const SwarmConfig& config,
                            std::span<const double> x, Eigen::VectorXd& r,
                            Eigen::MatrixXd& jac) {
    const auto m_rows = static_cast<Eigen::Index>(pairs.size());
    const auto n_cols = static_cast<Eigen::Index>(x.size());
    r.resize(m_rows);
    jac.setZero(m_rows, n_cols);
    for (Eigen::Index k = 0; k < m_rows; ++k) {
        const auto& rp = pairs[static_cast<std::size_t>(k)];
        const Point3 pi = node_position(config, x, rp.pair.i);
        const Point3 pj = node_position(config, x, rp.pair.j);
        const double dhat = std::max(euclidean_distance(pi, pj), kGuardDistance);
        r(k) = rp.measured - dhat;
        const Point3 dir = (pi - pj) * (1.0 / dhat);  // d(dhat)/d(pi)
        if (!is_anchor(rp.pair.i)) {
            const auto c = static_cast<Eigen::Index>(rp.pair.i - kAnchorCount) * 3;
            jac(k, c) = -dir.x;
            jac(k, c + 1) = -dir.y;
            jac(k, c + 2) = -dir.z;
        }
        if (!is_anchor(rp.pair.j)) {
            const auto c = static_cast<Eigen::Index>(rp.pair.j - kAnchorCount) * 3;
            jac(k, c) = dir.x;
            jac(k, c + 1) = dir.y;
            jac(k, c + 2) = dir.z;
        }
    }
}

}  // namespace

OptimizationVector pack_positions(std::span<const Point3> positions) {
    OptimizationVector x;
    x.reserve(positions.size() * 3);
    for (const Point3& p : positions) {
        x.push_back(p.x);
        x.push_back(p.y);
        x.push_back(p.z);
    }
    return x;
}

std::vector<Point3> unpack_positions(std::span<const double> coords) {
    if (coords.size() % 3 != 0)
        throw validation_error("unpack_positions: length must be a multiple of 3");
    std::vector<Point3> out;
    out.reserve(coords.size() / 3);
    for (std::size_t k = 0; k < coords.size(); k += 3)
        out.push_back({coords[k], coords[k + 1], coords[k + 2]});
    return out;
}

double objective_rmse(const OptimizationVector& x, const RangingFrame& frame,
                      const SwarmConfig& config) {
    config.validate();
    check_x_size(x, config);
    const auto pairs = residual_pairs(frame);
    if (pairs.empty()) throw validation_error("objective_rmse: empty residual set");
    return objective_over(pairs, config, x);
}

OptimizationVector objective_gradient(const OptimizationVector& x,
                                      const RangingFrame& frame,
                                      const SwarmConfig& config) {
    config.validate();
    check_x_size(x, config);
    const auto pairs = residual_pairs(frame);
    if (pairs.empty()) throw validation_error("objective_gradient: empty residual set");

    const double f = objective_over(pairs, config, x);
    OptimizationVector grad(x.size(), 0.0);
    if (f <= kObjectiveFloor) return grad;  // minimizing subgradient at a perfect fit

    const double m_count = static_cast<double>(pairs.size());
    for (const auto& rp : pairs) {
        const Point3 pi = node_position(config, x, rp.pair.i);
        const Point3 pj = node_position(config, x, rp.pair.j);
        const double dhat = euclidean_distance(pi, pj);
        if (dhat < kGuardDistance)
            throw numeric_error("objective_gradient: degenerate pair (reconstructed distance below guard)");
        const double r = rp.measured - dhat;
        // d f / d c = (1 / (f M)) * sum_k r_k * (-d dhat_k / d c)
        const double scale = r / (f * m_count * dhat);
        const Point3 dir = pi - pj;
        if (!is_anchor(rp.pair.i)) {
            const std::size_t c = static_cast<std::size_t>(rp.pair.i - kAnchorCount) * 3;
            grad[c] += -scale * dir.x;
            grad[c + 1] += -scale * dir.y;
            grad[c + 2] += -scale * dir.z;
        }
        if (!is_anchor(rp.pair.j)) {
            const std::size_t c = static_cast<std::size_t>(rp.pair.j - kAnchorCount) * 3;
            grad[c] += scale * dir.x;
            grad[c + 1] += scale * dir.y;
            grad[c + 2] += scale * dir.z;
        }
    }
    return grad;
}

SolveResult solve_frame(const RangingFrame& frame, const SwarmConfig& config,
                        const OptimizationVector& init, const SolverSettings& settings) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    settings.validate();
    check_x_size(init, config);
    const auto pairs = residual_pairs(frame);
    if (pairs.empty()) throw validation_error("solve_frame: empty residual set");
    require_determined(pairs, config);

    OptimizationVector x = project_onto(settings.bounds, init);
    nudge_coincident(pairs, config, x);
    double f = objective_over(pairs, config, x);
    if (!std::isfinite(f)) throw numeric_error("solve_frame: non-finite objective at init");

    const auto n_vars = static_cast<Eigen::Index>(x.size());
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    int iterations = 0;

    while (iterations < settings.max_inner_iterations && f > kObjectiveFloor) {
        residuals_and_jacobian(pairs, config, x, r, jac);

        // Gauss-Newton step on S = sum r^2 with a small Levenberg damping for
        // rank-deficient geometry.
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;
        double damping = 1e-12 * std::max(1.0, jtj.diagonal().maxCoeff());
        Eigen::VectorXd step;
        for (int attempt = 0; attempt < 3; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal().array() += damping;
            step = damped.ldlt().solve(-jtr);
            if (step.allFinite()) break;
            damping *= 1e6;
        }

        auto try_direction = [&](const Eigen::VectorXd& dir, int max_halvings,
                                 OptimizationVector& accepted, double& f_accepted) {
            double alpha = 1.0;
            for (int h = 0; h < max_halvings; ++h, alpha *= 0.5) {
                OptimizationVector cand = x;
                for (Eigen::Index c = 0; c < n_vars; ++c)
                    cand[static_cast<std::size_t>(c)] += alpha * dir(c);
                cand = project_onto(settings.bounds, cand);
                const double fc = objective_over(pairs, config, cand);
                if (!std::isfinite(fc))
                    throw numeric_error("solve_frame: non-finite objective during iteration");
                if (fc < f) {
                    accepted = std::move(cand);
                    f_accepted = fc;
                    return true;
                }
            }
            return false;
        };

        OptimizationVector x_next;
        double f_next = f;
        bool accepted = step.allFinite() && try_direction(step, 30, x_next, f_next);
        if (!accepted) {
            const Eigen::VectorXd descent = -jtr;  // steepest descent on S
            if (descent.norm() > 0.0)
                accepted = try_direction(descent, 40, x_next, f_next);
        }
        if (!accepted) break;  // no decreasing step in either direction

        double step_sq = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) {
            const double d = x_next[c] - x[c];
            step_sq += d * d;
        }
        const double rel_decrease = (f - f_next) / std::max(f, kObjectiveFloor);
        x = std::move(x_next);
        f = f_next;
        ++iterations;
        if (std::sqrt(step_sq) < settings.step_tol) break;
        if (rel_decrease < settings.convergence_tol) break;
    }

    SolveResult result;
    result.positions = unpack_positions(x);
    result.rmse = f;
    result.inner_iterations = iterations;
    result.restarts_used = 1;
    result.converged = f <= settings.resolved_rmse_threshold();
    result.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

SolveResult refine_with_restarts(const RangingFrame& frame, const SwarmConfig& config,
                                 const OptimizationVector& init,
                                 const SolverSettings& settings) {
    const auto t0 = std::chrono::steady_clock::now();
    settings.validate();
    const double threshold = settings.resolved_rmse_threshold();
    SplitMix rng(settings.rng_seed);

    OptimizationVector current_init = project_onto(settings.bounds, init);
    SolveResult best;
    bool have_best = false;

    for (int attempt = 1; attempt <= settings.max_restarts; ++attempt) {
        SolveResult res = solve_frame(frame, config, current_init, settings);
        res.restarts_used = attempt;
        if (!have_best || res.rmse < best.rmse) {
            best = res;
            have_best = true;
        }
        if (res.rmse <= threshold) {
            res.converged = true;
            res.elapsed_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return res;
        }
        if (attempt == settings.max_restarts) break;

        const OptimizationVector& source =
            settings.perturb_best ? pack_positions(best.positions) : current_init;
        OptimizationVector next = source;
        for (double& c : next)
            c += rng.next_uniform(-settings.perturbation_magnitude,
                                  settings.perturbation_magnitude);
        current_init = project_onto(settings.bounds, next);
    }

    best.restarts_used = settings.max_restarts;
    best.converged = best.rmse <= threshold;
    best.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return best;
}

std::vector<SolveResult> track_sequence(std::span<const RangingFrame> frames,
                                        const SwarmConfig& config,
                                        const OptimizationVector& first_init,
                                        const SolverSettings& settings) {
    std::vector<SolveResult> results;
    results.reserve(frames.size());
    OptimizationVector init = first_init;
    for (std::size_t idx = 0; idx < frames.size(); ++idx) {
        SolverSettings frame_settings = settings;
        frame_settings.rng_seed = mix_seed(settings.rng_seed, idx);
        try {
            results.push_back(refine_with_restarts(frames[idx], config, init, frame_settings));
        } catch (const std::exception& e) {
            throw numeric_error("track_sequence: frame " + std::to_string(idx) + ": " + e.what());
        }
        init = pack_positions(results.back().positions);
    }
    return results;
}

}  // namespace swarmloc
