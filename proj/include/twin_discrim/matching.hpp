#pragma once

/** @file
 * Behavioral matching: fit alpha, K and C (R held at its measured value) so the
 * twin's closed-loop traces reproduce a recorded dataset in the least-squares
 * sense, cost = w_y sum (y - yhat)^2 + w_u sum (u - uhat)^2.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dataset.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "twin.hpp"

namespace twin_discrim {

/// Order of the estimated parameters in every array below.
enum MatchParam : std::size_t { match_alpha = 0, match_k = 1, match_c = 2 };

struct ParamBounds {
    std::array<double, 3> lo{0.005, 0.05, 1.0};
    std::array<double, 3> hi{0.2, 2.0, 100.0};
};

struct MatchProblem {
    TimeSeriesDataset dataset;
    SimConfig sim;  ///< PID, supply and heatsink settings shared with the data source
    PeltierParams initial;
    ParamBounds bounds;
    double fixed_r = 3.3;
    double weight_y = 1.0;
    double weight_u = 1.0;

    void validate() const;
};

struct MatchOptions {
    bool multistart = true;
    int max_iterations = 100;
    double fd_relative_step = 1e-4;
    double relative_tolerance = 1e-12;
    unsigned threads = 1;
};

struct MatchResult {
    PeltierParams params;
    double sse = 0.0;
    int iterations = 0;
    bool converged = false;
    std::array<bool, 3> at_lower{};
    std::array<bool, 3> at_upper{};
    std::size_t start_index = 0;
    std::vector<double> residual_y;
    std::vector<double> residual_u;
    std::vector<double> cost_history;  ///< accepted costs, starting point first

    bool on_boundary() const
    {
        for (std::size_t i = 0; i < 3; ++i)
            if (at_lower[i] || at_upper[i]) return true;
        return false;
    }
};

class MatchError : public std::runtime_error {
public:
    MatchError(const std::string& what, MatchResult best)
        : std::runtime_error(what), best_(std::move(best)) {}
    const MatchResult& best() const noexcept { return best_; }

private:
    MatchResult best_;
};

namespace detail {

inline std::array<double, 3> to_vector(const PeltierParams& p) { return {p.alpha, p.k_cond, p.c_heat}; }

inline PeltierParams from_vector(const std::array<double, 3>& v, double r_ohm)
{
    return {v[match_alpha], r_ohm, v[match_k], v[match_c]};
}

inline SimConfig replay_config(const MatchProblem& prob)
{
    SimConfig cfg = prob.sim;
    cfg.sample_time = prob.dataset.sample_time();
    cfg.duration = cfg.sample_time * static_cast<double>(prob.dataset.size() - 1);
    return cfg;
}

struct Traces {
    std::vector<double> ry;  // weighted residuals, y then u
    std::vector<double> ru;
    double cost = std::numeric_limits<double>::infinity();
};

inline Traces replay(const MatchProblem& prob, const SimConfig& cfg, const std::array<double, 3>& v)
{
    Traces out;
    try {
        const auto trace = simulate_trace(from_vector(v, prob.fixed_r), cfg, prob.dataset.r, false);
        const auto n = prob.dataset.size();
        out.ry.resize(n);
        out.ru.resize(n);
        double cost = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            out.ry[k] = prob.dataset.y[k] - trace.data.y[k];
            out.ru[k] = prob.dataset.u[k] - trace.data.u[k];
            cost += prob.weight_y * out.ry[k] * out.ry[k] + prob.weight_u * out.ru[k] * out.ru[k];
        }
        out.cost = std::isfinite(cost) ? cost : std::numeric_limits<double>::infinity();
    } catch (const SimulationDiverged&) {
        out.cost = std::numeric_limits<double>::infinity();
    }
    return out;
}

inline Eigen::VectorXd stacked(const MatchProblem& prob, const Traces& t)
{
    const auto n = static_cast<Eigen::Index>(t.ry.size());
    Eigen::VectorXd r(2 * n);
    const double sy = std::sqrt(prob.weight_y), su = std::sqrt(prob.weight_u);
    for (Eigen::Index k = 0; k < n; ++k) {
        r(k) = sy * t.ry[static_cast<std::size_t>(k)];
        r(n + k) = su * t.ru[static_cast<std::size_t>(k)];
    }
    return r;
}

inline std::array<double, 3> clamp_to(const std::array<double, 3>& v, const ParamBounds& b)
{
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) out[i] = std::clamp(v[i], b.lo[i], b.hi[i]);
    return out;
}

/// Projected damped Gauss-Newton from one start. Parameters pinned at a bound
/// with the gradient pointing outward are frozen for that iteration.
inline MatchResult descend(const MatchProblem& prob, std::array<double, 3> x, const MatchOptions& opts)
{
    const SimConfig cfg = replay_config(prob);
    auto cur = replay(prob, cfg, x);
    MatchResult res;
    res.cost_history.push_back(cur.cost);
    if (!std::isfinite(cur.cost)) {
        res.params = from_vector(x, prob.fixed_r);
        res.sse = cur.cost;
        return res;
    }
    double lambda = 1e-3;
    Eigen::VectorXd r = stacked(prob, cur);
    for (int it = 0; it < opts.max_iterations; ++it) {
        if (cur.cost == 0.0) {
            res.converged = true;
            break;
        }
        Eigen::MatrixXd jac(r.size(), 3);
        for (std::size_t j = 0; j < 3; ++j) {
            const double h = opts.fd_relative_step * std::max(std::abs(x[j]), 1e-12);
            auto xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const auto tp = replay(prob, cfg, xp);
            const auto tm = replay(prob, cfg, xm);
            jac.col(static_cast<Eigen::Index>(j)) = (stacked(prob, tp) - stacked(prob, tm)) / (2.0 * h);
        }
        if (!jac.allFinite()) break;
        const Eigen::VectorXd grad = jac.transpose() * r;
        const Eigen::Matrix3d jtj = jac.transpose() * jac;

        std::array<bool, 3> free{};
        for (std::size_t i = 0; i < 3; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const bool pinned_lo = x[i] <= prob.bounds.lo[i] && grad(ii) > 0.0;
            const bool pinned_hi = x[i] >= prob.bounds.hi[i] && grad(ii) < 0.0;
            free[i] = !pinned_lo && !pinned_hi;
        }

        bool accepted = false;
        Traces next;
        std::array<double, 3> xn{};
        while (lambda < 1e16) {
            Eigen::Matrix3d a = jtj;
            Eigen::Vector3d rhs = -grad;
            for (std::size_t i = 0; i < 3; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                if (free[i]) {
                    a(ii, ii) += lambda * std::max(jtj(ii, ii), 1e-300);
                } else {
                    a.row(ii).setZero();
                    a.col(ii).setZero();
                    a(ii, ii) = 1.0;
                    rhs(ii) = 0.0;
                }
            }
            const Eigen::Vector3d delta = a.ldlt().solve(rhs);
            if (!delta.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            std::array<double, 3> trial{};
            for (std::size_t i = 0; i < 3; ++i) trial[i] = x[i] + delta(static_cast<Eigen::Index>(i));
            trial = clamp_to(trial, prob.bounds);
            next = replay(prob, cfg, trial);
            if (next.cost < cur.cost) {
                xn = trial;
                accepted = true;
                lambda = std::max(lambda / 3.0, 1e-12);
                break;
            }
            lambda *= 10.0;
        }
        res.iterations = it + 1;
        if (!accepted) {
            res.converged = true;
            break;
        }
        const double rel = (cur.cost - next.cost) / cur.cost;
        x = xn;
        cur = std::move(next);
        r = stacked(prob, cur);
        res.cost_history.push_back(cur.cost);
        if (rel < opts.relative_tolerance) {
            res.converged = true;
            break;
        }
    }
    res.params = from_vector(x, prob.fixed_r);
    res.sse = cur.cost;
    res.residual_y = std::move(cur.ry);
    res.residual_u = std::move(cur.ru);
    for (std::size_t i = 0; i < 3; ++i) {
        res.at_lower[i] = x[i] <= prob.bounds.lo[i];
        res.at_upper[i] = x[i] >= prob.bounds.hi[i];
    }
    return res;
}

}  // namespace detail

inline void MatchProblem::validate() const
{
    dataset.validate();
    if (!(fixed_r > 0.0)) throw InvalidInput("match: fixed R must be positive");
    if (weight_y < 0.0 || weight_u < 0.0 || (weight_y == 0.0 && weight_u == 0.0))
        throw InvalidInput("match: channel weights must be non-negative and not both zero");
    const auto v = detail::to_vector(initial);
    static constexpr const char* names[] = {"alpha", "K", "C"};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!(bounds.lo[i] > 0.0) || !(bounds.lo[i] <= bounds.hi[i]))
            throw InvalidInput(std::string("match: invalid bounds for ") + names[i]);
        if (!(v[i] >= bounds.lo[i] && v[i] <= bounds.hi[i]))
            throw InvalidInput(std::string("match: initial ") + names[i] + " outside its bounds");
    }
}

/// Weighted sum of squared residuals between the dataset and the twin replayed
/// under the dataset's reference; +inf when the replay diverges.
inline double sse_cost(const MatchProblem& problem, const PeltierParams& candidate)
{
    const auto v = detail::to_vector(candidate);
    for (std::size_t i = 0; i < 3; ++i)
        if (!(v[i] >= problem.bounds.lo[i] && v[i] <= problem.bounds.hi[i]))
            throw InvalidInput("sse_cost: candidate outside bounds");
    return detail::replay(problem, detail::replay_config(problem), v).cost;
}

/// Starting points: the problem's initial guess, then the three tabulated guesses
/// and two midpoints between them, clamped into the bounds; at most five.
inline std::vector<std::array<double, 3>> match_starts(const MatchProblem& prob, bool multistart)
{
    std::vector<std::array<double, 3>> starts{detail::to_vector(prob.initial)};
    if (!multistart) return starts;
    const auto ds = detail::to_vector(initial_guess_preset("datasheet"));
    const auto ms = detail::to_vector(initial_guess_preset("measurement"));
    const auto ex = detail::to_vector(initial_guess_preset("experience"));
    std::array<double, 3> mid1{}, mid2{};
    for (std::size_t i = 0; i < 3; ++i) {
        mid1[i] = 0.5 * (ds[i] + ex[i]);
        mid2[i] = 0.5 * (ms[i] + ex[i]);
    }
    for (const auto& s : {ds, ms, ex, mid1, mid2}) {
        if (starts.size() == 5) break;
        const auto c = detail::clamp_to(s, prob.bounds);
        if (std::find(starts.begin(), starts.end(), c) == starts.end()) starts.push_back(c);
    }
    return starts;
}

inline MatchResult match_parameters(const MatchProblem& problem, const MatchOptions& opts = {})
{
    problem.validate();
    const auto starts = match_starts(problem, opts.multistart);
    std::vector<MatchResult> results(starts.size());
    parallel_for(starts.size(), opts.threads,
                 [&](std::size_t i) { results[i] = detail::descend(problem, starts[i], opts); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i)
        if (results[i].sse < results[best].sse) best = i;
    results[best].start_index = best;
    if (!std::isfinite(results[best].sse))
        throw MatchError("match: every start diverged", results[best]);
    return results[best];
}

}  // namespace twin_discrim
