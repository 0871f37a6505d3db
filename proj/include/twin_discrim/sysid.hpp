#pragma once

/** @file
 * Box-Jenkins identification: y = B/F u + C/D e.
 *
 * B and F are found by output-error (simulation-error) minimization with a
 * damped Gauss-Newton iteration on finite-difference Jacobians, started from a
 * least-squares ARX fit plus seeded perturbations. C and D come from a
 * Hannan-Rissanen fit to the output-error residuals.
 */

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dataset.hpp"
#include "errors.hpp"
#include "lti.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace twin_discrim {

struct OrderSpec {
    int nb = 2;
    int nc = 2;
    int nd = 2;
    int nf = 2;
    int nk = 1;

    /// Parses a five-digit label such as "22221".
    static OrderSpec parse(const std::string& label)
    {
        if (label.size() != 5 || !std::all_of(label.begin(), label.end(), [](unsigned char c) {
                return std::isdigit(c) != 0;
            }))
            throw InvalidInput("order label must be five digits (nb nc nd nf nk): '" + label + "'");
        OrderSpec s{label[0] - '0', label[1] - '0', label[2] - '0', label[3] - '0', label[4] - '0'};
        if (s.nb < 1 || s.nc < 1 || s.nd < 1 || s.nf < 1)
            throw InvalidInput("order label '" + label + "': nb, nc, nd, nf must be >= 1");
        return s;
    }

    std::string label() const
    {
        return std::to_string(nb) + std::to_string(nc) + std::to_string(nd) + std::to_string(nf) +
               std::to_string(nk);
    }

    /// Estimated coefficients of B, C, D, F (fixed leading ones and delay zeros excluded).
    int n_params() const noexcept { return nb + nc + nd + nf; }

    friend bool operator==(const OrderSpec&, const OrderSpec&) = default;
};

inline std::vector<OrderSpec> default_orders()
{
    return {OrderSpec::parse("22221"), OrderSpec::parse("33331"), OrderSpec::parse("44441"),
            OrderSpec::parse("55551")};
}

struct BoxJenkinsModel {
    DiscretePolynomial b{0.0};
    DiscretePolynomial c = DiscretePolynomial::one();
    DiscretePolynomial d = DiscretePolynomial::one();
    DiscretePolynomial f = DiscretePolynomial::one();
    int delay = 0;
    double sample_time = 1.0;

    DiscreteTransferFunction deterministic() const { return {b, f, sample_time}; }

    void validate() const
    {
        if (!c.is_monic() || !d.is_monic() || !f.is_monic())
            throw InvalidModel("Box-Jenkins C, D, F must be monic");
        if (delay < 0 || b.size() < static_cast<std::size_t>(delay))
            throw InvalidModel("Box-Jenkins B shorter than its delay");
        for (int i = 0; i < delay; ++i)
            if (b[static_cast<std::size_t>(i)] != 0.0)
                throw InvalidModel("Box-Jenkins B must start with `delay` zeros");
    }
};

struct FitOptions {
    int multistarts = 5;
    std::uint64_t seed = 0;
    int max_iterations = 200;
    double relative_tolerance = 1e-10;
    /// Roots pushed inside this radius when a start is unstable.
    double stability_radius = 0.999;
};

struct FitResult {
    BoxJenkinsModel model;
    std::vector<double> sim_residuals;
    std::vector<double> pred_residuals;
    bool converged = false;
    int iterations = 0;
    double cost = 0.0;
};

class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, FitResult best)
        : std::runtime_error(what), best_(std::move(best)) {}
    const FitResult& best() const noexcept { return best_; }

private:
    FitResult best_;
};

namespace detail {

struct OeLayout {
    int nb, nf, nk;
    int size() const { return nb + nf; }

    DiscretePolynomial b(const Eigen::VectorXd& theta) const
    {
        std::vector<double> c(static_cast<std::size_t>(nk + nb), 0.0);
        for (int i = 0; i < nb; ++i) c[static_cast<std::size_t>(nk + i)] = theta(i);
        return DiscretePolynomial(std::move(c));
    }

    DiscretePolynomial f(const Eigen::VectorXd& theta) const
    {
        std::vector<double> c(static_cast<std::size_t>(nf + 1), 1.0);
        for (int i = 0; i < nf; ++i) c[static_cast<std::size_t>(i + 1)] = theta(nb + i);
        return DiscretePolynomial(std::move(c));
    }

    Eigen::VectorXd pack(const DiscretePolynomial& b, const DiscretePolynomial& f) const
    {
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(size());
        for (int i = 0; i < nb; ++i) {
            const auto idx = static_cast<std::size_t>(nk + i);
            if (idx < b.size()) theta(i) = b[idx];
        }
        for (int i = 0; i < nf; ++i) {
            const auto idx = static_cast<std::size_t>(i + 1);
            if (idx < f.size()) theta(nb + i) = f[idx];
        }
        return theta;
    }
};

inline Eigen::VectorXd oe_residuals(const OeLayout& lay, const Eigen::VectorXd& theta,
                                    std::span<const double> u, std::span<const double> y)
{
    const auto sim = filter(lay.b(theta), lay.f(theta), u);
    Eigen::VectorXd r(static_cast<Eigen::Index>(y.size()));
    for (std::size_t k = 0; k < y.size(); ++k) r(static_cast<Eigen::Index>(k)) = y[k] - sim[k];
    return r;
}

inline bool is_stable(const DiscretePolynomial& p)
{
    if (p.degree() < 1) return true;
    return spectral_radius(p) < 1.0;
}

/// Least-squares ARX: y_k + f_1 y_{k-1} + ... = b_0 u_{k-nk} + ...
inline Eigen::VectorXd arx_init(const OeLayout& lay, std::span<const double> u, std::span<const double> y,
                                double stability_radius)
{
    const int lag = std::max(lay.nf, lay.nk + lay.nb - 1);
    const auto n = static_cast<int>(y.size());
    const int rows = n - lag;
    Eigen::MatrixXd phi(rows, lay.size());
    Eigen::VectorXd target(rows);
    for (int k = lag; k < n; ++k) {
        const int row = k - lag;
        for (int i = 0; i < lay.nb; ++i) phi(row, i) = u[static_cast<std::size_t>(k - lay.nk - i)];
        for (int j = 0; j < lay.nf; ++j) phi(row, lay.nb + j) = -y[static_cast<std::size_t>(k - 1 - j)];
        target(row) = y[static_cast<std::size_t>(k)];
    }
    Eigen::VectorXd theta = phi.colPivHouseholderQr().solve(target);
    for (Eigen::Index i = 0; i < theta.size(); ++i)
        if (!std::isfinite(theta(i))) theta(i) = 0.0;
    const auto f = stabilize(lay.f(theta), stability_radius);
    return lay.pack(lay.b(theta), f);
}

struct LmOutcome {
    Eigen::VectorXd theta;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Damped Gauss-Newton with central-difference Jacobians; accepted costs never increase
/// and F stays strictly inside the unit circle.
inline LmOutcome oe_descend(const OeLayout& lay, Eigen::VectorXd theta, std::span<const double> u,
                            std::span<const double> y, const FitOptions& opts)
{
    const auto p = lay.size();
    Eigen::VectorXd r = oe_residuals(lay, theta, u, y);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    LmOutcome out;
    const auto n = static_cast<Eigen::Index>(y.size());
    Eigen::MatrixXd jac(n, p);
    for (int it = 0; it < opts.max_iterations; ++it) {
        if (cost == 0.0) {
            out.converged = true;
            break;
        }
        for (int j = 0; j < p; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(theta(j)));
            Eigen::VectorXd tp = theta, tm = theta;
            tp(j) += h;
            tm(j) -= h;
            // residual = y - sim, so d(residual)/d(theta) = -d(sim)/d(theta)
            jac.col(j) = (oe_residuals(lay, tp, u, y) - oe_residuals(lay, tm, u, y)) / (2.0 * h);
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * r;
        const double diag_floor = std::max(1e-12 * jtj.diagonal().maxCoeff(), 1e-300);

        bool accepted = false;
        double new_cost = cost;
        while (lambda < 1e16) {
            Eigen::MatrixXd a = jtj;
            for (int j = 0; j < p; ++j) a(j, j) += lambda * std::max(jtj(j, j), diag_floor);
            const Eigen::VectorXd delta = a.ldlt().solve(-grad);
            if (!delta.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd trial = theta + delta;
            if (!is_stable(lay.f(trial))) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd tr = oe_residuals(lay, trial, u, y);
            const double tc = tr.squaredNorm();
            if (std::isfinite(tc) && tc < cost) {
                theta = trial;
                r = tr;
                new_cost = tc;
                accepted = true;
                lambda = std::max(lambda / 3.0, 1e-12);
                break;
            }
            lambda *= 10.0;
        }
        out.iterations = it + 1;
        if (!accepted) {
            out.converged = true;  // no descent direction left at working precision
            break;
        }
        const double rel = (cost - new_cost) / cost;
        cost = new_cost;
        if (rel < opts.relative_tolerance) {
            out.converged = true;
            break;
        }
    }
    out.theta = theta;
    out.cost = cost;
    return out;
}

inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
{
    Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!std::isfinite(x(i))) x(i) = 0.0;
    return x;
}

}  // namespace detail

/// Output-error fit of B/F; C = D = [1]. `warm_starts` are extra initial models
/// (for instance a lower-order solution padded with zeros).
inline FitResult fit_output_error(std::span<const double> input, std::span<const double> output,
                                  const OrderSpec& spec, const FitOptions& opts = {},
                                  std::span<const BoxJenkinsModel> warm_starts = {})
{
    if (input.size() != output.size())
        throw InvalidInput("fit_output_error: input and output lengths differ");
    if (spec.nb < 1 || spec.nf < 1 || spec.nk < 0) throw InvalidInput("fit_output_error: bad order");
    const std::size_t min_len = 10u * static_cast<std::size_t>(spec.nb + spec.nf);
    if (output.size() < min_len)
        throw InvalidInput("fit_output_error: need at least " + std::to_string(min_len) + " samples, got " +
                           std::to_string(output.size()));
    for (std::size_t k = 0; k < input.size(); ++k)
        if (!std::isfinite(input[k]) || !std::isfinite(output[k]))
            throw InvalidInput("fit_output_error: non-finite sample");

    const detail::OeLayout lay{spec.nb, spec.nf, spec.nk};
    std::vector<Eigen::VectorXd> starts;
    const Eigen::VectorXd arx = detail::arx_init(lay, input, output, opts.stability_radius);
    starts.push_back(arx);
    for (const auto& w : warm_starts) {
        if (w.delay != spec.nk) continue;
        Eigen::VectorXd t = lay.pack(w.b, w.f);
        if (detail::is_stable(lay.f(t))) starts.push_back(t);
    }
    Rng rng(opts.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(spec.nb * 10 + spec.nf)));
    for (int s = 1; s < opts.multistarts; ++s) {
        Eigen::VectorXd t = arx;
        for (Eigen::Index i = 0; i < t.size(); ++i)
            t(i) = t(i) * (1.0 + 0.2 * rng.uniform(-1.0, 1.0)) + 0.01 * rng.uniform(-1.0, 1.0);
        const auto f = stabilize(lay.f(t), opts.stability_radius);
        starts.push_back(lay.pack(lay.b(t), f));
    }

    std::optional<detail::LmOutcome> best;
    for (const auto& s : starts) {
        if (!detail::is_stable(lay.f(s))) continue;
        auto out = detail::oe_descend(lay, s, input, output, opts);
        if (!best || out.cost < best->cost) best = std::move(out);
    }

    FitResult res;
    res.model.delay = spec.nk;
    if (!best) {
        res.model.b = lay.b(arx);
        res.model.f = stabilize(lay.f(arx), opts.stability_radius);
        throw FitError("fit_output_error: no stable starting point", res);
    }
    res.model.b = lay.b(best->theta);
    res.model.f = lay.f(best->theta);
    res.converged = best->converged;
    res.iterations = best->iterations;
    res.cost = best->cost;
    const auto r = detail::oe_residuals(lay, best->theta, input, output);
    res.sim_residuals.assign(r.data(), r.data() + r.size());
    res.pred_residuals = res.sim_residuals;
    return res;
}

struct NoiseModel {
    DiscretePolynomial c = DiscretePolynomial::one();
    DiscretePolynomial d = DiscretePolynomial::one();
};

/// Hannan-Rissanen ARMA fit D(z) w = C(z) e to a residual sequence.
inline NoiseModel fit_noise_model(std::span<const double> residuals, int nc, int nd)
{
    if (nc < 0 || nd < 0) throw InvalidInput("fit_noise_model: orders must be >= 0");
    const std::size_t min_len = 10u * static_cast<std::size_t>(std::max(1, nc + nd));
    if (residuals.size() < min_len)
        throw InvalidInput("fit_noise_model: need at least " + std::to_string(min_len) + " residuals");
    const auto n = static_cast<int>(residuals.size());
    double mean = 0.0;
    for (double v : residuals) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : residuals) var += (v - mean) * (v - mean);
    double energy = 0.0;
    for (double v : residuals) energy += v * v;
    if (!(var > 0.0) || !(energy > 0.0)) return {};

    // Long AR to reconstruct innovations.
    const int order = std::min(std::max(20, 4 * (nc + nd)), n / 4);
    Eigen::MatrixXd phi(n - order, order);
    Eigen::VectorXd target(n - order);
    for (int k = order; k < n; ++k) {
        for (int i = 0; i < order; ++i) phi(k - order, i) = -residuals[static_cast<std::size_t>(k - 1 - i)];
        target(k - order) = residuals[static_cast<std::size_t>(k)];
    }
    const Eigen::VectorXd ar = detail::least_squares(phi, target);
    std::vector<double> innov(static_cast<std::size_t>(n), 0.0);
    for (int k = order; k < n; ++k) {
        double e = residuals[static_cast<std::size_t>(k)];
        for (int i = 0; i < order; ++i) e += ar(i) * residuals[static_cast<std::size_t>(k - 1 - i)];
        innov[static_cast<std::size_t>(k)] = e;
    }

    // w_k + d_1 w_{k-1} + ... = e_k + c_1 e_{k-1} + ...
    const int start = order + std::max(nc, nd);
    const int rows = n - start;
    if (rows <= nc + nd) return {};
    Eigen::MatrixXd reg(rows, nc + nd);
    Eigen::VectorXd rhs(rows);
    for (int k = start; k < n; ++k) {
        for (int i = 0; i < nd; ++i) reg(k - start, i) = -residuals[static_cast<std::size_t>(k - 1 - i)];
        for (int j = 0; j < nc; ++j) reg(k - start, nd + j) = innov[static_cast<std::size_t>(k - 1 - j)];
        rhs(k - start) = residuals[static_cast<std::size_t>(k)] - innov[static_cast<std::size_t>(k)];
    }
    const Eigen::VectorXd sol = detail::least_squares(reg, rhs);
    std::vector<double> d(static_cast<std::size_t>(nd + 1), 1.0), c(static_cast<std::size_t>(nc + 1), 1.0);
    for (int i = 0; i < nd; ++i) d[static_cast<std::size_t>(i + 1)] = sol(i);
    for (int j = 0; j < nc; ++j) c[static_cast<std::size_t>(j + 1)] = sol(nd + j);
    NoiseModel out;
    out.d = stabilize(DiscretePolynomial(std::move(d)), 0.99);
    out.c = stabilize(DiscretePolynomial(std::move(c)), 0.99);
    return out;
}

/// One-step-ahead prediction errors of a full Box-Jenkins model: (D/C)(y - B/F u).
inline std::vector<double> prediction_residuals(const BoxJenkinsModel& m, std::span<const double> input,
                                                std::span<const double> output)
{
    const auto sim = filter(m.b, m.f, input);
    std::vector<double> w(output.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = output[k] - sim[k];
    return filter(m.d, m.c, w);
}

/// Full Box-Jenkins fit for one channel: output-error B/F, then the noise model.
inline FitResult fit_box_jenkins(std::span<const double> input, std::span<const double> output,
                                 const OrderSpec& spec, const FitOptions& opts = {},
                                 std::span<const BoxJenkinsModel> warm_starts = {})
{
    auto res = fit_output_error(input, output, spec, opts, warm_starts);
    const auto noise = fit_noise_model(res.sim_residuals, spec.nc, spec.nd);
    res.model.c = noise.c;
    res.model.d = noise.d;
    res.pred_residuals = prediction_residuals(res.model, input, output);
    return res;
}

struct OrderFit {
    OrderSpec spec;
    std::optional<SimoModel> simo;
    std::optional<FitResult> fit_y;
    std::optional<FitResult> fit_u;
    std::string error;

    bool ok() const noexcept { return simo.has_value(); }
};

struct FamilyFit {
    std::string label;
    OperatingPoint op;
    std::vector<OrderFit> orders;
};

/// Fits every order for y/r and u/r on deviations from the first sample.
/// Orders are processed by increasing size; each fit is also started from the
/// previous order's solution, so simulation-residual norms never increase.
inline FamilyFit identify_family(const TimeSeriesDataset& data, std::span<const OrderSpec> orders,
                                 const FitOptions& opts = {}, unsigned threads = 1)
{
    data.validate();
    FamilyFit fam;
    fam.label = data.label;
    fam.op = {data.r.front(), data.y.front(), data.u.front()};
    const double ts = data.sample_time();

    std::vector<double> dr(data.r), dy(data.y), du(data.u);
    for (auto& v : dr) v -= fam.op.r0;
    for (auto& v : dy) v -= fam.op.y0;
    for (auto& v : du) v -= fam.op.u0;

    std::vector<std::size_t> idx(orders.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return orders[a].nb + orders[a].nf < orders[b].nb + orders[b].nf;
    });

    fam.orders.resize(orders.size());
    for (std::size_t i = 0; i < orders.size(); ++i) fam.orders[i].spec = orders[i];

    const std::vector<double>* targets[2] = {&dy, &du};
    std::vector<std::string> errors[2] = {std::vector<std::string>(orders.size()),
                                          std::vector<std::string>(orders.size())};
    parallel_for(2, threads, [&](std::size_t channel) {
        std::vector<BoxJenkinsModel> previous;
        for (std::size_t i : idx) {
            auto& slot = fam.orders[i];
            try {
                auto fit = fit_box_jenkins(dr, *targets[channel], slot.spec, opts, previous);
                fit.model.sample_time = ts;
                previous.assign(1, fit.model);
                (channel == 0 ? slot.fit_y : slot.fit_u) = std::move(fit);
            } catch (const std::exception& e) {
                errors[channel][i] = e.what();
            }
        }
    });
    for (std::size_t i = 0; i < fam.orders.size(); ++i) {
        auto& slot = fam.orders[i];
        if (slot.fit_y && slot.fit_u) {
            slot.simo = SimoModel(slot.fit_y->model.deterministic(), slot.fit_u->model.deterministic(),
                                  data.label + ":" + slot.spec.label(), fam.op);
            continue;
        }
        if (!errors[0][i].empty()) slot.error += "y/r: " + errors[0][i];
        if (!errors[1][i].empty()) slot.error += (slot.error.empty() ? "" : "; ") + std::string("u/r: ") + errors[1][i];
    }
    return fam;
}

}  // namespace twin_discrim
