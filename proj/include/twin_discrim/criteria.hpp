#pragma once

/** @file
 * Penalized-fit criteria (nAIC, BIC, MDL) over prediction-error sequences.
 *
 * The loss is det((1/N) sum e e^T); for a scalar channel that is the mean
 * squared residual. A zero loss makes the logarithmic criteria -inf, which is
 * reported through CriteriaReport::zero_loss rather than raised.
 */

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace twin_discrim {

enum class NaicForm {
    normalized,  ///< log(loss) + 2 n_p / N
    literal,     ///< N log(loss) + 2 n_p / N
};

struct ResidualSummary {
    /// Row-major N x n_outputs residual matrix.
    std::vector<double> residuals;
    int n_params = 0;
    int n_outputs = 1;

    std::size_t n_samples() const
    {
        return n_outputs > 0 ? residuals.size() / static_cast<std::size_t>(n_outputs) : 0;
    }

    void validate() const
    {
        if (n_params < 0) throw InvalidInput("residual summary: n_params must be >= 0");
        if (n_outputs < 1) throw InvalidInput("residual summary: n_outputs must be >= 1");
        if (residuals.empty() || residuals.size() % static_cast<std::size_t>(n_outputs) != 0)
            throw InvalidInput("residual summary: residual count must be a positive multiple of n_outputs");
        for (double e : residuals)
            if (!std::isfinite(e)) throw InvalidInput("residual summary: non-finite residual");
    }
};

struct CriteriaReport {
    double naic = 0.0;
    double bic = 0.0;
    double mdl = 0.0;
    double loss = 0.0;
    bool zero_loss = false;
};

inline double loss_function(const ResidualSummary& rs)
{
    rs.validate();
    const auto n = rs.n_samples();
    if (rs.n_outputs == 1) {
        double acc = 0.0;
        for (double e : rs.residuals) acc += e * e;
        return acc / static_cast<double>(n);
    }
    const auto ny = static_cast<Eigen::Index>(rs.n_outputs);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> e(
        rs.residuals.data(), static_cast<Eigen::Index>(n), ny);
    const Eigen::MatrixXd cov = (e.transpose() * e) / static_cast<double>(n);
    return cov.determinant();
}

inline double naic_value(double loss, double n_params, double n_samples,
                         NaicForm form = NaicForm::normalized)
{
    if (loss <= 0.0) return -std::numeric_limits<double>::infinity();
    const double lead = form == NaicForm::literal ? n_samples : 1.0;
    return lead * std::log(loss) + 2.0 * n_params / n_samples;
}

inline double bic_value(double loss, double n_params, double n_samples, double n_outputs = 1.0)
{
    if (loss <= 0.0) return -std::numeric_limits<double>::infinity();
    return n_samples * std::log(loss) +
           n_samples * (n_outputs * std::log(2.0 * std::numbers::pi) + 1.0) +
           n_params * std::log(n_samples);
}

inline double mdl_value(double loss, double n_params, double n_samples)
{
    return loss * (1.0 + n_params / n_samples) * std::log(n_samples);
}

inline double naic(const ResidualSummary& rs, NaicForm form = NaicForm::normalized)
{
    return naic_value(loss_function(rs), rs.n_params, static_cast<double>(rs.n_samples()), form);
}

inline double bic(const ResidualSummary& rs)
{
    return bic_value(loss_function(rs), rs.n_params, static_cast<double>(rs.n_samples()), rs.n_outputs);
}

inline double mdl(const ResidualSummary& rs)
{
    if (rs.n_samples() < 2) throw InvalidInput("mdl: needs at least two samples");
    return mdl_value(loss_function(rs), rs.n_params, static_cast<double>(rs.n_samples()));
}

inline CriteriaReport evaluate_criteria(const ResidualSummary& rs, NaicForm form = NaicForm::normalized)
{
    CriteriaReport rep;
    rep.loss = loss_function(rs);
    const double n = static_cast<double>(rs.n_samples());
    rep.zero_loss = !(rep.loss > 0.0);
    rep.naic = naic_value(rep.loss, rs.n_params, n, form);
    rep.bic = bic_value(rep.loss, rs.n_params, n, rs.n_outputs);
    rep.mdl = rs.n_samples() >= 2 ? mdl_value(rep.loss, rs.n_params, n)
                                  : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

struct SimoCriteriaReport {
    CriteriaReport y;
    CriteriaReport u;
    double naic_total = 0.0;
    double bic_total = 0.0;
    double mdl_total = 0.0;
    bool zero_loss = false;
};

/// Per-channel criteria with n_y = 1, summed across the SIMO pair.
inline SimoCriteriaReport simo_criteria(const ResidualSummary& y_channel, const ResidualSummary& u_channel,
                                        NaicForm form = NaicForm::normalized)
{
    if (y_channel.n_outputs != 1 || u_channel.n_outputs != 1)
        throw InvalidInput("simo_criteria: channels are scalar");
    SimoCriteriaReport rep;
    rep.y = evaluate_criteria(y_channel, form);
    rep.u = evaluate_criteria(u_channel, form);
    rep.naic_total = rep.y.naic + rep.u.naic;
    rep.bic_total = rep.y.bic + rep.u.bic;
    rep.mdl_total = rep.y.mdl + rep.u.mdl;
    rep.zero_loss = rep.y.zero_loss || rep.u.zero_loss;
    return rep;
}

}  // namespace twin_discrim
