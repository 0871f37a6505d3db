#pragma once

/** @file
 * End-to-end discrimination of a family of closed-loop datasets: Box-Jenkins
 * fits per order, coding and criteria scores, best-order flags, and nu-gap
 * selection of the nominal model among the per-dataset selected models.
 */

#include <string>
#include <vector>

#include "coding.hpp"
#include "criteria.hpp"
#include "nugap.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "sysid.hpp"

namespace twin_discrim {

enum class ResidualSource { simulation, prediction };

struct DiscriminateOptions {
    std::vector<OrderSpec> orders = default_orders();
    CodingConfig coding;
    NaicForm naic_form = NaicForm::normalized;
    NuGapOptions nugap;
    ResidualSource residuals = ResidualSource::simulation;
    FitOptions fit;
    unsigned threads = 1;
};

namespace detail {

inline DatasetSection discriminate_one(const TimeSeriesDataset& data, const DiscriminateOptions& opts,
                                       std::vector<std::optional<SimoModel>>& models)
{
    DatasetSection ds;
    ds.label = data.label;
    ds.samples = data.size();
    models.assign(opts.orders.size(), std::nullopt);
    try {
        const auto fam = identify_family(data, opts.orders, opts.fit, 1);
        for (std::size_t i = 0; i < fam.orders.size(); ++i) {
            const auto& of = fam.orders[i];
            OrderRow row;
            row.order = of.spec.label();
            row.n_params = of.spec.n_params();
            if (!of.ok()) {
                row.error = of.error.empty() ? "fit failed" : of.error;
                ds.rows.push_back(std::move(row));
                continue;
            }
            try {
                const auto ig = simo_information_gain(data, *of.simo, opts.coding);
                row.l_t_y = ig.y.l_trivial;
                row.l_bj_y = ig.y.l_model;
                row.ig_y = ig.y.gain;
                row.l_t_u = ig.u.l_trivial;
                row.l_bj_u = ig.u.l_model;
                row.ig_u = ig.u.gain;
                row.igt = ig.total_gain;

                const bool sim = opts.residuals == ResidualSource::simulation;
                const ResidualSummary ry{sim ? of.fit_y->sim_residuals : of.fit_y->pred_residuals, row.n_params, 1};
                const ResidualSummary ru{sim ? of.fit_u->sim_residuals : of.fit_u->pred_residuals, row.n_params, 1};
                const auto cr = simo_criteria(ry, ru, opts.naic_form);
                row.naic_y = cr.y.naic;
                row.naic_u = cr.u.naic;
                row.naic_t = cr.naic_total;
                row.bic_y = cr.y.bic;
                row.bic_u = cr.u.bic;
                row.bic_t = cr.bic_total;
                row.mdl_y = cr.y.mdl;
                row.mdl_u = cr.u.mdl;
                row.mdl_t = cr.mdl_total;
                row.zero_loss = cr.zero_loss;
                models[i] = of.simo;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            ds.rows.push_back(std::move(row));
        }
        assign_best_flags(ds);
    } catch (const std::exception& e) {
        ds.error = e.what();
        ds.rows.clear();
    }
    return ds;
}

}  // namespace detail

inline ReportSettings report_settings(const DiscriminateOptions& opts)
{
    ReportSettings s;
    for (const auto& o : opts.orders) s.orders.push_back(o.label());
    s.precision = opts.coding.decimal_precision;
    s.naic_form = opts.naic_form == NaicForm::normalized ? "normalized" : "literal";
    s.nugap_grid = opts.nugap.grid_size;
    s.strict_winding = opts.nugap.strict_winding;
    s.seed = opts.fit.seed;
    s.residuals = opts.residuals == ResidualSource::simulation ? "sim" : "pred";
    return s;
}

/// Datasets are processed in parallel; failures stay local to their dataset.
inline DiscriminationReport discriminate(const std::vector<TimeSeriesDataset>& datasets,
                                         const DiscriminateOptions& opts = {})
{
    if (datasets.empty()) throw InvalidInput("discriminate: no datasets");
    if (opts.orders.empty()) throw InvalidInput("discriminate: no orders");
    opts.coding.validate();

    DiscriminationReport rep;
    rep.settings = report_settings(opts);
    rep.datasets.resize(datasets.size());
    std::vector<std::vector<std::optional<SimoModel>>> models(datasets.size());
    parallel_for(datasets.size(), opts.threads,
                 [&](std::size_t i) { rep.datasets[i] = detail::discriminate_one(datasets[i], opts, models[i]); });

    for (const auto& ds : rep.datasets) {
        if (!ds.error.empty()) rep.errors.push_back(ds.label + ": " + ds.error);
        for (const auto& r : ds.rows)
            if (!r.ok()) rep.errors.push_back(ds.label + " order " + r.order + ": " + r.error);
    }

    std::vector<SimoModel> selected;
    for (std::size_t i = 0; i < rep.datasets.size(); ++i) {
        const auto& ds = rep.datasets[i];
        if (ds.selected_row && models[i][*ds.selected_row]) selected.push_back(*models[i][*ds.selected_row]);
    }
    if (selected.size() < 2) {
        rep.nugap.note = "nu-gap comparison needs >=2 models; " + std::to_string(selected.size()) + " available";
        return rep;
    }
    try {
        NuGapOptions ng = opts.nugap;
        ng.threads = opts.threads;
        rep.nugap.selection = select_nominal(selected, ng);
        rep.nugap.computed = true;
        rep.nugap.note = "nominal model minimizes the summed nu-gap to the other models";
    } catch (const NuGapError& e) {
        rep.nugap.note = std::string("nu-gap failed: ") + e.what();
        rep.errors.push_back(rep.nugap.note);
    }
    return rep;
}

}  // namespace twin_discrim
