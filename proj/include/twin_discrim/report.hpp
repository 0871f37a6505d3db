#pragma once

/** @file
 * Discrimination report: per dataset and order, code lengths, information gain
 * and the three criteria per channel, best-order flags, and the nu-gap section.
 * Emitted as JSON (validated against the bundled schema) and as a CSV table.
 */

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>  // nlohmann, vendored

#include "errors.hpp"
#include "io.hpp"
#include "nugap.hpp"

namespace twin_discrim {

struct ReportSettings {
    std::vector<std::string> orders;
    int precision = 2;
    std::string naic_form = "normalized";
    std::size_t nugap_grid = 2048;
    bool strict_winding = false;
    std::uint64_t seed = 0;
    std::string residuals = "sim";
};

struct OrderRow {
    std::string order;
    int n_params = 0;
    std::string error;  ///< empty when the fit succeeded
    long l_t_y = 0, l_bj_y = 0, ig_y = 0;
    long l_t_u = 0, l_bj_u = 0, ig_u = 0;
    long igt = 0;
    double naic_y = 0, naic_u = 0, naic_t = 0;
    double bic_y = 0, bic_u = 0, bic_t = 0;
    double mdl_y = 0, mdl_u = 0, mdl_t = 0;
    bool zero_loss = false;

    bool ok() const noexcept { return error.empty(); }
};

/// Row index of the best order under one criterion; tie set when another row scores equal.
struct BestFlag {
    std::optional<std::size_t> row;
    bool tie = false;
};

struct DatasetSection {
    std::string label;
    std::size_t samples = 0;
    std::string error;
    std::vector<OrderRow> rows;
    BestFlag best_ig, best_naic, best_bic, best_mdl;
    std::optional<std::size_t> selected_row;  ///< order whose model enters the nu-gap comparison
};

struct NuGapSection {
    bool computed = false;
    std::string note;
    NominalSelection selection;
};

struct DiscriminationReport {
    ReportSettings settings;
    std::vector<DatasetSection> datasets;
    NuGapSection nugap;
    std::vector<std::string> errors;

    bool any_success() const
    {
        for (const auto& d : datasets)
            for (const auto& r : d.rows)
                if (r.ok()) return true;
        return false;
    }
};

/// Lowest (or highest when maximize) score among successful rows; ties keep the first row.
template <class Score>
BestFlag pick_best(const std::vector<OrderRow>& rows, Score score, bool maximize)
{
    BestFlag out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].ok()) continue;
        const double v = score(rows[i]);
        if (std::isnan(v)) continue;
        if (!out.row) {
            out.row = i;
            continue;
        }
        const double b = score(rows[*out.row]);
        if (maximize ? v > b : v < b) out.row = i;
    }
    if (!out.row) return out;
    const double b = score(rows[*out.row]);
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (i != *out.row && rows[i].ok() && score(rows[i]) == b) out.tie = true;
    return out;
}

inline void assign_best_flags(DatasetSection& ds)
{
    ds.best_ig = pick_best(ds.rows, [](const OrderRow& r) { return static_cast<double>(r.igt); }, true);
    ds.best_naic = pick_best(ds.rows, [](const OrderRow& r) { return r.naic_t; }, false);
    ds.best_bic = pick_best(ds.rows, [](const OrderRow& r) { return r.bic_t; }, false);
    ds.best_mdl = pick_best(ds.rows, [](const OrderRow& r) { return r.mdl_t; }, false);

    // Majority among nAIC, BIC and MDL; without one, the smallest flagged order.
    std::vector<std::size_t> votes;
    for (const auto* b : {&ds.best_naic, &ds.best_bic, &ds.best_mdl})
        if (b->row) votes.push_back(*b->row);
    ds.selected_row.reset();
    for (auto v : votes)
        if (std::count(votes.begin(), votes.end(), v) >= 2) ds.selected_row = v;
    if (!ds.selected_row && !votes.empty()) {
        ds.selected_row = votes.front();
        for (auto v : votes)
            if (ds.rows[v].n_params < ds.rows[*ds.selected_row].n_params) ds.selected_row = v;
    }
}

// ---- schema ----------------------------------------------------------------

/// Copy of schema/report.schema.json; a test keeps the two identical.
inline const char* report_schema_text()
{
    return R"json({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "twin_discrim discrimination report",
  "type": "object",
  "required": ["format", "version", "settings", "datasets", "nugap", "errors"],
  "additionalProperties": false,
  "properties": {
    "format": {"type": "string", "enum": ["twin_discrim.report"]},
    "version": {"type": "integer", "enum": [1]},
    "settings": {
      "type": "object",
      "required": ["orders", "precision", "naic_form", "nugap_grid", "strict_winding", "seed", "residuals"],
      "additionalProperties": false,
      "properties": {
        "orders": {"type": "array", "items": {"type": "string"}},
        "precision": {"type": "integer", "minimum": 0},
        "naic_form": {"type": "string", "enum": ["normalized", "literal"]},
        "nugap_grid": {"type": "integer", "minimum": 64},
        "strict_winding": {"type": "boolean"},
        "seed": {"type": "integer", "minimum": 0},
        "residuals": {"type": "string", "enum": ["sim", "pred"]}
      }
    },
    "datasets": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["label", "samples", "error", "rows", "best", "selected_order"],
        "additionalProperties": false,
        "properties": {
          "label": {"type": "string"},
          "samples": {"type": "integer", "minimum": 0},
          "error": {"type": ["string", "null"]},
          "selected_order": {"type": ["string", "null"]},
          "best": {
            "type": "object",
            "required": ["ig", "naic", "bic", "mdl"],
            "additionalProperties": false,
            "properties": {
              "ig": {"$ref": "#/$defs/best"},
              "naic": {"$ref": "#/$defs/best"},
              "bic": {"$ref": "#/$defs/best"},
              "mdl": {"$ref": "#/$defs/best"}
            }
          },
          "rows": {
            "type": "array",
            "items": {
              "type": "object",
              "required": ["order", "n_params", "error", "l_t_y", "l_bj_y", "ig_y", "l_t_u", "l_bj_u", "ig_u",
                           "igt", "naic_y", "naic_u", "naic_t", "bic_y", "bic_u", "bic_t", "mdl_y", "mdl_u",
                           "mdl_t", "zero_loss"],
              "additionalProperties": false,
              "properties": {
                "order": {"type": "string"},
                "n_params": {"type": "integer", "minimum": 0},
                "error": {"type": ["string", "null"]},
                "l_t_y": {"type": ["integer", "null"]},
                "l_bj_y": {"type": ["integer", "null"]},
                "ig_y": {"type": ["integer", "null"]},
                "l_t_u": {"type": ["integer", "null"]},
                "l_bj_u": {"type": ["integer", "null"]},
                "ig_u": {"type": ["integer", "null"]},
                "igt": {"type": ["integer", "null"]},
                "naic_y": {"type": ["number", "null"]},
                "naic_u": {"type": ["number", "null"]},
                "naic_t": {"type": ["number", "null"]},
                "bic_y": {"type": ["number", "null"]},
                "bic_u": {"type": ["number", "null"]},
                "bic_t": {"type": ["number", "null"]},
                "mdl_y": {"type": ["number", "null"]},
                "mdl_u": {"type": ["number", "null"]},
                "mdl_t": {"type": ["number", "null"]},
                "zero_loss": {"type": "boolean"}
              }
            }
          }
        }
      }
    },
    "nugap": {
      "type": "object",
      "required": ["status", "note", "labels", "matrix", "cumulative", "winner", "winner_index", "tie"],
      "additionalProperties": false,
      "properties": {
        "status": {"type": "string", "enum": ["ok", "omitted"]},
        "note": {"type": "string"},
        "labels": {"type": "array", "items": {"type": "string"}},
        "matrix": {"type": "array", "items": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}}},
        "cumulative": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "winner": {"type": ["string", "null"]},
        "winner_index": {"type": ["integer", "null"], "minimum": 0},
        "tie": {"type": "boolean"}
      }
    },
    "errors": {"type": "array", "items": {"type": "string"}}
  },
  "$defs": {
    "best": {
      "type": "object",
      "required": ["order", "tie"],
      "additionalProperties": false,
      "properties": {
        "order": {"type": ["string", "null"]},
        "tie": {"type": "boolean"}
      }
    }
  }
}
)json";
}

namespace detail {

inline bool schema_type_matches(const nlohmann::json& v, const std::string& t)
{
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    if (t == "number") return v.is_number();
    throw InvalidInput("schema: unsupported type '" + t + "'");
}

inline void schema_check(const nlohmann::json& v, const nlohmann::json& s, const nlohmann::json& root,
                         const std::string& path, std::vector<std::string>& errs)
{
    if (s.contains("$ref")) {
        const auto ref = s["$ref"].get<std::string>();
        const std::string prefix = "#/$defs/";
        if (ref.rfind(prefix, 0) != 0) throw InvalidInput("schema: unsupported $ref " + ref);
        schema_check(v, root.at("$defs").at(ref.substr(prefix.size())), root, path, errs);
        return;
    }
    if (s.contains("type")) {
        bool ok = false;
        if (s["type"].is_array()) {
            for (const auto& t : s["type"]) ok = ok || schema_type_matches(v, t.get<std::string>());
        } else {
            ok = schema_type_matches(v, s["type"].get<std::string>());
        }
        if (!ok) {
            errs.push_back(path + ": expected type " + s["type"].dump());
            return;
        }
    }
    if (s.contains("enum")) {
        bool found = false;
        for (const auto& e : s["enum"]) found = found || e == v;
        if (!found) errs.push_back(path + ": value not in enum");
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (s.contains("minimum") && x < s["minimum"].get<double>()) errs.push_back(path + ": below minimum");
        if (s.contains("maximum") && x > s["maximum"].get<double>()) errs.push_back(path + ": above maximum");
    }
    if (v.is_object()) {
        if (s.contains("required"))
            for (const auto& k : s["required"])
                if (!v.contains(k.get<std::string>())) errs.push_back(path + ": missing '" + k.get<std::string>() + "'");
        const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
        for (const auto& [k, sub] : v.items()) {
            if (s.contains("properties") && s["properties"].contains(k))
                schema_check(sub, s["properties"][k], root, path + "/" + k, errs);
            else if (closed)
                errs.push_back(path + ": unexpected property '" + k + "'");
        }
    }
    if (v.is_array() && s.contains("items"))
        for (std::size_t i = 0; i < v.size(); ++i)
            schema_check(v[i], s["items"], root, path + "/" + std::to_string(i), errs);
}

}  // namespace detail

/// Checks a document against the subset of JSON Schema used by the bundled
/// schema (type, enum, required, properties, additionalProperties=false,
/// items, minimum, maximum, local $ref). Returns the violations found.
inline std::vector<std::string> validate_against_schema(const nlohmann::json& doc, const nlohmann::json& schema)
{
    std::vector<std::string> errs;
    detail::schema_check(doc, schema, schema, "", errs);
    return errs;
}

// ---- emission ---------------------------------------------------------------

namespace detail {

inline nlohmann::json num_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json str_or_null(const std::string& s) { return s.empty() ? nlohmann::json() : nlohmann::json(s); }

inline nlohmann::json best_json(const DatasetSection& ds, const BestFlag& b)
{
    return {{"order", b.row ? nlohmann::json(ds.rows[*b.row].order) : nlohmann::json()}, {"tie", b.tie}};
}

}  // namespace detail

inline nlohmann::json report_to_json(const DiscriminationReport& rep)
{
    using nlohmann::json;
    json out;
    out["format"] = "twin_discrim.report";
    out["version"] = 1;
    const auto& s = rep.settings;
    out["settings"] = {{"orders", s.orders},           {"precision", s.precision},
                       {"naic_form", s.naic_form},     {"nugap_grid", s.nugap_grid},
                       {"strict_winding", s.strict_winding}, {"seed", s.seed},
                       {"residuals", s.residuals}};
    json datasets = json::array();
    for (const auto& ds : rep.datasets) {
        json rows = json::array();
        for (const auto& r : ds.rows) {
            json row;
            row["order"] = r.order;
            row["n_params"] = r.n_params;
            row["error"] = detail::str_or_null(r.error);
            row["zero_loss"] = r.zero_loss;
            const std::pair<const char*, long> ints[] = {{"l_t_y", r.l_t_y}, {"l_bj_y", r.l_bj_y}, {"ig_y", r.ig_y},
                                                         {"l_t_u", r.l_t_u}, {"l_bj_u", r.l_bj_u}, {"ig_u", r.ig_u},
                                                         {"igt", r.igt}};
            for (const auto& [k, v] : ints) row[k] = r.ok() ? json(v) : json();
            const std::pair<const char*, double> reals[] = {
                {"naic_y", r.naic_y}, {"naic_u", r.naic_u}, {"naic_t", r.naic_t}, {"bic_y", r.bic_y},
                {"bic_u", r.bic_u},   {"bic_t", r.bic_t},   {"mdl_y", r.mdl_y},   {"mdl_u", r.mdl_u},
                {"mdl_t", r.mdl_t}};
            for (const auto& [k, v] : reals) row[k] = r.ok() ? detail::num_or_null(v) : json();
            rows.push_back(std::move(row));
        }
        datasets.push_back({{"label", ds.label},
                            {"samples", ds.samples},
                            {"error", detail::str_or_null(ds.error)},
                            {"rows", std::move(rows)},
                            {"best",
                             {{"ig", detail::best_json(ds, ds.best_ig)},
                              {"naic", detail::best_json(ds, ds.best_naic)},
                              {"bic", detail::best_json(ds, ds.best_bic)},
                              {"mdl", detail::best_json(ds, ds.best_mdl)}}},
                            {"selected_order",
                             ds.selected_row ? json(ds.rows[*ds.selected_row].order) : json()}});
    }
    out["datasets"] = std::move(datasets);

    const auto& ng = rep.nugap;
    const auto& m = ng.selection.matrix;
    out["nugap"] = {{"status", ng.computed ? "ok" : "omitted"},
                    {"note", ng.note},
                    {"labels", ng.computed ? json(m.labels) : json::array()},
                    {"matrix", ng.computed ? json(m.values) : json::array()},
                    {"cumulative", ng.computed ? json(m.cumulative) : json::array()},
                    {"winner", ng.computed ? json(m.labels[ng.selection.winner]) : json()},
                    {"winner_index", ng.computed ? json(ng.selection.winner) : json()},
                    {"tie", ng.computed && ng.selection.tie}};
    out["errors"] = rep.errors;
    return out;
}

/// JSON text of the report; throws if it does not satisfy the bundled schema.
inline std::string report_json_text(const DiscriminationReport& rep)
{
    const auto doc = report_to_json(rep);
    static const auto schema = nlohmann::json::parse(report_schema_text());
    const auto errs = validate_against_schema(doc, schema);
    if (!errs.empty()) throw std::logic_error("report violates its schema: " + errs.front());
    return doc.dump(2) + "\n";
}

/// One line per (dataset, order) in report column order.
inline std::string report_csv_text(const DiscriminationReport& rep)
{
    std::string out =
        "dataset,order,l_t_y,l_bj_y,ig_y,l_t_u,l_bj_u,ig_u,igt,naic_y,naic_u,naic_t,bic_y,bic_u,bic_t,"
        "mdl_y,mdl_u,mdl_t,best_ig,best_naic,best_bic,best_mdl,error\n";
    auto real = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(v < 0 ? "-inf" : "nan"); };
    auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    auto flag = [](const BestFlag& b, std::size_t i) {
        return std::string(b.row && *b.row == i ? (b.tie ? "tie" : "1") : "0");
    };
    for (const auto& ds : rep.datasets) {
        if (ds.rows.empty()) {
            out += quote(ds.label) + ",,,,,,,,,,,,,,,,,,,,,," + quote(ds.error) + "\n";
            continue;
        }
        for (std::size_t i = 0; i < ds.rows.size(); ++i) {
            const auto& r = ds.rows[i];
            out += quote(ds.label) + "," + r.order;
            if (r.ok()) {
                for (long v : {r.l_t_y, r.l_bj_y, r.ig_y, r.l_t_u, r.l_bj_u, r.ig_u, r.igt}) out += "," + std::to_string(v);
                for (double v : {r.naic_y, r.naic_u, r.naic_t, r.bic_y, r.bic_u, r.bic_t, r.mdl_y, r.mdl_u, r.mdl_t})
                    out += "," + real(v);
            } else {
                out += ",,,,,,,,,,,,,,,,";
            }
            out += "," + flag(ds.best_ig, i) + "," + flag(ds.best_naic, i) + "," + flag(ds.best_bic, i) + "," +
                   flag(ds.best_mdl, i) + "," + (r.ok() ? std::string() : quote(r.error)) + "\n";
        }
    }
    return out;
}

}  // namespace twin_discrim
