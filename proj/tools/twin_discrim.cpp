// twin_discrim: simulate campaigns, match twin parameters, discriminate model orders.
//
// Exit codes: 0 success, 1 computational failure, 2 usage or validation error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "twin_discrim/twin_discrim.hpp"

namespace fs = std::filesystem;
using namespace twin_discrim;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_usage = 2;

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw InvalidInput("cannot create output directory " + dir.string());
}

struct SimulateArgs {
    std::string config, params, out;
    std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateArgs& a)
{
    const auto config_text = read_file(a.config);
    const auto params_text = read_file(a.params);
    auto cfg = parse_campaign_config(config_text, a.config);
    const auto params = parse_params_file(params_text, a.params);
    if (a.seed) cfg.seed = *a.seed;

    // Resolve everything before touching the output directory.
    std::vector<std::pair<int, PeltierParams>> plan;
    for (int sp : cfg.setpoints) plan.emplace_back(sp, params.for_setpoint(sp));

    std::vector<std::pair<std::string, std::string>> files;
    json entries = json::array();
    for (const auto& [sp, p] : plan) {
        SimConfig sc = cfg.base;
        sc.setpoint = sp;
        sc.sensor.seed = cfg.seed + static_cast<std::uint64_t>(sp);
        const auto ds = simulate_closed_loop(p, sc);
        const auto name = "sp" + std::to_string(sp) + ".csv";
        files.emplace_back(name, dataset_to_csv(ds));
        entries.push_back({{"file", name},
                           {"setpoint", sp},
                           {"sensor_seed", sc.sensor.seed},
                           {"samples", ds.size()},
                           {"params",
                            {{"alpha_v_per_k", p.alpha}, {"r_ohm", p.r_ohm}, {"k_w_per_k", p.k_cond},
                             {"c_j_per_k", p.c_heat}}}});
    }
    const json manifest = {{"tool", "twin_discrim simulate"},
                           {"seed", cfg.seed},
                           {"config", a.config},
                           {"config_hash_fnv1a", hex64(fnv1a(config_text))},
                           {"params_hash_fnv1a", hex64(fnv1a(params_text))},
                           {"datasets", entries}};

    const fs::path out(a.out);
    ensure_dir(out);
    for (const auto& [name, text] : files) write_file_atomic(out / name, text);
    write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << files.size() << " datasets to " << out.string() << "\n";
    return exit_ok;
}

struct MatchArgs {
    std::string dataset, initial = "datasheet", out, config;
    double fixed_r = 3.3;
    double setpoint = std::numeric_limits<double>::quiet_NaN();
    bool y_only = false;
    bool single_start = false;
};

PeltierParams resolve_initial(const std::string& spec)
{
    const auto names = initial_guess_preset_names();
    if (std::find(names.begin(), names.end(), spec) != names.end()) return initial_guess_preset(spec);
    std::vector<double> vals;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto v = parse_double(item);
        if (!v) vals.clear();
        if (!v) break;
        vals.push_back(*v);
    }
    if (vals.size() != 3) {
        std::string list;
        for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
        throw InvalidInput("unknown initial guess '" + spec + "'; use a preset (" + list +
                           ") or explicit values alpha,K,C");
    }
    return {vals[0], 3.3, vals[1], vals[2]};
}

int run_match(const MatchArgs& a)
{
    MatchProblem prob;
    prob.dataset = read_dataset_csv(a.dataset);
    prob.initial = resolve_initial(a.initial);
    if (!a.config.empty()) prob.sim = parse_campaign_config(read_file(a.config), a.config).base;
    prob.sim.setpoint = std::isnan(a.setpoint) ? prob.dataset.r.back() : a.setpoint;
    prob.fixed_r = a.fixed_r;
    prob.initial.r_ohm = a.fixed_r;
    if (a.y_only) prob.weight_u = 0.0;
    MatchOptions opts;
    opts.multistart = !a.single_start;
    opts.threads = default_thread_count();
    prob.validate();

    const auto res = match_parameters(prob, opts);
    const char* names[3] = {"alpha", "k", "c"};
    json bounds;
    for (std::size_t i = 0; i < 3; ++i)
        bounds[names[i]] = {{"lo", prob.bounds.lo[i]}, {"hi", prob.bounds.hi[i]},
                            {"at_lower", res.at_lower[i]}, {"at_upper", res.at_upper[i]}};
    const json out = {{"dataset", a.dataset},
                      {"initial",
                       {{"alpha_v_per_k", prob.initial.alpha}, {"r_ohm", prob.initial.r_ohm},
                        {"k_w_per_k", prob.initial.k_cond}, {"c_j_per_k", prob.initial.c_heat}}},
                      {"params",
                       {{"alpha_v_per_k", res.params.alpha}, {"r_ohm", res.params.r_ohm},
                        {"k_w_per_k", res.params.k_cond}, {"c_j_per_k", res.params.c_heat}}},
                      {"sse", res.sse},
                      {"iterations", res.iterations},
                      {"converged", res.converged},
                      {"start_index", res.start_index},
                      {"weights", {{"y", prob.weight_y}, {"u", prob.weight_u}}},
                      {"bounds", bounds},
                      {"residual_y", res.residual_y},
                      {"residual_u", res.residual_u}};
    const fs::path path(a.out);
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    write_file_atomic(path, out.dump(2) + "\n");
    std::cout << "alpha=" << res.params.alpha << " K=" << res.params.k_cond << " C=" << res.params.c_heat
              << " sse=" << res.sse << "\n";
    return exit_ok;
}

struct DiscriminateArgs {
    std::vector<std::string> datasets;
    std::string orders = "22221,33331,44441,55551";
    int precision = 2;
    std::string naic_form = "normalized";
    std::size_t nugap_grid = 2048;
    bool strict_winding = false;
    std::uint64_t seed = 0;
    std::string residuals = "sim";
    std::string out;
};

int run_discriminate(const DiscriminateArgs& a)
{
    DiscriminateOptions opts;
    opts.orders.clear();
    std::stringstream ss(a.orders);
    std::string item;
    while (std::getline(ss, item, ',')) opts.orders.push_back(OrderSpec::parse(item));
    if (opts.orders.empty()) throw InvalidInput("--orders is empty");
    opts.coding.decimal_precision = a.precision;
    opts.coding.validate();
    opts.naic_form = a.naic_form == "literal" ? NaicForm::literal : NaicForm::normalized;
    opts.nugap.grid_size = a.nugap_grid;
    if (a.nugap_grid < 64) throw InvalidInput("--nugap-grid must be at least 64");
    opts.nugap.strict_winding = a.strict_winding;
    opts.fit.seed = a.seed;
    opts.residuals = a.residuals == "pred" ? ResidualSource::prediction : ResidualSource::simulation;
    opts.threads = default_thread_count();

    std::vector<TimeSeriesDataset> data;
    for (const auto& p : a.datasets) data.push_back(read_dataset_csv(p));

    const auto rep = discriminate(data, opts);
    const auto json_text = report_json_text(rep);
    const auto csv_text = report_csv_text(rep);
    const fs::path out(a.out);
    ensure_dir(out);
    write_file_atomic(out / "report.json", json_text);
    write_file_atomic(out / "report.csv", csv_text);

    for (const auto& ds : rep.datasets) {
        std::cout << ds.label << ":";
        if (!ds.error.empty()) {
            std::cout << " error: " << ds.error << "\n";
            continue;
        }
        auto show = [&](const char* name, const BestFlag& b) {
            std::cout << " " << name << "=" << (b.row ? ds.rows[*b.row].order : "-") << (b.tie ? "(tie)" : "");
        };
        show("IG", ds.best_ig);
        show("nAIC", ds.best_naic);
        show("BIC", ds.best_bic);
        show("MDL", ds.best_mdl);
        std::cout << "\n";
    }
    if (rep.nugap.computed)
        std::cout << "nominal: " << rep.nugap.selection.matrix.labels[rep.nugap.selection.winner] << "\n";
    else
        std::cout << rep.nugap.note << "\n";
    return rep.any_success() ? exit_ok : exit_failure;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Digital-twin model discrimination: simulate, match, discriminate"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate closed-loop datasets from a config and params file");
    simulate->add_option("--config", sim.config, "Campaign config file")->required();
    simulate->add_option("--params", sim.params, "Twin parameter file")->required();
    simulate->add_option("--out", sim.out, "Output directory")->required();
    simulate->add_option("--seed", sim.seed, "Override the config seed");

    MatchArgs mat;
    auto* match = app.add_subcommand("match", "Estimate alpha, K, C from a dataset");
    match->add_option("--dataset", mat.dataset, "Dataset CSV")->required();
    match->add_option("--initial", mat.initial, "Preset (datasheet|measurement|experience) or alpha,K,C")
        ->capture_default_str();
    match->add_option("--out", mat.out, "Output JSON path")->required();
    match->add_option("--config", mat.config, "Campaign config with the loop settings used for the data");
    match->add_option("--setpoint", mat.setpoint, "Setpoint label (defaults to the final reference value)");
    match->add_option("--r-ohm", mat.fixed_r, "Measured resistance held fixed")->capture_default_str();
    match->add_flag("--y-only", mat.y_only, "Match the temperature channel only");
    match->add_flag("--single-start", mat.single_start, "Disable multistart");

    DiscriminateArgs dis;
    auto* disc = app.add_subcommand("discriminate", "Score Box-Jenkins orders and select a nominal model");
    disc->add_option("datasets", dis.datasets, "Dataset CSV files")->required();
    disc->add_option("--orders", dis.orders, "Comma-separated order labels")->capture_default_str();
    disc->add_option("--precision", dis.precision, "Decimal digits kept by the coding")
        ->capture_default_str()
        ->check(CLI::Range(0, 15));
    disc->add_option("--naic-form", dis.naic_form, "normalized|literal")
        ->capture_default_str()
        ->check(CLI::IsMember({"normalized", "literal"}));
    disc->add_option("--nugap-grid", dis.nugap_grid, "Frequency grid size")->capture_default_str();
    disc->add_flag("--strict-winding", dis.strict_winding, "Apply the winding-number condition");
    disc->add_option("--seed", dis.seed, "Seed for fit multistarts")->capture_default_str();
    disc->add_option("--residuals", dis.residuals, "sim|pred")
        ->capture_default_str()
        ->check(CLI::IsMember({"sim", "pred"}));
    disc->add_option("--out", dis.out, "Output directory for report.json and report.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*match) return run_match(mat);
        if (*disc) return run_discriminate(dis);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_usage;
}
