// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "support.hpp"

using namespace twin_discrim;
using namespace tdtest;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Check {
public:
    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            out_.pass = false;
            if (!out_.detail.empty()) out_.detail += "; ";
            out_.detail += what;
        }
    }
    void note(const std::string& s)
    {
        if (!out_.detail.empty()) out_.detail += "; ";
        out_.detail += s;
    }
    Outcome result() const { return out_; }

private:
    Outcome out_;
};

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string source_file(const std::string& rel) { return std::string(TWIN_DISCRIM_SOURCE_DIR) + "/" + rel; }

Outcome ac1()
{
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = encode_number(10.34);
    const auto b = encode_number(-0.45);
    const auto la = code_length(10.34), lb = code_length(-0.45);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    c.require(a == "+1034" && la == 5, "10.34 -> " + a + " len " + std::to_string(la));
    c.require(b == "-45" && lb == 3, "-0.45 -> " + b + " len " + std::to_string(lb));
    c.require(ms < 1.0, "took " + fmt(ms) + " ms");
    return c.result();
}

Outcome ac2()
{
    Check c;
    const auto fx = load_fixture("code_lengths_30c.json");
    auto rep = [](long total) { return CodeLengthReport{0, total, total}; };
    const auto y = information_gain(rep(fx["y"]["l_t"]), rep(fx["y"]["l_bj"]));
    const auto u = information_gain(rep(fx["u"]["l_t"]), rep(fx["u"]["l_bj"]));
    c.require(y.gain == 561, "IG(y)=" + std::to_string(y.gain));
    c.require(u.gain == 5, "IG(u)=" + std::to_string(u.gain));
    c.require(y.gain + u.gain == 566, "IGT=" + std::to_string(y.gain + u.gain));
    c.note("IG(y)=" + std::to_string(y.gain) + " IG(u)=" + std::to_string(u.gain) +
           " IGT=" + std::to_string(y.gain + u.gain));
    return c.result();
}

Outcome ac3()
{
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(3003);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = static_cast<std::size_t>(2 + rng.uniform() * 500);
        const int np = static_cast<int>(rng.uniform() * 24);
        const double scale = std::pow(10.0, rng.uniform(-3, 3));
        std::vector<double> e(n);
        for (auto& v : e) v = scale * rng.normal();
        const ResidualSummary rs{e, np, 1};
        worst = std::max({worst, rel_err(naic(rs), oracle_naic(e, np)), rel_err(bic(rs), oracle_bic(e, np)),
                          rel_err(mdl(rs), oracle_mdl(e, np))});
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(worst <= 1e-9, "worst relative error " + fmt(worst));
    c.require(s < 5.0, "took " + fmt(s) + " s");
    c.note("worst rel err " + fmt(worst));
    return c.result();
}

Outcome ac4()
{
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(4004);
    NuGapOptions g1;
    g1.grid_size = 2048;
    NuGapOptions g2 = g1;
    g2.grid_size = 4096;
    double asym = 0.0, shift = 0.0, tri_excess = -1.0;
    bool range_ok = true, self_ok = true;
    std::vector<SimoModel> prev;
    for (int i = 0; i < 50; ++i) {
        const auto a = random_simo(rng, "a" + std::to_string(i));
        const auto b = random_simo(rng, "b" + std::to_string(i));
        const double ab = nugap(a, b, g1), ba = nugap(b, a, g1);
        asym = std::max(asym, std::abs(ab - ba));
        range_ok = range_ok && ab >= 0.0 && ab <= 1.0;
        self_ok = self_ok && nugap(a, a, g1) == 0.0;
        shift = std::max(shift, std::abs(nugap(a, b, g2) - ab));
        if (!prev.empty()) {
            const auto& z = prev.back();
            const double az = nugap(a, z, g1), zb = nugap(z, b, g1);
            tri_excess = std::max(tri_excess, ab - (az + zb));
        }
        prev.push_back(a);
    }
    const SimoModel zero({{0}, {1}}, {{0}, {1}}, "zero"), one({{1}, {1}}, {{0}, {1}}, "one");
    const double closed = oracle_scalar_chordal(0.0, 1.0);
    const double static_gap = nugap(zero, one);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(asym <= 1e-9, "asymmetry " + fmt(asym));
    c.require(self_ok, "self-distance not zero");
    c.require(range_ok, "value outside [0,1]");
    c.require(tri_excess <= 1e-6, "triangle excess " + fmt(tri_excess));
    c.require(std::abs(static_gap - closed) <= 1e-6, "static gap vs closed form " + fmt(static_gap - closed));
    c.require(shift < 1e-3, "grid doubling shift " + fmt(shift));
    c.require(s < 60.0, "took " + fmt(s) + " s");
    c.note("static gap " + fmt(static_gap) + ", max grid shift " + fmt(shift) + ", " + fmt(s) + " s");
    return c.result();
}

Outcome ac5()
{
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const SimConfig base;
    for (int sp : {30, 50, 70, 90}) {
        const auto d = peltier_derivatives({base.ambient, base.ambient}, 0.0, matched_params(sp), base);
        c.require(d.t_a == 0.0 && d.t_b == 0.0, "non-zero equilibrium derivative at sp " + std::to_string(sp));
    }
    Rng rng(5005);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const PeltierParams p{rng.uniform(0.01, 0.2), rng.uniform(1, 6), rng.uniform(0.1, 1), 20};
        const double ta = rng.uniform(280, 370), tb = rng.uniform(280, 370), cur = rng.uniform(-4, 4);
        const auto q = peltier_heat_flows(ta, tb, cur, p);
        const double expect = p.alpha * cur * (ta + tb) - cur * cur * p.r_ohm;
        worst = std::max(worst, std::abs(q.q_a + q.q_b - expect) / std::max(1.0, std::abs(expect)));
    }
    c.require(worst <= 1e-12, "heat balance error " + fmt(worst));
    double drift = 0.0;
    for (int sp : {30, 50, 70, 90}) {
        SimConfig a = base;
        a.setpoint = sp;
        SimConfig b = a;
        b.ode_substeps = 2 * a.ode_substeps;
        const auto ya = simulate_closed_loop(matched_params(sp), a).y;
        const auto yb = simulate_closed_loop(matched_params(sp), b).y;
        for (std::size_t k = 0; k < ya.size(); ++k) drift = std::max(drift, std::abs(ya[k] - yb[k]));
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(drift < 0.05, "substep doubling drift " + fmt(drift) + " degC");
    c.require(s < 10.0, "took " + fmt(s) + " s");
    c.note("heat balance err " + fmt(worst) + ", substep drift " + fmt(drift) + " degC");
    return c.result();
}

Outcome ac6()
{
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    SimConfig cfg;
    cfg.setpoint = 70;
    cfg.duration = 600;
    const auto truth = matched_params(70);
    MatchProblem prob;
    prob.dataset = simulate_closed_loop(truth, cfg);
    prob.sim = cfg;
    prob.initial = initial_guess_preset("datasheet");
    prob.initial.r_ohm = truth.r_ohm;
    prob.fixed_r = truth.r_ohm;
    MatchOptions opts;
    opts.multistart = false;
    opts.threads = 1;
    const auto r = match_parameters(prob, opts);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double ea = std::abs(r.params.alpha / truth.alpha - 1.0);
    const double ek = std::abs(r.params.k_cond / truth.k_cond - 1.0);
    const double ec = std::abs(r.params.c_heat / truth.c_heat - 1.0);
    c.require(ea <= 0.02, "alpha off by " + fmt(100 * ea) + "%");
    c.require(ek <= 0.02, "K off by " + fmt(100 * ek) + "%");
    c.require(ec <= 0.02, "C off by " + fmt(100 * ec) + "%");
    c.require(s <= 60.0, "took " + fmt(s) + " s");
    c.note("alpha=" + fmt(r.params.alpha) + " K=" + fmt(r.params.k_cond) + " C=" + fmt(r.params.c_heat) + " in " +
           fmt(s) + " s");
    return c.result();
}

Outcome ac7()
{
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = parse_campaign_config(read_file(source_file("config/second_order.cfg")), "second_order.cfg");
    const auto params = parse_params_file(read_file(source_file("config/matched.params")), "matched.params");
    std::map<int, PeltierParams> per;
    for (int sp : cfg.setpoints) per[sp] = params.for_setpoint(sp);
    int ok = 0;
    std::array<int, 4> naic_hits{}, bic_hits{}, mdl_hits{};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SimConfig base = cfg.base;
        base.sensor.seed = seed;
        const auto data = generate_campaign(per, base);
        const auto rep = discriminate(data, {});
        bool all = true;
        for (const auto& ds : rep.datasets) {
            auto idx = [](const BestFlag& b) { return b.row ? static_cast<int>(*b.row) : -1; };
            const int n = idx(ds.best_naic), b = idx(ds.best_bic), m = idx(ds.best_mdl);
            if (n >= 0) ++naic_hits[static_cast<std::size_t>(n)];
            if (b >= 0) ++bic_hits[static_cast<std::size_t>(b)];
            if (m >= 0) ++mdl_hits[static_cast<std::size_t>(m)];
            all = all && n == 0 && b == 0 && m == 0 && !ds.best_naic.tie && !ds.best_bic.tie && !ds.best_mdl.tie;
        }
        if (all) ++ok;
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto hist = [](const std::array<int, 4>& h) {
        std::ostringstream os;
        os << h[0] << "/" << h[1] << "/" << h[2] << "/" << h[3];
        return os.str();
    };
    c.require(ok >= 9, "campaigns with 22221 under all three criteria: " + std::to_string(ok) + "/10");
    c.require(s <= 300.0, "took " + fmt(s) + " s");
    c.note("picks per order 2/3/4/5 over 40 datasets: nAIC " + hist(naic_hits) + ", BIC " + hist(bic_hits) +
           ", MDL " + hist(mdl_hits) + "; " + fmt(s) + " s");
    return c.result();
}

Outcome ac8()
{
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    // Static-gain models: every pairwise gap is the scalar chordal distance of the gains.
    const std::vector<double> gains{-0.6, 0.1, 0.45, 1.6};
    std::vector<SimoModel> ms;
    for (std::size_t i = 0; i < gains.size(); ++i)
        ms.emplace_back(DiscreteTransferFunction({gains[i]}, {1}), DiscreteTransferFunction({0}, {1}),
                        "m" + std::to_string(i + 1));
    std::vector<double> expect(gains.size(), 0.0);
    for (std::size_t i = 0; i < gains.size(); ++i)
        for (std::size_t j = 0; j < gains.size(); ++j)
            if (i != j) expect[i] += oracle_scalar_chordal(gains[i], gains[j]);
    const auto oracle_winner =
        static_cast<std::size_t>(std::min_element(expect.begin(), expect.end()) - expect.begin());
    c.require(oracle_winner == 2, "construction does not put model 3 at the barycenter");
    const auto sel = select_nominal(ms);
    c.require(sel.winner == 2, "select_nominal returned " + std::to_string(sel.winner));
    double worst = 0.0;
    for (std::size_t i = 0; i < expect.size(); ++i)
        worst = std::max(worst, std::abs(sel.matrix.cumulative[i] - expect[i]));
    c.require(worst < 1e-6, "cumulative sums off by " + fmt(worst));

    const auto printed = argmin_cumulative(std::vector<double>{2.93, 2.74, 2.22, 2.28});
    c.require(printed.index == 2 && !printed.tie, "printed sums argmin " + std::to_string(printed.index));
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(s < 10.0, "took " + fmt(s) + " s");
    return c.result();
}

Outcome ac9()
{
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(9009);
    std::vector<double> u(800);
    double level = 1.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (k % 6 == 0) level = rng.uniform() < 0.5 ? -1.0 : 1.0;
        u[k] = level;
    }
    const DiscreteTransferFunction truth({0, 0.3, -0.1}, {1, -1.2, 0.5});
    const auto y = simulate(truth, u);
    const auto fit = fit_output_error(u, y, OrderSpec::parse("22221"));
    double coef = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        coef = std::max(coef, std::abs(fit.model.b[i] - truth.numerator()[i]));
        coef = std::max(coef, std::abs(fit.model.f[i] - truth.denominator()[i]));
    }
    c.require(coef <= 1e-3, "coefficient error " + fmt(coef));

    // Noisy higher-order generator, nested orders 2..5 on both channels.
    auto yn = simulate({{0, 0.2, 0.05, 0.02}, {1, -1.3, 0.6, -0.1}}, u);
    for (auto& v : yn) v += 0.05 * rng.normal();
    TimeSeriesDataset d;
    for (std::size_t k = 0; k < u.size(); ++k) {
        d.t.push_back(static_cast<double>(k));
        d.r.push_back(u[k]);
        d.y.push_back(yn[k]);
        d.u.push_back(u[k] - 0.4 * yn[k]);
    }
    const auto fam = identify_family(d, default_orders());
    double prev_y = INFINITY, prev_u = INFINITY;
    bool mono = true;
    for (const auto& o : fam.orders) {
        if (!o.ok()) {
            c.require(false, "order " + o.spec.label() + " failed: " + o.error);
            continue;
        }
        double ny = 0.0, nu = 0.0;
        for (double e : o.fit_y->sim_residuals) ny += e * e;
        for (double e : o.fit_u->sim_residuals) nu += e * e;
        ny = std::sqrt(ny);
        nu = std::sqrt(nu);
        mono = mono && ny <= prev_y + 1e-6 && nu <= prev_u + 1e-6;
        prev_y = ny;
        prev_u = nu;
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(mono, "residual norm increased with order");
    c.require(s < 60.0, "took " + fmt(s) + " s");
    c.note("max coefficient error " + fmt(coef) + ", " + fmt(s) + " s");
    return c.result();
}

Outcome ac10()
{
    Check c;
    const auto cfg = parse_campaign_config(read_file(source_file("config/campaign.cfg")), "campaign.cfg");
    const auto params = parse_params_file(read_file(source_file("config/matched.params")), "matched.params");
    auto run = [&] {
        std::map<int, PeltierParams> per;
        for (int sp : cfg.setpoints) per[sp] = params.for_setpoint(sp);
        SimConfig base = cfg.base;
        base.sensor.seed = cfg.seed;
        const auto rep = discriminate(generate_campaign(per, base), {});
        return std::pair{report_json_text(rep), report_csv_text(rep)};
    };
    const auto a = run();
    const auto b = run();
    c.require(a.first == b.first, "JSON reports differ");
    c.require(a.second == b.second, "CSV reports differ");
    c.note("json fnv1a " + std::to_string(fnv1a(a.first)) + ", csv fnv1a " + std::to_string(fnv1a(a.second)));
    return c.result();
}

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
        {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10},
    };
    std::string only = argc > 1 ? argv[1] : "";
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && only != name) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << name << " " << (o.pass ? "PASS" : "FAIL") << (o.detail.empty() ? "" : "  " + o.detail)
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
