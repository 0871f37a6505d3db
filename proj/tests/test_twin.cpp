#include <gtest/gtest.h>

#include "support.hpp"

using namespace twin_discrim;
using namespace tdtest;

TEST(HeatFlows, EquilibriumWithoutCurrent)
{
    const auto p = matched_params(50);
    const SimConfig cfg;
    const auto d = peltier_derivatives({cfg.ambient, cfg.ambient}, 0.0, p, cfg);
    EXPECT_EQ(d.t_a, 0.0);
    EXPECT_EQ(d.t_b, 0.0);
}

TEST(HeatFlows, OhmicVoltageAtEqualTemperatures)
{
    const auto p = matched_params(30);
    EXPECT_DOUBLE_EQ(terminal_voltage(300.0, 300.0, 2.0, p), 2.0 * p.r_ohm);
}

TEST(HeatFlows, SumIsJoulePlusPeltierImbalance)
{
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const PeltierParams p{rng.uniform(0.01, 0.2), rng.uniform(1, 6), rng.uniform(0.1, 1), 20};
        const double ta = rng.uniform(280, 370), tb = rng.uniform(280, 370), cur = rng.uniform(-4, 4);
        const auto q = peltier_heat_flows(ta, tb, cur, p);
        // Conduction cancels; what remains is alpha*I*(Ta+Tb) - I^2 R.
        EXPECT_NEAR(q.q_a + q.q_b, p.alpha * cur * (ta + tb) - cur * cur * p.r_ohm, 1e-9);
    }
}

TEST(HeatFlows, PositiveCurrentHeatsFaceA)
{
    const auto p = matched_params(50);
    const SimConfig cfg;
    const auto d = peltier_derivatives({cfg.ambient, cfg.ambient}, 2.0, p, cfg);
    EXPECT_GT(d.t_a, 0.0);
}

TEST(ClosedLoop, ZeroGainsGiveZeroDrive)
{
    SimConfig cfg;
    cfg.pid.kp = cfg.pid.ki = cfg.pid.kd = 0.0;
    const auto d = simulate_closed_loop(matched_params(50), cfg);
    for (double u : d.u) EXPECT_EQ(u, 0.0);
    for (double y : d.y) EXPECT_EQ(y, cfg.ambient);
}

TEST(ClosedLoop, SettlesNearSetpoint)
{
    SimConfig cfg;
    cfg.setpoint = 50;
    const auto d = simulate_closed_loop(matched_params(50), cfg);
    ASSERT_EQ(d.size(), 601u);
    EXPECT_EQ(d.label, "sp50");
    EXPECT_NEAR(d.y.back(), 50.0, 1.0);
    EXPECT_EQ(d.r.front(), cfg.ambient);
    EXPECT_EQ(d.r.back(), 50.0);
}

TEST(ClosedLoop, SubstepRefinementConverges)
{
    SimConfig coarse;
    coarse.ode_substeps = 10;
    SimConfig fine = coarse;
    fine.ode_substeps = 100;
    const auto a = simulate_closed_loop(matched_params(50), coarse);
    const auto b = simulate_closed_loop(matched_params(50), fine);
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a.y[k] - b.y[k]));
    EXPECT_LT(worst, 0.05);
}

TEST(ClosedLoop, CampaignReachesEachSetpoint)
{
    SimConfig cfg;
    cfg.sensor = {0.01, 0.05, 1};
    const auto sets = generate_campaign(matched_campaign(), cfg);
    ASSERT_EQ(sets.size(), 4u);
    const int sps[] = {30, 50, 70, 90};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(sets[i].label, "sp" + std::to_string(sps[i]));
        double tail = 0.0;
        for (std::size_t k = sets[i].size() - 50; k < sets[i].size(); ++k) tail += sets[i].y[k];
        EXPECT_NEAR(tail / 50.0, sps[i], 1.5) << sets[i].label;
    }
}

TEST(ClosedLoop, DeterministicForFixedSeed)
{
    SimConfig cfg;
    cfg.sensor = {0.01, 0.1, 77};
    const auto a = simulate_closed_loop(matched_params(70), cfg);
    const auto b = simulate_closed_loop(matched_params(70), cfg);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.u, b.u);
    cfg.sensor.seed = 78;
    EXPECT_NE(simulate_closed_loop(matched_params(70), cfg).y, a.y);
}

TEST(ClosedLoop, QuantizedReadings)
{
    SimConfig cfg;
    cfg.sensor = {0.25, 0.0, 0};
    const auto d = simulate_closed_loop(matched_params(30), cfg);
    for (double y : d.y) EXPECT_NEAR(y / 0.25, std::round(y / 0.25), 1e-9);
}

TEST(ClosedLoopProperty, AntiWindupKeepsCommandInRange)
{
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        SimConfig cfg;
        cfg.setpoint = rng.uniform(30, 95);
        cfg.pid.kp = rng.uniform(1, 40);
        cfg.pid.ki = rng.uniform(0.05, 2);
        cfg.sensor = {0.01, 0.05, static_cast<std::uint64_t>(trial)};
        const auto tr = simulate_trace(matched_params(90), cfg, step_reference(cfg));
        for (std::size_t k = 0; k < tr.data.size(); ++k) {
            ASSERT_GE(tr.data.u[k], cfg.pid.out_min);
            ASSERT_LE(tr.data.u[k], cfg.pid.out_max);
            const double v = tr.proportional[k] + tr.integrator[k];
            ASSERT_GE(v, cfg.pid.out_min - 1e-9);
            ASSERT_LE(v, cfg.pid.out_max + 1e-9);
        }
    }
}

TEST(ClosedLoopProperty, UnreachableSetpointSaturates)
{
    SimConfig cfg;
    cfg.setpoint = 500;
    const auto tr = simulate_trace(matched_params(70), cfg, step_reference(cfg));
    EXPECT_NEAR(tr.data.u.back(), cfg.pid.out_max, 1e-3);
    // Integrator does not run away while saturated.
    EXPECT_LE(tr.integrator.back() + tr.proportional.back(), cfg.pid.out_max + 1e-9);
}

TEST(ClosedLoopProperty, TemperatureNeverBelowAmbientWhenHeating)
{
    SimConfig cfg;
    const auto tr = simulate_trace(matched_params(50), cfg, step_reference(cfg), false);
    for (std::size_t k = 1; k < tr.t_a.size(); ++k) EXPECT_GE(tr.t_a[k], cfg.ambient - 1e-12);
}

TEST(ClosedLoop, HeatsinkVariantStepsAboveAmbient)
{
    SimConfig cfg;
    cfg.reference_step = 3.0;
    const auto r = step_reference(cfg);
    EXPECT_EQ(r.front(), 25.0);
    EXPECT_EQ(r.back(), 28.0);
}

TEST(Config, ValidationErrors)
{
    SimConfig cfg;
    cfg.duration = 0;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.ode_substeps = 0;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.pid.out_min = 10;
    cfg.pid.out_max = 10;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    EXPECT_THROW((PeltierParams{0, 3.3, 0.3, 30}.validate()), InvalidInput);
}

TEST(Presets, KnownNamesAndError)
{
    for (const auto& n : initial_guess_preset_names()) EXPECT_NO_THROW(initial_guess_preset(n));
    EXPECT_EQ(initial_guess_preset("experience").c_heat, 31.4173);
    try {
        initial_guess_preset("bogus");
        FAIL();
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("datasheet"), std::string::npos);
    }
    EXPECT_THROW(matched_params(40), InvalidInput);
}
