#pragma once

/** @file
 * Lumped Peltier thermal twin in closed loop with a discrete PID.
 *
 * Face A is the controlled (observed) surface, face B sits on a heatsink that
 * conducts to ambient. The two printed heat-flow relations
 *
 *   Q_A = alpha T_A I - I^2 R / 2 + K (T_A - T_B)
 *   Q_B = alpha T_B I - I^2 R / 2 + K (T_B - T_A)
 *
 * give the heat drawn from a face when the current I flows in that face's
 * absorbing orientation. A drive current i >= 0 heats face A, so face A sees
 * I = -i and face B sees I = +i:
 *
 *   C   dT_A/dt = -Q_A(-i) - G_face (T_A - T_amb)
 *   C_B dT_B/dt = -Q_B(+i) - G_hs   (T_B - T_amb)
 *
 * The two heat inputs add up to i * V with V = alpha (T_A - T_B) + i R, so the
 * electrical power balances. Temperatures are Kelvin inside the flow terms.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "random.hpp"

namespace twin_discrim {

inline constexpr double kelvin_offset = 273.15;

struct PeltierParams {
    double alpha = 0.0;   ///< Seebeck coefficient [V/K]
    double r_ohm = 3.3;   ///< electrical resistance [ohm]
    double k_cond = 0.0;  ///< thermal conductance [W/K]
    double c_heat = 0.0;  ///< lumped heat capacity C*m [J/K]

    void validate() const
    {
        if (!(alpha > 0.0) || !(r_ohm > 0.0) || !(k_cond > 0.0) || !(c_heat > 0.0))
            throw InvalidInput("Peltier parameters must all be strictly positive");
    }

    friend bool operator==(const PeltierParams&, const PeltierParams&) = default;
};

/// Behavioral-matching results per setpoint.
inline PeltierParams matched_params(int setpoint)
{
    switch (setpoint) {
    case 30: return {0.0963, 3.3, 0.30, 34.9};
    case 50: return {0.0825, 3.3, 0.35, 31.93};
    case 70: return {0.0211, 3.3, 0.286, 11.1};
    case 90: return {0.0295, 3.3, 0.38, 13.7};
    default: throw InvalidInput("no tabulated parameters for setpoint " + std::to_string(setpoint));
    }
}

inline std::map<int, PeltierParams> matched_campaign()
{
    return {{30, matched_params(30)}, {50, matched_params(50)}, {70, matched_params(70)},
            {90, matched_params(90)}};
}

/// Initial-guess presets: "datasheet", "measurement", "experience".
inline PeltierParams initial_guess_preset(const std::string& name)
{
    if (name == "datasheet") return {0.053, 1.8, 0.5555, 15.0};
    if (name == "measurement") return {0.040, 6.0, 0.3333, 15.0};
    if (name == "experience") return {0.075, 3.3, 0.3808, 31.4173};
    throw InvalidInput("unknown initial-guess preset '" + name +
                       "' (expected datasheet, measurement, experience)");
}

inline std::vector<std::string> initial_guess_preset_names() { return {"datasheet", "measurement", "experience"}; }

enum class AntiWindup {
    none,
    /// Integrator held while saturated in the error's direction and clamped so that
    /// P + I + D stays inside the output range.
    conditional,
};

struct PidConfig {
    double kp = 8.0;
    double ki = 0.25;
    double kd = 0.0;
    double out_min = 0.0;
    double out_max = 255.0;
    AntiWindup anti_windup = AntiWindup::conditional;
    /// Weight of the reference in the proportional term (1 = error feedback).
    double setpoint_weight = 1.0;
};

struct SensorConfig {
    double quantization = 0.0;  ///< degC step; 0 disables
    double noise_sigma = 0.0;   ///< degC
    std::uint64_t seed = 0;
};

struct SimConfig {
    double setpoint = 50.0;
    double ambient = 25.0;
    double duration = 600.0;
    double sample_time = 1.0;
    /// Reference holds ambient until this time, then steps to the setpoint.
    double step_time = 10.0;
    /// When positive the reference steps to ambient + reference_step instead of the setpoint.
    double reference_step = 0.0;
    int ode_substeps = 10;
    PidConfig pid;
    double supply_voltage = 12.0;
    double face_loss_conductance = 0.3;
    double heatsink_conductance = 2.0;
    double heatsink_capacity = 20.0;
    SensorConfig sensor;

    std::size_t samples() const
    {
        return static_cast<std::size_t>(std::floor(duration / sample_time + 1e-9)) + 1;
    }

    void validate() const
    {
        if (!(sample_time > 0.0)) throw InvalidInput("sample_time must be positive");
        if (!(duration > 0.0) || duration / sample_time < 50.0)
            throw InvalidInput("duration must span at least 50 samples");
        if (reference_step < 0.0) throw InvalidInput("reference_step must be non-negative");
        if (ode_substeps < 1) throw InvalidInput("ode_substeps must be >= 1");
        if (!(pid.out_min < pid.out_max)) throw InvalidInput("PID output range must be ordered");
        if (!(supply_voltage > 0.0)) throw InvalidInput("supply_voltage must be positive");
        if (face_loss_conductance < 0.0 || heatsink_conductance < 0.0)
            throw InvalidInput("conductances must be non-negative");
        if (!(heatsink_capacity > 0.0)) throw InvalidInput("heatsink_capacity must be positive");
        if (sensor.quantization < 0.0 || sensor.noise_sigma < 0.0)
            throw InvalidInput("sensor quantization and noise must be non-negative");
    }
};

struct HeatFlows {
    double q_a = 0.0;
    double q_b = 0.0;
};

/// The printed heat-flow relations; temperatures in Kelvin, current signed.
inline HeatFlows peltier_heat_flows(double t_a_kelvin, double t_b_kelvin, double current, const PeltierParams& p)
{
    const double joule = 0.5 * current * current * p.r_ohm;
    return {p.alpha * t_a_kelvin * current - joule + p.k_cond * (t_a_kelvin - t_b_kelvin),
            p.alpha * t_b_kelvin * current - joule + p.k_cond * (t_b_kelvin - t_a_kelvin)};
}

inline double terminal_voltage(double t_a_kelvin, double t_b_kelvin, double current, const PeltierParams& p)
{
    return p.alpha * (t_b_kelvin - t_a_kelvin) + current * p.r_ohm;
}

struct ThermalState {
    double t_a = 25.0;  ///< degC
    double t_b = 25.0;  ///< degC
};

/// Time derivatives [K/s] for drive current i >= 0 (heating face A).
inline ThermalState peltier_derivatives(const ThermalState& s, double drive_current, const PeltierParams& p,
                                        const SimConfig& cfg)
{
    const double ta = s.t_a + kelvin_offset;
    const double tb = s.t_b + kelvin_offset;
    const double heat_a = -peltier_heat_flows(ta, tb, -drive_current, p).q_a;
    const double heat_b = -peltier_heat_flows(ta, tb, drive_current, p).q_b;
    return {(heat_a - cfg.face_loss_conductance * (s.t_a - cfg.ambient)) / p.c_heat,
            (heat_b - cfg.heatsink_conductance * (s.t_b - cfg.ambient)) / cfg.heatsink_capacity};
}

/// Counts in the PID output range mapped linearly to duty, then to average current.
inline double drive_current(double u, const PeltierParams& p, const SimConfig& cfg)
{
    const double duty = std::clamp((u - cfg.pid.out_min) / (cfg.pid.out_max - cfg.pid.out_min), 0.0, 1.0);
    return duty * cfg.supply_voltage / p.r_ohm;
}

struct ClosedLoopTrace {
    TimeSeriesDataset data;
    std::vector<double> t_a;         ///< true face temperature at each sample
    std::vector<double> t_b;
    std::vector<double> integrator;    ///< PID integral term after each update
    std::vector<double> proportional;  ///< P + D terms at each sample
};

inline std::vector<double> step_reference(const SimConfig& cfg)
{
    const auto n = cfg.samples();
    std::vector<double> r(n);
    const double target = cfg.reference_step > 0.0 ? cfg.ambient + cfg.reference_step : cfg.setpoint;
    for (std::size_t k = 0; k < n; ++k)
        r[k] = static_cast<double>(k) * cfg.sample_time < cfg.step_time ? cfg.ambient : target;
    return r;
}

/// Closed loop driven by an explicit reference sequence, sampled every cfg.sample_time.
inline ClosedLoopTrace simulate_trace(const PeltierParams& p, const SimConfig& cfg, std::span<const double> reference,
                                      bool apply_sensor = true)
{
    p.validate();
    cfg.validate();
    const std::size_t n = reference.size();
    if (n < 2) throw InvalidInput("reference needs at least two samples");

    ClosedLoopTrace out;
    auto& d = out.data;
    d.t.resize(n);
    d.r.assign(reference.begin(), reference.end());
    d.u.resize(n);
    d.y.resize(n);
    out.t_a.resize(n);
    out.t_b.resize(n);
    out.integrator.resize(n);
    out.proportional.resize(n);

    Rng rng(cfg.sensor.seed);
    ThermalState s{cfg.ambient, cfg.ambient};
    const auto& pid = cfg.pid;
    const double h = cfg.sample_time / cfg.ode_substeps;
    double integ = 0.0;
    double y_prev = 0.0;

    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(s.t_a) || !std::isfinite(s.t_b))
            throw SimulationDiverged("twin simulation diverged at step " + std::to_string(k), k);
        d.t[k] = static_cast<double>(k) * cfg.sample_time;
        double y = s.t_a;
        if (apply_sensor) {
            if (cfg.sensor.noise_sigma > 0.0) y += cfg.sensor.noise_sigma * rng.normal();
            if (cfg.sensor.quantization > 0.0) y = std::round(y / cfg.sensor.quantization) * cfg.sensor.quantization;
        }
        if (k == 0) y_prev = y;

        const double e = reference[k] - y;
        const double p_term = pid.kp * (pid.setpoint_weight * reference[k] - y);
        const double d_term = -pid.kd * (y - y_prev) / cfg.sample_time;
        if (k == 0) integ = pid.out_min - p_term - d_term;  // bumpless start at rest
        const double v = p_term + integ + d_term;
        const double u = std::clamp(v, pid.out_min, pid.out_max);
        switch (pid.anti_windup) {
        case AntiWindup::none:
            integ += pid.ki * cfg.sample_time * e;
            break;
        case AntiWindup::conditional: {
            const bool push_high = v > pid.out_max && e > 0.0;
            const bool push_low = v < pid.out_min && e < 0.0;
            if (!push_high && !push_low) integ += pid.ki * cfg.sample_time * e;
            integ = std::clamp(integ, pid.out_min - p_term - d_term, pid.out_max - p_term - d_term);
            break;
        }
        }
        out.proportional[k] = p_term + d_term;
        y_prev = y;

        d.u[k] = u;
        d.y[k] = y;
        out.t_a[k] = s.t_a;
        out.t_b[k] = s.t_b;
        out.integrator[k] = integ;

        const double current = drive_current(u, p, cfg);
        for (int sub = 0; sub < cfg.ode_substeps; ++sub) {
            const auto ds = peltier_derivatives(s, current, p, cfg);
            s.t_a += h * ds.t_a;
            s.t_b += h * ds.t_b;
        }
    }
    if (!std::isfinite(s.t_a) || !std::isfinite(s.t_b))
        throw SimulationDiverged("twin simulation diverged at step " + std::to_string(n), n);
    return out;
}

inline TimeSeriesDataset simulate_closed_loop(const PeltierParams& p, const SimConfig& cfg)
{
    cfg.validate();
    auto trace = simulate_trace(p, cfg, step_reference(cfg));
    trace.data.label = "sp" + std::to_string(static_cast<long>(std::lround(cfg.setpoint)));
    return std::move(trace.data);
}

/// One dataset per setpoint (ascending), sensor seed offset by the setpoint.
inline std::vector<TimeSeriesDataset> generate_campaign(const std::map<int, PeltierParams>& per_setpoint,
                                                              const SimConfig& base)
{
    if (per_setpoint.empty()) throw InvalidInput("campaign needs at least one setpoint");
    std::vector<TimeSeriesDataset> out;
    for (const auto& [sp, params] : per_setpoint) {
        SimConfig cfg = base;
        cfg.setpoint = sp;
        cfg.sensor.seed = base.sensor.seed + static_cast<std::uint64_t>(sp);
        out.push_back(simulate_closed_loop(params, cfg));
    }
    return out;
}

}  // namespace twin_discrim
