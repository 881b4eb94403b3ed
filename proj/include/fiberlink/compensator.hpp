// Round-trip phase compensation engine: the optical two-actuator servo, the
// electronic phase-conjugation variant, and the free-running link, all over
// one shared noise pipeline. The loop runs either as explicit PI difference
// equations with the transport delay (servo-band grids, dt <= T_rt/4) or as
// the in-band-ideal quasi-static correction (long-run grids).
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberlink/core.hpp"
#include "fiberlink/laser_spectrum.hpp"
#include "fiberlink/link.hpp"
#include "fiberlink/noise.hpp"
#include "fiberlink/pmd.hpp"

namespace fiberlink {

class LoopInstabilityError : public std::runtime_error {
public:
    explicit LoopInstabilityError(const std::string& what) : std::runtime_error(what) {}
};

/// Fast (PZT stretcher) and slow (thermal spool) delay lines. The
/// polarization gains couple actuator motion into the input polarization
/// state; they only matter when the forward scrambler is off.
struct ActuatorParams {
    double fast_range_ps = 15.0;  // total stroke, +-7.5 ps about center
    double fast_bandwidth_hz = 1.0e4;
    bool fast_enabled = true;
    double slow_sensitivity_ps_per_degc = 150.0;
    double slow_range_ns = 6.0;  // total
    double slow_time_constant_s = 30.0;
    double polarization_gain_fast_rad_per_ps = 0.0;
    double polarization_gain_slow_rad_per_ps = 0.0;
    // thermal-servo hunting of the spool, visible only as polarization wobble
    double slow_hunt_rad = 0.0;
    double slow_hunt_period_s = 3600.0;

    void validate() const {
        if (!(fast_range_ps > 0.0) || !(slow_range_ns > 0.0))
            throw std::invalid_argument("ActuatorParams: ranges must be positive");
        if (fast_range_ps * 1e-3 >= slow_range_ns)
            throw std::invalid_argument("ActuatorParams: fast range must be well below slow");
        if (!(fast_bandwidth_hz > 0.0) || !(slow_time_constant_s > 0.0))
            throw std::invalid_argument("ActuatorParams: dynamics must be positive");
        if (slow_hunt_rad < 0.0 || !(slow_hunt_period_s > 0.0))
            throw std::invalid_argument("ActuatorParams: hunt parameters out of range");
    }
};

/// PI loop filter behind the round-trip phase detector. Gains can be given
/// directly or derived from the target unity-gain bandwidth (integrator
/// dominant, zero at one third of the crossover).
struct LoopParams {
    double roundtrip_delay_s = 0.0;  // 0: derive from the topology
    double proportional_gain = 0.0;  // dimensionless; 0: derive
    double integrator_gain = 0.0;    // 1/s; 0: derive
    double target_unity_gain_bandwidth_hz = 250.0;

    void validate(double t_rt) const {
        if (!(target_unity_gain_bandwidth_hz > 0.0))
            throw std::invalid_argument("LoopParams: bandwidth must be positive");
        if (target_unity_gain_bandwidth_hz >= 1.0 / (4.0 * t_rt))
            throw std::invalid_argument(
                "LoopParams: unity-gain bandwidth violates the transport-delay margin "
                "(must stay below 1/(4 T_rt))");
    }

    double derived_kp() const {
        if (proportional_gain != 0.0) return proportional_gain;
        return 3.0 / (2.0 * std::sqrt(10.0));
    }
    double derived_ki() const {  // 1/s
        if (integrator_gain != 0.0) return integrator_gain;
        return two_pi * target_unity_gain_bandwidth_hz / (2.0 * std::sqrt(10.0));
    }
};

struct CompensatorState {
    double fast_correction_s = 0.0;
    double slow_correction_s = 0.0;
    double integrator = 0.0;
    bool fast_saturated = false;
    bool slow_saturated = false;
};

enum class CompensatorKind { optical, electronic, none };

/// Everything stochastic in one place, plus the transmitter description the
/// dispersion terms need.
struct NoiseBundle {
    LaserParams laser;
    LaserNoiseParams laser_noise;
    FiberNoiseParams fiber;
    PmdParams pmd;
    FloorParams floor;
    bool scrambler_forward = true;
    bool scrambler_backward = true;
    // deterministic path disturbances (loop diagnostics): a one-way delay
    // step applied at step_time on the chosen direction
    double inject_forward_step_ps = 0.0;
    double inject_backward_step_ps = 0.0;
    double inject_step_time_s = 0.0;
};

struct ScenarioResult {
    TimeGrid grid;
    double carrier_hz = 1.0e9;           // forward RF
    double backward_carrier_hz = 0.9e9;
    double static_phase_offset_rad = 0.0;  // -W_f * t0; fluctuations below
    std::vector<double> remote_phase_rad;   // remote-minus-reference, at carrier
    std::vector<double> error_rad;          // error signal at the backward RF
    std::vector<double> fast_ps;
    std::vector<double> slow_ps;
    std::map<std::string, std::vector<double>> components;  // rad-at-carrier terms
    bool fast_saturated = false;
    bool slow_saturated = false;
    bool compliant = true;
    std::string loop_mode;  // "pi-transport-delay" or "quasi-static"
    double roundtrip_delay_s = 0.0;
    double differential_delay_s = 0.0;
    std::uint64_t seed = 0;

    PhaseSeries remote_series() const {
        return PhaseSeries::radians_at(grid, remote_phase_rad, carrier_hz);
    }
    PhaseSeries reference_series() const {
        return PhaseSeries::radians_at(grid, std::vector<double>(grid.n_samples, 0.0),
                                       carrier_hz);
    }
};

namespace detail {

inline constexpr std::uint64_t stream_fiber = 0x0f1bull;
inline constexpr std::uint64_t stream_floor_error = 0xf100ull;
inline constexpr std::uint64_t stream_floor_meas = 0xf10eull;
inline constexpr std::uint64_t stream_electronics = 0xe1ecull << 8;
inline constexpr std::uint64_t stream_pmd_fwd = 0x90dfull;
inline constexpr std::uint64_t stream_pmd_bwd = 0x90dbull;
inline constexpr std::uint64_t stream_edfa_fwd = 0xedfa01ull;
inline constexpr std::uint64_t stream_edfa_bwd = 0xedfa02ull;

inline double clamp_flag(double v, double half_range, bool& flag) {
    if (v > half_range) {
        flag = true;
        return half_range;
    }
    if (v < -half_range) {
        flag = true;
        return -half_range;
    }
    return v;
}

inline ScenarioResult run_link(const LinkTopology& topo, const NoiseBundle& bundle,
                               const ActuatorParams& actuators, const LoopParams& loop,
                               double duration_s, double dt_s, std::uint64_t seed,
                               CompensatorKind kind) {
    topo.validate();
    bundle.laser.validate();
    bundle.laser_noise.validate();
    bundle.fiber.validate();
    bundle.pmd.validate();
    bundle.floor.validate();
    actuators.validate();
    if (!(dt_s > 0.0) || !(duration_s > 0.0))
        throw std::invalid_argument("run_link: duration and dt must be positive");

    const double t_rt = loop.roundtrip_delay_s > 0.0 ? loop.roundtrip_delay_s
                                                     : topo.roundtrip_delay_s();
    if (kind != CompensatorKind::none) {
        loop.validate(t_rt);
        if (duration_s < 100.0 * t_rt)
            throw std::invalid_argument("run_link: duration must cover 100 round trips");
    }

    TimeGrid grid{dt_s, static_cast<std::size_t>(std::llround(duration_s / dt_s)), 0.0};
    grid.validate();
    const std::size_t n = grid.n_samples;

    const double w_f = topo.modulation.forward_rad_s();
    const double w_b = topo.modulation.backward_rad_s();
    const double nu_f = topo.modulation.forward_rf_hz;
    const double dtd = total_differential_delay_s(topo, bundle.laser.wavelength_nm,
                                                  bundle.laser.carrier_frequency_hz, w_f);

    // noise streams
    const std::vector<double> fiber =
        fiber_delay_process(bundle.fiber, grid, seed, stream_fiber);
    const std::vector<double> dnu1 =
        laser_frequency_noise(bundle.laser_noise, grid, seed, 1);
    const std::vector<double> dnu2 =
        laser_frequency_noise(bundle.laser_noise, grid, seed, 2);
    const std::vector<double> floor_err =
        detection_floor_delay(bundle.floor, grid, seed, stream_floor_error);
    const std::vector<double> floor_meas =
        detection_floor_delay(bundle.floor, grid, seed, stream_floor_meas);
    const std::vector<double> electronics =
        electronics_longterm_delay(bundle.floor, grid, seed, stream_electronics);

    std::vector<double> edfa_f, edfa_b;
    const std::size_t n_edfa = topo.edfas.size();
    if (n_edfa > 0) {
        edfa_f = edfa_excess_delay(bundle.floor, grid, seed, stream_edfa_fwd);
        edfa_b = edfa_excess_delay(bundle.floor, grid, seed, stream_edfa_bwd);
        const double scale = std::sqrt(static_cast<double>(n_edfa));
        for (double& v : edfa_f) v *= scale;
        for (double& v : edfa_b) v *= scale;
    } else {
        edfa_f.assign(n, 0.0);
        edfa_b.assign(n, 0.0);
    }

    const PmdModel pmd_fwd(bundle.pmd, seed, stream_pmd_fwd);
    const PmdModel pmd_bwd(bundle.pmd, seed, stream_pmd_bwd);
    const StokesVector input_fwd{1.0, 0.0, 0.0};
    const StokesVector input_bwd{0.0, 1.0, 0.0};
    detail::Vec3 coupling_axis;
    double hunt_phase = 0.0;
    {
        NoiseRng rng(seed, 0xa115ull);
        const double ct = 2.0 * rng.uniform() - 1.0;
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        const double ph = two_pi * rng.uniform();
        coupling_axis = {st * std::cos(ph), st * std::sin(ph), ct};
        hunt_phase = two_pi * rng.uniform();
    }

    const bool dynamic_loop = kind != CompensatorKind::none && dt_s <= t_rt / 4.0;
    const std::size_t delay_steps =
        dynamic_loop ? std::max<std::size_t>(1, static_cast<std::size_t>(
                                                    std::llround(t_rt / dt_s)))
                     : 0;
    const double kp = loop.derived_kp();
    const double ki = loop.derived_ki();
    const double alpha_fast = 1.0 - std::exp(-two_pi * actuators.fast_bandwidth_hz * dt_s);
    const double alpha_slow = 1.0 - std::exp(-dt_s / actuators.slow_time_constant_s);
    const double fast_half = 0.5 * actuators.fast_range_ps * 1e-12;
    const double slow_half = 0.5 * actuators.slow_range_ns * 1e-9;

    ScenarioResult result;
    result.grid = grid;
    result.carrier_hz = nu_f;
    result.backward_carrier_hz = topo.modulation.backward_rf_hz;
    result.static_phase_offset_rad = -w_f * topo.one_way_delay_s();
    result.roundtrip_delay_s = t_rt;
    result.differential_delay_s = dtd;
    result.seed = seed;
    result.loop_mode = dynamic_loop ? "pi-transport-delay" : "quasi-static";
    result.remote_phase_rad.resize(n);
    result.error_rad.resize(n);
    result.fast_ps.resize(n);
    result.slow_ps.resize(n);
    auto& comp_fiber = result.components["fiber"];
    auto& comp_pmd = result.components["pmd_forward"];
    auto& comp_corr = result.components["correction"];
    auto& comp_disp = result.components["dispersion_forward"];
    auto& comp_floor = result.components["floor_measurement"];
    auto& comp_elec = result.components["electronics"];
    auto& comp_edfa = result.components["edfa_forward"];
    auto& comp_inject = result.components["injected_forward"];
    for (auto& [name, vec] : result.components) vec.resize(n);

    CompensatorState state;
    std::vector<double> rt_history(delay_steps + 1, 0.0);
    double setpoint = 0.0;
    double max_input = 0.0;
    bool have_setpoint = false;

    for (std::size_t i = 0; i < n; ++i) {
        const double t = grid.time_at(i);

        // actuator-induced polarization rotation acts on the forward input
        double pmd_f = 0.0;
        if (!bundle.scrambler_forward) {
            double theta =
                actuators.polarization_gain_fast_rad_per_ps * state.fast_correction_s * 1e12 +
                actuators.polarization_gain_slow_rad_per_ps * state.slow_correction_s * 1e12;
            if (kind == CompensatorKind::optical && actuators.slow_hunt_rad > 0.0)
                theta += actuators.slow_hunt_rad *
                         std::sin(two_pi * t / actuators.slow_hunt_period_s + hunt_phase);
            StokesVector s = input_fwd;
            if (theta != 0.0) {
                const detail::Vec3 r = rotate_about({s.s1, s.s2, s.s3}, coupling_axis, theta);
                s = {r[0], r[1], r[2]};
            }
            pmd_f = pmd_fwd.delay_seconds(s, t);
        }
        const double pmd_b =
            bundle.scrambler_backward ? 0.0 : pmd_bwd.delay_seconds(input_bwd, t);

        const double thermal_pull =
            kind == CompensatorKind::optical
                ? bundle.laser_noise.thermal_coupling_hz_per_ps *
                      state.slow_correction_s * 1e12
                : 0.0;
        const double nu1 = dnu1[i] + thermal_pull;
        const double nu2 = dnu2[i] + thermal_pull;

        const bool stepped = t >= bundle.inject_step_time_s;
        const double inj_f = stepped ? bundle.inject_forward_step_ps * 1e-12 : 0.0;
        const double inj_b = stepped ? bundle.inject_backward_step_ps * 1e-12 : 0.0;

        const double rt_noise = 2.0 * fiber[i] + pmd_f + pmd_b + inj_f + inj_b +
                                dtd * (nu1 + nu2) / nu_f + floor_err[i] + edfa_f[i] +
                                edfa_b[i];
        if (!have_setpoint) {
            setpoint = rt_noise;
            have_setpoint = true;
        }
        max_input = std::max(max_input, std::abs(rt_noise - setpoint));

        // controller
        double c_target = 0.0;
        if (kind != CompensatorKind::none) {
            if (dynamic_loop) {
                double e_meas = 0.0;
                if (i >= delay_steps)
                    e_meas = rt_history[(i - delay_steps) % rt_history.size()] - setpoint;
                state.integrator += ki * e_meas * dt_s;
                c_target = -(kp * e_meas + state.integrator);
                result.error_rad[i] = w_b * e_meas;
                if (std::abs(e_meas) > 1e3 * (max_input + 1e-15) || !std::isfinite(e_meas))
                    throw LoopInstabilityError(
                        "loop diverged: measured error exceeds 1000x the injected noise at t=" +
                        std::to_string(t) + " s");
            } else {
                c_target = -0.5 * (rt_noise - setpoint);
            }
        }

        // actuation
        double c_applied = 0.0;
        if (kind == CompensatorKind::optical) {
            state.slow_correction_s += alpha_slow * (c_target - state.slow_correction_s);
            state.slow_correction_s =
                clamp_flag(state.slow_correction_s, slow_half, state.slow_saturated);
            if (actuators.fast_enabled) {
                const double fast_want = c_target - state.slow_correction_s;
                state.fast_correction_s +=
                    alpha_fast * (fast_want - state.fast_correction_s);
                state.fast_correction_s =
                    clamp_flag(state.fast_correction_s, fast_half, state.fast_saturated);
            } else {
                state.fast_correction_s = 0.0;
            }
            c_applied = state.slow_correction_s + state.fast_correction_s;
        } else if (kind == CompensatorKind::electronic) {
            // phase offset on the RF source: unbounded, no mechanical dynamics
            state.fast_correction_s = 0.0;
            state.slow_correction_s = c_target;
            c_applied = c_target;
        }

        const double e_now = (rt_noise - setpoint) + 2.0 * c_applied;
        if (!dynamic_loop) {
            result.error_rad[i] = w_b * e_now;
            if (kind != CompensatorKind::none &&
                (std::abs(e_now) > 1e3 * (max_input + 1e-15) || !std::isfinite(e_now)))
                throw LoopInstabilityError(
                    "loop diverged: residual error exceeds 1000x the injected noise at t=" +
                    std::to_string(t) + " s");
        } else {
            rt_history[i % rt_history.size()] = rt_noise + 2.0 * c_applied;
        }

        result.fast_ps[i] = state.fast_correction_s * 1e12;
        result.slow_ps[i] = state.slow_correction_s * 1e12;

        comp_fiber[i] = -w_f * fiber[i];
        comp_pmd[i] = -w_f * pmd_f;
        comp_corr[i] = -w_f * c_applied;
        comp_disp[i] = -two_pi * nu1 * dtd;
        comp_floor[i] = w_f * floor_meas[i];
        comp_elec[i] = w_f * electronics[i];
        comp_edfa[i] = w_f * edfa_f[i];
        comp_inject[i] = -w_f * inj_f;
        result.remote_phase_rad[i] = comp_fiber[i] + comp_pmd[i] + comp_corr[i] +
                                     comp_disp[i] + comp_floor[i] + comp_elec[i] +
                                     comp_edfa[i] + comp_inject[i];
    }

    result.fast_saturated = state.fast_saturated;
    result.slow_saturated = state.slow_saturated;
    result.compliant = !(state.fast_saturated || state.slow_saturated);
    return result;
}

}  // namespace detail

/// Closed loop with the optical actuator pair (PZT stretcher + thermal spool).
inline ScenarioResult run_closed_loop(const LinkTopology& topo, const NoiseBundle& bundle,
                                      const ActuatorParams& actuators,
                                      const LoopParams& loop, double duration_s,
                                      double dt_s, std::uint64_t seed) {
    return detail::run_link(topo, bundle, actuators, loop, duration_s, dt_s, seed,
                            CompensatorKind::optical);
}

/// Same pipeline with corrections frozen at zero.
inline ScenarioResult run_free_link(const LinkTopology& topo, const NoiseBundle& bundle,
                                    double duration_s, double dt_s, std::uint64_t seed) {
    return detail::run_link(topo, bundle, ActuatorParams{}, LoopParams{}, duration_s,
                            dt_s, seed, CompensatorKind::none);
}

/// Phase-conjugation variant: the correction is applied on the injected RF
/// signal, with unbounded range and no polarization perturbation.
inline ScenarioResult run_electronic_compensator(const LinkTopology& topo,
                                                 const NoiseBundle& bundle,
                                                 const LoopParams& loop,
                                                 double duration_s, double dt_s,
                                                 std::uint64_t seed) {
    ActuatorParams none;
    none.polarization_gain_fast_rad_per_ps = 0.0;
    none.polarization_gain_slow_rad_per_ps = 0.0;
    return detail::run_link(topo, bundle, none, loop, duration_s, dt_s, seed,
                            CompensatorKind::electronic);
}

/// Out-of-loop measurement chain: remote-minus-reference phase through a
/// single-pole 3 Hz low-pass, decimated to 1 S/s.
inline PhaseSeries measurement_chain(const PhaseSeries& remote,
                                     const PhaseSeries& reference) {
    remote.validate();
    reference.validate();
    if (!(remote.grid == reference.grid))
        throw std::invalid_argument("measurement_chain: series grids differ");
    if (remote.unit != SeriesUnit::radians || reference.unit != SeriesUnit::radians ||
        remote.carrier_hz != reference.carrier_hz)
        throw std::invalid_argument("measurement_chain: need radian series at one carrier");
    if (remote.grid.sample_rate_hz() <= 6.0)
        throw std::invalid_argument("measurement_chain: grid rate must exceed 6 Hz");

    const double fc = 3.0;
    const double a = std::exp(-two_pi * fc * remote.grid.dt_s);
    const std::size_t step =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(remote.grid.sample_rate_hz())));

    std::vector<double> out;
    double y = remote.values[0] - reference.values[0];
    for (std::size_t i = 0; i < remote.grid.n_samples; ++i) {
        const double x = remote.values[i] - reference.values[i];
        y = a * y + (1.0 - a) * x;
        if (i % step == 0) out.push_back(y);
    }
    TimeGrid grid{remote.grid.dt_s * static_cast<double>(step), out.size(),
                  remote.grid.start_epoch_s};
    return PhaseSeries::radians_at(grid, std::move(out), remote.carrier_hz);
}

}  // namespace fiberlink
