// Cascaded link description and power-budget / scaling arithmetic: fiber
// sections, bidirectional EDFAs, SBS launch ceiling, detector sensitivity,
// and the long-link forecast heuristics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberlink/core.hpp"
#include "fiberlink/laser_spectrum.hpp"

namespace fiberlink {

struct LinkSection {
    double length_km = 0.0;
    double dispersion_ps_km_nm = 17.0;
    double attenuation_db_km = 0.2;
    double group_index = 1.468;

    void validate() const {
        if (!(length_km > 0.0))
            throw std::invalid_argument("LinkSection: length must be positive");
        if (attenuation_db_km < 0.0)
            throw std::invalid_argument("LinkSection: attenuation must be >= 0");
        if (!(group_index > 1.0))
            throw std::invalid_argument("LinkSection: group index must exceed 1");
    }
};

/// Bidirectional amplifier (two unidirectional EDFAs + circulators); the
/// same gain applies to both directions.
struct Edfa {
    double gain_db = 20.0;
    double position_km = 0.0;

    void validate(double total_length_km) const {
        if (!(gain_db > 0.0) || gain_db > 30.0)
            throw std::invalid_argument("Edfa: gain must be in (0, 30] dB");
        if (position_km <= 0.0 || position_km >= total_length_km)
            throw std::invalid_argument("Edfa: position must fall inside the link");
    }
};

struct LinkTopology {
    std::vector<LinkSection> sections;
    std::vector<Edfa> edfas;
    double spool_km = 0.0;  // correction delay-line spool at the local end
    double spool_dispersion_ps_km_nm = 17.0;
    double launch_power_mw = 20.0;
    double sbs_ceiling_mw = 3.0;             // per modulation sideband
    double sideband_power_fraction = 0.125;  // strongest-line power fraction
    double detector_sensitivity_dbm = -15.0;
    ModulationParams modulation;

    double fiber_length_km() const {
        double total = 0.0;
        for (const auto& s : sections) total += s.length_km;
        return total;
    }
    double total_length_km() const { return fiber_length_km() + spool_km; }

    double one_way_delay_s() const {
        double t = 0.0;
        for (const auto& s : sections)
            t += s.length_km * 1e3 * s.group_index / speed_of_light_m_s;
        if (spool_km > 0.0) t += spool_km * 1e3 * 1.468 / speed_of_light_m_s;
        return t;
    }
    double roundtrip_delay_s() const { return 2.0 * one_way_delay_s(); }

    void validate() const {
        if (sections.empty())
            throw std::invalid_argument("LinkTopology: at least one section required");
        for (const auto& s : sections) s.validate();
        for (const auto& e : edfas) e.validate(fiber_length_km());
        if (spool_km < 0.0)
            throw std::invalid_argument("LinkTopology: spool length must be >= 0");
        if (!(launch_power_mw > 0.0))
            throw std::invalid_argument("LinkTopology: launch power must be positive");
        if (!(sbs_ceiling_mw > 0.0))
            throw std::invalid_argument("LinkTopology: SBS ceiling must be positive");
        if (sideband_power_fraction <= 0.0 || sideband_power_fraction > 1.0)
            throw std::invalid_argument("LinkTopology: sideband fraction must be in (0,1]");
        modulation.validate();
    }
};

struct BudgetNode {
    double position_km = 0.0;
    double optical_dbm = 0.0;
    std::string label;
};

struct BudgetReport {
    std::vector<BudgetNode> nodes;      // forward direction; backward mirrors it
    double detector_dbm = 0.0;          // optical power at the receiving detector
    double rf_loss_db = 0.0;            // end-to-end RF attenuation (2x optical dB)
    double rf_snr_db_hz = 0.0;          // detected RF carrier over thermal floor
    double projected_error_floor_db = 0.0;  // dB rad^2/Hz at 1 Hz, detection-limited
    double sideband_launch_mw = 0.0;
    bool pass = false;
    std::string failure;
};

namespace detail {
// RF carrier power after intensity-modulation detection tracks twice the
// optical dB change; the constants below pin the absolute scale.
inline constexpr double rf_conversion_offset_db = -20.0;   // dBm RF at 0 dBm optical
inline constexpr double rf_noise_floor_dbm_hz = -150.0;
}  // namespace detail

/// Cumulative dB accounting along the link. The topology is symmetric for
/// the two directions (every EDFA is bidirectional), so one pass covers
/// both; SBS is checked at the transmitter launch.
inline BudgetReport power_budget(const LinkTopology& topo) {
    topo.validate();
    BudgetReport report;
    const double launch_dbm = linear_to_db(topo.launch_power_mw);

    report.sideband_launch_mw = topo.launch_power_mw * topo.sideband_power_fraction;
    if (report.sideband_launch_mw > topo.sbs_ceiling_mw) {
        report.pass = false;
        report.failure = "per-sideband launch power " +
                         std::to_string(report.sideband_launch_mw) +
                         " mW exceeds the SBS ceiling at the transmitter";
        return report;
    }

    double p = launch_dbm;
    double pos = 0.0;
    report.nodes.push_back({0.0, p, "launch"});
    if (topo.spool_km > 0.0) {
        p -= topo.spool_km * 0.2;
        pos += topo.spool_km;
        report.nodes.push_back({pos, p, "after correction spool"});
    }

    std::vector<Edfa> amps = topo.edfas;
    std::sort(amps.begin(), amps.end(),
              [](const Edfa& a, const Edfa& b) { return a.position_km < b.position_km; });
    std::size_t next_amp = 0;
    for (const auto& s : topo.sections) {
        double remaining = s.length_km;
        double section_pos = 0.0;
        while (next_amp < amps.size() &&
               amps[next_amp].position_km <= pos - topo.spool_km + remaining + 1e-9) {
            const double d = amps[next_amp].position_km - (pos - topo.spool_km);
            p -= d * s.attenuation_db_km;
            pos += d;
            remaining -= d;
            section_pos += d;
            report.nodes.push_back({pos, p, "EDFA input"});
            p += amps[next_amp].gain_db;
            report.nodes.push_back({pos, p, "EDFA output"});
            ++next_amp;
        }
        p -= remaining * s.attenuation_db_km;
        pos += remaining;
        report.nodes.push_back({pos, p, "section end"});
    }

    report.detector_dbm = p;
    report.rf_loss_db = 2.0 * (launch_dbm - p);
    const double rf_dbm = 2.0 * p + detail::rf_conversion_offset_db;
    report.rf_snr_db_hz = rf_dbm - detail::rf_noise_floor_dbm_hz;
    report.projected_error_floor_db = -report.rf_snr_db_hz;

    if (p < topo.detector_sensitivity_dbm) {
        report.pass = false;
        report.failure = "detector power " + std::to_string(p) +
                         " dBm below sensitivity at the far end";
    } else {
        report.pass = true;
    }
    return report;
}

/// Differential line delay summed over sections plus the correction spool;
/// negative-dispersion sections subtract.
inline double total_differential_delay_s(const LinkTopology& topo, double wavelength_nm,
                                         double carrier_hz, double rf_rad_s) {
    double dtd = 0.0;
    for (const auto& s : topo.sections)
        dtd += differential_delay_s(s.dispersion_ps_km_nm, s.length_km, wavelength_nm,
                                    carrier_hz, rf_rad_s);
    if (topo.spool_km > 0.0)
        dtd += differential_delay_s(topo.spool_dispersion_ps_km_nm, topo.spool_km,
                                    wavelength_nm, carrier_hz, rf_rad_s);
    return dtd;
}

/// Long-link projection. All four outputs are heuristics pinned to the
/// 90 km operating point: amplifiers every 100 km, loop bandwidth
/// 0.09/T_rt, in-band noise suppression bounded by the bandwidth-to-1-Hz
/// ratio.
struct ScalingForecast {
    double total_length_km = 0.0;
    double roundtrip_delay_s = 0.0;
    double loop_bandwidth_hz = 0.0;
    std::size_t n_edfa = 0;
    double max_suppression_at_1s = 0.0;
    double projected_sigma_1day = 0.0;
    bool heuristic = true;
};

inline ScalingForecast scaling_forecast(double total_length_km,
                                        double group_index = 1.468) {
    if (!(total_length_km > 0.0))
        throw std::invalid_argument("scaling_forecast: length must be positive");
    ScalingForecast f;
    f.total_length_km = total_length_km;
    f.roundtrip_delay_s = 2.0 * total_length_km * 1e3 * group_index / speed_of_light_m_s;
    f.loop_bandwidth_hz = 0.09 / f.roundtrip_delay_s;
    f.n_edfa = static_cast<std::size_t>(std::ceil(total_length_km / 100.0));
    f.max_suppression_at_1s = f.loop_bandwidth_hz * 1.0;
    f.projected_sigma_1day = 2e-18 * (total_length_km / 86.0);
    return f;
}

}  // namespace fiberlink
