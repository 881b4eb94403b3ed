// Scenario configuration: a line-oriented [section] / key = value format.
// Parsing is strict in both directions: every key the schema defines must be
// present, and any key or section the schema does not define is a hard
// error. Shipped baseline files carry the calibrated defaults; nothing is
// invented at run time.
#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberlink/compensator.hpp"
#include "fiberlink/core.hpp"
#include "fiberlink/laser_spectrum.hpp"
#include "fiberlink/link.hpp"

namespace fiberlink {

class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

/// Raw parsed config: section -> key -> value string, insertion order kept
/// for re-serialization.
struct ConfigTree {
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::string source_text;

    std::uint64_t hash() const { return fnv1a_hash(serialize()); }

    std::string serialize() const {
        std::ostringstream os;
        for (const auto& [sec, keys] : sections) {
            os << '[' << sec << "]\n";
            for (const auto& [k, v] : keys) os << k << " = " << v << '\n';
            os << '\n';
        }
        return os.str();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace detail

inline ConfigTree parse_config_text(const std::string& text) {
    ConfigTree tree;
    tree.source_text = text;
    std::istringstream is(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ScenarioError("config line " + std::to_string(lineno) +
                                    ": malformed section header");
            section = detail::trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw ScenarioError("config line " + std::to_string(lineno) +
                                    ": empty section name");
            if (tree.sections.count(section))
                throw ScenarioError("config line " + std::to_string(lineno) +
                                    ": duplicate section [" + section + "]");
            tree.sections[section];
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ScenarioError("config line " + std::to_string(lineno) +
                                ": expected key = value");
        if (section.empty())
            throw ScenarioError("config line " + std::to_string(lineno) +
                                ": key outside any [section]");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ScenarioError("config line " + std::to_string(lineno) + ": empty key");
        auto& sec = tree.sections[section];
        if (sec.count(key))
            throw ScenarioError("config line " + std::to_string(lineno) +
                                ": duplicate key '" + key + "' in [" + section + "]");
        sec[key] = value;
    }
    return tree;
}

inline ConfigTree parse_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ScenarioError("cannot open scenario file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

namespace detail {

/// Typed accessor over one section that tracks which keys were consumed so
/// unknown keys can be rejected afterwards.
class SectionReader {
public:
    SectionReader(const ConfigTree& tree, const std::string& name) : name_(name) {
        auto it = tree.sections.find(name);
        if (it == tree.sections.end())
            throw ScenarioError("missing required section [" + name + "]");
        keys_ = &it->second;
    }

    const std::string& raw(const std::string& key) {
        auto it = keys_->find(key);
        if (it == keys_->end())
            throw ScenarioError("missing key '" + key + "' in [" + name_ + "]");
        consumed_.insert(key);
        return it->second;
    }

    double number(const std::string& key) {
        const std::string& v = raw(key);
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing characters");
            return x;
        } catch (const std::exception&) {
            throw ScenarioError("key '" + key + "' in [" + name_ +
                                "] is not a number: '" + v + "'");
        }
    }

    std::uint64_t integer(const std::string& key) {
        const double x = number(key);
        if (x < 0 || x != std::floor(x))
            throw ScenarioError("key '" + key + "' in [" + name_ +
                                "] must be a non-negative integer");
        return static_cast<std::uint64_t>(x);
    }

    bool boolean(const std::string& key) {
        const std::string& v = raw(key);
        if (v == "true") return true;
        if (v == "false") return false;
        throw ScenarioError("key '" + key + "' in [" + name_ +
                            "] must be true or false: '" + v + "'");
    }

    std::string text(const std::string& key) { return raw(key); }

    std::vector<double> number_list(const std::string& key) {
        const std::string& v = raw(key);
        std::vector<double> out;
        if (trim(v).empty()) return out;
        std::istringstream is(v);
        std::string item;
        while (std::getline(is, item, ',')) {
            item = trim(item);
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(item, &pos));
                if (pos != item.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw ScenarioError("key '" + key + "' in [" + name_ +
                                    "] has a non-numeric list item: '" + item + "'");
            }
        }
        return out;
    }

    void finish() const {
        for (const auto& [k, v] : *keys_)
            if (!consumed_.count(k))
                throw ScenarioError("unknown key '" + k + "' in [" + name_ + "]");
    }

private:
    std::string name_;
    const std::map<std::string, std::string>* keys_;
    std::set<std::string> consumed_;
};

}  // namespace detail

struct Scenario {
    std::string name;
    CompensatorKind kind = CompensatorKind::optical;
    double duration_s = 0.0;
    double dt_s = 1.0;
    std::uint64_t seed = 1;
    LinkTopology topology;
    NoiseBundle bundle;
    ActuatorParams actuators;
    LoopParams loop;
    std::string output_dir;
    std::uint64_t config_hash = 0;

    void validate() const {
        if (name.empty()) throw ScenarioError("scenario name must not be empty");
        if (!(duration_s > 0.0))
            throw ScenarioError("scenario duration must be positive");
        if (!(dt_s > 0.0)) throw ScenarioError("scenario dt must be positive");
        topology.validate();
        bundle.laser.validate();
        bundle.laser_noise.validate();
        bundle.fiber.validate();
        bundle.pmd.validate();
        bundle.floor.validate();
        actuators.validate();
        if (kind != CompensatorKind::none)
            loop.validate(loop.roundtrip_delay_s > 0.0 ? loop.roundtrip_delay_s
                                                       : topology.roundtrip_delay_s());
        if (output_dir.empty()) throw ScenarioError("output directory must not be empty");
    }
};

inline Scenario build_scenario(const ConfigTree& tree) {
    static const std::set<std::string> known = {
        "scenario", "modulation", "laser",     "laser_noise", "link",   "fiber_noise",
        "pmd",      "floor",      "actuators", "loop",        "injection", "output"};
    for (const auto& [sec, keys] : tree.sections)
        if (!known.count(sec))
            throw ScenarioError("unknown section [" + sec + "]");

    Scenario s;
    s.config_hash = tree.hash();

    {
        detail::SectionReader r(tree, "scenario");
        s.name = r.text("name");
        const std::string kind = r.text("compensator");
        if (kind == "optical") s.kind = CompensatorKind::optical;
        else if (kind == "electronic") s.kind = CompensatorKind::electronic;
        else if (kind == "none") s.kind = CompensatorKind::none;
        else throw ScenarioError("compensator must be optical, electronic or none");
        s.duration_s = r.number("duration_s");
        s.dt_s = r.number("dt_s");
        s.seed = r.integer("seed");
        s.bundle.scrambler_forward = r.boolean("scrambler_forward");
        s.bundle.scrambler_backward = r.boolean("scrambler_backward");
        r.finish();
    }
    {
        detail::SectionReader r(tree, "modulation");
        s.topology.modulation.forward_rf_hz = r.number("forward_rf_hz");
        s.topology.modulation.backward_rf_hz = r.number("backward_rf_hz");
        r.finish();
    }
    {
        detail::SectionReader r(tree, "laser");
        LaserParams& l = s.bundle.laser;
        l.wavelength_nm = r.number("wavelength_nm");
        l.carrier_frequency_hz = speed_of_light_m_s / (l.wavelength_nm * 1e-9);
        l.amplitude_mod_index = r.number("amplitude_mod_index");
        l.frequency_mod_index = r.number("frequency_mod_index");
        l.chirp_mhz_per_ma = r.number("chirp_mhz_per_ma");
        l.optical_power_mw = r.number("optical_power_mw");
        r.finish();
    }
    {
        detail::SectionReader r(tree, "laser_noise");
        LaserNoiseParams& l = s.bundle.laser_noise;
        l.white_fm_hz2_per_hz = r.number("white_fm_hz2_per_hz");
        l.slow_drift_hz2_hz = r.number("slow_drift_hz2_hz");
        l.thermal_coupling_hz_per_ps = r.number("thermal_coupling_hz_per_ps");
        r.finish();
    }
    {
        detail::SectionReader r(tree, "link");
        const std::vector<double> lengths = r.number_list("section_lengths_km");
        const double disp = r.number("dispersion_ps_km_nm");
        const double atten = r.number("attenuation_db_km");
        const double gidx = r.number("group_index");
        for (double lk : lengths) s.topology.sections.push_back({lk, disp, atten, gidx});
        s.topology.spool_km = r.number("spool_km");
        s.topology.spool_dispersion_ps_km_nm = disp;
        const std::vector<double> epos = r.number_list("edfa_positions_km");
        const std::vector<double> egain = r.number_list("edfa_gains_db");
        if (epos.size() != egain.size())
            throw ScenarioError("edfa_positions_km and edfa_gains_db lengths differ");
        for (std::size_t i = 0; i < epos.size(); ++i)
            s.topology.edfas.push_back({egain[i], epos[i]});
        s.topology.launch_power_mw = r.number("launch_power_mw");
        s.topology.sbs_ceiling_mw = r.number("sbs_ceiling_mw");
        s.topology.detector_sensitivity_dbm = r.number("detector_sensitivity_dbm");
        r.finish();
    }
    {
        detail::SectionReader r(tree, "fiber_noise");
        FiberNoiseParams& f = s.bundle.fiber;
        f.white_pm_level = r.number("white_pm_level");
        f.flicker_pm_level = r.number("flicker_pm_level");
        f.random_walk_level = r.number("random_walk_level");
        f.diurnal_amplitude_ps = r.number("diurnal_amplitude_ps");
        f.diurnal_period_s = r.number("diurnal_period_s");
        r.finish();
    }
    {
        detail::SectionReader r(tree, "pmd");
        PmdParams& p = s.bundle.pmd;
        p.mean_dgd_ps = r.number("mean_dgd_ps");
        p.n_waveplate_segments = static_cast<std::size_t>(r.integer("n_segments"));
        p.drift_time_constant_s = r.number("drift_time_constant_s");
        p.diurnal_modulation_depth = r.number("diurnal_modulation_depth");
        const std::vector<double> rates = r.number_list("scrambler_rates_khz");
        if (rates.size() != 3)
            throw ScenarioError("scrambler_rates_khz must list three rates");
        p.scrambler_rates_khz = {rates[0], rates[1], rates[2]};
        r.finish();
    }
    {
        detail::SectionReader r(tree, "floor");
        FloorParams& f = s.bundle.floor;
        f.system_floor_db_at_1hz = r.number("system_floor_db_at_1hz");
        f.slope_exponent = static_cast<int>(r.number("floor_slope_exponent"));
        f.edfa_excess_stability_1s = r.number("edfa_excess_stability_1s");
        f.electronics_flicker_floor = r.number("electronics_flicker_floor");
        f.electronics_diurnal_ps = r.number("electronics_diurnal_ps");
        f.electronics_diurnal_period_s = r.number("electronics_diurnal_period_s");
        r.finish();
    }
    {
        detail::SectionReader r(tree, "actuators");
        ActuatorParams& a = s.actuators;
        a.fast_enabled = r.boolean("fast_enabled");
        a.fast_range_ps = r.number("fast_range_ps");
        a.fast_bandwidth_hz = r.number("fast_bandwidth_hz");
        a.slow_sensitivity_ps_per_degc = r.number("slow_sensitivity_ps_per_degc");
        a.slow_range_ns = r.number("slow_range_ns");
        a.slow_time_constant_s = r.number("slow_time_constant_s");
        a.polarization_gain_fast_rad_per_ps = r.number("polarization_gain_fast_rad_per_ps");
        a.polarization_gain_slow_rad_per_ps = r.number("polarization_gain_slow_rad_per_ps");
        a.slow_hunt_rad = r.number("slow_hunt_rad");
        a.slow_hunt_period_s = r.number("slow_hunt_period_s");
        r.finish();
    }
    {
        detail::SectionReader r(tree, "loop");
        LoopParams& l = s.loop;
        l.roundtrip_delay_s = r.number("roundtrip_delay_s");
        l.target_unity_gain_bandwidth_hz = r.number("target_unity_gain_bandwidth_hz");
        l.proportional_gain = r.number("proportional_gain");
        l.integrator_gain = r.number("integrator_gain");
        r.finish();
    }
    {
        detail::SectionReader r(tree, "injection");
        s.bundle.inject_forward_step_ps = r.number("forward_step_ps");
        s.bundle.inject_backward_step_ps = r.number("backward_step_ps");
        s.bundle.inject_step_time_s = r.number("step_time_s");
        r.finish();
    }
    {
        detail::SectionReader r(tree, "output");
        s.output_dir = r.text("directory");
        r.finish();
    }

    // strongest modulation line sets the per-sideband SBS launch power
    {
        const SpectrumCoefficients c = sideband_amplitudes(
            s.bundle.laser.frequency_mod_index, s.bundle.laser.amplitude_mod_index);
        double frac = c.dc_term * c.dc_term;
        for (double v : c.sideband_plus) frac = std::max(frac, v * v);
        for (double v : c.sideband_minus) frac = std::max(frac, v * v);
        s.topology.sideband_power_fraction = frac;
    }

    s.validate();
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    return build_scenario(parse_config_file(path));
}

/// Execute the configured pipeline.
inline ScenarioResult run_scenario(const Scenario& s) {
    switch (s.kind) {
        case CompensatorKind::optical:
            return run_closed_loop(s.topology, s.bundle, s.actuators, s.loop,
                                   s.duration_s, s.dt_s, s.seed);
        case CompensatorKind::electronic:
            return run_electronic_compensator(s.topology, s.bundle, s.loop, s.duration_s,
                                              s.dt_s, s.seed);
        case CompensatorKind::none:
        default:
            return run_free_link(s.topology, s.bundle, s.duration_s, s.dt_s, s.seed);
    }
}

}  // namespace fiberlink
