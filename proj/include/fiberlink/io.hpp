// Output bundle writers. All numeric formatting is fixed (%.17g) so a rerun
// of the same scenario and seed is byte-identical.
#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberlink/analysis.hpp"
#include "fiberlink/compensator.hpp"
#include "fiberlink/core.hpp"
#include "fiberlink/laser_spectrum.hpp"
#include "fiberlink/link.hpp"
#include "fiberlink/scenario.hpp"
#include "fiberlink/version.hpp"

namespace fiberlink {

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

class CsvFile {
public:
    explicit CsvFile(const std::filesystem::path& path) {
        f_ = std::fopen(path.string().c_str(), "wb");
        if (!f_) throw IoError("cannot write " + path.string());
    }
    ~CsvFile() {
        if (f_) std::fclose(f_);
    }
    CsvFile(const CsvFile&) = delete;
    CsvFile& operator=(const CsvFile&) = delete;

    void line(const std::string& s) { std::fprintf(f_, "%s\n", s.c_str()); }
    void raw(const char* fmt, auto... args) { std::fprintf(f_, fmt, args...); }
    void num(double v) { std::fprintf(f_, "%.17g", v); }

    FILE* handle() { return f_; }

private:
    FILE* f_ = nullptr;
};

inline std::string provenance_line(const Scenario& s) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "# fiberlink %s scenario=%s seed=%" PRIu64
                  " config=%016" PRIx64,
                  fiberlink_version, s.name.c_str(), s.seed, s.config_hash);
    return buf;
}

}  // namespace detail

inline void write_samples_csv(const std::filesystem::path& path, const Scenario& s,
                              const ScenarioResult& r) {
    detail::CsvFile f(path);
    f.line(detail::provenance_line(s));
    f.line("t_s,remote_phase_rad,error_rad,fast_ps,slow_ps");
    for (std::size_t i = 0; i < r.grid.n_samples; ++i)
        f.raw("%.17g,%.17g,%.17g,%.17g,%.17g\n", r.grid.time_at(i),
              r.remote_phase_rad[i], r.error_rad[i], r.fast_ps[i], r.slow_ps[i]);
}

inline void write_allan_csv(const std::filesystem::path& path, const Scenario& s,
                            const AllanTable& t) {
    detail::CsvFile f(path);
    f.line(detail::provenance_line(s));
    f.line("tau_s,adev,ci,n");
    for (std::size_t i = 0; i < t.tau_s.size(); ++i)
        f.raw("%.17g,%.17g,%.17g,%zu\n", t.tau_s[i], t.sigma_y[i], t.ci[i], t.n_used[i]);
}

inline void write_psd_csv(const std::filesystem::path& path, const Scenario& s,
                          const PsdEstimate& p) {
    detail::CsvFile f(path);
    f.line(detail::provenance_line(s));
    f.line("freq_hz,psd_dbrad2hz");
    for (std::size_t i = 0; i < p.freq_hz.size(); ++i)
        f.raw("%.17g,%.17g\n", p.freq_hz[i], p.psd_db[i]);
}

inline void write_series_csv(const std::filesystem::path& path, const TimeGrid& grid,
                             const std::vector<double>& values, const std::string& unit) {
    if (values.size() != grid.n_samples)
        throw IoError("series length does not match grid");
    detail::CsvFile f(path);
    f.line("time_s,value,unit");
    for (std::size_t i = 0; i < values.size(); ++i)
        f.raw("%.17g,%.17g,%s\n", grid.time_at(i), values[i], unit.c_str());
}

inline std::string budget_text_block(const LinkTopology& topo, const BudgetReport& b) {
    std::string out;
    char buf[160];
    out += "power budget\n";
    std::snprintf(buf, sizeof buf, "  launch          %8.2f dBm (%g mW)\n",
                  linear_to_db(topo.launch_power_mw), topo.launch_power_mw);
    out += buf;
    for (const auto& n : b.nodes) {
        std::snprintf(buf, sizeof buf, "  %7.1f km  %8.2f dBm  %s\n", n.position_km,
                      n.optical_dbm, n.label.c_str());
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "  detector        %8.2f dBm (sensitivity %.1f dBm)\n",
                  b.detector_dbm, topo.detector_sensitivity_dbm);
    out += buf;
    std::snprintf(buf, sizeof buf, "  RF attenuation  %8.2f dB\n", b.rf_loss_db);
    out += buf;
    std::snprintf(buf, sizeof buf, "  RF SNR          %8.2f dB in 1 Hz\n", b.rf_snr_db_hz);
    out += buf;
    std::snprintf(buf, sizeof buf, "  detection-limited floor %.1f dB rad^2/Hz\n",
                  b.projected_error_floor_db);
    out += buf;
    std::snprintf(buf, sizeof buf, "  strongest sideband %.3f mW (SBS ceiling %.3f mW)\n",
                  b.sideband_launch_mw, topo.sbs_ceiling_mw);
    out += buf;
    out += b.pass ? "  PASS\n" : "  FAIL: " + b.failure + "\n";
    return out;
}

inline void write_budget_files(const std::filesystem::path& dir, const Scenario& s,
                               const BudgetReport& b) {
    {
        detail::CsvFile f(dir / "budget.txt");
        f.line(detail::provenance_line(s));
        f.raw("%s", budget_text_block(s.topology, b).c_str());
    }
    {
        detail::CsvFile f(dir / "budget.csv");
        f.line(detail::provenance_line(s));
        f.line("position_km,optical_dbm,label");
        for (const auto& n : b.nodes)
            f.raw("%.17g,%.17g,%s\n", n.position_km, n.optical_dbm, n.label.c_str());
    }
}

inline void write_spectrum_csv(const std::filesystem::path& path, const Scenario& s,
                               const SpectrumCoefficients& c) {
    detail::CsvFile f(path);
    f.line(detail::provenance_line(s));
    f.line("n,M_n,J_n,L_n_plus,L_n_minus");
    f.raw("0,%.17g,%.17g,%.17g,%.17g\n", c.amplitude[0], c.bessel[0], c.dc_term,
          c.dc_term);
    for (std::size_t n = 1; n <= c.truncation_order; ++n)
        f.raw("%zu,%.17g,%.17g,%.17g,%.17g\n", n, c.amplitude[n], c.bessel[n],
              c.sideband_plus[n - 1], c.sideband_minus[n - 1]);
}

inline void write_meta(const std::filesystem::path& path, const Scenario& s,
                       const ScenarioResult& r, const FractionalOffset* offset) {
    detail::CsvFile f(path);
    f.line(detail::provenance_line(s));
    f.raw("version = %s\n", fiberlink_version);
    f.raw("scenario = %s\n", s.name.c_str());
    f.raw("seed = %" PRIu64 "\n", s.seed);
    f.raw("config_hash = %016" PRIx64 "\n", s.config_hash);
    f.raw("carrier_hz = %.17g\n", r.carrier_hz);
    f.raw("backward_carrier_hz = %.17g\n", r.backward_carrier_hz);
    f.raw("duration_s = %.17g\n", s.duration_s);
    f.raw("dt_s = %.17g\n", s.dt_s);
    f.raw("loop_mode = %s\n", r.loop_mode.c_str());
    f.raw("roundtrip_delay_s = %.17g\n", r.roundtrip_delay_s);
    f.raw("differential_delay_s = %.17g\n", r.differential_delay_s);
    f.raw("static_phase_offset_rad = %.17g\n", r.static_phase_offset_rad);
    f.raw("fast_saturated = %s\n", r.fast_saturated ? "true" : "false");
    f.raw("slow_saturated = %s\n", r.slow_saturated ? "true" : "false");
    f.raw("compliant = %s\n", r.compliant ? "true" : "false");
    if (offset) {
        f.raw("fractional_offset = %.17g\n", offset->offset);
        f.raw("fractional_offset_uncertainty = %.17g\n", offset->uncertainty);
    }
    f.line("allan_ci_convention = 1-sigma chi-square half-widths, edf by noise type "
           "from the local log-log slope");
}

/// Analysis applied before Allan/PSD estimation: the 3 Hz + 1 S/s chain when
/// the grid resolves it, the raw difference otherwise (slow grids already
/// represent chain output).
inline PhaseSeries analysis_series(const ScenarioResult& r) {
    if (r.grid.sample_rate_hz() > 6.0)
        return measurement_chain(r.remote_series(), r.reference_series());
    return r.remote_series();
}

struct OutputBundle {
    AllanTable allan;
    PsdEstimate psd;
    FractionalOffset offset;
    bool have_offset = false;
    BudgetReport budget;
};

/// Run analysis and write the full bundle (samples/allan/psd/budget/meta)
/// into dir, which must already exist.
inline OutputBundle write_run_outputs(const std::filesystem::path& dir, const Scenario& s,
                                      const ScenarioResult& r) {
    OutputBundle out;
    const PhaseSeries meas = analysis_series(r);

    std::vector<double> taus = octave_taus(meas.grid);
    const double day = 86400.0;
    if (meas.grid.span_s() > 2.0 * day) {
        const double m = std::round(day / meas.grid.dt_s);
        if (std::abs(m * meas.grid.dt_s - day) < 1e-9) taus.push_back(day);
    }
    out.allan = overlapping_adev(meas, taus);

    std::size_t seg = 256;
    while (seg * 8 <= meas.grid.n_samples && seg < 16384) seg *= 2;
    if (seg <= meas.grid.n_samples) out.psd = psd_phase(meas, seg);

    if (meas.grid.span_s() >= 1000.0) {
        out.offset = fractional_offset(meas);
        out.have_offset = true;
    }

    out.budget = power_budget(s.topology);

    write_samples_csv(dir / "samples.csv", s, r);
    write_allan_csv(dir / "allan.csv", s, out.allan);
    if (!out.psd.freq_hz.empty()) write_psd_csv(dir / "psd.csv", s, out.psd);
    write_budget_files(dir, s, out.budget);
    write_meta(dir / "meta.txt", s, r, out.have_offset ? &out.offset : nullptr);
    return out;
}

}  // namespace fiberlink
