// fiberlink command-line harness: scenario execution, parameter sweeps,
// re-analysis of recorded runs, power budgets, and laser spectrum tables.
//
// Exit codes: 0 success, 2 validation/config error, 3 loop instability,
// 4 budget failure, 5 I/O error, 6 output directory already exists.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fiberlink/analysis.hpp"
#include "fiberlink/io.hpp"
#include "fiberlink/scenario.hpp"
#include "fiberlink/version.hpp"

namespace fs = std::filesystem;
using namespace fiberlink;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_instability = 3;
constexpr int exit_budget = 4;
constexpr int exit_io = 5;
constexpr int exit_exists = 6;

int prepare_output_dir(const fs::path& dir, bool force) {
    std::error_code ec;
    if (fs::exists(dir) && fs::exists(dir / "meta.txt") && !force) {
        std::fprintf(stderr,
                     "error: output directory '%s' already holds a run (use --force)\n",
                     dir.string().c_str());
        return exit_exists;
    }
    fs::create_directories(dir, ec);
    if (ec) {
        std::fprintf(stderr, "error: cannot create '%s': %s\n", dir.string().c_str(),
                     ec.message().c_str());
        return exit_io;
    }
    return exit_ok;
}

void apply_overrides(Scenario& s, std::uint64_t* seed, const std::string* out) {
    if (seed) s.seed = *seed;
    if (out && !out->empty()) s.output_dir = *out;
}

double table_sigma(const AllanTable& t, double tau) {
    for (std::size_t i = 0; i < t.tau_s.size(); ++i)
        if (std::abs(t.tau_s[i] - tau) < 1e-9 * tau) return t.sigma_y[i];
    return std::numeric_limits<double>::quiet_NaN();
}

/// Error-signal SNR figure: round-trip fiber phase PSD over the detection
/// floor, both one-sided at 1 Hz at the backward carrier (dB).
double error_snr_db(const Scenario& s) {
    const double wb = s.topology.modulation.backward_rad_s();
    const FiberNoiseParams& f = s.bundle.fiber;
    const double s_tau = f.white_pm_level + f.flicker_pm_level + f.random_walk_level;
    const double floor_lin = db_to_linear(s.bundle.floor.system_floor_db_at_1hz);
    return linear_to_db((2.0 * wb) * (2.0 * wb) * s_tau / floor_lin);
}

int run_one(const Scenario& s, bool force, OutputBundle* bundle_out,
            bool quiet = false) {
    const fs::path dir = s.output_dir;
    if (int rc = prepare_output_dir(dir, force); rc != exit_ok) return rc;

    const BudgetReport budget = power_budget(s.topology);
    if (!budget.pass) {
        write_budget_files(dir, s, budget);
        std::fprintf(stderr, "budget failure: %s\n", budget.failure.c_str());
        return exit_budget;
    }

    ScenarioResult result;
    try {
        result = run_scenario(s);
    } catch (const LoopInstabilityError& e) {
        std::fprintf(stderr, "loop instability: %s\n", e.what());
        return exit_instability;
    }

    OutputBundle bundle;
    try {
        bundle = write_run_outputs(dir, s, result);
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_io;
    }
    if (bundle_out) *bundle_out = bundle;

    if (!quiet) {
        std::printf("run %s: %zu samples at dt=%g s -> %s\n", s.name.c_str(),
                    result.grid.n_samples, s.dt_s, dir.string().c_str());
        const double s1 = table_sigma(bundle.allan, 1.0);
        const double sday = table_sigma(bundle.allan, 86400.0);
        if (std::isfinite(s1)) std::printf("  sigma_y(1 s)    = %.3e\n", s1);
        if (std::isfinite(sday)) std::printf("  sigma_y(1 day)  = %.3e\n", sday);
        if (result.fast_saturated || result.slow_saturated)
            std::printf("  WARNING: actuator saturation, result non-compliant\n");
    }
    return exit_ok;
}

std::map<std::string, std::string> read_meta(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    return kv;
}

int cmd_analyze(const std::string& in_dir, const std::string& out_dir) {
    const fs::path in = in_dir;
    const fs::path out = out_dir.empty() ? in : fs::path(out_dir);
    std::map<std::string, std::string> meta;
    try {
        meta = read_meta(in / "meta.txt");
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_io;
    }
    const double carrier = meta.count("carrier_hz") ? std::stod(meta["carrier_hz"]) : 1e9;

    std::ifstream f(in / "samples.csv");
    if (!f) {
        std::fprintf(stderr, "error: cannot read %s\n", (in / "samples.csv").string().c_str());
        return exit_io;
    }
    std::vector<double> t, phi;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        std::istringstream is(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(is, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() < 2) continue;
        t.push_back(row[0]);
        phi.push_back(row[1]);
    }
    if (t.size() < 16) {
        std::fprintf(stderr, "error: samples.csv too short to analyze\n");
        return exit_validation;
    }
    TimeGrid grid{t[1] - t[0], t.size(), t[0]};
    PhaseSeries remote = PhaseSeries::radians_at(grid, phi, carrier);
    PhaseSeries meas =
        grid.sample_rate_hz() > 6.0
            ? measurement_chain(remote, PhaseSeries::radians_at(
                                            grid, std::vector<double>(t.size(), 0.0), carrier))
            : remote;

    Scenario tag;  // provenance echo for the rewritten tables
    tag.name = meta.count("scenario") ? meta["scenario"] : "analyze";
    tag.seed = meta.count("seed") ? std::stoull(meta["seed"]) : 0;
    tag.config_hash =
        meta.count("config_hash") ? std::stoull(meta["config_hash"], nullptr, 16) : 0;

    std::vector<double> taus = octave_taus(meas.grid);
    AllanTable allan = overlapping_adev(meas, taus);
    std::error_code ec;
    fs::create_directories(out, ec);
    write_allan_csv(out / "allan.csv", tag, allan);
    std::size_t seg = 256;
    while (seg * 8 <= meas.grid.n_samples && seg < 16384) seg *= 2;
    if (seg <= meas.grid.n_samples) write_psd_csv(out / "psd.csv", tag, psd_phase(meas, seg));
    std::printf("analyze: %zu samples -> %s\n", t.size(), out.string().c_str());
    return exit_ok;
}

int cmd_sweep(const std::string& scenario_path, const std::string& param,
              const std::vector<std::string>& values, const std::string& out_dir,
              bool force, std::uint64_t* seed_override) {
    if (values.empty()) {
        std::printf("sweep: empty value list, nothing to do\n");
        return exit_ok;
    }
    const auto dot = param.find('.');
    if (dot == std::string::npos) {
        std::fprintf(stderr, "error: --param must be section.key\n");
        return exit_validation;
    }
    const std::string section = param.substr(0, dot);
    const std::string key = param.substr(dot + 1);

    ConfigTree base;
    try {
        base = parse_config_file(scenario_path);
    } catch (const ScenarioError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_validation;
    }
    auto sec_it = base.sections.find(section);
    if (sec_it == base.sections.end() || !sec_it->second.count(key)) {
        std::fprintf(stderr, "error: parameter %s not present in the scenario\n",
                     param.c_str());
        return exit_validation;
    }
    {   // the target must currently hold a single numeric value
        const std::string& cur = sec_it->second[key];
        try {
            std::size_t pos = 0;
            (void)std::stod(cur, &pos);
            if (pos != cur.size()) throw std::invalid_argument("not scalar");
        } catch (const std::exception&) {
            std::fprintf(stderr, "error: parameter %s is not a numeric scalar\n",
                         param.c_str());
            return exit_validation;
        }
    }

    std::vector<double> numeric;
    for (const auto& v : values) {
        try {
            numeric.push_back(std::stod(v));
        } catch (const std::exception&) {
            std::fprintf(stderr, "error: sweep value '%s' is not numeric\n", v.c_str());
            return exit_validation;
        }
    }

    fs::path sweep_root = out_dir;
    if (sweep_root.empty()) {
        Scenario probe;
        try {
            probe = build_scenario(base);
        } catch (const ScenarioError& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return exit_validation;
        }
        sweep_root = fs::path(probe.output_dir + "_sweep");
    }
    std::error_code ec;
    fs::create_directories(sweep_root, ec);

    struct Row {
        double value;
        std::uint64_t seed;
        double s1, sday, snr;
    };
    std::vector<Row> rows;

    for (std::size_t i = 0; i < numeric.size(); ++i) {
        ConfigTree tree = base;
        char vbuf[40];
        std::snprintf(vbuf, sizeof vbuf, "%.17g", numeric[i]);
        tree.sections[section][key] = vbuf;
        Scenario s;
        try {
            s = build_scenario(tree);
        } catch (const ScenarioError& e) {
            std::fprintf(stderr, "error (value %s): %s\n", vbuf, e.what());
            return exit_validation;
        }
        const std::uint64_t base_seed = seed_override ? *seed_override : s.seed;
        s.seed = base_seed + i;
        s.name += std::string("_") + key + "_" + vbuf;
        s.output_dir = (sweep_root / (std::string(key) + "_" + vbuf)).string();

        OutputBundle bundle;
        if (int rc = run_one(s, force, &bundle, true); rc != exit_ok) return rc;
        rows.push_back({numeric[i], s.seed, table_sigma(bundle.allan, 1.0),
                        table_sigma(bundle.allan, 86400.0), error_snr_db(s)});
        std::printf("sweep %s = %s done\n", param.c_str(), vbuf);
    }

    detail::CsvFile f(sweep_root / "summary.csv");
    f.raw("# fiberlink %s sweep parameter=%s\n", fiberlink_version, param.c_str());
    f.line("value,seed,sigma_y_1s,sigma_y_1day,error_snr_db");
    for (const auto& r : rows)
        f.raw("%.17g,%" PRIu64 ",%.17g,%.17g,%.17g\n", r.value, r.seed, r.s1, r.sday,
              r.snr);
    std::printf("sweep summary -> %s\n", (sweep_root / "summary.csv").string().c_str());
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fiberlink: RF-over-fiber frequency transfer simulator"};
    app.set_version_flag("--version", fiberlink_version);
    app.require_subcommand(1);

    std::string scenario_path, out_dir, in_dir, param;
    std::vector<std::string> values;
    std::uint64_t seed = 0;
    bool have_seed = false, force = false;

    auto add_common = [&](CLI::App* c, bool needs_scenario) {
        if (needs_scenario)
            c->add_option("--scenario", scenario_path, "scenario config file")->required();
        c->add_option("--out", out_dir, "output directory override");
        c->add_flag("--force", force, "overwrite an existing output directory");
        c->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
            have_seed = true;
        });
    };

    CLI::App* c_run = app.add_subcommand("run", "execute a scenario");
    add_common(c_run, true);

    CLI::App* c_sweep = app.add_subcommand("sweep", "run a scenario over parameter values");
    add_common(c_sweep, true);
    c_sweep->add_option("--param", param, "target as section.key")->required();
    c_sweep->add_option("--values", values, "comma-separated numeric values")
        ->delimiter(',');

    CLI::App* c_analyze = app.add_subcommand("analyze", "re-analyze an existing run");
    c_analyze->add_option("--in", in_dir, "directory holding samples.csv")->required();
    c_analyze->add_option("--out", out_dir, "output directory (default: --in)");

    CLI::App* c_budget = app.add_subcommand("budget", "power budget only");
    add_common(c_budget, true);

    CLI::App* c_spectrum = app.add_subcommand("spectrum", "laser sideband tables");
    add_common(c_spectrum, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_run->parsed()) {
            Scenario s = load_scenario(scenario_path);
            apply_overrides(s, have_seed ? &seed : nullptr, &out_dir);
            return run_one(s, force, nullptr);
        }
        if (c_sweep->parsed()) {
            return cmd_sweep(scenario_path, param, values, out_dir, force,
                             have_seed ? &seed : nullptr);
        }
        if (c_analyze->parsed()) {
            return cmd_analyze(in_dir, out_dir);
        }
        if (c_budget->parsed()) {
            Scenario s = load_scenario(scenario_path);
            apply_overrides(s, have_seed ? &seed : nullptr, nullptr);
            const BudgetReport b = power_budget(s.topology);
            std::printf("%s", budget_text_block(s.topology, b).c_str());
            if (!out_dir.empty()) {
                std::error_code ec;
                fs::create_directories(out_dir, ec);
                write_budget_files(out_dir, s, b);
            }
            return b.pass ? exit_ok : exit_budget;
        }
        if (c_spectrum->parsed()) {
            Scenario s = load_scenario(scenario_path);
            const SpectrumCoefficients c = sideband_amplitudes(
                s.bundle.laser.frequency_mod_index, s.bundle.laser.amplitude_mod_index);
            fs::path dir = out_dir.empty() ? fs::path(s.output_dir) : fs::path(out_dir);
            std::error_code ec;
            fs::create_directories(dir, ec);
            write_spectrum_csv(dir / "spectrum.csv", s, c);
            std::printf("spectrum: N=%zu lines, L0=%.6f -> %s\n", c.truncation_order,
                        c.dc_term, (dir / "spectrum.csv").string().c_str());
            return exit_ok;
        }
    } catch (const ScenarioError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_validation;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_validation;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_io;
    }
    return exit_ok;
}
