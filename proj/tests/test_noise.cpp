#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fiberlink/analysis.hpp"
#include "fiberlink/noise.hpp"

using namespace fiberlink;

namespace {

PhaseSeries as_phase(const TimeGrid& grid, std::vector<double> delay_s,
                     double carrier = 1e9) {
    for (double& v : delay_s) v *= two_pi * carrier;
    return PhaseSeries::radians_at(grid, std::move(delay_s), carrier);
}

double mean_var(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

// log-binned slope of a PSD estimate over [f_lo, f_hi]
double psd_slope(const PsdEstimate& ps, double f_lo, double f_hi) {
    const int nb = 24;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int b = 0; b < nb; ++b) {
        const double f1 = f_lo * std::pow(f_hi / f_lo, static_cast<double>(b) / nb);
        const double f2 = f_lo * std::pow(f_hi / f_lo, static_cast<double>(b + 1) / nb);
        double acc = 0;
        int c = 0;
        for (std::size_t i = 0; i < ps.freq_hz.size(); ++i)
            if (ps.freq_hz[i] >= f1 && ps.freq_hz[i] < f2) {
                acc += db_to_linear(ps.psd_db[i]);
                ++c;
            }
        if (!c) continue;
        const double lx = std::log10(std::sqrt(f1 * f2));
        const double ly = std::log10(acc / c);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("colored noise synthesis") {
    TimeGrid grid{0.001, 1 << 20, 0.0};

    SECTION("white level reproduces the band-limited variance") {
        PowerLawSpec spec;
        spec.set(0, 2e-6);
        const auto v = synthesize_colored_noise(spec, grid, 7, 1);
        const double want = 2e-6 / (2.0 * grid.dt_s);
        CHECK(mean_var(v) == Catch::Approx(want).epsilon(0.05));
    }
    SECTION("zero spec gives exact zeros") {
        const auto v = synthesize_colored_noise(PowerLawSpec{}, grid, 7, 1);
        for (double x : v) CHECK(x == 0.0);
    }
    SECTION("determinism: same seed and stream repeat bit for bit") {
        PowerLawSpec spec;
        spec.set(-2, 1e-9);
        TimeGrid g{0.5, 4096, 0.0};
        const auto a = synthesize_colored_noise(spec, g, 123, 9);
        const auto b = synthesize_colored_noise(spec, g, 123, 9);
        CHECK(a == b);
        const auto c = synthesize_colored_noise(spec, g, 124, 9);
        CHECK(a != c);
    }
    SECTION("unsupported exponents rejected") {
        PowerLawSpec spec;
        CHECK_THROWS_AS(spec.set(1, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(spec.set(-5, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(spec.set(0, -1.0), std::invalid_argument);
    }
    SECTION("white-FM phase spec shows the tau^-1/2 Allan law") {
        TimeGrid g{1.0, 1 << 18, 0.0};
        PowerLawSpec spec;
        spec.set(-2, 1e-24);
        const auto x = synthesize_colored_noise(spec, g, 21, 2);
        const auto table = overlapping_adev(as_phase(g, x), octave_taus(g));
        CHECK(allan_loglog_slope(table, 4.0, 400.0) == Catch::Approx(-0.5).margin(0.1));
    }
}

TEST_CASE("power-law PSD fidelity across all supported exponents") {
    TimeGrid grid{0.001, 1 << 20, 0.0};
    for (int e : {0, -1, -2, -3, -4}) {
        PowerLawSpec spec;
        spec.set(e, 1e-9);
        const auto v = synthesize_colored_noise(spec, grid, 11, 2);
        const auto ps = psd_phase(as_phase(grid, v, 1.0 / two_pi), 1 << 17);
        // two decades well inside the estimation band
        CHECK(psd_slope(ps, 0.05, 5.0) ==
              Catch::Approx(static_cast<double>(e)).margin(0.15));
    }
}

TEST_CASE("fiber delay process") {
    SECTION("all levels zero gives constant zero delay") {
        FiberNoiseParams p{0.0, 0.0, 0.0, 0.0, 86400.0};
        TimeGrid g{1.0, 1024, 0.0};
        const auto v = fiber_delay_process(p, g, 5);
        for (double x : v) CHECK(x == 0.0);
    }
    SECTION("diurnal term present with the configured amplitude") {
        FiberNoiseParams p{0.0, 0.0, 0.0, 500.0, 86400.0};
        TimeGrid g{60.0, 2 * 1440, 0.0};  // two days at one minute
        const auto v = fiber_delay_process(p, g, 5);
        double mn = 1e9, mx = -1e9;
        for (double x : v) {
            mn = std::min(mn, x);
            mx = std::max(mx, x);
        }
        CHECK(mx - mn == Catch::Approx(2.0 * 500e-12).epsilon(0.01));
    }
    SECTION("default calibration: multi-ns drift over three days") {
        FiberNoiseParams p;
        TimeGrid g{60.0, 3 * 1440, 0.0};
        const auto v = fiber_delay_process(p, g, 42);
        double mn = 1e9, mx = -1e9;
        for (double x : v) {
            mn = std::min(mn, x);
            mx = std::max(mx, x);
        }
        CHECK(mx - mn > 1.5e-9);
        CHECK(mx - mn < 6e-9);  // stays inside the slow-actuator range
    }
}

TEST_CASE("laser frequency noise") {
    TimeGrid grid{0.01, 1 << 17, 0.0};

    SECTION("zero levels give a zero series") {
        LaserNoiseParams p{0.0, 0.0, 0.0};
        const auto v = laser_frequency_noise(p, grid, 3, 1);
        for (double x : v) CHECK(x == 0.0);
    }
    SECTION("same seed and diode id reproduce; distinct diodes differ") {
        LaserNoiseParams p;
        const auto a = laser_frequency_noise(p, grid, 3, 1);
        const auto b = laser_frequency_noise(p, grid, 3, 1);
        CHECK(a == b);
        const auto c = laser_frequency_noise(p, grid, 3, 2);
        CHECK(a != c);
    }
    SECTION("beat of two default diodes has a 250 kHz Allan deviation at 1 s") {
        LaserNoiseParams p;
        const auto d1 = laser_frequency_noise(p, grid, 3, 1);
        const auto d2 = laser_frequency_noise(p, grid, 3, 2);
        // frequency-counter estimate: 1 s block averages, first differences
        const std::size_t block = 100;
        std::vector<double> bar;
        for (std::size_t i = 0; i + block <= d1.size(); i += block) {
            double acc = 0.0;
            for (std::size_t j = 0; j < block; ++j) acc += d1[i + j] - d2[i + j];
            bar.push_back(acc / static_cast<double>(block));
        }
        double s = 0.0;
        for (std::size_t i = 1; i < bar.size(); ++i)
            s += (bar[i] - bar[i - 1]) * (bar[i] - bar[i - 1]);
        const double adev = std::sqrt(s / (2.0 * static_cast<double>(bar.size() - 1)));
        CHECK(adev == Catch::Approx(250e3).epsilon(0.2));
    }
}

TEST_CASE("detection floor levels") {
    SECTION("flicker floor at -120 dB gives ~1e-15 at 1 s closed-loop-equivalent") {
        FloorParams p;
        TimeGrid g{0.1, 1 << 17, 0.0};
        const auto v = detection_floor_delay(p, g, 9, 1);
        const auto table = overlapping_adev(as_phase(g, v), {1.0, 2.0});
        CHECK(table.sigma_y[0] > 2e-16);
        CHECK(table.sigma_y[0] < 3e-15);
    }
    SECTION("EDFA excess delay calibrated to the 1 s stability figure") {
        FloorParams p;
        TimeGrid g{0.1, 1 << 17, 0.0};
        const auto v = edfa_excess_delay(p, g, 9, 2);
        const auto table = overlapping_adev(as_phase(g, v), {1.0});
        // band-limited white PM at 5 Hz Nyquist vs the 3 Hz chain calibration
        CHECK(table.sigma_y[0] == Catch::Approx(3e-15).epsilon(0.35));
    }
    SECTION("electronics long-term floor is flat at the configured level") {
        FloorParams p;
        p.electronics_diurnal_ps = 0.0;
        TimeGrid g{10.0, 1 << 16, 0.0};
        const auto v = electronics_longterm_delay(p, g, 9, 3);
        const auto table = overlapping_adev(as_phase(g, v), {640.0, 2560.0, 10240.0});
        for (double s : table.sigma_y)
            CHECK(s == Catch::Approx(1.5e-18).epsilon(0.5));
    }
}
