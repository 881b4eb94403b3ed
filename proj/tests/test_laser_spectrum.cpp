#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <fstream>
#include <random>
#include <sstream>

#include "fiberlink/fft.hpp"
#include "fiberlink/laser_spectrum.hpp"

using namespace fiberlink;

namespace {

// Line amplitudes of the sampled field E/E0 over one modulation period;
// independent of the series formulas under test.
std::vector<std::complex<double>> field_lines_fft(double m, double m_i, std::size_t k) {
    std::vector<std::complex<double>> e(k);
    for (std::size_t j = 0; j < k; ++j) {
        const double th = two_pi * static_cast<double>(j) / static_cast<double>(k);
        e[j] = std::sqrt(1.0 + m_i * std::cos(th)) *
               std::polar(1.0, m * std::sin(th));
    }
    auto spec = dft(e);
    for (auto& v : spec) v /= static_cast<double>(k);
    return spec;  // spec[n] = c_n for n >= 0, spec[k - n] = c_{-n}
}

double oracle_line(const std::vector<std::complex<double>>& spec, long n) {
    const std::size_t k = spec.size();
    return (n >= 0 ? spec[static_cast<std::size_t>(n)]
                   : spec[k - static_cast<std::size_t>(-n)])
        .real();
}

constexpr double nu0 = speed_of_light_m_s / 1550e-9;

}  // namespace

TEST_CASE("differential delay formula") {
    const double omega = two_pi * 1e9;

    SECTION("90 km reference value") {
        const double dtd = differential_delay_s(17.0, 90.0, 1550.0, nu0, omega);
        CHECK(dtd == Catch::Approx(-12.3e-12).epsilon(0.01));
    }
    SECTION("zero length") {
        CHECK(differential_delay_s(17.0, 0.0, 1550.0, nu0, omega) == 0.0);
    }
    SECTION("linearity in D, L and Omega") {
        const double base = differential_delay_s(17.0, 90.0, 1550.0, nu0, omega);
        CHECK(differential_delay_s(34.0, 90.0, 1550.0, nu0, omega) ==
              Catch::Approx(2.0 * base).epsilon(1e-12));
        CHECK(differential_delay_s(17.0, 45.0, 1550.0, nu0, omega) ==
              Catch::Approx(0.5 * base).epsilon(1e-12));
        CHECK(differential_delay_s(17.0, 90.0, 1550.0, nu0, 2.0 * omega) ==
              Catch::Approx(2.0 * base).epsilon(1e-12));
    }
    SECTION("negative dispersion flips the sign") {
        CHECK(differential_delay_s(-17.0, 90.0, 1550.0, nu0, omega) > 0.0);
    }
    SECTION("invalid inputs rejected") {
        CHECK_THROWS_AS(differential_delay_s(17.0, -1.0, 1550.0, nu0, omega),
                        std::invalid_argument);
        CHECK_THROWS_AS(differential_delay_s(17.0, std::nan(""), 1550.0, nu0, omega),
                        std::invalid_argument);
    }
}

TEST_CASE("amplitude coefficients") {
    SECTION("constant envelope") {
        const auto m = amplitude_coefficients(0.0, 6);
        CHECK(m[0] == Catch::Approx(1.0).margin(1e-14));
        for (std::size_t n = 1; n < m.size(); ++n) CHECK(std::abs(m[n]) < 1e-14);
    }
    SECTION("golden table for m_i = 0.7") {
        std::ifstream f(std::string(GOLDEN_DIR) + "/amplitude_coeffs_mi07.csv");
        REQUIRE(f.good());
        std::string line;
        std::getline(f, line);  // header
        const auto m = amplitude_coefficients(0.7, 12);
        std::size_t rows = 0;
        while (std::getline(f, line)) {
            std::istringstream is(line);
            std::string cell;
            std::getline(is, cell, ',');
            const std::size_t n = std::stoul(cell);
            std::getline(is, cell, ',');
            const double want = std::stod(cell);
            REQUIRE(n < m.size());
            CHECK(m[n] == Catch::Approx(want).epsilon(1e-10).margin(1e-16));
            ++rows;
        }
        CHECK(rows == 13);
    }
    SECTION("Parseval identity across the range") {
        for (double mi : {0.1, 0.3, 0.5, 0.7, 0.9, 0.95}) {
            const auto m = amplitude_coefficients(mi, 24);
            double p = m[0] * m[0];
            for (std::size_t n = 1; n < m.size(); ++n) p += 0.5 * m[n] * m[n];
            CHECK(p == Catch::Approx(1.0).margin(1e-8));
        }
    }
    SECTION("domain errors") {
        CHECK_THROWS_AS(amplitude_coefficients(1.0, 4), std::invalid_argument);
        CHECK_THROWS_AS(amplitude_coefficients(-0.1, 4), std::invalid_argument);
        CHECK_THROWS_AS(amplitude_coefficients(0.5, 0), std::invalid_argument);
    }
}

TEST_CASE("sideband amplitudes") {
    SECTION("pure AM reduces to half the envelope coefficients") {
        const auto c = sideband_amplitudes(0.0, 0.7);
        for (std::size_t n = 1; n <= c.truncation_order; ++n) {
            CHECK(c.sideband_plus[n - 1] ==
                  Catch::Approx(c.amplitude[n] / 2.0).margin(1e-14));
            CHECK(c.sideband_minus[n - 1] ==
                  Catch::Approx(c.amplitude[n] / 2.0).margin(1e-14));
        }
    }
    SECTION("pure FM reduces to signed Bessel values") {
        const auto c = sideband_amplitudes(15.0, 0.0);
        for (std::size_t n = 1; n <= c.truncation_order; ++n) {
            const double jn = std::cyl_bessel_j(static_cast<double>(n), 15.0);
            CHECK(c.sideband_plus[n - 1] == Catch::Approx(jn).margin(1e-12));
            const double sign = (n % 2 == 0) ? 1.0 : -1.0;
            CHECK(c.sideband_minus[n - 1] == Catch::Approx(sign * jn).margin(1e-12));
        }
    }
    SECTION("total line power is the envelope mean power") {
        const auto c = sideband_amplitudes(15.0, 0.7);
        double p = c.dc_term * c.dc_term;
        for (double v : c.sideband_plus) p += v * v;
        for (double v : c.sideband_minus) p += v * v;
        CHECK(p == Catch::Approx(1.0).margin(1e-10));
    }
    SECTION("matches the sampled-field FFT for 20 random index pairs") {
        std::mt19937_64 gen(20240517);
        std::uniform_real_distribution<double> um(0.0, 18.0), umi(0.0, 0.9);
        for (int trial = 0; trial < 20; ++trial) {
            const double m = um(gen);
            const double mi = umi(gen);
            const auto c = sideband_amplitudes(m, mi);
            const auto spec = field_lines_fft(m, mi, 4096);
            REQUIRE(std::abs(oracle_line(spec, 0) - c.dc_term) <
                    1e-6 * std::max(1e-8, std::abs(oracle_line(spec, 0))));
            for (std::size_t n = 1; n <= c.truncation_order; ++n) {
                const double lp = oracle_line(spec, static_cast<long>(n));
                const double lm = oracle_line(spec, -static_cast<long>(n));
                if (std::abs(lp) > 1e-8)
                    CHECK(std::abs(c.sideband_plus[n - 1] - lp) < 1e-6 * std::abs(lp));
                if (std::abs(lm) > 1e-8)
                    CHECK(std::abs(c.sideband_minus[n - 1] - lm) < 1e-6 * std::abs(lm));
            }
        }
    }
}

TEST_CASE("propagation phase relations") {
    const double omega = two_pi * 1e9;
    const double w0 = two_pi * nu0;
    const double t0 = 90e3 * 1.468 / speed_of_light_m_s;
    const double dtd = differential_delay_s(17.0, 90.0, 1550.0, nu0, omega);
    const auto p = make_propagation_phases(dtd, t0, omega, w0, 4);

    CHECK(p.carrier_phase - p.phase_plus[0] ==
          Catch::Approx(-w0 * dtd - omega * dtd - omega * t0).epsilon(1e-12));
    CHECK(p.carrier_phase - p.phase_minus[0] ==
          Catch::Approx(w0 * dtd - omega * dtd + omega * t0).epsilon(1e-12));
    CHECK(p.phase_plus[0] - p.phase_plus[1] ==
          Catch::Approx(-w0 * dtd - 3.0 * omega * dtd - omega * t0).epsilon(1e-12));
    CHECK(p.phase_minus[0] - p.phase_minus[1] ==
          Catch::Approx(w0 * dtd - 3.0 * omega * dtd + omega * t0).epsilon(1e-12));
}

TEST_CASE("detected RF tone") {
    const double omega = two_pi * 1e9;
    const double w0 = two_pi * nu0;
    const double t0 = 90e3 * 1.468 / speed_of_light_m_s;

    SECTION("zero differential delay kills the quadrature term") {
        const auto c = sideband_amplitudes(15.0, 0.7);
        const auto rf = detected_rf(c, 0.0, omega, t0, w0);
        CHECK(rf.quadrature_amplitude == 0.0);
        CHECK(rf.effective_phase ==
              Catch::Approx(wrap_phase(-omega * t0)).margin(1e-12));
    }
    SECTION("pure AM never develops quadrature") {
        const auto c = sideband_amplitudes(0.0, 0.7);
        for (double lkm : {10.0, 50.0, 120.0, 200.0}) {
            const double dtd = differential_delay_s(17.0, lkm, 1550.0, nu0, omega);
            const auto rf = detected_rf(c, dtd, omega, t0, w0);
            CHECK(std::abs(rf.quadrature_amplitude) < 1e-12);
        }
    }
    SECTION("amplitude accounting") {
        const auto c = sideband_amplitudes(15.0, 0.7);
        const double dtd = differential_delay_s(17.0, 90.0, 1550.0, nu0, omega);
        const auto rf = detected_rf(c, dtd, omega, t0, w0);
        CHECK(rf.total_amplitude ==
              Catch::Approx(std::hypot(rf.inphase_amplitude, rf.quadrature_amplitude)));
    }
    SECTION("length sweep matches the line-propagation oracle") {
        const double m = 15.0, mi = 0.7;
        const auto c = sideband_amplitudes(m, mi);
        const auto spec = field_lines_fft(m, mi, 8192);
        for (double lkm = 0.0; lkm <= 200.0; lkm += 5.0) {
            const double dtd = differential_delay_s(17.0, lkm, 1550.0, nu0, omega);
            const auto rf = detected_rf(c, dtd, omega, t0, w0);
            // apply each line's dispersive phase and beat adjacent lines
            std::complex<double> acc{0.0, 0.0};
            auto phase_of = [&](long k) {
                const double kk = static_cast<double>(k);
                return kk * (omega * t0 + w0 * dtd) + kk * kk * omega * dtd;
            };
            for (long k = -90; k < 90; ++k)
                acc += oracle_line(spec, k + 1) * oracle_line(spec, k) *
                       std::polar(1.0, -(phase_of(k + 1) - phase_of(k)));
            const double amp_oracle = 2.0 * std::abs(acc);
            const double phase_oracle = wrap_phase(std::arg(acc));
            CHECK(std::abs(rf.total_amplitude - amp_oracle) <
                  1e-4 * std::max(1e-6, amp_oracle));
            CHECK(std::abs(wrap_phase(rf.effective_phase - phase_oracle)) < 1e-4);
        }
    }
    SECTION("degenerate coefficients rejected") {
        SpectrumCoefficients zero;
        zero.truncation_order = 2;
        zero.sideband_plus = {0.0, 0.0};
        zero.sideband_minus = {0.0, 0.0};
        CHECK_THROWS_AS(detected_rf(zero, 1e-12, omega, t0, w0), std::invalid_argument);
    }
}

TEST_CASE("dispersion phase noise") {
    TimeGrid grid{1.0, 64, 0.0};
    const double dtd = -12.3e-12;

    SECTION("zero inputs") {
        FrequencySeries a{grid, std::vector<double>(64, 0.0)};
        FrequencySeries b{grid, std::vector<double>(64, 0.0)};
        const auto phi = dispersion_phase_noise(a, b, dtd, true);
        for (double v : phi.values) CHECK(v == 0.0);
    }
    SECTION("constant sum, closed loop") {
        FrequencySeries a{grid, std::vector<double>(64, 150e3)};
        FrequencySeries b{grid, std::vector<double>(64, 100e3)};
        const auto phi = dispersion_phase_noise(a, b, dtd, true);
        const double want = 0.5 * two_pi * 250e3 * dtd;  // ~ -9.66 urad
        CHECK(std::abs(want) == Catch::Approx(9.66e-6).epsilon(0.01));
        for (double v : phi.values) CHECK(v == Catch::Approx(want).epsilon(1e-12));
    }
    SECTION("closed loop is half of open loop sample by sample") {
        std::mt19937_64 gen(7);
        std::normal_distribution<double> nd(0.0, 1e5);
        std::vector<double> va(64), vb(64);
        for (auto& v : va) v = nd(gen);
        for (auto& v : vb) v = nd(gen);
        FrequencySeries a{grid, va}, b{grid, vb};
        const auto open = dispersion_phase_noise(a, b, dtd, false);
        const auto closed = dispersion_phase_noise(a, b, dtd, true);
        for (std::size_t i = 0; i < 64; ++i)
            CHECK(closed.values[i] == Catch::Approx(0.5 * open.values[i]).margin(1e-30));
    }
    SECTION("grid mismatch rejected") {
        TimeGrid other{0.5, 64, 0.0};
        FrequencySeries a{grid, std::vector<double>(64, 0.0)};
        FrequencySeries b{other, std::vector<double>(64, 0.0)};
        CHECK_THROWS_AS(dispersion_phase_noise(a, b, dtd, true), std::invalid_argument);
    }
}

TEST_CASE("laser parameter validation") {
    LaserParams p;
    CHECK_NOTHROW(p.validate());
    p.amplitude_mod_index = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.amplitude_mod_index = 0.7;
    p.wavelength_nm = 1551.0;  // now inconsistent with the carrier
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    ModulationParams m;
    CHECK_NOTHROW(m.validate());
    m.backward_rf_hz = m.forward_rf_hz;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
