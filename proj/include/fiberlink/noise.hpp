// Stochastic disturbance synthesis: seeded Gaussian streams shaped to
// power-law spectra, plus the calibrated fiber / laser / detection-floor
// processes built on top of them. Every generator is a pure function of
// (params, grid, seed, stream id) so runs replay exactly.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "fiberlink/core.hpp"
#include "fiberlink/fft.hpp"

namespace fiberlink {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Deterministic Gaussian stream. Box-Muller on top of mt19937_64 keeps the
/// draw sequence identical across standard libraries.
class NoiseRng {
public:
    NoiseRng(std::uint64_t seed, std::uint64_t stream_id)
        : engine_(detail::splitmix64(seed ^ detail::splitmix64(stream_id))) {}

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(two_pi * u2);
        have_spare_ = true;
        return r * std::cos(two_pi * u2);
    }

    double uniform() {  // [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// One-sided power-law PSD: S(f) = sum_e coeff[e] * f^e over the supported
/// exponents {0, -1, -2, -3, -4}.
struct PowerLawSpec {
    std::array<double, 5> coeff{};  // index i holds the f^{-i} coefficient

    PowerLawSpec& set(int exponent, double c) {
        if (exponent > 0 || exponent < -4)
            throw std::invalid_argument("PowerLawSpec: exponent must be in {0,-1,-2,-3,-4}");
        if (!(c >= 0.0) || !std::isfinite(c))
            throw std::invalid_argument("PowerLawSpec: coefficient must be finite and >= 0");
        coeff[static_cast<std::size_t>(-exponent)] = c;
        return *this;
    }

    double psd_at(double f) const {
        double s = 0.0;
        double p = 1.0;
        for (std::size_t i = 0; i < coeff.size(); ++i) {
            s += coeff[i] * p;
            p /= f;
        }
        return s;
    }

    bool all_zero() const {
        for (double c : coeff)
            if (c != 0.0) return false;
        return true;
    }
};

/// Gaussian series whose periodogram follows the requested power law.
/// Spectral shaping of a white seeded stream; the synthesis grid is extended
/// to 2x the next power of two so the circular periodicity of the inverse
/// FFT does not leak into the returned window.
inline std::vector<double> synthesize_colored_noise(const PowerLawSpec& spec,
                                                    const TimeGrid& grid,
                                                    std::uint64_t seed,
                                                    std::uint64_t stream_id = 0) {
    grid.validate();
    const std::size_t n = grid.n_samples;
    if (spec.all_zero()) return std::vector<double>(n, 0.0);

    const std::size_t nfft = next_power_of_two(2 * n);
    const double df = 1.0 / (static_cast<double>(nfft) * grid.dt_s);
    NoiseRng rng(seed, stream_id);

    std::vector<std::complex<double>> spectrum(nfft, {0.0, 0.0});
    // |X_k|^2 = S(f_k) * nfft / (2 dt) reproduces the one-sided PSD after
    // the 1/N inverse transform.
    const double scale = static_cast<double>(nfft) / (2.0 * grid.dt_s);
    for (std::size_t k = 1; k <= nfft / 2; ++k) {
        const double f = static_cast<double>(k) * df;
        const double amp = std::sqrt(spec.psd_at(f) * scale);
        const double g1 = rng.gaussian();
        const double g2 = rng.gaussian();
        if (k == nfft / 2) {
            spectrum[k] = {amp * g1, 0.0};
        } else {
            spectrum[k] = {amp * g1 * std::numbers::sqrt2 / 2.0,
                           amp * g2 * std::numbers::sqrt2 / 2.0};
            spectrum[nfft - k] = std::conj(spectrum[k]);
        }
    }
    fft_pow2(spectrum, true);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = spectrum[i].real();
    return out;
}

// ---------------------------------------------------------------------------
// Fiber delay noise
// ---------------------------------------------------------------------------

/// PSD coefficients for the one-way propagation-delay process (s^2/Hz at
/// f^0, f^-1, f^-2) plus the deterministic diurnal term.
struct FiberNoiseParams {
    double white_pm_level = 6.4e-29;
    double flicker_pm_level = 1.0e-29;
    double random_walk_level = 8.0e-30;
    double diurnal_amplitude_ps = 1200.0;
    double diurnal_period_s = 86400.0;

    void validate() const {
        if (white_pm_level < 0 || flicker_pm_level < 0 || random_walk_level < 0 ||
            diurnal_amplitude_ps < 0)
            throw std::invalid_argument("FiberNoiseParams: levels must be >= 0");
        if (!(diurnal_period_s > 0))
            throw std::invalid_argument("FiberNoiseParams: diurnal period must be positive");
    }
};

/// One-way fiber delay fluctuation in seconds: stochastic power-law terms
/// plus the diurnal temperature sinusoid (seeded phase).
inline std::vector<double> fiber_delay_process(const FiberNoiseParams& params,
                                               const TimeGrid& grid,
                                               std::uint64_t seed,
                                               std::uint64_t stream_id = 0) {
    params.validate();
    PowerLawSpec spec;
    spec.set(0, params.white_pm_level);
    spec.set(-1, params.flicker_pm_level);
    spec.set(-2, params.random_walk_level);
    std::vector<double> delay = synthesize_colored_noise(spec, grid, seed, stream_id);

    if (params.diurnal_amplitude_ps > 0.0) {
        NoiseRng rng(seed, stream_id ^ 0xd1a7ull);
        const double phase0 = two_pi * rng.uniform();
        const double amp = params.diurnal_amplitude_ps * 1e-12;
        const double w = two_pi / params.diurnal_period_s;
        for (std::size_t i = 0; i < grid.n_samples; ++i)
            delay[i] += amp * std::sin(w * grid.time_at(i) + phase0);
    }
    return delay;
}

// ---------------------------------------------------------------------------
// Laser frequency noise
// ---------------------------------------------------------------------------

/// Per-diode optical frequency noise. white_fm is the flat S_nu level in
/// Hz^2/Hz; slow_drift is a random-walk FM coefficient (Hz^2*Hz);
/// thermal_coupling converts slow-actuator displacement into a frequency
/// pull (Hz per ps of thermal delay line motion).
struct LaserNoiseParams {
    double white_fm_hz2_per_hz = 6.25e10;
    double slow_drift_hz2_hz = 2.3e8;
    double thermal_coupling_hz_per_ps = 0.0;

    void validate() const {
        if (white_fm_hz2_per_hz < 0 || slow_drift_hz2_hz < 0)
            throw std::invalid_argument("LaserNoiseParams: levels must be >= 0");
    }
};

/// Frequency fluctuation series (Hz) for one diode. Distinct diode ids give
/// statistically independent streams under the same run seed.
inline std::vector<double> laser_frequency_noise(const LaserNoiseParams& params,
                                                 const TimeGrid& grid,
                                                 std::uint64_t seed,
                                                 std::uint64_t diode_id) {
    params.validate();
    PowerLawSpec spec;
    spec.set(0, params.white_fm_hz2_per_hz);
    spec.set(-2, params.slow_drift_hz2_hz);
    return synthesize_colored_noise(spec, grid, seed, 0x1a5e0000ull + diode_id);
}

// ---------------------------------------------------------------------------
// Detection / electronics floor
// ---------------------------------------------------------------------------

/// Compensation-system noise floor. The short-term part is a phase-noise
/// PSD pinned at 1 Hz for a 1 GHz carrier; the long-term part models the RF
/// electronics temperature sensitivity as a flicker-FM level plus a small
/// residual diurnal delay.
struct FloorParams {
    double system_floor_db_at_1hz = -120.0;  // dB rad^2/Hz at 1 GHz
    int slope_exponent = -1;                 // flicker phase
    double floor_reference_hz = 1.0e9;
    double edfa_excess_stability_1s = 3.0e-15;
    double electronics_flicker_floor = 1.5e-18;  // Allan deviation, flat
    double electronics_diurnal_ps = 0.25;
    double electronics_diurnal_period_s = 86400.0;

    void validate() const {
        if (slope_exponent > 0 || slope_exponent < -4)
            throw std::invalid_argument("FloorParams: slope exponent must be in {0,..,-4}");
        if (!(floor_reference_hz > 0))
            throw std::invalid_argument("FloorParams: reference carrier must be positive");
        if (edfa_excess_stability_1s < 0 || electronics_flicker_floor < 0 ||
            electronics_diurnal_ps < 0)
            throw std::invalid_argument("FloorParams: levels must be >= 0");
    }
};

/// Short-term detection floor as a delay series (seconds). The dB level is
/// referenced to floor_reference_hz, so the equivalent delay noise is
/// carrier-independent.
inline std::vector<double> detection_floor_delay(const FloorParams& params,
                                                 const TimeGrid& grid,
                                                 std::uint64_t seed,
                                                 std::uint64_t stream_id) {
    params.validate();
    const double b = db_to_linear(params.system_floor_db_at_1hz);
    const double w0 = two_pi * params.floor_reference_hz;
    PowerLawSpec spec;
    spec.set(params.slope_exponent, b / (w0 * w0));
    return synthesize_colored_noise(spec, grid, seed, stream_id);
}

/// Long-term electronics wander as a delay series (seconds): flicker FM at
/// the configured Allan level plus a residual diurnal sinusoid.
inline std::vector<double> electronics_longterm_delay(const FloorParams& params,
                                                      const TimeGrid& grid,
                                                      std::uint64_t seed,
                                                      std::uint64_t stream_id) {
    params.validate();
    PowerLawSpec spec;
    const double sig = params.electronics_flicker_floor;
    // flicker FM: sigma_y^2 = 2 ln2 * h_{-1},  S_x = h_{-1}/(4 pi^2) f^-3
    spec.set(-3, sig * sig / (2.0 * std::numbers::ln2 * 4.0 * std::numbers::pi * std::numbers::pi));
    std::vector<double> x = synthesize_colored_noise(spec, grid, seed, stream_id);
    if (params.electronics_diurnal_ps > 0.0) {
        NoiseRng rng(seed, stream_id ^ 0xe1ecull);
        const double phase0 = two_pi * rng.uniform();
        const double amp = params.electronics_diurnal_ps * 1e-12;
        const double w = two_pi / params.electronics_diurnal_period_s;
        for (std::size_t i = 0; i < grid.n_samples; ++i)
            x[i] += amp * std::sin(w * grid.time_at(i) + phase0);
    }
    return x;
}

/// EDFA excess phase noise as a delay series: white-PM delay level chosen so
/// a single pass contributes the configured Allan deviation at 1 s through
/// the standard 3 Hz measurement chain.
inline std::vector<double> edfa_excess_delay(const FloorParams& params,
                                             const TimeGrid& grid,
                                             std::uint64_t seed,
                                             std::uint64_t stream_id) {
    params.validate();
    if (params.edfa_excess_stability_1s <= 0.0)
        return std::vector<double>(grid.n_samples, 0.0);
    // white PM through the 3 Hz chain: sigma_y(1s) = sqrt(3 * NBW * S_x)
    const double nbw = std::numbers::pi / 2.0 * 3.0;
    const double sx = params.edfa_excess_stability_1s * params.edfa_excess_stability_1s /
                      (3.0 * nbw);
    PowerLawSpec spec;
    spec.set(0, sx);
    return synthesize_colored_noise(spec, grid, seed, stream_id);
}

}  // namespace fiberlink
