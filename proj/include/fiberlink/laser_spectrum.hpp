// Modulated-laser sideband decomposition and its interaction with fiber
// chromatic dispersion: Fourier amplitude coefficients of the AM envelope,
// Bessel coefficients of the FM phase, the combined asymmetric line
// spectrum, first-order dispersive propagation phases, and the detected RF
// beat with its in-phase / quadrature structure.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fiberlink/core.hpp"

namespace fiberlink {

/// Transmitter laser description. The field is
///   E = E0 sqrt(1 + m_i cos(W t)) exp(j(w0 t + m sin(W t))).
struct LaserParams {
    double carrier_frequency_hz = speed_of_light_m_s / 1550e-9;
    double wavelength_nm = 1550.0;
    double amplitude_mod_index = 0.7;  // m_i
    double frequency_mod_index = 15.0;  // m
    double chirp_mhz_per_ma = 375.0;    // informational; m is authoritative
    double optical_power_mw = 20.0;

    void validate() const {
        if (!(carrier_frequency_hz > 0.0))
            throw std::invalid_argument("LaserParams: carrier frequency must be positive");
        if (amplitude_mod_index < 0.0 || amplitude_mod_index >= 1.0)
            throw std::invalid_argument("LaserParams: amplitude index must be in [0,1)");
        if (frequency_mod_index < 0.0)
            throw std::invalid_argument("LaserParams: frequency index must be >= 0");
        if (!(optical_power_mw >= 0.0))
            throw std::invalid_argument("LaserParams: power must be >= 0");
        const double nu_from_lambda = speed_of_light_m_s / (wavelength_nm * 1e-9);
        if (std::abs(nu_from_lambda - carrier_frequency_hz) > 1e-6 * carrier_frequency_hz)
            throw std::invalid_argument(
                "LaserParams: wavelength and carrier frequency disagree beyond 1e-6");
    }
};

/// Forward/backward RF modulation frequencies. Distinct values isolate the
/// backward detection from stray reflections and SBS backscatter.
struct ModulationParams {
    double forward_rf_hz = 1.0e9;
    double backward_rf_hz = 0.9e9;

    void validate() const {
        if (!(forward_rf_hz > 0.0) || !(backward_rf_hz > 0.0))
            throw std::invalid_argument("ModulationParams: RF frequencies must be positive");
        if (forward_rf_hz == backward_rf_hz)
            throw std::invalid_argument(
                "ModulationParams: forward and backward RF must differ");
    }
    double forward_rad_s() const { return two_pi * forward_rf_hz; }
    double backward_rad_s() const { return two_pi * backward_rf_hz; }
};

/// Line spectrum of the modulated field: E/E0 = L0 + sum_n (L_{n+} e^{jnWt}
/// + L_{n-} e^{-jnWt}).
struct SpectrumCoefficients {
    std::size_t truncation_order = 0;     // N: sidebands reported for n = 1..N
    std::vector<double> amplitude;        // M_0 .. M_N
    std::vector<double> bessel;           // J_0(m) .. J_N(m)
    std::vector<double> sideband_plus;    // L_{1+} .. L_{N+}
    std::vector<double> sideband_minus;   // L_{1-} .. L_{N-}
    double dc_term = 0.0;                 // L_0

    double line(long k) const {  // signed line index
        if (k == 0) return dc_term;
        const std::size_t n = static_cast<std::size_t>(k > 0 ? k : -k);
        if (n > truncation_order) return 0.0;
        return k > 0 ? sideband_plus[n - 1] : sideband_minus[n - 1];
    }
};

/// Differential group delay between adjacent modulation lines:
///   dt_d = -D * L * lambda0 * (W / w0).
/// D in ps/(km nm), L in km, lambda0 in nm, carrier in Hz, W in rad/s;
/// result in seconds.
inline double differential_delay_s(double dispersion_ps_km_nm, double length_km,
                                   double wavelength_nm, double carrier_hz,
                                   double rf_rad_s) {
    if (!std::isfinite(length_km) || length_km < 0.0)
        throw std::invalid_argument("differential_delay: length must be finite and >= 0");
    if (!(carrier_hz > 0.0))
        throw std::invalid_argument("differential_delay: carrier must be positive");
    const double omega0 = two_pi * carrier_hz;
    return -dispersion_ps_km_nm * 1e-12 * length_km * wavelength_nm * rf_rad_s / omega0;
}

/// Fourier cosine coefficients M_0..M_N of sqrt(1 + m_i cos(theta)).
/// Periodic trapezoid quadrature, grid doubled until coefficients settle
/// to 1e-12 relative (spectral convergence; there is no closed form).
inline std::vector<double> amplitude_coefficients(double m_i, std::size_t order) {
    if (m_i < 0.0 || m_i >= 1.0)
        throw std::invalid_argument("amplitude_coefficients: m_i must be in [0,1)");
    if (order < 1)
        throw std::invalid_argument("amplitude_coefficients: order must be >= 1");

    auto compute = [&](std::size_t k_points) {
        std::vector<double> m(order + 1, 0.0);
        const double dtheta = two_pi / static_cast<double>(k_points);
        for (std::size_t j = 0; j < k_points; ++j) {
            const double theta = dtheta * static_cast<double>(j);
            const double f = std::sqrt(1.0 + m_i * std::cos(theta));
            m[0] += f;
            for (std::size_t n = 1; n <= order; ++n)
                m[n] += f * std::cos(static_cast<double>(n) * theta);
        }
        m[0] /= static_cast<double>(k_points);
        for (std::size_t n = 1; n <= order; ++n)
            m[n] *= 2.0 / static_cast<double>(k_points);
        return m;
    };

    std::size_t k = 256;
    while (k < 8 * order) k *= 2;
    std::vector<double> prev = compute(k);
    for (;;) {
        k *= 2;
        std::vector<double> cur = compute(k);
        double worst = 0.0;
        for (std::size_t n = 0; n <= order; ++n)
            worst = std::max(worst, std::abs(cur[n] - prev[n]));
        prev = std::move(cur);
        if (worst < 1e-13 || k >= (1u << 22)) break;
    }
    return prev;
}

namespace detail {

inline double bessel_jn(std::size_t n, double x) {
    if (x == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::cyl_bessel_j(static_cast<double>(n), x);
}

}  // namespace detail

/// Sideband amplitudes of the combined AM+FM field:
///   L_0    = sum_a M_{2a} J_{2a}
///   L_{n+} = (M_0 J_n + J_0 M_n)/2 + (1/2) sum_{a>=1} J_a (M_|n-a| + (-1)^a M_{n+a})
///   L_{n-} = ((-1)^n M_0 J_n + J_0 M_n)/2
///            + (1/2) sum_{a>=1} J_a (M_{n+a} + (-1)^a M_|n-a|)
/// The order is raised automatically until both |J_N(m)| and |M_N| fall
/// below 1e-12; inner sums run until the Bessel tail is below 1e-14.
inline SpectrumCoefficients sideband_amplitudes(double m, double m_i,
                                                std::size_t min_order = 1) {
    if (m < 0.0) throw std::invalid_argument("sideband_amplitudes: m must be >= 0");
    if (m_i < 0.0 || m_i >= 1.0)
        throw std::invalid_argument("sideband_amplitudes: m_i must be in [0,1)");

    // Bessel tail: past the turning point a ~ m the terms decay fast.
    std::size_t a_max = static_cast<std::size_t>(std::ceil(m)) + 4;
    while (std::abs(detail::bessel_jn(a_max, m)) >= 1e-15) ++a_max;
    std::vector<double> j(a_max + 1);
    for (std::size_t a = 0; a <= a_max; ++a) j[a] = detail::bessel_jn(a, m);

    std::size_t order = std::max<std::size_t>(min_order, 1);
    while (order < a_max && std::abs(j[order]) >= 1e-12) ++order;
    {   // extend until the AM coefficients have also decayed
        std::vector<double> probe = amplitude_coefficients(m_i, order + 1);
        while (std::abs(probe[order]) >= 1e-12 && order < 256) {
            order += 4;
            probe = amplitude_coefficients(m_i, order + 1);
        }
    }

    const std::size_t m_len = order + a_max + 1;
    const std::vector<double> mcoef = amplitude_coefficients(m_i, m_len);
    auto m_at = [&](std::size_t idx) { return idx < mcoef.size() ? mcoef[idx] : 0.0; };

    SpectrumCoefficients out;
    out.truncation_order = order;
    out.amplitude.assign(mcoef.begin(), mcoef.begin() + static_cast<long>(order) + 1);
    out.bessel.resize(order + 1);
    for (std::size_t n = 0; n <= order; ++n)
        out.bessel[n] = n <= a_max ? j[n] : 0.0;

    out.dc_term = 0.0;
    for (std::size_t a = 0; 2 * a <= a_max; ++a) out.dc_term += m_at(2 * a) * j[2 * a];

    out.sideband_plus.resize(order);
    out.sideband_minus.resize(order);
    for (std::size_t n = 1; n <= order; ++n) {
        const double jn = n <= a_max ? j[n] : 0.0;
        double lp = 0.5 * (m_at(0) * jn + j[0] * m_at(n));
        double lm = 0.5 * ((n % 2 == 0 ? 1.0 : -1.0) * m_at(0) * jn + j[0] * m_at(n));
        for (std::size_t a = 1; a <= a_max; ++a) {
            const double sa = (a % 2 == 0) ? 1.0 : -1.0;
            const std::size_t d = n > a ? n - a : a - n;
            lp += 0.5 * j[a] * (m_at(d) + sa * m_at(n + a));
            lm += 0.5 * j[a] * (m_at(n + a) + sa * m_at(d));
        }
        out.sideband_plus[n - 1] = lp;
        out.sideband_minus[n - 1] = lm;
    }
    return out;
}

/// First-order dispersive propagation phases of the lines at w0 + k W:
///   phi_k = phi_0 + k (W t0 + w0 dt_d) + k^2 W dt_d,
/// reported relative to the carrier (phi_0 = 0 by convention).
struct PropagationPhases {
    double carrier_phase = 0.0;
    std::vector<double> phase_plus;   // phi_{1+} .. phi_{N+}
    std::vector<double> phase_minus;  // phi_{1-} .. phi_{N-}
    double carrier_delay_s = 0.0;     // t0
    double differential_delay_s = 0.0;  // dt_d
};

inline PropagationPhases make_propagation_phases(double dtd_s, double t0_s,
                                                 double rf_rad_s, double omega0_rad_s,
                                                 std::size_t order) {
    PropagationPhases p;
    p.carrier_delay_s = t0_s;
    p.differential_delay_s = dtd_s;
    p.phase_plus.resize(order);
    p.phase_minus.resize(order);
    const double lin = rf_rad_s * t0_s + omega0_rad_s * dtd_s;
    const double quad = rf_rad_s * dtd_s;
    for (std::size_t i = 0; i < order; ++i) {
        const double k = static_cast<double>(i + 1);
        p.phase_plus[i] = k * lin + k * k * quad;
        p.phase_minus[i] = -k * lin + k * k * quad;
    }
    return p;
}

/// Recovered RF tone after square-law detection of the dispersed spectrum.
struct DetectedRf {
    double inphase_amplitude = 0.0;    // A_I
    double quadrature_amplitude = 0.0;  // A_Q
    double effective_phase = 0.0;       // rad, relative to cos(W t), in (-pi, pi]
    double total_amplitude = 0.0;
};

/// Beat of adjacent lines at the modulation frequency:
///   A_I = 2 sum_n (L_{n+}L_{(n+1)+} + L_{n-}L_{(n+1)-}) cos((2n+1) W dt_d)
///   A_Q = 2 sum_n (L_{n+}L_{(n+1)+} - L_{n-}L_{(n+1)-}) sin((2n+1) W dt_d)
/// with L_{0+-} = L_0. The quadrature term exists only when the FM index
/// makes the spectrum asymmetric; the recovered tone is
///   S = R cos(W t - W t0 - w0 dt_d - atan2(A_Q, A_I)).
inline DetectedRf detected_rf(const SpectrumCoefficients& coeffs, double dtd_s,
                              double rf_rad_s, double t0_s, double omega0_rad_s) {
    double power = coeffs.dc_term * coeffs.dc_term;
    for (double v : coeffs.sideband_plus) power += v * v;
    for (double v : coeffs.sideband_minus) power += v * v;
    if (!(power > 0.0))
        throw std::invalid_argument("detected_rf: all-zero spectrum coefficients");

    double ai = 0.0, aq = 0.0;
    for (std::size_t n = 0; n < coeffs.truncation_order; ++n) {
        const double lp0 = n == 0 ? coeffs.dc_term : coeffs.sideband_plus[n - 1];
        const double lm0 = n == 0 ? coeffs.dc_term : coeffs.sideband_minus[n - 1];
        const double lp1 = coeffs.sideband_plus[n];
        const double lm1 = coeffs.sideband_minus[n];
        const double theta = static_cast<double>(2 * n + 1) * rf_rad_s * dtd_s;
        ai += (lp0 * lp1 + lm0 * lm1) * std::cos(theta);
        aq += (lp0 * lp1 - lm0 * lm1) * std::sin(theta);
    }
    DetectedRf out;
    out.inphase_amplitude = 2.0 * ai;
    out.quadrature_amplitude = 2.0 * aq;
    out.total_amplitude = std::hypot(out.inphase_amplitude, out.quadrature_amplitude);
    out.effective_phase = wrap_phase(-(omega0_rad_s * dtd_s + rf_rad_s * t0_s +
                                       std::atan2(out.quadrature_amplitude,
                                                  out.inphase_amplitude)));
    return out;
}

/// Optical frequency fluctuation record of one diode, in Hz on a TimeGrid.
struct FrequencySeries {
    TimeGrid grid;
    std::vector<double> values_hz;

    void validate() const {
        grid.validate();
        if (values_hz.size() != grid.n_samples)
            throw std::invalid_argument("FrequencySeries: value count does not match grid");
    }
};

/// Dispersion phase noise from the two diodes' frequency fluctuations:
/// one round trip accumulates (dw1 + dw2) * dt_d; in closed loop the
/// remote end keeps half of it.
inline PhaseSeries dispersion_phase_noise(const FrequencySeries& fwd,
                                          const FrequencySeries& bwd, double dtd_s,
                                          bool closed_loop,
                                          double carrier_hz = 1.0e9) {
    fwd.validate();
    bwd.validate();
    if (!(fwd.grid == bwd.grid))
        throw std::invalid_argument("dispersion_phase_noise: series grids differ");
    const double factor = (closed_loop ? 0.5 : 1.0) * two_pi * dtd_s;
    std::vector<double> phi(fwd.grid.n_samples);
    for (std::size_t i = 0; i < phi.size(); ++i)
        phi[i] = factor * (fwd.values_hz[i] + bwd.values_hz[i]);
    return PhaseSeries::radians_at(fwd.grid, std::move(phi), carrier_hz);
}

}  // namespace fiberlink
