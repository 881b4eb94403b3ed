// Frequency-stability analysis: overlapping Allan deviation with
// noise-type-aware confidence intervals, Welch phase-noise PSD, and the
// mean fractional frequency offset estimate.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberlink/core.hpp"
#include "fiberlink/fft.hpp"

namespace fiberlink {

/// PSD floor sentinel for empty bins (dB).
inline constexpr double psd_floor_db = -400.0;

struct AllanTable {
    std::vector<double> tau_s;
    std::vector<double> sigma_y;
    std::vector<double> ci;         // 1-sigma half-widths
    std::vector<std::size_t> n_used;  // contributing second differences
};

struct PsdEstimate {
    std::vector<double> freq_hz;
    std::vector<double> psd_db;  // dB rad^2/Hz, one-sided
    std::size_t segment_count = 0;
    std::string window;
};

enum class PsdWindow { hann, rectangular };

namespace detail {

/// Equivalent degrees of freedom for the overlapping Allan estimator,
/// using the common per-noise-type approximations keyed by the local
/// log-log slope.
inline double allan_edf(std::size_t n, std::size_t m_steps, double local_slope) {
    const double N = static_cast<double>(n);
    const double m = static_cast<double>(m_steps);
    if (local_slope <= -0.75) {  // white/flicker PM
        return (N + 1.0) * (N - 2.0 * m) / (2.0 * (N - m));
    }
    if (local_slope <= -0.25) {  // white FM
        return (3.0 * (N - 1.0) / (2.0 * m) - 2.0 * (N - 2.0) / N) *
               (4.0 * m * m) / (4.0 * m * m + 5.0);
    }
    if (local_slope <= 0.25) {  // flicker FM
        if (m_steps == 1) return 2.0 * (N - 2.0) * (N - 2.0) / (2.3 * N - 4.9);
        return 5.0 * N * N / (4.0 * m * (N + 3.0 * m));
    }
    // random-walk FM
    const double num = (N - 1.0) * (N - 1.0) - 3.0 * m * (N - 1.0) + 4.0 * m * m;
    return (N - 2.0) / m * num / ((N - 3.0) * (N - 3.0));
}

}  // namespace detail

/// Octave-spaced tau list supported by a grid (tau = dt * 2^k).
inline std::vector<double> octave_taus(const TimeGrid& grid, double tau_min = 0.0) {
    grid.validate();
    std::vector<double> taus;
    for (std::size_t m = 1; 2 * m + 1 <= grid.n_samples; m *= 2) {
        const double tau = grid.dt_s * static_cast<double>(m);
        if (tau >= tau_min) taus.push_back(tau);
    }
    return taus;
}

/// Overlapping Allan deviation of a phase series. The series must be in
/// radians at a stated carrier; taus must be integer multiples of dt.
/// Taus with fewer than 4 contributing differences are omitted.
inline AllanTable overlapping_adev(const PhaseSeries& phase,
                                   const std::vector<double>& taus) {
    phase.validate();
    if (phase.unit != SeriesUnit::radians)
        throw std::invalid_argument("overlapping_adev: series must be radians at a carrier");
    const std::vector<double> x = phase.time_error_seconds();
    const std::size_t n = x.size();
    const double dt = phase.grid.dt_s;

    AllanTable table;
    std::vector<std::size_t> m_steps;
    for (double tau : taus) {
        const double m_real = tau / dt;
        const double m_round = std::round(m_real);
        if (m_round < 1.0 || std::abs(m_real - m_round) > 1e-9 * m_real)
            throw std::invalid_argument("overlapping_adev: tau must be a multiple of dt");
        const std::size_t m = static_cast<std::size_t>(m_round);
        if (2 * m >= n) continue;           // series too short for this tau
        const std::size_t count = n - 2 * m;
        if (count < 4) continue;
        double acc = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double d = x[i + 2 * m] - 2.0 * x[i + m] + x[i];
            acc += d * d;
        }
        const double tau_eff = dt * static_cast<double>(m);
        const double avar = acc / (2.0 * tau_eff * tau_eff * static_cast<double>(count));
        table.tau_s.push_back(tau_eff);
        table.sigma_y.push_back(std::sqrt(avar));
        table.n_used.push_back(count);
        m_steps.push_back(m);
    }

    // confidence from chi-square edf, noise type taken from the local slope
    table.ci.resize(table.tau_s.size(), 0.0);
    for (std::size_t i = 0; i < table.tau_s.size(); ++i) {
        double slope = -1.0;
        if (table.tau_s.size() >= 2) {
            const std::size_t j = (i + 1 < table.tau_s.size()) ? i + 1 : i - 1;
            slope = std::log(table.sigma_y[j] / table.sigma_y[i]) /
                    std::log(table.tau_s[j] / table.tau_s[i]);
            if (!std::isfinite(slope)) slope = -1.0;
        }
        const double edf = std::max(1.0, detail::allan_edf(n, m_steps[i], slope));
        table.ci[i] = table.sigma_y[i] / std::sqrt(2.0 * edf);
    }
    return table;
}

/// Averaged-periodogram (Welch) phase-noise PSD, one-sided, 50% overlap,
/// per-segment mean and linear trend removed.
inline PsdEstimate psd_phase(const PhaseSeries& phase, std::size_t segment_length,
                             PsdWindow window = PsdWindow::hann) {
    phase.validate();
    if (phase.unit != SeriesUnit::radians)
        throw std::invalid_argument("psd_phase: series must be radians at a carrier");
    const std::size_t n = phase.grid.n_samples;
    if (segment_length < 8 || segment_length > n)
        throw std::invalid_argument("psd_phase: segment length must be in [8, n_samples]");

    const double dt = phase.grid.dt_s;
    const std::size_t nseg = segment_length;
    const std::size_t hop = nseg / 2;
    std::vector<double> w(nseg, 1.0);
    if (window == PsdWindow::hann) {
        for (std::size_t i = 0; i < nseg; ++i)
            w[i] = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(i) /
                                         static_cast<double>(nseg)));
    }
    double wpow = 0.0;
    for (double v : w) wpow += v * v;
    wpow /= static_cast<double>(nseg);

    std::vector<double> accum(nseg / 2 + 1, 0.0);
    std::size_t count = 0;
    std::vector<std::complex<double>> buf(nseg);
    for (std::size_t start = 0; start + nseg <= n; start += hop) {
        // remove mean and linear trend over the segment
        double sy = 0.0, sxy = 0.0;
        const double mid = 0.5 * static_cast<double>(nseg - 1);
        double sxx = 0.0;
        for (std::size_t i = 0; i < nseg; ++i) {
            const double xi = static_cast<double>(i) - mid;
            sy += phase.values[start + i];
            sxy += xi * phase.values[start + i];
            sxx += xi * xi;
        }
        const double mean = sy / static_cast<double>(nseg);
        const double slope = sxy / sxx;
        for (std::size_t i = 0; i < nseg; ++i) {
            const double xi = static_cast<double>(i) - mid;
            buf[i] = {(phase.values[start + i] - mean - slope * xi) * w[i], 0.0};
        }
        std::vector<std::complex<double>> spec = dft(buf);
        for (std::size_t k = 0; k <= nseg / 2; ++k) accum[k] += std::norm(spec[k]);
        ++count;
        if (hop == 0) break;
    }
    if (count == 0) throw std::invalid_argument("psd_phase: no full segment fits");

    PsdEstimate est;
    est.segment_count = count;
    est.window = window == PsdWindow::hann ? "hann" : "rectangular";
    const double norm = 2.0 * dt / (static_cast<double>(nseg) * wpow *
                                    static_cast<double>(count));
    for (std::size_t k = 1; k <= nseg / 2; ++k) {
        const double s = accum[k] * norm * (k == nseg / 2 ? 0.5 : 1.0);
        est.freq_hz.push_back(static_cast<double>(k) / (static_cast<double>(nseg) * dt));
        est.psd_db.push_back(s > 0.0 ? linear_to_db(s) : psd_floor_db);
    }
    return est;
}

struct FractionalOffset {
    double offset = 0.0;       // mean fractional frequency
    double uncertainty = 0.0;  // 1-sigma
};

/// Least-squares frequency offset of a phase record: slope of x(t). The
/// uncertainty combines the white-residual regression error with the
/// two-sample instability at the record length; the latter dominates when
/// the residuals are colored.
inline FractionalOffset fractional_offset(const PhaseSeries& phase) {
    phase.validate();
    if (phase.grid.span_s() < 1000.0)
        throw std::invalid_argument("fractional_offset: span must be at least 1000 s");
    const std::vector<double> x = phase.time_error_seconds();
    const std::size_t n = x.size();
    const double dt = phase.grid.dt_s;

    const double mid = 0.5 * static_cast<double>(n - 1);
    double sxy = 0.0, sxx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = (static_cast<double>(i) - mid) * dt;
        sxy += ti * x[i];
        sxx += ti * ti;
        sy += x[i];
    }
    const double slope = sxy / sxx;
    const double mean = sy / static_cast<double>(n);

    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = (static_cast<double>(i) - mid) * dt;
        const double r = x[i] - mean - slope * ti;
        ss_res += r * r;
    }
    const double dof = static_cast<double>(n > 2 ? n - 2 : 1);
    FractionalOffset out;
    out.offset = slope;
    const double white_term = std::sqrt(ss_res / dof / sxx);
    double instability_term = 0.0;
    if (phase.unit == SeriesUnit::radians) {
        const AllanTable table = overlapping_adev(phase, octave_taus(phase.grid));
        if (!table.sigma_y.empty()) instability_term = table.sigma_y.back();
    }
    out.uncertainty = std::hypot(white_term, instability_term);
    return out;
}

/// Log-log slope of sigma_y(tau) over [tau_lo, tau_hi].
inline double allan_loglog_slope(const AllanTable& table, double tau_lo, double tau_hi) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < table.tau_s.size(); ++i) {
        if (table.tau_s[i] < tau_lo || table.tau_s[i] > tau_hi) continue;
        if (!(table.sigma_y[i] > 0.0)) continue;
        const double lx = std::log(table.tau_s[i]);
        const double ly = std::log(table.sigma_y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("allan_loglog_slope: need at least 2 points in range");
    const double den = static_cast<double>(n) * sxx - sx * sx;
    return (static_cast<double>(n) * sxy - sx * sy) / den;
}

/// sigma_y at the table point closest to tau (log distance).
inline double sigma_at(const AllanTable& table, double tau) {
    if (table.tau_s.empty()) throw std::invalid_argument("sigma_at: empty table");
    std::size_t best = 0;
    double bestd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < table.tau_s.size(); ++i) {
        const double d = std::abs(std::log(table.tau_s[i] / tau));
        if (d < bestd) {
            bestd = d;
            best = i;
        }
    }
    return table.sigma_y[best];
}

}  // namespace fiberlink
