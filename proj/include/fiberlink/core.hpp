// Time grids and tagged phase/delay series shared by every module.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fiberlink {

inline constexpr double speed_of_light_m_s = 299792458.0;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Uniformly sampled time axis. All signals in a run share one grid.
struct TimeGrid {
    double dt_s = 1.0;
    std::size_t n_samples = 0;
    double start_epoch_s = 0.0;

    double span_s() const { return dt_s * static_cast<double>(n_samples); }
    double sample_rate_hz() const { return 1.0 / dt_s; }
    double time_at(std::size_t i) const {
        return start_epoch_s + dt_s * static_cast<double>(i);
    }

    bool operator==(const TimeGrid& other) const = default;

    void validate() const {
        if (!(dt_s > 0.0) || !std::isfinite(dt_s))
            throw std::invalid_argument("TimeGrid: dt must be positive and finite");
        if (n_samples < 2)
            throw std::invalid_argument("TimeGrid: need at least 2 samples");
    }
};

enum class SeriesUnit { radians, seconds };

inline std::string_view unit_name(SeriesUnit u) {
    return u == SeriesUnit::radians ? "rad" : "s";
}

/// Phase samples in radians at a stated carrier, or a propagation-delay
/// series in seconds. Conversions between the two go through the carrier:
/// phi = 2*pi*nu*tau.
struct PhaseSeries {
    TimeGrid grid;
    std::vector<double> values;
    SeriesUnit unit = SeriesUnit::radians;
    double carrier_hz = 0.0;  // required when unit == radians

    static PhaseSeries radians_at(TimeGrid grid, std::vector<double> values,
                                  double carrier_hz) {
        PhaseSeries s{std::move(grid), std::move(values), SeriesUnit::radians, carrier_hz};
        s.validate();
        return s;
    }

    static PhaseSeries delay_seconds(TimeGrid grid, std::vector<double> values) {
        PhaseSeries s{std::move(grid), std::move(values), SeriesUnit::seconds, 0.0};
        s.validate();
        return s;
    }

    /// Time-error samples x(t) in seconds (identity for delay series).
    std::vector<double> time_error_seconds() const {
        if (unit == SeriesUnit::seconds) return values;
        std::vector<double> x(values.size());
        const double scale = 1.0 / (two_pi * carrier_hz);
        for (std::size_t i = 0; i < values.size(); ++i) x[i] = values[i] * scale;
        return x;
    }

    PhaseSeries to_radians(double new_carrier_hz) const {
        if (!(new_carrier_hz > 0.0))
            throw std::invalid_argument("PhaseSeries: carrier must be positive");
        std::vector<double> x = time_error_seconds();
        for (double& v : x) v *= two_pi * new_carrier_hz;
        return radians_at(grid, std::move(x), new_carrier_hz);
    }

    void validate() const {
        grid.validate();
        if (values.size() != grid.n_samples)
            throw std::invalid_argument("PhaseSeries: value count does not match grid");
        if (unit == SeriesUnit::radians && !(carrier_hz > 0.0))
            throw std::invalid_argument("PhaseSeries: radian series needs a carrier");
        for (double v : values)
            if (!std::isfinite(v))
                throw std::invalid_argument("PhaseSeries: non-finite sample");
    }
};

/// FNV-1a, used to fingerprint scenario files in output metadata.
inline std::uint64_t fnv1a_hash(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Fold an angle into (-pi, pi].
inline double wrap_phase(double phi) {
    double w = std::remainder(phi, two_pi);
    if (w <= -std::numbers::pi) w += two_pi;
    return w;
}

}  // namespace fiberlink
