// First-order polarization mode dispersion: a concatenation of birefringent
// waveplate segments whose axes drift slowly and breathe with the diurnal
// temperature cycle. Scrambling faster than the servo band is modeled as
// exact averaging over input states, which nulls the first-order DGD term.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fiberlink/core.hpp"
#include "fiberlink/noise.hpp"

namespace fiberlink {

struct StokesVector {
    double s1 = 1.0, s2 = 0.0, s3 = 0.0;

    double norm() const { return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3); }
    bool is_unit(double tol = 1e-9) const { return std::abs(norm() - 1.0) <= tol; }

    void validate() const {
        if (!is_unit())
            throw std::invalid_argument("StokesVector: input state must be a unit vector");
    }
};

struct PmdParams {
    double mean_dgd_ps = 10.0;
    std::size_t n_waveplate_segments = 20;
    double drift_time_constant_s = 3.0e4;
    double diurnal_modulation_depth = 0.3;  // radians of diurnal axis wobble
    double diurnal_period_s = 86400.0;
    std::array<double, 3> scrambler_rates_khz{60.0, 100.0, 130.0};  // documentation

    void validate() const {
        if (mean_dgd_ps < 0.0)
            throw std::invalid_argument("PmdParams: mean DGD must be >= 0");
        if (n_waveplate_segments < 1)
            throw std::invalid_argument("PmdParams: need at least one segment");
        if (!(drift_time_constant_s > 0.0))
            throw std::invalid_argument("PmdParams: drift time constant must be positive");
        if (diurnal_modulation_depth < 0.0)
            throw std::invalid_argument("PmdParams: diurnal depth must be >= 0");
    }
};

namespace detail {

using Vec3 = std::array<double, 3>;

inline Vec3 rotate_about(const Vec3& v, const Vec3& axis, double angle) {
    // Rodrigues rotation; axis must be unit length.
    const double c = std::cos(angle), s = std::sin(angle);
    const double dot = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2];
    const Vec3 cross{axis[1] * v[2] - axis[2] * v[1], axis[2] * v[0] - axis[0] * v[2],
                     axis[0] * v[1] - axis[1] * v[0]};
    Vec3 out;
    for (int i = 0; i < 3; ++i)
        out[i] = v[i] * c + cross[i] * s + axis[i] * dot * (1.0 - c);
    return out;
}

}  // namespace detail

/// Deterministic waveplate-concatenation model. Segment axes move as a sum
/// of seeded slow tones around the drift time constant plus the diurnal
/// wobble, so the delay is a pure function of (params, seed, t).
class PmdModel {
public:
    PmdModel(const PmdParams& params, std::uint64_t seed, std::uint64_t stream_id = 0)
        : params_(params) {
        params_.validate();
        const std::size_t n = params_.n_waveplate_segments;
        segments_.resize(n);
        NoiseRng rng(seed, 0x90d0ull ^ stream_id);
        for (auto& seg : segments_) {
            seg.theta0 = std::acos(2.0 * rng.uniform() - 1.0);
            seg.phi0 = two_pi * rng.uniform();
            seg.retardance = two_pi * rng.uniform();
            seg.diurnal_phase = two_pi * rng.uniform();
            for (std::size_t k = 0; k < n_tones; ++k) {
                seg.tone_amp_theta[k] = 0.45 * rng.gaussian();
                seg.tone_amp_phi[k] = 0.45 * rng.gaussian();
                seg.tone_phase_theta[k] = two_pi * rng.uniform();
                seg.tone_phase_phi[k] = two_pi * rng.uniform();
            }
        }
        segment_dgd_s_ = params_.mean_dgd_ps * 1e-12 /
                         std::sqrt(static_cast<double>(n));
    }

    /// Input-referred PMD vector at time t (seconds on the Poincare sphere).
    detail::Vec3 pmd_vector(double t) const {
        detail::Vec3 tau{0.0, 0.0, 0.0};
        // output-referred concatenation, then undo the composite rotation
        std::vector<detail::Vec3> axes(segments_.size());
        for (std::size_t i = 0; i < segments_.size(); ++i) axes[i] = axis_at(i, t);
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            tau = detail::rotate_about(tau, axes[i], segments_[i].retardance);
            for (int c = 0; c < 3; ++c) tau[c] += segment_dgd_s_ * axes[i][c];
        }
        for (std::size_t i = segments_.size(); i-- > 0;)
            tau = detail::rotate_about(tau, axes[i], -segments_[i].retardance);
        return tau;
    }

    double dgd_s(double t) const {
        const auto tau = pmd_vector(t);
        return std::sqrt(tau[0] * tau[0] + tau[1] * tau[1] + tau[2] * tau[2]);
    }

    /// Extra propagation delay for a given input polarization state,
    /// relative to the polarization-averaged delay. Alignment with the
    /// fast principal state gives -DGD/2.
    double delay_seconds(const StokesVector& input, double t) const {
        input.validate();
        if (params_.mean_dgd_ps == 0.0) return 0.0;
        const auto tau = pmd_vector(t);
        return -0.5 * (tau[0] * input.s1 + tau[1] * input.s2 + tau[2] * input.s3);
    }

    /// Delay seen through a polarization scrambler running far above the
    /// loop band: the uniform average over input states, which is zero for
    /// first-order PMD.
    double scrambled_delay_seconds(double /*t*/) const { return 0.0; }

    const PmdParams& params() const { return params_; }

private:
    static constexpr std::size_t n_tones = 4;
    // slow drift tones spread around 1/drift_time_constant
    static constexpr std::array<double, n_tones> tone_scale{0.13, 0.29, 0.61, 1.27};

    struct Segment {
        double theta0 = 0.0, phi0 = 0.0;
        double retardance = 0.0;
        double diurnal_phase = 0.0;
        std::array<double, n_tones> tone_amp_theta{}, tone_amp_phi{};
        std::array<double, n_tones> tone_phase_theta{}, tone_phase_phi{};
    };

    detail::Vec3 axis_at(std::size_t i, double t) const {
        const Segment& seg = segments_[i];
        double theta = seg.theta0;
        double phi = seg.phi0;
        for (std::size_t k = 0; k < n_tones; ++k) {
            const double w = two_pi * tone_scale[k] / params_.drift_time_constant_s;
            theta += seg.tone_amp_theta[k] * std::sin(w * t + seg.tone_phase_theta[k]);
            phi += seg.tone_amp_phi[k] * std::sin(w * t + seg.tone_phase_phi[k]);
        }
        const double wobble = params_.diurnal_modulation_depth *
                              std::sin(two_pi * t / params_.diurnal_period_s +
                                       seg.diurnal_phase);
        theta += wobble;
        phi += wobble;
        return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                std::cos(theta)};
    }

    PmdParams params_;
    std::vector<Segment> segments_;
    double segment_dgd_s_ = 0.0;
};

/// One-off evaluation matching the module operation signature.
inline double pmd_delay(const PmdParams& params, const StokesVector& state, double t,
                        std::uint64_t seed = 1, bool scrambled = false) {
    PmdModel model(params, seed);
    return scrambled ? model.scrambled_delay_seconds(t) : model.delay_seconds(state, t);
}

}  // namespace fiberlink
