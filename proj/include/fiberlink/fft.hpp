// Small self-contained FFT: iterative radix-2 for power-of-two lengths,
// Bluestein's algorithm for everything else. Plenty for 2^20-point noise
// synthesis and Welch segments.
#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace fiberlink {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace detail {

inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n < 2) return;
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

}  // namespace detail

/// In-place transform; length must be a power of two. Forward uses the
/// e^{-i2pi kn/N} kernel; inverse includes the 1/N factor.
inline void fft_pow2(std::vector<std::complex<double>>& a, bool inverse = false) {
    if (!is_power_of_two(a.size()))
        throw std::invalid_argument("fft_pow2: length must be a power of two");
    detail::fft_radix2(a, inverse);
}

/// DFT of arbitrary length (Bluestein re-expressed as a pow2 convolution).
inline std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& in,
                                             bool inverse = false) {
    const std::size_t n = in.size();
    if (n == 0) return {};
    if (is_power_of_two(n)) {
        std::vector<std::complex<double>> a = in;
        detail::fft_radix2(a, inverse);
        return a;
    }
    // chirp z-transform: X_k = b*_k sum_j (a_j b_j) b*_{k-j},  b_j = e^{i pi j^2 /n}
    const double sign = inverse ? 1.0 : -1.0;
    const std::size_t m = next_power_of_two(2 * n - 1);
    std::vector<std::complex<double>> a(m), b(m);
    std::vector<std::complex<double>> chirp(n);
    for (std::size_t j = 0; j < n; ++j) {
        // j^2 mod 2n keeps the angle argument small
        const double q = static_cast<double>((j * j) % (2 * n));
        const double ang = sign * std::numbers::pi * q / static_cast<double>(n);
        chirp[j] = {std::cos(ang), std::sin(ang)};
    }
    for (std::size_t j = 0; j < n; ++j) a[j] = in[j] * chirp[j];
    b[0] = {1.0, 0.0};
    for (std::size_t j = 1; j < n; ++j) b[j] = b[m - j] = std::conj(chirp[j]);
    detail::fft_radix2(a, false);
    detail::fft_radix2(b, false);
    for (std::size_t j = 0; j < m; ++j) a[j] *= b[j];
    detail::fft_radix2(a, true);
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * chirp[k];
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : out) x *= inv;
    }
    return out;
}

}  // namespace fiberlink
