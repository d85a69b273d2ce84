#pragma once

// Deterministic numerical kernels: complementary error function, seeded
// Gaussian sampling and the unitary discrete Fourier transform.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "keyadapt/error.hpp"

namespace keyadapt {

using Complex = std::complex<double>;
using ComplexVec = std::vector<Complex>;

namespace detail {

// erf(x) = 2/sqrt(pi) * sum_n (-1)^n x^(2n+1) / (n! (2n+1)); used for |x| < 2
// where the alternating terms stay below ~10 in magnitude.
inline double erf_series(double x) {
    const double x2 = x * x;
    double term = x;  // (-1)^n x^(2n+1) / n!
    double sum = x;
    for (int n = 1; n < 200; ++n) {
        term *= -x2 / n;
        const double contrib = term / (2 * n + 1);
        sum += contrib;
        if (std::abs(contrib) < 1e-17 * std::abs(sum)) break;
    }
    return sum * (2.0 / std::sqrt(std::numbers::pi));
}

// Continued fraction for x >= 2 (modified Lentz):
//   erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
inline double erfc_continued_fraction(double x) {
    constexpr double tiny = 1e-300;
    double f = x;
    double c = x;
    double d = 0.0;
    for (int k = 1; k < 5000; ++k) {
        const double a = 0.5 * k;
        d = x + a * d;
        if (d == 0.0) d = tiny;
        c = x + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x * x) / (std::sqrt(std::numbers::pi) * f);
}

} // namespace detail

/// Complementary error function, absolute error below 1e-10 on [-6, 6].
///
/// Power series for |x| < 2, Lentz continued fraction beyond, and the
/// reflection erfc(-x) = 2 - erfc(x) for negative arguments.
inline double erfc(double x) {
    if (!std::isfinite(x)) throw Error(ErrorKind::domain, "erfc argument must be finite");
    const double ax = std::abs(x);
    const double upper = ax < 2.0 ? 1.0 - detail::erf_series(ax) : detail::erfc_continued_fraction(ax);
    return x < 0.0 ? 2.0 - upper : upper;
}

/// 64-bit seed; identical seed and parameters give bit-identical streams.
struct Seed {
    std::uint64_t value = 0;
    friend bool operator==(Seed, Seed) = default;
};

/// Counter-based splitmix64 generator with Box-Muller Gaussian draws.
///
/// `derive` produces statistically independent sub-streams keyed by an
/// integer, which is how parallel Monte Carlo chunks stay reproducible
/// regardless of the number of worker threads.
class SeedStream {
public:
    explicit SeedStream(Seed seed) : state_(seed.value) {}

    static SeedStream derive(Seed seed, std::uint64_t stream_id) {
        return SeedStream(Seed{mix(seed.value ^ mix(stream_id + 0x632BE59BD9B4E019ULL))});
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal draw.
    double standard_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the logarithm stays finite.
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// One draw from N(mean, variance). Zero variance returns `mean` exactly.
inline double gaussian_sample(SeedStream& stream, double mean, double variance) {
    if (!(variance >= 0.0) || !std::isfinite(variance))
        throw Error(ErrorKind::domain, "Gaussian variance must be finite and non-negative");
    if (variance == 0.0) return mean;
    return mean + std::sqrt(variance) * stream.standard_normal();
}

namespace detail {

inline void check_transform_input(std::span<const Complex> v) {
    if (v.empty()) throw Error(ErrorKind::domain, "transform of an empty vector");
    for (const auto& c : v) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw Error(ErrorKind::domain, "transform input has non-finite component");
    }
}

// sign = -1 forward, +1 inverse. Twiddles indexed by (j*k mod n) keep the
// phase argument exact.
inline ComplexVec direct_transform(std::span<const Complex> v, int sign) {
    const std::size_t n = v.size();
    std::vector<Complex> twiddle(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        twiddle[k] = {std::cos(angle), std::sin(angle)};
    }
    ComplexVec out(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc{0.0, 0.0};
        std::size_t idx = 0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += v[j] * twiddle[idx];
            idx += k;
            if (idx >= n) idx -= n;
        }
        out[k] = acc;
    }
    return out;
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, unnormalized.
inline ComplexVec radix2_transform(std::span<const Complex> v, int sign) {
    const std::size_t n = v.size();
    ComplexVec a(v.begin(), v.end());
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t k = 0; k < half; ++k) {
            const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            const Complex w{std::cos(angle), std::sin(angle)};
            for (std::size_t start = 0; start < n; start += len) {
                const Complex u = a[start + k];
                const Complex t = w * a[start + k + half];
                a[start + k] = u + t;
                a[start + k + half] = u - t;
            }
        }
    }
    return a;
}

inline ComplexVec unitary_transform(std::span<const Complex> v, int sign) {
    check_transform_input(v);
    ComplexVec out = is_power_of_two(v.size()) ? radix2_transform(v, sign) : direct_transform(v, sign);
    const double scale = 1.0 / std::sqrt(static_cast<double>(v.size()));
    for (auto& c : out) c *= scale;
    return out;
}

} // namespace detail

/// Unitary forward DFT: X_k = n^{-1/2} sum_j x_j e^{-2 pi i jk/n}.
inline ComplexVec dft(std::span<const Complex> v) { return detail::unitary_transform(v, -1); }

/// Unitary inverse DFT, the exact inverse of `dft`.
inline ComplexVec idft(std::span<const Complex> v) { return detail::unitary_transform(v, +1); }

} // namespace keyadapt
