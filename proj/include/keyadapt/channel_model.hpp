#pragma once

// Gaussian sub-channel model: transmittance, additive noise, the nu
// coefficient, block transmission and an empirical BER estimator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "keyadapt/error.hpp"
#include "keyadapt/numerics.hpp"

namespace keyadapt {

/// Complex sub-channel transmittance with equal real and imaginary parts,
/// each in [0, 1/sqrt(2)].
class Transmittance {
public:
    Transmittance(double re, double im) : re_(re), im_(im) {
        const double bound = 1.0 / std::numbers::sqrt2;
        if (!std::isfinite(re) || !std::isfinite(im) || re < 0.0 || im < 0.0 || re > bound || im > bound)
            throw Error(ErrorKind::domain, "transmittance components must lie in [0, 1/sqrt(2)]");
        if (re != im) throw Error(ErrorKind::domain, "transmittance real and imaginary parts must be equal");
    }

    /// Transmittance whose squared magnitude is `magnitude_sq` (in [0, 1]).
    static Transmittance from_magnitude_sq(double magnitude_sq) {
        if (!(magnitude_sq >= 0.0 && magnitude_sq <= 1.0))
            throw Error(ErrorKind::domain, "transmittance squared magnitude must lie in [0, 1]");
        const double part = std::min(std::sqrt(magnitude_sq / 2.0), 1.0 / std::numbers::sqrt2);
        return {part, part};
    }

    double re() const noexcept { return re_; }
    double im() const noexcept { return im_; }
    double magnitude_sq() const noexcept { return re_ * re_ + im_ * im_; }

    friend bool operator==(const Transmittance&, const Transmittance&) = default;

private:
    double re_;
    double im_;
};

/// One Gaussian sub-channel. `fourier_gain` is |F(T)|^2, the power gain seen
/// after the receiver-side transform; it is a configured scalar.
struct SubChannel {
    int index = 0;
    Transmittance transmittance{0.0, 0.0};
    double noise_variance = 1.0;
    double fourier_gain = 1.0;

    /// Sub-channel whose Fourier gain defaults to |T|^2.
    static SubChannel make(int index, Transmittance t, double noise_variance) {
        return {index, t, noise_variance, t.magnitude_sq()};
    }
};

/// Noise-to-gain ratio sigma^2 / |F(T)|^2 of a sub-channel.
inline double nu(const SubChannel& ch) {
    if (!(ch.fourier_gain > 0.0) || !std::isfinite(ch.fourier_gain))
        throw Error(ErrorKind::degenerate_channel,
                    "sub-channel " + std::to_string(ch.index) + " has non-positive Fourier gain");
    if (!(ch.noise_variance > 0.0) || !std::isfinite(ch.noise_variance))
        throw Error(ErrorKind::domain,
                    "sub-channel " + std::to_string(ch.index) + " has non-positive noise variance");
    const double value = ch.noise_variance / ch.fourier_gain;
    if (!std::isfinite(value)) throw Error(ErrorKind::degenerate_channel, "nu is not finite");
    return value;
}

/// The l information-bearing sub-channels out of n_total.
class ChannelEnsemble {
public:
    ChannelEnsemble(std::vector<SubChannel> sub_channels, int n_total)
        : sub_channels_(std::move(sub_channels)), n_total_(n_total) {
        if (sub_channels_.empty()) throw Error(ErrorKind::domain, "ensemble needs at least one sub-channel");
        if (static_cast<int>(sub_channels_.size()) > n_total_)
            throw Error(ErrorKind::domain, "more information-bearing sub-channels than n_total");
        for (std::size_t i = 0; i < sub_channels_.size(); ++i) {
            const auto& ch = sub_channels_[i];
            if (ch.index < 0 || ch.index >= n_total_)
                throw Error(ErrorKind::domain, "sub-channel index " + std::to_string(ch.index) + " outside [0, n_total)");
            if (i > 0 && ch.index <= sub_channels_[i - 1].index)
                throw Error(ErrorKind::domain, "sub-channel indices must be unique and increasing");
            if (!(ch.fourier_gain > 0.0) || !std::isfinite(ch.fourier_gain))
                throw Error(ErrorKind::degenerate_channel,
                            "sub-channel " + std::to_string(ch.index) + " has non-positive Fourier gain");
            if (!(ch.noise_variance >= 0.0) || !std::isfinite(ch.noise_variance))
                throw Error(ErrorKind::domain, "sub-channel " + std::to_string(ch.index) + " has negative noise variance");
        }
    }

    std::span<const SubChannel> sub_channels() const noexcept { return sub_channels_; }
    std::size_t size() const noexcept { return sub_channels_.size(); }
    int n_total() const noexcept { return n_total_; }
    const SubChannel& operator[](std::size_t i) const { return sub_channels_.at(i); }

private:
    std::vector<SubChannel> sub_channels_;
    int n_total_;
};

/// Block of complex quadratures z_j = x_j + i p_j.
struct QuadratureBlock {
    ComplexVec quadratures;
    double modulation_variance = 0.0;

    /// Block whose real and imaginary parts are i.i.d. N(0, modulation_variance).
    static QuadratureBlock gaussian(std::size_t length, double modulation_variance, SeedStream& stream) {
        QuadratureBlock block{ComplexVec(length), modulation_variance};
        for (auto& z : block.quadratures) {
            const double x = gaussian_sample(stream, 0.0, modulation_variance);
            const double p = gaussian_sample(stream, 0.0, modulation_variance);
            z = {x, p};
        }
        return block;
    }
};

/// Sends one block of subcarrier quadratures through the ensemble:
/// out_i = sqrt(|F(T_i)|^2) * d_i + Delta_i with Delta_i having i.i.d.
/// N(0, sigma_i^2) real and imaginary parts.
inline QuadratureBlock transmit_block(const QuadratureBlock& input, const ChannelEnsemble& ens, SeedStream& stream) {
    if (input.quadratures.size() != ens.size())
        throw Error(ErrorKind::shape, "block length " + std::to_string(input.quadratures.size()) +
                                          " does not match ensemble size " + std::to_string(ens.size()));
    QuadratureBlock out{ComplexVec(input.quadratures.size()), input.modulation_variance};
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const auto& ch = ens[i];
        const double amplitude = std::sqrt(ch.fourier_gain);
        const double nx = gaussian_sample(stream, 0.0, ch.noise_variance);
        const double np = gaussian_sample(stream, 0.0, ch.noise_variance);
        out.quadratures[i] = amplitude * input.quadratures[i] + Complex{nx, np};
    }
    return out;
}

/// Full multicarrier chain: inverse DFT at the sender, per-sub-channel
/// transmission, forward DFT at the receiver.
inline QuadratureBlock transmit_multicarrier(const QuadratureBlock& single_carriers, const ChannelEnsemble& ens,
                                             SeedStream& stream) {
    QuadratureBlock subcarriers{idft(single_carriers.quadratures), single_carriers.modulation_variance};
    QuadratureBlock received = transmit_block(subcarriers, ens, stream);
    return {dft(received.quadratures), single_carriers.modulation_variance};
}

/// Result of an antipodal-signalling Monte Carlo run.
struct BerEstimate {
    std::uint64_t trials = 0;
    std::uint64_t errors = 0;
    double ber() const { return static_cast<double>(errors) / static_cast<double>(trials); }
};

namespace detail {

inline constexpr std::uint64_t mc_chunk_size = 1 << 16;

// Amplitude sqrt(snr) against noise of variance 1/2, so that the error
// probability is Q(sqrt(2 snr)) = erfc(sqrt(snr)) / 2.
inline std::uint64_t mc_chunk_errors(double amplitude, Seed seed, std::uint64_t chunk, std::uint64_t count) {
    SeedStream stream = SeedStream::derive(seed, chunk);
    std::uint64_t errors = 0;
    for (std::uint64_t t = 0; t < count; ++t) {
        const bool bit = (stream.next_u64() >> 63) != 0;
        const double symbol = bit ? amplitude : -amplitude;
        const double received = symbol + gaussian_sample(stream, 0.0, 0.5);
        const bool decided = received > 0.0;
        errors += decided != bit ? 1 : 0;
    }
    return errors;
}

} // namespace detail

/// Empirical BER of equiprobable antipodal bits over AWGN at the given SNR
/// (dB), hard sign decision. Expected value erfc(sqrt(snr_linear)) / 2.
///
/// Trials are split into fixed-size chunks with derived seed streams, so the
/// result does not depend on `threads`.
inline BerEstimate monte_carlo_ber_estimate(double snr_db, std::uint64_t trials, Seed seed, unsigned threads = 0) {
    if (trials == 0) throw Error(ErrorKind::domain, "Monte Carlo needs at least one trial");
    if (std::isnan(snr_db) || snr_db == std::numeric_limits<double>::infinity())
        throw Error(ErrorKind::domain, "SNR must be a number below +inf");
    const double amplitude = std::sqrt(std::pow(10.0, snr_db / 10.0));
    const std::uint64_t chunks = (trials + detail::mc_chunk_size - 1) / detail::mc_chunk_size;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, chunks));

    std::vector<std::uint64_t> chunk_errors(chunks, 0);
    auto worker = [&](unsigned w) {
        for (std::uint64_t c = w; c < chunks; c += threads) {
            const std::uint64_t begin = c * detail::mc_chunk_size;
            const std::uint64_t count = std::min(detail::mc_chunk_size, trials - begin);
            chunk_errors[c] = detail::mc_chunk_errors(amplitude, seed, c, count);
        }
    };
    if (threads <= 1) {
        worker(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    }
    BerEstimate est{trials, 0};
    for (auto e : chunk_errors) est.errors += e;
    return est;
}

inline double monte_carlo_ber(double snr_db, std::uint64_t trials, Seed seed) {
    return monte_carlo_ber_estimate(snr_db, trials, seed).ber();
}

} // namespace keyadapt
