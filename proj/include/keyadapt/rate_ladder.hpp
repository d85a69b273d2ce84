#pragma once

#include <cmath>
#include <compare>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "keyadapt/channel_model.hpp"
#include "keyadapt/error.hpp"

namespace keyadapt {

/// Position on the rate ladder, including the zero-rate and boundary curves.
///
/// Total order: zero < min < level(0) < ... < level(r-1) < max.
class RateIndex {
public:
    enum class Kind { zero = 0, min = 1, level = 2, max = 3 };

    static constexpr RateIndex at_zero() { return RateIndex(Kind::zero, 0); }
    static constexpr RateIndex at_min() { return RateIndex(Kind::min, 0); }
    static constexpr RateIndex level(int q) { return RateIndex(Kind::level, q); }
    static constexpr RateIndex at_max() { return RateIndex(Kind::max, 0); }

    constexpr Kind kind() const noexcept { return kind_; }
    /// Level number q; only meaningful for Kind::level.
    constexpr int level_number() const noexcept { return level_; }

    /// Offset into an (r + 3)-entry table ordered zero, min, level 0.., max.
    constexpr int position(int r) const noexcept {
        switch (kind_) {
        case Kind::zero: return 0;
        case Kind::min: return 1;
        case Kind::level: return 2 + level_;
        case Kind::max: return r + 2;
        }
        return -1;
    }

    static RateIndex from_position(int position, int r) {
        if (position == 0) return at_zero();
        if (position == 1) return at_min();
        if (position == r + 2) return at_max();
        if (position >= 2 && position < r + 2) return level(position - 2);
        throw Error(ErrorKind::ordering, "rate position " + std::to_string(position) + " outside ladder");
    }

    /// Next index up a ladder with r levels.
    RateIndex next(int r) const {
        switch (kind_) {
        case Kind::zero: return at_min();
        case Kind::min: return level(0);
        case Kind::level: return level_ + 1 < r ? level(level_ + 1) : at_max();
        case Kind::max: break;
        }
        throw Error(ErrorKind::exhausted_channel, "no rate index above R_max");
    }

    std::string label() const {
        switch (kind_) {
        case Kind::zero: return "zero";
        case Kind::min: return "min";
        case Kind::level: return "R" + std::to_string(level_);
        case Kind::max: return "max";
        }
        return "?";
    }

    constexpr auto operator<=>(const RateIndex&) const = default;

private:
    constexpr RateIndex(Kind kind, int level) : kind_(kind), level_(level) {}

    Kind kind_;
    int level_;
};

/// Private-rate curves r_min < R(0) < ... < R(r-1) < r_max in bits per use.
class RateLadder {
public:
    RateLadder(double r_min, std::vector<double> levels, double r_max,
               std::optional<double> capacity = std::nullopt)
        : r_min_(r_min), levels_(std::move(levels)), r_max_(r_max), capacity_(capacity) {
        if (const auto problems = violations(r_min_, levels_, r_max_, capacity_); !problems.empty())
            throw Error(ErrorKind::ordering, problems.front());
    }

    /// Every ordering or range problem of a candidate ladder; empty when valid.
    static std::vector<std::string> violations(double r_min, std::span<const double> levels, double r_max,
                                               std::optional<double> capacity = std::nullopt) {
        std::vector<std::string> out;
        if (levels.empty()) out.emplace_back("ladder ordering: at least one intermediate rate level is required");
        auto check_finite = [&](double v, const std::string& name) {
            if (!std::isfinite(v) || v < 0.0) out.push_back("ladder range: " + name + " must be finite and >= 0");
        };
        check_finite(r_min, "r_min");
        check_finite(r_max, "r_max");
        for (std::size_t q = 0; q < levels.size(); ++q) check_finite(levels[q], "R(" + std::to_string(q) + ")");
        double prev = r_min;
        std::string prev_name = "r_min";
        for (std::size_t q = 0; q <= levels.size(); ++q) {
            const bool top = q == levels.size();
            const double cur = top ? r_max : levels[q];
            const std::string name = top ? "r_max" : "R(" + std::to_string(q) + ")";
            if (!(cur > prev))
                out.push_back("ladder ordering: " + name + " = " + std::to_string(cur) + " must exceed " + prev_name +
                              " = " + std::to_string(prev));
            prev = cur;
            prev_name = name;
        }
        if (capacity && r_max > *capacity)
            out.push_back("ladder capacity: r_max = " + std::to_string(r_max) + " exceeds the private capacity bound " +
                          std::to_string(*capacity));
        return out;
    }

    double r_min() const noexcept { return r_min_; }
    double r_max() const noexcept { return r_max_; }
    std::span<const double> levels() const noexcept { return levels_; }
    int r() const noexcept { return static_cast<int>(levels_.size()); }
    std::optional<double> capacity() const noexcept { return capacity_; }

    double rate_at(RateIndex idx) const {
        switch (idx.kind()) {
        case RateIndex::Kind::zero: return 0.0;
        case RateIndex::Kind::min: return r_min_;
        case RateIndex::Kind::level:
            if (idx.level_number() < 0 || idx.level_number() >= r())
                throw Error(ErrorKind::ordering, "level " + std::to_string(idx.level_number()) + " not on ladder");
            return levels_[idx.level_number()];
        case RateIndex::Kind::max: return r_max_;
        }
        return 0.0;
    }

    /// Every index from zero to max inclusive.
    std::vector<RateIndex> indices() const {
        std::vector<RateIndex> out;
        for (int p = 0; p <= r() + 2; ++p) out.push_back(RateIndex::from_position(p, r()));
        return out;
    }

private:
    double r_min_;
    std::vector<double> levels_;
    double r_max_;
    std::optional<double> capacity_;
};

/// Noise variance and Fourier gain of a sub-channel operated at one rate.
struct NuEntry {
    double sigma = 1.0;
    double gain = 1.0;
    double nu() const { return sigma / gain; }
};

/// Per-rate nu values of one sub-channel, ordered zero, min, R(0).., max.
///
/// nu is non-increasing from zero to min and strictly decreasing from min
/// upward; entry 0 is the sub-channel's own (sigma^2, |F(T)|^2).
class NuProfile {
public:
    explicit NuProfile(std::vector<NuEntry> entries) : entries_(std::move(entries)) {
        if (entries_.size() < 4)
            throw Error(ErrorKind::profile_incomplete, "profile needs zero, min, at least one level and max entries");
        if (const auto problems = violations(entries_); !problems.empty())
            throw Error(ErrorKind::ordering, problems.front());
    }

    static std::vector<std::string> violations(std::span<const NuEntry> entries) {
        std::vector<std::string> out;
        for (std::size_t p = 0; p < entries.size(); ++p) {
            const auto& e = entries[p];
            if (!(e.sigma > 0.0) || !(e.gain > 0.0) || !std::isfinite(e.sigma) || !std::isfinite(e.gain) ||
                !std::isfinite(e.nu()))
                out.push_back("nu profile: entry " + std::to_string(p) + " needs positive finite sigma and gain");
        }
        if (!out.empty()) return out;
        for (std::size_t p = 1; p < entries.size(); ++p) {
            const double prev = entries[p - 1].nu();
            const double cur = entries[p].nu();
            const bool ok = p == 1 ? cur <= prev : cur < prev;
            if (!ok)
                out.push_back("nu monotonicity: nu at position " + std::to_string(p) + " = " + std::to_string(cur) +
                              (p == 1 ? " exceeds" : " does not drop below") + " the previous value " +
                              std::to_string(prev));
        }
        return out;
    }

    /// Number of intermediate levels r.
    int r() const noexcept { return static_cast<int>(entries_.size()) - 3; }
    std::span<const NuEntry> entries() const noexcept { return entries_; }

    const NuEntry& entry(RateIndex idx) const {
        const int p = idx.position(r());
        if (idx.kind() == RateIndex::Kind::level && (idx.level_number() < 0 || idx.level_number() >= r()))
            throw Error(ErrorKind::profile_incomplete, "profile has no entry for level " + idx.label());
        return entries_[static_cast<std::size_t>(p)];
    }

private:
    std::vector<NuEntry> entries_;
};

/// nu = sigma_R^2 / |F(T(R))|^2 at one rate index.
inline double nu_at(const NuProfile& profile, RateIndex idx) { return profile.entry(idx).nu(); }

/// SNR in dB of a nu coefficient: 10 log10(1/nu).
inline double snr_db(double nu_value) {
    if (!(nu_value > 0.0) || !std::isfinite(nu_value)) throw Error(ErrorKind::domain, "SNR needs finite nu > 0");
    return 10.0 * std::log10(1.0 / nu_value);
}

/// Inverse of snr_db.
inline double nu_from_snr_db(double snr) { return std::pow(10.0, -snr / 10.0); }

/// Exponential profile nu(R) = base_nu * exp(-beta R) over every ladder index,
/// stored with unit gain.
inline NuProfile default_profile(double base_nu, double beta, const RateLadder& ladder) {
    if (!(base_nu > 0.0) || !std::isfinite(base_nu)) throw Error(ErrorKind::domain, "base nu must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw Error(ErrorKind::ordering, "beta must be positive for nu to decrease with rate");
    std::vector<NuEntry> entries;
    for (const auto idx : ladder.indices()) entries.push_back({base_nu * std::exp(-beta * ladder.rate_at(idx)), 1.0});
    return NuProfile(std::move(entries));
}

/// Exponential profile anchored at a sub-channel: sigma scales with
/// exp(-beta R) while the gain stays at the sub-channel's |F(T)|^2, so the
/// zero-rate entry reproduces nu(ch) exactly.
inline NuProfile default_profile(const SubChannel& ch, double beta, const RateLadder& ladder) {
    nu(ch);
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw Error(ErrorKind::ordering, "beta must be positive for nu to decrease with rate");
    std::vector<NuEntry> entries;
    for (const auto idx : ladder.indices())
        entries.push_back({ch.noise_variance * std::exp(-beta * ladder.rate_at(idx)), ch.fourier_gain});
    return NuProfile(std::move(entries));
}

} // namespace keyadapt
