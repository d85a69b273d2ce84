#pragma once

// Iterative secret-key-rate adaptation: cumulative delta iteration over the
// rate ladder, minimum-delta sub-channel selection, and the analytic BER.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "keyadapt/channel_model.hpp"
#include "keyadapt/error.hpp"
#include "keyadapt/numerics.hpp"
#include "keyadapt/rate_ladder.hpp"

namespace keyadapt {

inline constexpr double infinite_delta = std::numeric_limits<double>::infinity();

/// Cumulative delta of one sub-channel and the rate index it has reached.
struct DeltaState {
    RateIndex current = RateIndex::at_zero();
    double delta = 0.0;
    std::vector<std::pair<RateIndex, double>> history;

    /// Zero-rate state: delta equals the profile's base nu.
    static DeltaState initial(const NuProfile& profile) {
        const double base = nu_at(profile, RateIndex::at_zero());
        return {RateIndex::at_zero(), base, {{RateIndex::at_zero(), base}}};
    }

    bool exhausted() const noexcept { return current.kind() == RateIndex::Kind::max; }
};

/// nu(at) - nu(next) for at < next.
inline double delta_diff(const NuProfile& profile, RateIndex at, RateIndex next) {
    if (!(at < next)) throw Error(ErrorKind::ordering, "delta_diff needs " + at.label() + " < " + next.label());
    return nu_at(profile, at) - nu_at(profile, next);
}

/// Advances a sub-channel by one ladder position.
///
/// delta(idx) = delta(previous) + nu(idx) - nu(idx.next), with the base nu as
/// the zero-rate delta and delta(max) = +inf.
inline DeltaState delta_step(const DeltaState& state, const NuProfile& profile) {
    if (state.exhausted()) throw Error(ErrorKind::exhausted_channel, "sub-channel already at R_max");
    const int r = profile.r();
    DeltaState out = state;
    out.current = state.current.next(r);
    out.delta = out.current.kind() == RateIndex::Kind::max
                    ? infinite_delta
                    : state.delta + delta_diff(profile, out.current, out.current.next(r));
    out.history.emplace_back(out.current, out.delta);
    return out;
}

/// Delta reached at `idx` by stepping up from zero rate.
inline double delta_at(const NuProfile& profile, RateIndex idx) {
    DeltaState s = DeltaState::initial(profile);
    while (s.current < idx) s = delta_step(s, profile);
    return s.delta;
}

/// Position of the minimal finite delta; ties go to the lowest position.
inline std::size_t select_channel(std::span<const DeltaState> states) {
    std::size_t best = states.size();
    for (std::size_t i = 0; i < states.size(); ++i) {
        const double d = states[i].delta;
        if (d == infinite_delta) continue;
        if (best == states.size() || d < states[best].delta) best = i;
    }
    if (best == states.size()) throw Error(ErrorKind::no_eligible_channel, "every sub-channel is at R_max");
    return best;
}

/// Argument of erfc in the analytic BER, with its numerator and denominator
/// kept separately.
struct FValue {
    double numerator = 0.0;
    double denominator = 1.0;
    double value = 0.0;
    /// Set when numerator/denominator was negative and the value was clamped to 0.
    bool clamped = false;
};

/// F at rate index `up_to` (>= min):
///   N = SNR(nu_base) - [SNR(nu(R0)) - SNR(nu(min))]
///   D = sum_{k<q} [SNR(nu(R(k+1))) - SNR(nu(R(k)))], R(r) meaning max
///   F = sqrt(max(0, N/D)), with D = 1 for up_to in {min, R0}.
inline FValue f_function(const NuProfile& profile, RateIndex up_to) {
    if (up_to < RateIndex::at_min()) throw Error(ErrorKind::ordering, "F is defined from R_min upward");
    const int r = profile.r();
    auto snr_level = [&](int k) {
        return snr_db(nu_at(profile, k < r ? RateIndex::level(k) : RateIndex::at_max()));
    };
    FValue f;
    f.numerator = snr_db(nu_at(profile, RateIndex::at_zero())) -
                  (snr_level(0) - snr_db(nu_at(profile, RateIndex::at_min())));
    int q = 0;
    if (up_to.kind() == RateIndex::Kind::level) q = up_to.level_number();
    if (up_to.kind() == RateIndex::Kind::max) q = r;
    if (q >= 1) {
        double sum = 0.0;
        for (int k = 0; k < q; ++k) sum += snr_level(k + 1) - snr_level(k);
        if (sum == 0.0) throw Error(ErrorKind::invariant_violation, "zero SNR increment sum on a strict ladder");
        f.denominator = sum;
    }
    const double ratio = f.numerator / f.denominator;
    f.clamped = ratio < 0.0;
    f.value = std::sqrt(f.clamped ? 0.0 : ratio);
    return f;
}

/// Analytic BER at one ladder position.
struct BerPoint {
    RateIndex rate_index = RateIndex::at_min();
    double delta = 0.0;
    double snr_argument = 0.0;
    double ber = 0.5;
    double numerator = 0.0;
    double denominator = 1.0;
    bool clamped = false;
};

/// BER = erfc(F(up_to)) / 2.
inline BerPoint ber_at(const NuProfile& profile, RateIndex up_to) {
    const FValue f = f_function(profile, up_to);
    return {up_to, delta_at(profile, up_to), f.value, 0.5 * erfc(f.value), f.numerator, f.denominator, f.clamped};
}

struct TraceStep {
    int step = 0;
    std::size_t position = 0;  // position within the adapted channel list
    int channel = 0;           // sub-channel index
    RateIndex reached = RateIndex::at_zero();
    double delta_at_selection = 0.0;
    BerPoint ber;
};

struct Allocation {
    std::vector<int> channels;
    std::vector<double> rates;
    std::vector<DeltaState> states;
    double total_rate = 0.0;
    double target = 0.0;
    std::vector<TraceStep> trace;

    bool satisfied() const { return total_rate >= target; }
};

/// Target above the sum of R_max over the channels.
class InfeasibleTarget : public Error {
public:
    InfeasibleTarget(double target, double max_achievable, Allocation exhausted)
        : Error(ErrorKind::infeasible, "target " + std::to_string(target) + " exceeds maximum achievable rate " +
                                           std::to_string(max_achievable)),
          target_(target), max_achievable_(max_achievable), allocation_(std::move(exhausted)) {}

    double target() const noexcept { return target_; }
    double max_achievable() const noexcept { return max_achievable_; }
    const Allocation& allocation() const noexcept { return allocation_; }

private:
    double target_;
    double max_achievable_;
    Allocation allocation_;
};

namespace detail {

inline double sum_in_order(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

inline void check_profiles(std::span<const SubChannel> channels, const RateLadder& ladder,
                           std::span<const NuProfile> profiles) {
    if (channels.empty()) throw Error(ErrorKind::domain, "no sub-channels to adapt");
    if (channels.size() != profiles.size())
        throw Error(ErrorKind::profile_incomplete, "need one nu profile per sub-channel");
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (profiles[i].r() != ladder.r())
            throw Error(ErrorKind::profile_incomplete,
                        "profile of sub-channel " + std::to_string(channels[i].index) + " has the wrong level count");
        const double base = nu(channels[i]);
        const double from_profile = nu_at(profiles[i], RateIndex::at_zero());
        if (std::abs(base - from_profile) > 1e-12 * base)
            throw Error(ErrorKind::invariant_violation,
                        "zero-rate nu of sub-channel " + std::to_string(channels[i].index) +
                            " does not match its noise-to-gain ratio");
    }
}

} // namespace detail

/// Greedy adaptation: repeatedly steps the minimum-delta sub-channel up one
/// ladder position until the summed rate reaches `target`.
///
/// Throws InfeasibleTarget when every channel is at R_max and the target is
/// still not met.
inline Allocation run_adaption(std::span<const SubChannel> channels, const RateLadder& ladder,
                               std::span<const NuProfile> profiles, double target) {
    if (!(target >= 0.0) || !std::isfinite(target)) throw Error(ErrorKind::domain, "target must be finite and >= 0");
    detail::check_profiles(channels, ladder, profiles);

    Allocation alloc;
    alloc.target = target;
    alloc.rates.assign(channels.size(), 0.0);
    for (std::size_t i = 0; i < channels.size(); ++i) {
        alloc.channels.push_back(channels[i].index);
        alloc.states.push_back(DeltaState::initial(profiles[i]));
    }

    int step = 0;
    while (alloc.total_rate < target) {
        std::size_t pos = 0;
        try {
            pos = select_channel(alloc.states);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::no_eligible_channel) throw;
            std::vector<double> maxima(channels.size(), ladder.r_max());
            throw InfeasibleTarget(target, detail::sum_in_order(maxima), std::move(alloc));
        }
        const double selected_delta = alloc.states[pos].delta;
        alloc.states[pos] = delta_step(alloc.states[pos], profiles[pos]);
        const RateIndex reached = alloc.states[pos].current;
        alloc.rates[pos] = ladder.rate_at(reached);
        alloc.total_rate = detail::sum_in_order(alloc.rates);
        alloc.trace.push_back({step++, pos, channels[pos].index, reached, selected_delta, ber_at(profiles[pos], reached)});
    }
    return alloc;
}

inline Allocation run_adaption(const ChannelEnsemble& ens, const RateLadder& ladder,
                               std::span<const NuProfile> profiles, double target) {
    return run_adaption(ens.sub_channels(), ladder, profiles, target);
}

} // namespace keyadapt
