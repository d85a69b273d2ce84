#pragma once

// Per-user logical channels and modulation-variance equalization.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "keyadapt/adapt_core.hpp"
#include "keyadapt/channel_model.hpp"
#include "keyadapt/error.hpp"
#include "keyadapt/rate_ladder.hpp"

namespace keyadapt {

/// The m sub-channels assigned to one user, with that user's target rate.
class LogicalChannel {
public:
    LogicalChannel(int user_id, std::vector<SubChannel> sub_channels, double target)
        : user_id_(user_id), sub_channels_(std::move(sub_channels)), target_(target) {
        if (user_id_ < 0) throw Error(ErrorKind::domain, "user id must be non-negative");
        if (sub_channels_.empty()) throw Error(ErrorKind::domain, "logical channel needs at least one sub-channel");
        for (std::size_t i = 1; i < sub_channels_.size(); ++i) {
            if (sub_channels_[i].index <= sub_channels_[i - 1].index)
                throw Error(ErrorKind::domain, "logical channel sub-channel indices must be unique and increasing");
        }
    }

    int user_id() const noexcept { return user_id_; }
    std::span<const SubChannel> sub_channels() const noexcept { return sub_channels_; }
    std::size_t m() const noexcept { return sub_channels_.size(); }
    double target() const noexcept { return target_; }

private:
    int user_id_;
    std::vector<SubChannel> sub_channels_;
    double target_;
};

/// Runs the greedy adaptation over one user's sub-channels.
inline Allocation adapt_user(const LogicalChannel& lc, const RateLadder& ladder, std::span<const NuProfile> profiles) {
    return run_adaption(lc.sub_channels(), ladder, profiles, lc.target());
}

/// Minimum finite delta of a user's set; +inf entries are skipped.
inline double xi_user(std::span<const double> deltas) {
    double xi = infinite_delta;
    for (double d : deltas) {
        if (std::isnan(d)) throw Error(ErrorKind::domain, "delta set contains NaN");
        if (d < xi) xi = d;
    }
    if (xi == infinite_delta) throw Error(ErrorKind::no_eligible_channel, "delta set has no finite entry");
    return xi;
}

/// Per-channel result of the variance correction.
struct ChannelCorrection {
    double delta = 0.0;
    double correction = 0.0;          // delta - xi, added to the modulation variance
    double corrected_variance = 0.0;  // sigma_omega^2 + correction
    double phi = 0.0;                 // residual delta - xi removed by the correction
};

struct VarianceCorrection {
    double xi = 0.0;
    double sigma_omega_sq = 0.0;
    std::vector<ChannelCorrection> channels;

    double max_correction() const {
        double m = 0.0;
        for (const auto& c : channels) m = std::max(m, c.correction);
        return m;
    }
};

/// Corrections that equalize every channel's delta to the set minimum xi.
inline VarianceCorrection variance_correction(std::span<const double> deltas, double sigma_omega_sq) {
    if (!(sigma_omega_sq > 0.0) || !std::isfinite(sigma_omega_sq))
        throw Error(ErrorKind::domain, "modulation variance must be positive");
    if (deltas.empty()) throw Error(ErrorKind::domain, "empty delta set");
    for (double d : deltas) {
        if (!std::isfinite(d)) throw Error(ErrorKind::domain, "variance correction needs finite deltas");
    }
    VarianceCorrection vc;
    vc.xi = xi_user(deltas);
    vc.sigma_omega_sq = sigma_omega_sq;
    for (double d : deltas) {
        const double corr = d - vc.xi;
        vc.channels.push_back({d, corr, sigma_omega_sq + corr, corr});
    }
    return vc;
}

/// Delta_SNR = 10 log10(1/xi) - F.
inline double snr_increment(double xi, double f_value) {
    if (!(xi > 0.0) || !std::isfinite(xi)) throw Error(ErrorKind::domain, "xi must be positive and finite");
    return 10.0 * std::log10(1.0 / xi) - f_value;
}

/// Delta_SNR with F evaluated one ladder position above `up_to`.
inline double snr_increment(const NuProfile& profile, RateIndex up_to, double xi) {
    return snr_increment(xi, f_function(profile, up_to.next(profile.r())).value);
}

/// Equalized BER after the variance correction.
///
/// With every channel's delta moved to xi, each channel attains the
/// minimum BER of the uncorrected set.
struct Equalization {
    std::vector<BerPoint> before;
    std::vector<BerPoint> after;
    std::size_t anchor = 0;  // position of the minimum-BER channel
};

inline Equalization equalized_ber(std::span<const BerPoint> before, const VarianceCorrection& vc) {
    if (before.empty()) throw Error(ErrorKind::domain, "no BER points to equalize");
    if (before.size() != vc.channels.size())
        throw Error(ErrorKind::shape, "BER points and corrections differ in length");
    Equalization eq;
    eq.before.assign(before.begin(), before.end());
    for (std::size_t i = 1; i < before.size(); ++i) {
        if (before[i].ber < before[eq.anchor].ber) eq.anchor = i;
    }
    const BerPoint& best = before[eq.anchor];
    for (const auto& p : before) {
        BerPoint post = best;
        post.rate_index = p.rate_index;
        post.delta = vc.xi;
        eq.after.push_back(post);
    }
    return eq;
}

/// Pre-correction BER point of every channel at its current rate index.
/// Channels still at zero rate are evaluated at R_min.
inline std::vector<BerPoint> current_ber_points(const Allocation& alloc, std::span<const NuProfile> profiles) {
    std::vector<BerPoint> out;
    for (std::size_t i = 0; i < alloc.states.size(); ++i) {
        const RateIndex idx = std::max(alloc.states[i].current, RateIndex::at_min());
        BerPoint p = ber_at(profiles[i], idx);
        p.delta = alloc.states[i].delta;
        out.push_back(p);
    }
    return out;
}

/// Full equalization of one adapted user. Channels that reached R_max have
/// delta = +inf and are left out of xi and of the correction.
struct UserEqualization {
    std::vector<std::size_t> positions;  // positions within the user's channel list
    VarianceCorrection correction;
    Equalization equalization;
    std::vector<double> snr_increments;
    std::vector<std::size_t> excluded;
};

inline UserEqualization equalize_user(const Allocation& alloc, std::span<const NuProfile> profiles,
                                      double sigma_omega_sq) {
    UserEqualization ue;
    std::vector<double> deltas;
    for (std::size_t i = 0; i < alloc.states.size(); ++i) {
        if (alloc.states[i].exhausted()) {
            ue.excluded.push_back(i);
            continue;
        }
        ue.positions.push_back(i);
        deltas.push_back(alloc.states[i].delta);
    }
    if (deltas.empty()) throw Error(ErrorKind::no_eligible_channel, "every sub-channel of the user is at R_max");
    ue.correction = variance_correction(deltas, sigma_omega_sq);

    const auto all_points = current_ber_points(alloc, profiles);
    std::vector<BerPoint> points;
    for (auto pos : ue.positions) points.push_back(all_points[pos]);
    ue.equalization = equalized_ber(points, ue.correction);
    for (auto pos : ue.positions)
        ue.snr_increments.push_back(snr_increment(profiles[pos], alloc.states[pos].current, ue.correction.xi));
    return ue;
}

} // namespace keyadapt
