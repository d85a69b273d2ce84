#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "keyadapt/multiuser.hpp"
#include "oracles.hpp"

using namespace keyadapt;

namespace {

BerPoint point(double ber) {
    BerPoint p;
    p.ber = ber;
    return p;
}

} // namespace

TEST(XiUser, MinimumFiniteEntry) {
    EXPECT_EQ(xi_user(std::vector{0.6, 0.5, 0.9}), 0.5);
    EXPECT_EQ(xi_user(std::vector{infinite_delta, 0.7}), 0.7);
    EXPECT_THROW(xi_user(std::vector{infinite_delta}), Error);
    EXPECT_THROW(xi_user(std::vector{0.1, std::nan("")}), Error);
}

TEST(VarianceCorrection, SubtractsXi) {
    const auto vc = variance_correction(std::vector{0.6, 0.5, 0.9}, 64.0);
    EXPECT_EQ(vc.xi, 0.5);
    const double corr[] = {0.1, 0.0, 0.4};
    const double var[] = {64.1, 64.0, 64.4};
    ASSERT_EQ(vc.channels.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(vc.channels[i].correction, corr[i], 1e-15);
        EXPECT_NEAR(vc.channels[i].corrected_variance, var[i], 1e-13);
    }
    EXPECT_NEAR(vc.max_correction(), 0.4, 1e-15);
}

TEST(VarianceCorrection, EqualDeltasNeedNoCorrection) {
    const auto vc = variance_correction(std::vector{0.3, 0.3, 0.3}, 64.0);
    for (const auto& c : vc.channels) {
        EXPECT_EQ(c.correction, 0.0);
        EXPECT_EQ(c.corrected_variance, 64.0);
    }
}

TEST(VarianceCorrection, RejectsBadInput) {
    EXPECT_THROW(variance_correction(std::vector{0.3, infinite_delta}, 64.0), Error);
    EXPECT_THROW(variance_correction(std::vector{0.3}, 0.0), Error);
    EXPECT_THROW(variance_correction(std::vector<double>{}, 64.0), Error);
}

TEST(SnrIncrement, Examples) {
    EXPECT_EQ(snr_increment(1.0, 0.0), 0.0);
    EXPECT_NEAR(snr_increment(0.1, 1.0), 9.0, 1e-12);
    EXPECT_THROW(snr_increment(0.0, 1.0), Error);
}

// nu0 = 0.5, beta = 0.3, ladder 0.5 / {1.0, 1.5} / 2.0, xi = delta(min),
// F taken at R0 (mpmath reference).
TEST(SnrIncrement, ScriptedOracle) {
    const RateLadder ladder(0.5, {1.0, 1.5}, 2.0);
    const NuProfile p = default_profile(0.5, 0.3, ladder);
    const double xi = delta_at(p, RateIndex::at_min());
    EXPECT_NEAR(snr_increment(p, RateIndex::at_min(), xi), 0.9826897459727469, 1e-12);
}

TEST(EqualizedBer, EveryChannelGetsMinimum) {
    const std::vector<BerPoint> before{point(0.08), point(0.05), point(0.12)};
    const auto vc = variance_correction(std::vector{0.6, 0.5, 0.9}, 64.0);
    const auto eq = equalized_ber(before, vc);
    EXPECT_EQ(eq.anchor, 1u);
    for (const auto& p : eq.after) {
        EXPECT_EQ(p.ber, 0.05);
        EXPECT_EQ(p.delta, 0.5);
    }
    EXPECT_THROW(equalized_ber(std::vector{point(0.1)}, vc), Error);
}

TEST(LogicalChannel, Validation) {
    const SubChannel a{0, Transmittance(0.5, 0.5), 0.2, 0.5};
    const SubChannel b{3, Transmittance(0.5, 0.5), 0.2, 0.5};
    EXPECT_NO_THROW(LogicalChannel(0, {a, b}, 1.0));
    EXPECT_THROW(LogicalChannel(0, {b, a}, 1.0), Error);
    EXPECT_THROW(LogicalChannel(0, {}, 1.0), Error);
    EXPECT_THROW(LogicalChannel(-1, {a}, 1.0), Error);
}

// One user holding every sub-channel reproduces the single-set adaptation.
TEST(AdaptUser, SingleUserReducesToPlainAdaptation) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = oracle::random_instance(rng, 6, 3);
        const double target = inst.target * 0.9;
        const LogicalChannel lc(0, inst.channels, target);
        const auto user = adapt_user(lc, inst.ladder, inst.profiles);
        const auto plain = run_adaption(inst.channels, inst.ladder, inst.profiles, target);
        ASSERT_EQ(user.trace.size(), plain.trace.size());
        for (std::size_t k = 0; k < plain.trace.size(); ++k) {
            EXPECT_EQ(user.trace[k].channel, plain.trace[k].channel);
            EXPECT_EQ(user.trace[k].reached, plain.trace[k].reached);
        }
        EXPECT_EQ(user.total_rate, plain.total_rate);
    }
}

// A user's adaptation depends only on its own sub-channels.
TEST(AdaptUser, DisjointUsersAreIndependent) {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = oracle::random_instance(rng, 6, 3);
        if (inst.channels.size() < 2) continue;
        const std::size_t split = inst.channels.size() / 2;
        std::vector<SubChannel> first(inst.channels.begin(), inst.channels.begin() + split);
        std::vector<NuProfile> first_p(inst.profiles.begin(), inst.profiles.begin() + split);
        const double target = 0.5 * split * inst.ladder.r_max();

        const auto alone = adapt_user(LogicalChannel(0, first, target), inst.ladder, first_p);
        // The other user's presence and target do not enter.
        std::vector<SubChannel> second(inst.channels.begin() + split, inst.channels.end());
        std::vector<NuProfile> second_p(inst.profiles.begin() + split, inst.profiles.end());
        (void)adapt_user(LogicalChannel(1, second, 0.0), inst.ladder, second_p);
        const auto again = adapt_user(LogicalChannel(0, first, target), inst.ladder, first_p);
        ASSERT_EQ(alone.trace.size(), again.trace.size());
        for (std::size_t k = 0; k < alone.trace.size(); ++k) {
            EXPECT_EQ(alone.trace[k].channel, again.trace[k].channel);
            EXPECT_EQ(alone.trace[k].delta_at_selection, again.trace[k].delta_at_selection);
        }
    }
}

// After correction every eligible channel sits at xi and at the set's minimum BER.
TEST(EqualizeUser, CorrectedDeltasEqualXi) {
    std::mt19937_64 rng(33);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto inst = oracle::random_instance(rng, 6, 3);
        const auto alloc = run_adaption(inst.channels, inst.ladder, inst.profiles, inst.target * 0.6);
        UserEqualization ue;
        try {
            ue = equalize_user(alloc, inst.profiles, 64.0);
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::no_eligible_channel);
            continue;
        }
        ++checked;
        double min_ber = 1.0;
        for (const auto& p : ue.equalization.before) min_ber = std::min(min_ber, p.ber);
        for (std::size_t k = 0; k < ue.positions.size(); ++k) {
            const auto& c = ue.correction.channels[k];
            EXPECT_GE(c.correction, 0.0);
            EXPECT_NEAR(c.delta - c.correction, ue.correction.xi, 1e-12);
            EXPECT_EQ(ue.equalization.after[k].ber, min_ber);
        }
        EXPECT_EQ(ue.positions.size() + ue.excluded.size(), alloc.states.size());
        for (auto pos : ue.excluded) EXPECT_TRUE(alloc.states[pos].exhausted());
    }
    EXPECT_GT(checked, 50);
}
