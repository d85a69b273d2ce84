#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "keyadapt/channel_model.hpp"

using namespace keyadapt;

namespace {

SubChannel channel(int index, double noise, double gain) {
    return {index, Transmittance(0.5, 0.5), noise, gain};
}

} // namespace

TEST(Transmittance, EnforcesEqualPartsAndRange) {
    EXPECT_NO_THROW(Transmittance(0.3, 0.3));
    EXPECT_NO_THROW(Transmittance(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)));
    EXPECT_THROW(Transmittance(0.3, 0.4), Error);
    EXPECT_THROW(Transmittance(-0.1, -0.1), Error);
    EXPECT_THROW(Transmittance(0.8, 0.8), Error);
    EXPECT_NEAR(Transmittance(0.5, 0.5).magnitude_sq(), 0.5, 1e-15);
    EXPECT_NEAR(Transmittance::from_magnitude_sq(1.0).magnitude_sq(), 1.0, 1e-15);
}

TEST(Nu, Quotient) {
    EXPECT_DOUBLE_EQ(nu(channel(0, 0.5, 1.0)), 0.5);
    EXPECT_DOUBLE_EQ(nu(channel(0, 0.2, 0.4)), 0.5);
}

TEST(Nu, ZeroGainIsDegenerate) {
    try {
        nu(channel(3, 0.5, 0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::degenerate_channel);
    }
}

TEST(Nu, HomogeneousInNoiseVariance) {
    for (double c : {0.5, 2.0, 4.0, 1024.0}) {
        const auto ch = channel(0, 0.3, 0.7);
        auto scaled = ch;
        scaled.noise_variance *= c;
        EXPECT_EQ(nu(scaled), c * nu(ch));
    }
}

TEST(Ensemble, ValidatesIndices) {
    EXPECT_NO_THROW(ChannelEnsemble({channel(0, 0.1, 0.5), channel(3, 0.1, 0.5)}, 4));
    EXPECT_THROW(ChannelEnsemble({}, 4), Error);
    EXPECT_THROW(ChannelEnsemble({channel(4, 0.1, 0.5)}, 4), Error);
    EXPECT_THROW(ChannelEnsemble({channel(1, 0.1, 0.5), channel(1, 0.1, 0.5)}, 4), Error);
    EXPECT_THROW(ChannelEnsemble({channel(0, 0.1, 0.0)}, 4), Error);
}

TEST(TransmitBlock, NoiselessUnitGainIsIdentity) {
    std::vector<SubChannel> chans;
    for (int i = 0; i < 16; ++i) chans.push_back({i, Transmittance::from_magnitude_sq(1.0), 0.0, 1.0});
    const ChannelEnsemble ens(chans, 16);
    SeedStream s(Seed{11});
    const auto in = QuadratureBlock::gaussian(16, 64.0, s);
    const auto out = transmit_block(in, ens, s);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(std::abs(out.quadratures[i] - in.quadratures[i]), 0.0, 1e-9);

    const auto chained = transmit_multicarrier(in, ens, s);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(std::abs(chained.quadratures[i] - in.quadratures[i]), 0.0, 1e-9);
}

TEST(TransmitBlock, LengthMismatchIsShapeError) {
    const ChannelEnsemble ens({channel(0, 0.1, 1.0)}, 1);
    SeedStream s(Seed{1});
    QuadratureBlock in{ComplexVec(2), 1.0};
    try {
        transmit_block(in, ens, s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::shape);
    }
}

TEST(TransmitBlock, DeterministicForSeed) {
    const ChannelEnsemble ens({channel(0, 0.1, 1.0), channel(1, 0.3, 0.5)}, 2);
    SeedStream a(Seed{5}), b(Seed{5});
    QuadratureBlock in{ComplexVec{{1.0, 2.0}, {3.0, -1.0}}, 1.0};
    const auto x = transmit_block(in, ens, a);
    const auto y = transmit_block(in, ens, b);
    EXPECT_EQ(x.quadratures, y.quadratures);
}

// Zero input: per-bin output variance matches the noise variance.
// Input at sigma_w^2 through gain g: output variance g sigma_w^2 + sigma_N^2.
TEST(TransmitBlock, OutputMomentsMatchVarianceComposition) {
    const std::vector<double> noise{0.1, 0.5, 2.0};
    const std::vector<double> gain{1.0, 0.49, 0.25};
    std::vector<SubChannel> chans;
    for (int i = 0; i < 3; ++i) chans.push_back(channel(i, noise[i], gain[i]));
    const ChannelEnsemble ens(chans, 3);
    constexpr int blocks = 100'000;

    for (double input_var : {0.0, 4.0}) {
        SeedStream s(Seed{77});
        std::vector<double> sum_sq(3, 0.0);
        for (int b = 0; b < blocks; ++b) {
            const auto in = QuadratureBlock::gaussian(3, input_var, s);
            const auto out = transmit_block(in, ens, s);
            for (int i = 0; i < 3; ++i) sum_sq[i] += out.quadratures[i].real() * out.quadratures[i].real();
        }
        for (int i = 0; i < 3; ++i) {
            const double expected = gain[i] * input_var + noise[i];
            const double stderr_var = expected * std::sqrt(2.0 / blocks);
            EXPECT_NEAR(sum_sq[i] / blocks, expected, 3 * stderr_var) << "bin " << i << " input " << input_var;
        }
    }
}

TEST(MonteCarloBer, PureNoiseIsHalf) {
    const double ber = monte_carlo_ber(-INFINITY, 1'000'000, Seed{1});
    EXPECT_NEAR(ber, 0.5, 3 * std::sqrt(0.25 / 1e6));
}

TEST(MonteCarloBer, MatchesAnalyticAtZeroAndTenDb) {
    // erfc(1)/2 = 0.07864960352514257, erfc(sqrt(10))/2 = 3.872108215522042e-06
    const struct {
        double snr_db, expected;
    } cases[] = {{0.0, 0.07864960352514257}, {10.0, 3.872108215522042e-06}};
    for (const auto& c : cases) {
        const double ber = monte_carlo_ber(c.snr_db, 1'000'000, Seed{2024});
        EXPECT_NEAR(ber, c.expected, 3 * std::sqrt(c.expected * (1 - c.expected) / 1e6)) << c.snr_db;
    }
}

TEST(MonteCarloBer, IndependentOfThreadCount) {
    const auto one = monte_carlo_ber_estimate(2.0, 300'000, Seed{8}, 1);
    const auto four = monte_carlo_ber_estimate(2.0, 300'000, Seed{8}, 4);
    EXPECT_EQ(one.errors, four.errors);
}

TEST(MonteCarloBer, NonIncreasingInSnr) {
    double prev = 1.0;
    for (double snr : {-5.0, 0.0, 3.0, 6.0, 9.0}) {
        const double ber = monte_carlo_ber(snr, 1'000'000, Seed{99});
        const double slack = 3 * std::sqrt(std::max(ber, 1e-7) * (1 - ber) / 1e6);
        EXPECT_LE(ber, prev + slack) << snr;
        prev = ber;
    }
}

TEST(MonteCarloBer, ZeroTrialsRejected) { EXPECT_THROW(monte_carlo_ber(0.0, 0, Seed{1}), Error); }
