#pragma once

// Test-only reference implementations. Nothing here calls into the code
// paths it is used to check.

#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include <mpfr.h>

#include "keyadapt/adapt_core.hpp"
#include "keyadapt/channel_model.hpp"
#include "keyadapt/rate_ladder.hpp"

namespace oracle {

/// erfc(x) from the Maclaurin series of erf evaluated in 320-bit MPFR.
inline double erfc_series(double x) {
    constexpr mpfr_prec_t prec = 320;
    mpfr_t xv, x2, term, sum, tmp, pi;
    mpfr_inits2(prec, xv, x2, term, sum, tmp, pi, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_d(xv, x, MPFR_RNDN);
    mpfr_mul(x2, xv, xv, MPFR_RNDN);
    mpfr_set(term, xv, MPFR_RNDN);  // (-1)^n x^(2n+1) / n!
    mpfr_set(sum, xv, MPFR_RNDN);
    for (long n = 1; n < 2000; ++n) {
        mpfr_mul(term, term, x2, MPFR_RNDN);
        mpfr_div_si(term, term, -n, MPFR_RNDN);
        mpfr_div_si(tmp, term, 2 * n + 1, MPFR_RNDN);
        mpfr_add(sum, sum, tmp, MPFR_RNDN);
        if (!mpfr_zero_p(tmp) && mpfr_get_exp(tmp) < mpfr_get_exp(sum) - 300) break;
        if (mpfr_zero_p(tmp)) break;
    }
    mpfr_const_pi(pi, MPFR_RNDN);
    mpfr_sqrt(pi, pi, MPFR_RNDN);
    mpfr_mul_ui(sum, sum, 2, MPFR_RNDN);
    mpfr_div(sum, sum, pi, MPFR_RNDN);  // erf(x)
    mpfr_ui_sub(sum, 1, sum, MPFR_RNDN);
    const double out = mpfr_get_d(sum, MPFR_RNDN);
    mpfr_clears(xv, x2, term, sum, tmp, pi, static_cast<mpfr_ptr>(nullptr));
    return out;
}

/// Delta table for one channel, written out from the recurrence term by term:
/// delta(zero) = nu0, delta(k) = delta(k - 1) + (nu(k) - nu(k + 1)), delta(max) = inf.
/// nus = [nu_zero, nu_min, nu_R0, ..., nu_R(r-1), nu_max].
inline std::vector<double> delta_table(const std::vector<double>& nus) {
    std::vector<double> table(nus.size());
    table[0] = nus[0];
    for (std::size_t k = 1; k + 1 < nus.size(); ++k) table[k] = table[k - 1] + (nus[k] - nus[k + 1]);
    table.back() = std::numeric_limits<double>::infinity();
    return table;
}

/// Same table from the unrolled sums, nu0 + sum_{j<=k} (nu(j) - nu(j + 1)),
/// accumulated in a different order. Agrees with delta_table to rounding.
inline std::vector<double> delta_closed_form(const std::vector<double>& nus) {
    std::vector<double> table(nus.size());
    table[0] = nus[0];
    for (std::size_t k = 1; k + 1 < nus.size(); ++k) {
        double sum = 0.0;
        for (std::size_t j = 1; j <= k; ++j) sum += nus[j] - nus[j + 1];
        table[k] = nus[0] + sum;
    }
    table.back() = std::numeric_limits<double>::infinity();
    return table;
}

struct ReplayStep {
    std::size_t channel;
    std::size_t position_reached;
    double delta_at_selection;
};

struct Replay {
    std::vector<ReplayStep> steps;
    bool feasible = true;
    double total = 0.0;
};

/// Literal step-by-step simulation: scan all channels for the strictly
/// smallest finite delta, move it one position, stop once the rate sum
/// reaches the target.
inline Replay replay(const std::vector<std::vector<double>>& nus, const std::vector<double>& rates, double target) {
    std::vector<std::vector<double>> tables;
    for (const auto& n : nus) tables.push_back(delta_table(n));
    std::vector<std::size_t> pos(nus.size(), 0);
    Replay out;
    auto total = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < pos.size(); ++i) s += rates[pos[i]];
        return s;
    };
    while (total() < target) {
        std::size_t best = nus.size();
        for (std::size_t i = 0; i < nus.size(); ++i) {
            const double d = tables[i][pos[i]];
            if (std::isinf(d)) continue;
            if (best == nus.size() || d < tables[best][pos[best]]) best = i;
        }
        if (best == nus.size()) {
            out.feasible = false;
            break;
        }
        out.steps.push_back({best, pos[best] + 1, tables[best][pos[best]]});
        ++pos[best];
    }
    out.total = total();
    return out;
}

/// A random adaptation instance with table profiles.
struct Instance {
    std::vector<keyadapt::SubChannel> channels;
    keyadapt::RateLadder ladder{0.5, {1.0}, 1.5};
    std::vector<keyadapt::NuProfile> profiles;
    std::vector<std::vector<double>> nus;  // per channel, ordered zero..max
    std::vector<double> rates;             // ordered zero..max
    double target = 0.0;
};

inline Instance random_instance(std::mt19937_64& rng, int max_channels, int max_levels, bool allow_ties = false) {
    std::uniform_int_distribution<int> l_dist(1, max_channels);
    std::uniform_int_distribution<int> r_dist(1, max_levels);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int l = l_dist(rng);
    const int r = r_dist(rng);

    Instance inst;
    std::vector<double> rates{0.0};
    double rate = unit(rng) * 0.5;
    rates.push_back(rate);
    for (int k = 0; k < r + 1; ++k) {
        rate += 0.1 + unit(rng);
        rates.push_back(rate);
    }
    inst.rates = rates;
    inst.ladder = keyadapt::RateLadder(rates[1], std::vector<double>(rates.begin() + 2, rates.end() - 1), rates.back());

    // Quantized base values make exact delta ties between channels likely.
    std::uniform_int_distribution<int> grid(1, 4);
    for (int i = 0; i < l; ++i) {
        const double gain = allow_ties ? 0.5 : 0.2 + 0.8 * unit(rng);
        const double base = allow_ties ? 0.1 * grid(rng) : 0.05 + unit(rng);
        std::vector<double> nus{base};
        double v = base * (allow_ties ? 1.0 : 1.0 - 0.2 * unit(rng));
        nus.push_back(v);
        for (int k = 0; k < r + 1; ++k) {
            v *= allow_ties ? 0.75 : 0.5 + 0.45 * unit(rng);
            nus.push_back(v);
        }
        std::vector<keyadapt::NuEntry> entries;
        for (double n : nus) entries.push_back({n * gain, gain});
        // Store the nu values that the profile actually reports.
        for (std::size_t k = 0; k < nus.size(); ++k) nus[k] = entries[k].nu();
        keyadapt::SubChannel ch{i * 2 + 1, keyadapt::Transmittance(0.5, 0.5), entries[0].sigma, entries[0].gain};
        inst.channels.push_back(ch);
        inst.profiles.emplace_back(std::move(entries));
        inst.nus.push_back(std::move(nus));
    }
    const double max_total = l * rates.back();
    inst.target = unit(rng) * max_total;
    return inst;
}

} // namespace oracle
