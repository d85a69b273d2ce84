#pragma once

// Experiment pipelines: adaptation runs, multiuser equalization, the Monte
// Carlo BER cross-check and the plot-ready figure tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "keyadapt/adapt_core.hpp"
#include "keyadapt/config.hpp"
#include "keyadapt/csv.hpp"
#include "keyadapt/multiuser.hpp"
#include "keyadapt/rate_ladder.hpp"

namespace keyadapt {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_invalid = 2;
inline constexpr int exit_infeasible = 3;
inline constexpr int exit_crosscheck_failed = 4;

struct OutputFile {
    std::string pipeline;
    std::string name;
    CsvTable table;

    std::string file_name() const { return pipeline + "_" + name + ".csv"; }
};

struct PipelineResult {
    std::vector<OutputFile> files;
    int exit_code = exit_ok;
};

namespace detail {

inline CsvTable trace_table(const Allocation& alloc, const RateLadder& ladder) {
    CsvTable t({"step", "channel", "rate_index", "rate", "delta_at_selection", "delta_after", "numerator",
                "denominator", "f_value", "ber", "clamped"});
    for (const auto& s : alloc.trace)
        t.add({s.step, s.channel, s.reached.label(), ladder.rate_at(s.reached), s.delta_at_selection, s.ber.delta,
               s.ber.numerator, s.ber.denominator, s.ber.snr_argument, s.ber.ber, s.ber.clamped});
    return t;
}

inline CsvTable allocation_table(const Allocation& alloc, const RateLadder& ladder) {
    CsvTable t({"channel", "nu_base", "rate_index", "rate", "delta"});
    for (std::size_t i = 0; i < alloc.states.size(); ++i) {
        const auto& st = alloc.states[i];
        t.add({alloc.channels[i], st.history.front().second, st.current.label(), ladder.rate_at(st.current), st.delta});
    }
    return t;
}

inline CsvTable summary_table() { return CsvTable({"user", "m", "target", "total_rate", "max_achievable", "steps", "status"}); }

inline double max_rate(const RateLadder& ladder, std::size_t channels) {
    std::vector<double> maxima(channels, ladder.r_max());
    return sum_in_order(maxima);
}

inline std::vector<double> sweep(double lo, double hi, int points) {
    std::vector<double> out;
    for (int k = 0; k < points; ++k) out.push_back(lo + (hi - lo) * k / (points - 1));
    return out;
}

// BER at every ladder index from min to max for an exponential profile.
inline void add_ber_rows(CsvTable& t, double x, double nu_base, double beta, const RateLadder& ladder) {
    const NuProfile profile = default_profile(nu_base, beta, ladder);
    for (const auto idx : ladder.indices()) {
        if (idx < RateIndex::at_min()) continue;
        const BerPoint p = ber_at(profile, idx);
        t.add({x, nu_base, idx.label(), ladder.rate_at(idx), p.delta, p.numerator, p.denominator, p.snr_argument, p.ber,
               p.clamped});
    }
}

inline double figure_beta(const ExperimentConfig& cfg) {
    if (cfg.figures.beta) return *cfg.figures.beta;
    return cfg.profile.model == "exponential" ? cfg.profile.beta : 0.3;
}

} // namespace detail

/// Greedy adaptation over the whole ensemble toward the configured target.
inline PipelineResult adapt_pipeline(const ExperimentConfig& cfg, const Scenario& sc) {
    PipelineResult res;
    CsvTable summary = detail::summary_table();
    const double max_achievable = detail::max_rate(sc.ladder, sc.ensemble.size());
    try {
        const Allocation alloc = run_adaption(sc.ensemble, sc.ladder, sc.profiles, cfg.target);
        res.files.push_back({"adapt", "trace", detail::trace_table(alloc, sc.ladder)});
        res.files.push_back({"adapt", "allocation", detail::allocation_table(alloc, sc.ladder)});
        summary.add({0, sc.ensemble.size(), cfg.target, alloc.total_rate, max_achievable, alloc.trace.size(), "ok"});
    } catch (const InfeasibleTarget& e) {
        CsvTable inf({"target", "max_achievable"});
        inf.add({e.target(), e.max_achievable()});
        res.files.push_back({"adapt", "infeasible", std::move(inf)});
        summary.add({0, sc.ensemble.size(), cfg.target, e.allocation().total_rate, e.max_achievable(),
                     e.allocation().trace.size(), "infeasible"});
        res.exit_code = exit_infeasible;
    }
    res.files.push_back({"adapt", "summary", std::move(summary)});
    return res;
}

/// Independent per-user adaptation over each logical channel.
inline PipelineResult multiuser_pipeline(const ExperimentConfig& cfg, const Scenario& sc) {
    if (!cfg.multiuser) throw Error(ErrorKind::config, "multiuser pipeline needs a multiuser block");
    PipelineResult res;
    CsvTable summary = detail::summary_table();
    for (std::size_t k = 0; k < sc.users.size(); ++k) {
        const auto& lc = sc.users[k];
        const std::string tag = "user" + std::to_string(lc.user_id());
        const double max_achievable = detail::max_rate(sc.ladder, lc.m());
        try {
            const Allocation alloc = adapt_user(lc, sc.ladder, sc.user_profiles[k]);
            res.files.push_back({"multiuser", tag + "_trace", detail::trace_table(alloc, sc.ladder)});
            res.files.push_back({"multiuser", tag + "_allocation", detail::allocation_table(alloc, sc.ladder)});
            summary.add({lc.user_id(), lc.m(), lc.target(), alloc.total_rate, max_achievable, alloc.trace.size(), "ok"});
        } catch (const InfeasibleTarget& e) {
            summary.add({lc.user_id(), lc.m(), lc.target(), e.allocation().total_rate, e.max_achievable(),
                         e.allocation().trace.size(), "infeasible"});
            res.exit_code = exit_infeasible;
        }
    }
    res.files.push_back({"multiuser", "summary", std::move(summary)});
    return res;
}

namespace detail {

inline CsvTable equalization_table(const LogicalChannel& lc, const UserEqualization& ue) {
    CsvTable t({"channel", "delta", "xi", "correction", "sigma_omega_sq", "corrected_variance", "phi", "ber_before",
                "ber_after", "snr_increment"});
    for (std::size_t j = 0; j < ue.positions.size(); ++j) {
        const auto& c = ue.correction.channels[j];
        t.add({lc.sub_channels()[ue.positions[j]].index, c.delta, ue.correction.xi, c.correction,
               ue.correction.sigma_omega_sq, c.corrected_variance, c.phi, ue.equalization.before[j].ber,
               ue.equalization.after[j].ber, ue.snr_increments[j]});
    }
    return t;
}

} // namespace detail

/// Variance correction and BER equalization for every user.
inline PipelineResult equalize_pipeline(const ExperimentConfig& cfg, const Scenario& sc) {
    if (!cfg.multiuser) throw Error(ErrorKind::config, "equalize pipeline needs a multiuser block");
    PipelineResult res;
    CsvTable summary({"user", "m", "xi", "max_correction", "equalized_ber", "excluded"});
    for (std::size_t k = 0; k < sc.users.size(); ++k) {
        const auto& lc = sc.users[k];
        try {
            const Allocation alloc = adapt_user(lc, sc.ladder, sc.user_profiles[k]);
            const UserEqualization ue = equalize_user(alloc, sc.user_profiles[k], cfg.multiuser->sigma_omega_sq);
            res.files.push_back({"equalize", "user" + std::to_string(lc.user_id()), detail::equalization_table(lc, ue)});
            summary.add({lc.user_id(), lc.m(), ue.correction.xi, ue.correction.max_correction(),
                         ue.equalization.after.front().ber, ue.excluded.size()});
        } catch (const InfeasibleTarget&) {
            summary.add({lc.user_id(), lc.m(), "nan", "nan", "nan", lc.m()});
            res.exit_code = exit_infeasible;
        }
    }
    res.files.push_back({"equalize", "summary", std::move(summary)});
    return res;
}

/// Empirical against analytic BER on the configured SNR grid, judged at 3
/// standard errors.
inline PipelineResult montecarlo_pipeline(const ExperimentConfig& cfg) {
    if (cfg.montecarlo.trials < 10'000) throw Error(ErrorKind::config, "Monte Carlo cross-check needs at least 1e4 trials");
    PipelineResult res;
    CsvTable t({"snr_db", "snr_linear", "analytic_ber", "empirical_ber", "std_error", "errors", "trials", "pass"});
    for (std::size_t g = 0; g < cfg.montecarlo.snr_db.size(); ++g) {
        const double s = cfg.montecarlo.snr_db[g];
        const double linear = std::pow(10.0, s / 10.0);
        const double analytic = 0.5 * erfc(std::sqrt(linear));
        const BerEstimate est = monte_carlo_ber_estimate(s, cfg.montecarlo.trials, Seed{cfg.seed.value + g});
        const double n = static_cast<double>(est.trials);
        const double std_error = std::sqrt(analytic * (1.0 - analytic) / n);
        const bool pass = std::abs(est.ber() - analytic) <= 3.0 * std_error;
        if (!pass) res.exit_code = exit_crosscheck_failed;
        t.add({s, linear, analytic, est.ber(), std_error, static_cast<std::size_t>(est.errors),
               static_cast<std::size_t>(est.trials), pass});
    }
    res.files.push_back({"montecarlo", "crosscheck", std::move(t)});
    return res;
}

/// The adapted user that the supplemental figures are drawn from.
struct FigureUser {
    LogicalChannel user;
    std::vector<NuProfile> profiles;
    Allocation allocation;
    UserEqualization equalization;
    double sigma_omega_sq = 64.0;
};

inline FigureUser figure_user(const ExperimentConfig& cfg, const Scenario& sc) {
    std::optional<LogicalChannel> lc;
    std::vector<NuProfile> profiles;
    double sigma = 64.0;
    if (cfg.multiuser) {
        const auto k = static_cast<std::size_t>(cfg.figures.user);
        if (k >= sc.users.size()) throw Error(ErrorKind::config, "figures.user does not name a configured user");
        lc = sc.users[k];
        profiles = sc.user_profiles[k];
        sigma = cfg.multiuser->sigma_omega_sq;
    } else {
        const auto chans = sc.ensemble.sub_channels();
        lc.emplace(0, std::vector<SubChannel>(chans.begin(), chans.end()), cfg.target);
        profiles = sc.profiles;
    }
    Allocation alloc = adapt_user(*lc, sc.ladder, profiles);
    UserEqualization ue = equalize_user(alloc, profiles, sigma);
    return {std::move(*lc), std::move(profiles), std::move(alloc), std::move(ue), sigma};
}

inline OutputFile fig2_table(const FigureUser& fu) {
    CsvTable t({"channel", "rate_index", "delta", "snr_db"});
    for (std::size_t i = 0; i < fu.allocation.states.size(); ++i) {
        const auto& st = fu.allocation.states[i];
        // Channels at R_max carry delta = +inf and an SNR of -inf.
        const double snr = st.exhausted() ? -infinite_delta : snr_db(st.delta);
        t.add({fu.user.sub_channels()[i].index, st.current.label(), st.delta, snr});
    }
    return {"fig2", "delta", std::move(t)};
}

inline std::vector<OutputFile> fig3_tables(const ExperimentConfig& cfg, const RateLadder& ladder) {
    const double beta = detail::figure_beta(cfg);
    std::vector<OutputFile> out;
    const std::pair<const char*, std::pair<double, double>> ranges[] = {{"low", {0.1, 0.3}}, {"high", {0.3, 0.9}}};
    for (const auto& [name, lim] : ranges) {
        CsvTable t({"nu", "nu_base", "rate_index", "rate", "delta", "numerator", "denominator", "f_value", "ber",
                    "clamped"});
        for (double v : detail::sweep(lim.first, lim.second, cfg.figures.fig3_points))
            detail::add_ber_rows(t, v, v, beta, ladder);
        out.push_back({"fig3", name, std::move(t)});
    }
    return out;
}

/// BER against nu = 10^(-SNR/10) for SNR from 15 dB down to -5 dB.
inline OutputFile fig4_table(const ExperimentConfig& cfg, const RateLadder& ladder) {
    const double beta = detail::figure_beta(cfg);
    CsvTable t({"snr_db", "nu_base", "rate_index", "rate", "delta", "numerator", "denominator", "f_value", "ber",
                "clamped"});
    const double step = cfg.figures.fig4_step_db;
    for (int k = 0;; ++k) {
        const double s = 15.0 - k * step;
        if (s < -5.0 - 1e-9) break;
        detail::add_ber_rows(t, s, nu_from_snr_db(s), beta, ladder);
    }
    return {"fig4", "ber", std::move(t)};
}

inline OutputFile s1_table(const FigureUser& fu) {
    CsvTable t({"channel", "delta", "xi", "correction"});
    const auto& ue = fu.equalization;
    for (std::size_t j = 0; j < ue.positions.size(); ++j) {
        const auto& c = ue.correction.channels[j];
        t.add({fu.user.sub_channels()[ue.positions[j]].index, c.delta, ue.correction.xi, c.correction});
    }
    return {"s1", "correction", std::move(t)};
}

/// Input quadratures at sigma_omega^2 and at the corrected variance; both use
/// the same standard-normal draw per sub-channel.
inline OutputFile s2_table(const ExperimentConfig& cfg, const FigureUser& fu) {
    CsvTable t({"channel", "sigma_omega_sq", "x", "corrected_variance", "x_corrected"});
    SeedStream stream = SeedStream::derive(cfg.seed, 2);
    const auto& ue = fu.equalization;
    for (std::size_t j = 0; j < ue.positions.size(); ++j) {
        const auto& c = ue.correction.channels[j];
        const double z = stream.standard_normal();
        t.add({fu.user.sub_channels()[ue.positions[j]].index, fu.sigma_omega_sq, std::sqrt(fu.sigma_omega_sq) * z,
               c.corrected_variance, std::sqrt(c.corrected_variance) * z});
    }
    return {"s2", "quadratures", std::move(t)};
}

inline OutputFile s3_table(const FigureUser& fu) {
    CsvTable t({"channel", "snr_gain_variance_db", "phi", "snr_increment"});
    const auto& ue = fu.equalization;
    for (std::size_t j = 0; j < ue.positions.size(); ++j) {
        const auto& c = ue.correction.channels[j];
        t.add({fu.user.sub_channels()[ue.positions[j]].index,
               10.0 * std::log10(c.corrected_variance / fu.sigma_omega_sq), c.phi, ue.snr_increments[j]});
    }
    return {"s3", "snr", std::move(t)};
}

inline OutputFile s4_table(const FigureUser& fu) {
    CsvTable t({"channel", "ber_before", "ber_after", "delta_before", "delta_after"});
    const auto& ue = fu.equalization;
    for (std::size_t j = 0; j < ue.positions.size(); ++j) {
        const auto& before = ue.equalization.before[j];
        const auto& after = ue.equalization.after[j];
        t.add({fu.user.sub_channels()[ue.positions[j]].index, before.ber, after.ber, before.delta, after.delta});
    }
    return {"s4", "ber", std::move(t)};
}

inline const std::vector<std::string>& figure_pipelines() {
    static const std::vector<std::string> names{"fig2", "fig3", "fig4", "s1", "s2", "s3", "s4"};
    return names;
}

/// Runs the named figure pipelines (all when `only` is empty).
inline PipelineResult figures_pipeline(const ExperimentConfig& cfg, const Scenario& sc, const std::string& only = {}) {
    if (!only.empty() && std::find(figure_pipelines().begin(), figure_pipelines().end(), only) == figure_pipelines().end())
        throw Error(ErrorKind::config, "unknown figure pipeline '" + only + "'");
    auto wanted = [&](const char* name) { return only.empty() || only == name; };
    PipelineResult res;
    if (wanted("fig3"))
        for (auto& f : fig3_tables(cfg, sc.ladder)) res.files.push_back(std::move(f));
    if (wanted("fig4")) res.files.push_back(fig4_table(cfg, sc.ladder));
    const bool needs_user = wanted("fig2") || wanted("s1") || wanted("s2") || wanted("s3") || wanted("s4");
    if (!needs_user) return res;
    try {
        const FigureUser fu = figure_user(cfg, sc);
        if (wanted("fig2")) res.files.push_back(fig2_table(fu));
        if (wanted("s1")) res.files.push_back(s1_table(fu));
        if (wanted("s2")) res.files.push_back(s2_table(cfg, fu));
        if (wanted("s3")) res.files.push_back(s3_table(fu));
        if (wanted("s4")) res.files.push_back(s4_table(fu));
    } catch (const InfeasibleTarget& e) {
        CsvTable inf({"target", "max_achievable"});
        inf.add({e.target(), e.max_achievable()});
        res.files.push_back({"figures", "infeasible", std::move(inf)});
        res.exit_code = exit_infeasible;
    }
    return res;
}

/// Writes every table plus manifest.csv (pipeline, file, rows, config hash).
inline void write_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files,
                          const std::string& config_hash) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
    CsvTable manifest({"pipeline", "file", "rows", "config_hash"});
    for (const auto& f : files) {
        write_atomic(dir / f.file_name(), f.table.str());
        manifest.add({f.pipeline, f.file_name(), f.table.row_count(), config_hash});
    }
    write_atomic(dir / "manifest.csv", manifest.str());
}

/// Hash recorded in the manifest: source text hash combined with the
/// effective seed.
inline std::string config_hash(const ExperimentConfig& cfg) {
    return detail::fnv1a_hex(cfg.source_hash + ":" + std::to_string(cfg.seed.value));
}

/// Runs one CLI-level command ("adapt", "multiuser", "equalize",
/// "montecarlo", "figures") and writes its outputs.
inline int run_experiment(const ExperimentConfig& cfg, const std::string& command, const std::filesystem::path& out_dir,
                          const std::string& pipeline = {}) {
    PipelineResult res;
    if (command == "montecarlo") {
        if (auto v = validate(cfg); !v.empty()) throw ConfigInvalid(std::move(v));
        res = montecarlo_pipeline(cfg);
    } else {
        const Scenario sc = build_scenario(cfg);
        if (command == "adapt") res = adapt_pipeline(cfg, sc);
        else if (command == "multiuser") res = multiuser_pipeline(cfg, sc);
        else if (command == "equalize") res = equalize_pipeline(cfg, sc);
        else if (command == "figures") res = figures_pipeline(cfg, sc, pipeline);
        else throw Error(ErrorKind::config, "unknown command '" + command + "'");
    }
    write_outputs(out_dir, res.files, config_hash(cfg));
    return res.exit_code;
}

} // namespace keyadapt
