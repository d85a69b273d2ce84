#pragma once

// Experiment configuration: JSON ingestion, invariant validation and
// construction of the channel ensemble, ladder, profiles and users.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "keyadapt/adapt_core.hpp"
#include "keyadapt/channel_model.hpp"
#include "keyadapt/error.hpp"
#include "keyadapt/multiuser.hpp"
#include "keyadapt/numerics.hpp"
#include "keyadapt/rate_ladder.hpp"

namespace keyadapt {

struct ChannelSpec {
    int index = 0;
    double re = 0.0;
    double im = 0.0;
    double noise_variance = 0.0;
    std::optional<double> fourier_gain;
};

/// Seeded generator for l sub-channels: noise variance and the (equal)
/// transmittance components drawn uniformly from the given ranges.
struct GeneratorSpec {
    int l = 0;
    double noise_lo = 0.0, noise_hi = 0.0;
    double transmittance_lo = 0.0, transmittance_hi = 0.0;
};

struct EnsembleSpec {
    int n_total = 0;
    std::vector<ChannelSpec> channels;
    std::optional<GeneratorSpec> generator;
};

struct LadderSpec {
    double r_min = 0.0;
    std::vector<double> levels;
    double r_max = 0.0;
    std::optional<double> capacity;
};

struct ProfileSpec {
    std::string model = "exponential";
    double beta = 0.3;
    /// model == "table": channel index -> entries for min, R(0).., max.
    std::map<int, std::vector<NuEntry>> tables;
};

struct UserSpec {
    int id = 0;
    std::vector<int> channels;
    double target = 0.0;
};

struct MultiuserSpec {
    double sigma_omega_sq = 64.0;
    std::vector<UserSpec> users;
};

struct MonteCarloSpec {
    std::uint64_t trials = 1'000'000;
    std::vector<double> snr_db{15.0, 10.0, 5.0, 0.0, -5.0};
};

struct FiguresSpec {
    int fig3_points = 21;
    double fig4_step_db = 5.0;
    std::optional<double> beta;
    int user = 0;
};

struct ExperimentConfig {
    Seed seed{0};
    EnsembleSpec ensemble;
    LadderSpec ladder;
    ProfileSpec profile;
    double target = 0.0;
    std::optional<MultiuserSpec> multiuser;
    MonteCarloSpec montecarlo;
    FiguresSpec figures;
    std::string output_dir = "out";
    /// FNV-1a hash of the source text, hex encoded.
    std::string source_hash;
};

namespace detail {

using nlohmann::json;

inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::config, path + "." + key + ": required key missing");
    return j.at(key);
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw Error(ErrorKind::config, path + ": expected a number");
    return j.get<double>();
}

inline std::int64_t integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw Error(ErrorKind::config, path + ": expected an integer");
    return j.get<std::int64_t>();
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
    if (!j.is_array()) throw Error(ErrorKind::config, path + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::pair<double, double> range(const json& j, const std::string& path) {
    const auto v = numbers(j, path);
    if (v.size() != 2) throw Error(ErrorKind::config, path + ": expected [low, high]");
    return {v[0], v[1]};
}

inline EnsembleSpec parse_ensemble(const json& j) {
    EnsembleSpec e;
    e.n_total = static_cast<int>(integer(require(j, "n_total", "ensemble"), "ensemble.n_total"));
    if (j.contains("generator")) {
        const auto& g = j.at("generator");
        GeneratorSpec gen;
        gen.l = static_cast<int>(integer(require(g, "l", "ensemble.generator"), "ensemble.generator.l"));
        std::tie(gen.noise_lo, gen.noise_hi) =
            range(require(g, "noise_variance", "ensemble.generator"), "ensemble.generator.noise_variance");
        std::tie(gen.transmittance_lo, gen.transmittance_hi) =
            range(require(g, "transmittance", "ensemble.generator"), "ensemble.generator.transmittance");
        e.generator = gen;
    }
    if (j.contains("channels")) {
        const auto& arr = j.at("channels");
        if (!arr.is_array()) throw Error(ErrorKind::config, "ensemble.channels: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = "ensemble.channels[" + std::to_string(i) + "]";
            const auto& c = arr[i];
            ChannelSpec cs;
            cs.index = static_cast<int>(integer(require(c, "index", p), p + ".index"));
            const auto& t = require(c, "transmittance", p);
            cs.re = number(require(t, "re", p + ".transmittance"), p + ".transmittance.re");
            cs.im = number(require(t, "im", p + ".transmittance"), p + ".transmittance.im");
            cs.noise_variance = number(require(c, "noise_variance", p), p + ".noise_variance");
            if (c.contains("fourier_gain")) cs.fourier_gain = number(c.at("fourier_gain"), p + ".fourier_gain");
            e.channels.push_back(cs);
        }
    }
    if (e.generator && !e.channels.empty())
        throw Error(ErrorKind::config, "ensemble: give either channels or generator, not both");
    if (!e.generator && e.channels.empty())
        throw Error(ErrorKind::config, "ensemble: one of channels or generator is required");
    return e;
}

inline ProfileSpec parse_profile(const json& j) {
    ProfileSpec p;
    if (j.contains("model")) {
        if (!j.at("model").is_string()) throw Error(ErrorKind::config, "profile.model: expected a string");
        p.model = j.at("model").get<std::string>();
    }
    if (p.model == "exponential") {
        p.beta = number(require(j, "beta", "profile"), "profile.beta");
    } else if (p.model == "table") {
        const auto& tables = require(j, "tables", "profile");
        if (!tables.is_object()) throw Error(ErrorKind::config, "profile.tables: expected an object keyed by channel index");
        for (const auto& [key, arr] : tables.items()) {
            const std::string path = "profile.tables." + key;
            int idx = 0;
            try {
                std::size_t used = 0;
                idx = std::stoi(key, &used);
                if (used != key.size()) throw std::invalid_argument(key);
            } catch (const std::exception&) {
                throw Error(ErrorKind::config, path + ": key must be a sub-channel index");
            }
            if (!arr.is_array()) throw Error(ErrorKind::config, path + ": expected an array of entries");
            std::vector<NuEntry> entries;
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string ep = path + "[" + std::to_string(i) + "]";
                entries.push_back({number(require(arr[i], "sigma", ep), ep + ".sigma"),
                                   number(require(arr[i], "gain", ep), ep + ".gain")});
            }
            p.tables[idx] = std::move(entries);
        }
    } else {
        throw Error(ErrorKind::config, "profile.model: unknown model '" + p.model + "'");
    }
    return p;
}

inline MultiuserSpec parse_multiuser(const json& j, const EnsembleSpec& ens) {
    MultiuserSpec m;
    if (j.contains("sigma_omega_sq")) m.sigma_omega_sq = number(j.at("sigma_omega_sq"), "multiuser.sigma_omega_sq");
    if (j.contains("users")) {
        const auto& arr = j.at("users");
        if (!arr.is_array()) throw Error(ErrorKind::config, "multiuser.users: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = "multiuser.users[" + std::to_string(i) + "]";
            UserSpec u;
            u.id = static_cast<int>(integer(require(arr[i], "id", p), p + ".id"));
            u.target = number(require(arr[i], "target", p), p + ".target");
            const auto& ch = require(arr[i], "channels", p);
            if (!ch.is_array()) throw Error(ErrorKind::config, p + ".channels: expected an array");
            for (std::size_t c = 0; c < ch.size(); ++c)
                u.channels.push_back(static_cast<int>(integer(ch[c], p + ".channels[" + std::to_string(c) + "]")));
            m.users.push_back(std::move(u));
        }
    } else if (j.contains("partition")) {
        // K consecutive blocks of m sub-channels in ensemble order.
        const auto& part = j.at("partition");
        const auto users = integer(require(part, "K", "multiuser.partition"), "multiuser.partition.K");
        const auto per_user = integer(require(part, "m", "multiuser.partition"), "multiuser.partition.m");
        const auto targets = numbers(require(part, "targets", "multiuser.partition"), "multiuser.partition.targets");
        if (users < 1 || per_user < 1)
            throw Error(ErrorKind::config, "multiuser.partition: K and m must be at least 1");
        if (static_cast<std::int64_t>(targets.size()) != users)
            throw Error(ErrorKind::config, "multiuser.partition.targets: need one target per user");
        std::vector<int> indices;
        if (ens.generator) {
            for (int i = 0; i < ens.generator->l; ++i) indices.push_back(i);
        } else {
            for (const auto& c : ens.channels) indices.push_back(c.index);
        }
        if (users * per_user > static_cast<std::int64_t>(indices.size()))
            throw Error(ErrorKind::config, "multiuser.partition: K * m exceeds the number of sub-channels");
        for (std::int64_t k = 0; k < users; ++k) {
            UserSpec u;
            u.id = static_cast<int>(k);
            u.target = targets[static_cast<std::size_t>(k)];
            for (std::int64_t i = 0; i < per_user; ++i)
                u.channels.push_back(indices[static_cast<std::size_t>(k * per_user + i)]);
            m.users.push_back(std::move(u));
        }
    } else {
        throw Error(ErrorKind::config, "multiuser: one of users or partition is required");
    }
    return m;
}

} // namespace detail

/// Parses configuration text. Syntax errors carry the line and column.
inline ExperimentConfig parse_config(const std::string& text) {
    using detail::json;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse, detail::line_column(text, e.byte) + ": " + e.what());
    }
    if (!root.is_object()) throw Error(ErrorKind::config, "configuration root must be an object");

    ExperimentConfig cfg;
    cfg.source_hash = detail::fnv1a_hex(text);
    if (root.contains("seed")) {
        const auto& s = root.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
            throw Error(ErrorKind::config, "seed: expected a non-negative integer");
        cfg.seed = Seed{s.get<std::uint64_t>()};
    }
    if (root.contains("output_dir")) {
        if (!root.at("output_dir").is_string()) throw Error(ErrorKind::config, "output_dir: expected a string");
        cfg.output_dir = root.at("output_dir").get<std::string>();
    }
    cfg.ensemble = detail::parse_ensemble(detail::require(root, "ensemble", "config"));

    const auto& ladder = detail::require(root, "ladder", "config");
    cfg.ladder.r_min = detail::number(detail::require(ladder, "r_min", "ladder"), "ladder.r_min");
    cfg.ladder.levels = detail::numbers(detail::require(ladder, "levels", "ladder"), "ladder.levels");
    cfg.ladder.r_max = detail::number(detail::require(ladder, "r_max", "ladder"), "ladder.r_max");
    if (ladder.contains("capacity")) cfg.ladder.capacity = detail::number(ladder.at("capacity"), "ladder.capacity");

    cfg.profile = detail::parse_profile(detail::require(root, "profile", "config"));
    cfg.target = detail::number(detail::require(root, "target", "config"), "target");
    if (root.contains("multiuser")) cfg.multiuser = detail::parse_multiuser(root.at("multiuser"), cfg.ensemble);

    if (root.contains("montecarlo")) {
        const auto& mc = root.at("montecarlo");
        if (mc.contains("trials")) {
            const auto t = detail::integer(mc.at("trials"), "montecarlo.trials");
            if (t < 0) throw Error(ErrorKind::config, "montecarlo.trials: must be non-negative");
            cfg.montecarlo.trials = static_cast<std::uint64_t>(t);
        }
        if (mc.contains("snr_db")) cfg.montecarlo.snr_db = detail::numbers(mc.at("snr_db"), "montecarlo.snr_db");
    }
    if (root.contains("figures")) {
        const auto& f = root.at("figures");
        if (f.contains("fig3_points"))
            cfg.figures.fig3_points = static_cast<int>(detail::integer(f.at("fig3_points"), "figures.fig3_points"));
        if (f.contains("fig4_step_db")) cfg.figures.fig4_step_db = detail::number(f.at("fig4_step_db"), "figures.fig4_step_db");
        if (f.contains("beta")) cfg.figures.beta = detail::number(f.at("beta"), "figures.beta");
        if (f.contains("user")) cfg.figures.user = static_cast<int>(detail::integer(f.at("user"), "figures.user"));
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Sub-channel list described by the ensemble block, without validation.
inline std::vector<ChannelSpec> channel_specs(const ExperimentConfig& cfg) {
    if (!cfg.ensemble.generator) return cfg.ensemble.channels;
    const auto& g = *cfg.ensemble.generator;
    SeedStream stream = SeedStream::derive(cfg.seed, 1);
    std::vector<ChannelSpec> out;
    for (int i = 0; i < g.l; ++i) {
        const double noise = g.noise_lo + (g.noise_hi - g.noise_lo) * stream.uniform();
        const double t = g.transmittance_lo + (g.transmittance_hi - g.transmittance_lo) * stream.uniform();
        out.push_back({i, t, t, noise, std::nullopt});
    }
    return out;
}

/// Every invariant violation in the configuration; empty means valid.
inline std::vector<std::string> validate(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    const double t_bound = 1.0 / std::numbers::sqrt2;

    if (cfg.ensemble.generator) {
        const auto& g = *cfg.ensemble.generator;
        if (g.l < 1) out.emplace_back("ensemble generator: l must be at least 1");
        if (!(g.noise_lo > 0.0) || !(g.noise_hi >= g.noise_lo))
            out.emplace_back("ensemble generator: noise_variance range must be positive and ordered");
        if (!(g.transmittance_lo > 0.0) || !(g.transmittance_hi >= g.transmittance_lo) || g.transmittance_hi > t_bound)
            out.emplace_back("transmittance range: generator range must lie in (0, 1/sqrt(2)] and be ordered");
    }
    const auto specs = channel_specs(cfg);
    if (specs.empty()) out.emplace_back("ensemble: at least one sub-channel is required");
    if (static_cast<int>(specs.size()) > cfg.ensemble.n_total)
        out.emplace_back("ensemble: l = " + std::to_string(specs.size()) + " exceeds n_total = " +
                         std::to_string(cfg.ensemble.n_total));
    std::set<int> seen;
    std::optional<int> prev_index;
    for (const auto& c : specs) {
        const std::string name = "sub-channel " + std::to_string(c.index);
        if (c.index < 0 || c.index >= cfg.ensemble.n_total) out.push_back(name + ": index outside [0, n_total)");
        if (!seen.insert(c.index).second) out.push_back(name + ": duplicate index");
        if (prev_index && c.index < *prev_index) out.push_back(name + ": indices must be listed in increasing order");
        prev_index = c.index;
        if (!(c.re >= 0.0 && c.re <= t_bound && c.im >= 0.0 && c.im <= t_bound))
            out.push_back(name + ": transmittance range: components must lie in [0, 1/sqrt(2)]");
        if (c.re != c.im) out.push_back(name + ": transmittance constraint: real and imaginary parts must be equal");
        if (!(c.noise_variance > 0.0) || !std::isfinite(c.noise_variance))
            out.push_back(name + ": noise variance must be positive");
        const double gain = c.fourier_gain.value_or(c.re * c.re + c.im * c.im);
        if (!(gain > 0.0) || !std::isfinite(gain)) out.push_back(name + ": degenerate channel: Fourier gain must be positive");
    }

    for (const auto& v : RateLadder::violations(cfg.ladder.r_min, cfg.ladder.levels, cfg.ladder.r_max, cfg.ladder.capacity))
        out.push_back(v);
    const int r = static_cast<int>(cfg.ladder.levels.size());

    if (cfg.profile.model == "exponential") {
        if (!(cfg.profile.beta > 0.0) || !std::isfinite(cfg.profile.beta))
            out.emplace_back("nu monotonicity: exponential profile needs beta > 0");
    } else {
        for (const auto& c : specs) {
            const auto it = cfg.profile.tables.find(c.index);
            const std::string name = "profile of sub-channel " + std::to_string(c.index);
            if (it == cfg.profile.tables.end()) {
                out.push_back(name + ": missing table");
                continue;
            }
            if (static_cast<int>(it->second.size()) != r + 2) {
                out.push_back(name + ": expected " + std::to_string(r + 2) + " entries (min, levels, max)");
                continue;
            }
            std::vector<NuEntry> entries{{c.noise_variance, c.fourier_gain.value_or(c.re * c.re + c.im * c.im)}};
            entries.insert(entries.end(), it->second.begin(), it->second.end());
            for (const auto& v : NuProfile::violations(entries)) out.push_back(name + ": " + v);
        }
    }

    if (!(cfg.target >= 0.0) || !std::isfinite(cfg.target)) out.emplace_back("target: must be finite and >= 0");

    if (cfg.multiuser) {
        const auto& mu = *cfg.multiuser;
        if (!(mu.sigma_omega_sq > 0.0)) out.emplace_back("multiuser: sigma_omega_sq must be positive");
        if (mu.users.empty()) out.emplace_back("multiuser: at least one user is required");
        std::set<int> ids, assigned;
        for (const auto& u : mu.users) {
            const std::string name = "user " + std::to_string(u.id);
            if (u.id < 0 || !ids.insert(u.id).second) out.push_back(name + ": id must be unique and non-negative");
            if (u.channels.empty()) out.push_back(name + ": logical channel needs m >= 1 sub-channels");
            if (!(u.target >= 0.0)) out.push_back(name + ": target must be >= 0");
            for (std::size_t i = 0; i < u.channels.size(); ++i) {
                const int c = u.channels[i];
                if (!seen.count(c)) out.push_back(name + ": sub-channel " + std::to_string(c) + " is not in the ensemble");
                if (!assigned.insert(c).second)
                    out.push_back(name + ": sub-channel " + std::to_string(c) + " is already assigned");
                if (i > 0 && c <= u.channels[i - 1]) out.push_back(name + ": sub-channel indices must increase");
            }
        }
    }
    if (cfg.montecarlo.trials < 1) out.emplace_back("montecarlo: trials must be at least 1");
    for (double s : cfg.montecarlo.snr_db)
        if (!std::isfinite(s)) out.emplace_back("montecarlo: SNR grid values must be finite");
    if (cfg.figures.fig3_points < 2) out.emplace_back("figures: fig3_points must be at least 2");
    if (!(cfg.figures.fig4_step_db > 0.0)) out.emplace_back("figures: fig4_step_db must be positive");
    if (cfg.figures.beta && !(*cfg.figures.beta > 0.0)) out.emplace_back("figures: beta must be positive");
    return out;
}

/// Validated, constructed domain objects for one configuration.
struct Scenario {
    ChannelEnsemble ensemble;
    RateLadder ladder;
    std::vector<NuProfile> profiles;  // parallel to ensemble.sub_channels()
    std::vector<LogicalChannel> users;
    std::vector<std::vector<NuProfile>> user_profiles;

    const NuProfile& profile_of(int channel_index) const {
        const auto chans = ensemble.sub_channels();
        for (std::size_t i = 0; i < chans.size(); ++i)
            if (chans[i].index == channel_index) return profiles[i];
        throw Error(ErrorKind::profile_incomplete, "no profile for sub-channel " + std::to_string(channel_index));
    }
};

/// Thrown by build_scenario when validation fails; carries every violation.
class ConfigInvalid : public Error {
public:
    explicit ConfigInvalid(std::vector<std::string> violations)
        : Error(ErrorKind::config, violations.empty() ? "invalid configuration" : violations.front()),
          violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

inline Scenario build_scenario(const ExperimentConfig& cfg) {
    if (auto v = validate(cfg); !v.empty()) throw ConfigInvalid(std::move(v));
    std::vector<SubChannel> channels;
    for (const auto& c : channel_specs(cfg)) {
        const Transmittance t(c.re, c.im);
        channels.push_back({c.index, t, c.noise_variance, c.fourier_gain.value_or(t.magnitude_sq())});
    }
    RateLadder ladder(cfg.ladder.r_min, cfg.ladder.levels, cfg.ladder.r_max, cfg.ladder.capacity);
    std::vector<NuProfile> profiles;
    for (const auto& ch : channels) {
        if (cfg.profile.model == "exponential") {
            profiles.push_back(default_profile(ch, cfg.profile.beta, ladder));
        } else {
            std::vector<NuEntry> entries{{ch.noise_variance, ch.fourier_gain}};
            const auto& table = cfg.profile.tables.at(ch.index);
            entries.insert(entries.end(), table.begin(), table.end());
            profiles.emplace_back(std::move(entries));
        }
    }
    Scenario sc{ChannelEnsemble(channels, cfg.ensemble.n_total), std::move(ladder), std::move(profiles), {}, {}};
    if (cfg.multiuser) {
        for (const auto& u : cfg.multiuser->users) {
            std::vector<SubChannel> subs;
            std::vector<NuProfile> profs;
            for (int idx : u.channels) {
                for (std::size_t i = 0; i < channels.size(); ++i) {
                    if (channels[i].index == idx) {
                        subs.push_back(channels[i]);
                        profs.push_back(sc.profiles[i]);
                    }
                }
            }
            sc.users.emplace_back(u.id, std::move(subs), u.target);
            sc.user_profiles.push_back(std::move(profs));
        }
    }
    return sc;
}

} // namespace keyadapt
