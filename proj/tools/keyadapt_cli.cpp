// Command-line front end: validate a configuration or run one of the
// experiment pipelines and write CSV tables plus a manifest.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "keyadapt/config.hpp"
#include "keyadapt/experiment.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string pipeline;
};

keyadapt::ExperimentConfig load(const Options& opt) {
    auto cfg = keyadapt::load_config(opt.config);
    if (opt.seed) cfg.seed = keyadapt::Seed{*opt.seed};
    return cfg;
}

int run_validate(const Options& opt) {
    const auto cfg = load(opt);
    const auto violations = keyadapt::validate(cfg);
    if (violations.empty()) {
        std::cout << "valid\n";
        return keyadapt::exit_ok;
    }
    for (const auto& v : violations) std::cout << "violation: " << v << '\n';
    return keyadapt::exit_config_invalid;
}

int run_command(const std::string& command, const Options& opt) {
    const auto cfg = load(opt);
    const std::string out = opt.out.empty() ? cfg.output_dir : opt.out;
    const int code = keyadapt::run_experiment(cfg, command, out, opt.pipeline);
    std::cout << command << ": wrote outputs to " << out << " (exit " << code << ")\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Iterative secret-key-rate adaptation over Gaussian sub-channels"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory (default: output_dir from the config)");
        sub->add_option("--seed", opt.seed, "override the configured seed");
    };

    auto* validate = app.add_subcommand("validate", "check a configuration against every invariant");
    validate->add_option("--config", opt.config, "JSON configuration file")->required()->check(CLI::ExistingFile);

    const char* commands[][2] = {
        {"adapt", "greedy rate adaptation over the whole ensemble"},
        {"multiuser", "independent adaptation of every user's logical channel"},
        {"equalize", "modulation-variance correction and BER equalization per user"},
        {"montecarlo", "empirical vs analytic BER cross-check"},
        {"figures", "plot-ready tables for the figure pipelines"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub);
        if (std::string(name) == "figures")
            sub->add_option("--pipeline", opt.pipeline, "run a single pipeline: fig2 fig3 fig4 s1 s2 s3 s4");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return run_validate(opt);
        for (const auto& [name, help] : commands) {
            if (app.got_subcommand(name)) return run_command(name, opt);
        }
    } catch (const keyadapt::ConfigInvalid& e) {
        for (const auto& v : e.violations()) std::cerr << "violation: " << v << '\n';
        return keyadapt::exit_config_invalid;
    } catch (const keyadapt::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.kind()) {
        case keyadapt::ErrorKind::config:
        case keyadapt::ErrorKind::parse:
        case keyadapt::ErrorKind::io: return keyadapt::exit_config_invalid;
        case keyadapt::ErrorKind::infeasible: return keyadapt::exit_infeasible;
        default: return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
