#include "tef/experiment.hpp"
#include "tef/workflows.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <map>

namespace {

using tef::Json;

/// A subcommand whose flags mirror the keys of its defaults document.
struct Command {
    CLI::App* app = nullptr;
    Json defaults;
    std::string config_path;
    std::map<std::string, std::string> flags;
};

Command& add_command(CLI::App& root, std::map<std::string, Command>& commands, const std::string& name,
                     const std::string& help, Json defaults) {
    Command& c = commands[name];
    c.app = root.add_subcommand(name, help);
    c.defaults = std::move(defaults);
    c.app->add_option("--config", c.config_path, "JSON config file");
    for (const auto& [key, value] : c.defaults.items()) {
        std::string& slot = c.flags[key];
        c.app->add_option("--" + key, slot, "default " + value.dump());
    }
    return c;
}

/// Config file keys, then command-line flags, each typed by the defaults.
Json user_config(const Command& c) {
    Json user = Json::object();
    if (!c.config_path.empty()) user = tef::merge_config(Json::object(), tef::read_json_file(c.config_path), false);
    for (const auto& [key, like] : c.defaults.items()) {
        if (c.app->count("--" + key) == 0) continue;
        const Json& typed = user.contains(key) ? user.at(key) : like;
        user[key] = tef::parse_flag_value(key, c.flags.at(key), typed.is_null() ? like : typed);
    }
    return user;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw tef::ConfigError("cannot write " + path);
    f << text;
}

void emit_json(const Json& report, const std::string& path) {
    const std::string text = report.dump(2) + "\n";
    if (!path.empty()) write_text(path, text);
    std::cout << text;
}

int run_experiment_command(const Json& user) {
    const Json cfg = tef::resolve_experiment_json(user);
    const tef::ExperimentConfig config = tef::experiment_from_json(cfg);
    const tef::ExperimentResult result = tef::run_experiment(config);
    const auto output = tef::config_value<std::string>(cfg, "output");
    const auto summary_path = tef::config_value<std::string>(cfg, "summary");
    Json summary = result.summary;
    summary["config"] = cfg;
    const std::string summary_text = summary.dump(2) + "\n";
    if (!summary_path.empty()) write_text(summary_path, summary_text);
    if (output.empty()) {
        tef::write_scaling_csv(std::cout, result.records);
        std::cerr << summary_text;
    } else {
        std::ofstream f(output);
        if (!f) throw tef::ConfigError("cannot write " + output);
        tef::write_scaling_csv(f, result.records);
        std::cout << summary_text;
    }
    return result.pass ? 0 : 1;
}

int dispatch(const std::string& name, const Command& c) {
    const Json user = user_config(c);
    if (name == "experiment") return run_experiment_command(user);
    const Json cfg = tef::merge_config(c.defaults, user);
    const auto output = tef::config_value<std::string>(cfg, "output");
    if (name == "fit") {
        const auto r = tef::run_fit(cfg);
        emit_json(r.report, output);
        return r.status;
    }
    if (name == "sample") {
        const auto r = tef::run_sample(cfg);
        if (r.report.contains("csv"))
            std::cout << r.report.at("csv").get<std::string>();
        else
            std::cout << r.report.dump(2) << "\n";
        return r.status;
    }
    if (name == "verify") {
        const auto r = tef::run_verify(cfg);
        emit_json(r.report, output);
        return r.status;
    }
    const auto r = tef::run_diagnose(cfg);
    if (!output.empty()) write_text(output, r.report.dump(2) + "\n");
    std::cout << tef::format_diagnose_table(r.report);
    return r.status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App root{"Truncated exponential family estimation: fit, sample, experiment, verify, diagnose"};
    root.require_subcommand(1);
    std::map<std::string, Command> commands;
    add_command(root, commands, "fit", "Fit Theta to a CSV dataset", tef::fit_defaults());
    add_command(root, commands, "sample", "Draw a dataset from a preset true parameter", tef::sample_defaults());
    add_command(root, commands, "experiment", "Run an error-scaling experiment",
                tef::experiment_defaults("custom"));
    add_command(root, commands, "verify", "Run the on-grid verification battery", tef::verify_defaults());
    add_command(root, commands, "diagnose", "Print complexity constants and the implied sample size",
                tef::diagnose_defaults());
    try {
        root.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = root.exit(e);
        return code == 0 ? 0 : 2;
    }
    for (auto& [name, command] : commands) {
        if (!command.app->parsed()) continue;
        try {
            return dispatch(name, command);
        } catch (const tef::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const tef::GuardExceeded& e) {
            std::cerr << "config error (guard): " << e.what() << "\n";
            return 2;
        } catch (const std::invalid_argument& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return 2;
}
