#include "hawkesvol/hawkesvol.h"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

std::string config_reference() {
    std::string text(hv_config_help(nullptr, 0) + 1, '\0');
    hv_config_help(text.data(), text.size());
    text.pop_back();
    return text;
}

int exit_code(hv_status status) {
    switch (status) {
    case HV_OK: return 0;
    case HV_PARTIAL: return 3;
    case HV_ERR_INTERNAL: return 1;
    default: return 2;
    }
}

void print_notes() {
    const std::string notes = hv_last_notes();
    if (!notes.empty()) {
        std::cerr << notes;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent Hawkes fitting and volatility attribution"};
    app.require_subcommand(1);
    app.footer(config_reference());

    std::string config_path;
    std::size_t jobs = 0;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "config file (key = value lines)")->check(CLI::ExistingFile);
    app.add_option("--jobs", jobs, "days processed in parallel")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "base RNG seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--set", overrides, "override one config key, KEY=VALUE (repeatable)");

    struct Command {
        const char* name;
        const char* help;
        hv_status (*run)(const hv_config*);
    };
    const Command commands[] = {
        {"simulate", "simulate days from a model spec into <out>/events and <out>/truth.json", hv_cmd_simulate},
        {"fit", "fit agent-vs-market models per day into <out>/fits", hv_cmd_fit},
        {"attribute", "volatility attribution from <out>/fits into report.json / report.csv", hv_cmd_attribute},
        {"control", "shuffled-label control fits and residuals into <out>/control", hv_cmd_control},
        {"features", "classify raw records and compute agent features into <out>/features.csv", hv_cmd_features},
    };
    const Command* selected = nullptr;
    for (const Command& command : commands) {
        app.add_subcommand(command.name, command.help)->fallthrough()->callback([&selected, &command] {
            selected = &command;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    hv_config* config = nullptr;
    if (hv_config_create(&config) != HV_OK) {
        std::cerr << "error: " << hv_last_error() << '\n';
        return 1;
    }
    auto fail = [&](hv_status status) {
        std::cerr << "error: " << hv_last_error() << '\n';
        hv_config_destroy(config);
        return exit_code(status);
    };

    hv_status status = HV_OK;
    if (!config_path.empty() && (status = hv_config_load(config, config_path.c_str())) != HV_OK) {
        return fail(status);
    }
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --set expects KEY=VALUE, got '" << item << "'\n";
            hv_config_destroy(config);
            return 2;
        }
        if ((status = hv_config_set(config, item.substr(0, eq).c_str(), item.substr(eq + 1).c_str())) != HV_OK) {
            return fail(status);
        }
    }
    if (jobs > 0 && (status = hv_config_set(config, "jobs", std::to_string(jobs).c_str())) != HV_OK) {
        return fail(status);
    }
    if (app.count("--seed") > 0 && (status = hv_config_set(config, "seed", std::to_string(seed).c_str())) != HV_OK) {
        return fail(status);
    }
    if (!out_dir.empty() && (status = hv_config_set(config, "out", out_dir.c_str())) != HV_OK) {
        return fail(status);
    }
    if ((status = hv_config_validate(config)) != HV_OK) {
        return fail(status);
    }

    status = selected->run(config);
    print_notes();
    if (status != HV_OK && status != HV_PARTIAL) {
        return fail(status);
    }
    if (status == HV_PARTIAL) {
        std::cerr << "finished with per-item failures; see the flags in the outputs\n";
    }
    hv_config_destroy(config);
    return exit_code(status);
}
