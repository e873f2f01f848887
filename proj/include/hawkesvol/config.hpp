#pragma once

#include "hawkesvol/data_pipeline.hpp"
#include "hawkesvol/estimation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace hawkesvol {

/// Settings shared by every batch command. Loaded from a key = value file;
/// every key can also be set individually.
struct RunConfig {
    std::filesystem::path events;   // events.csv file or a directory of them
    std::filesystem::path raw;      // raw.csv file or a directory of them
    std::filesystem::path out = "out";
    std::filesystem::path spec;     // model spec for simulate
    std::filesystem::path presence; // optional day,agent_id,presence_l1 table

    std::size_t basis_size = 10;
    double tau_min = 1e-6;
    double tau_max = 1.0;
    std::size_t baseline_bins = 17;
    double session_open = 8.0 * 3600.0;
    double session_close = 16.5 * 3600.0;
    std::size_t min_events = 1000;
    double ridge = 1e-8;
    std::uint64_t seed = 1;
    std::size_t control_replicates = 10;
    std::size_t window_days = 20;
    std::optional<double> open_price; // P0 in price units; annualization is skipped without it
    double half_tick = 0.25;
    std::size_t jobs = 1;
    std::optional<double> horizon; // simulate; defaults to the session length
    std::size_t days = 1;
    double rv_tau = 300.0;
    std::size_t max_events = 10'000'000;

    /// Sets one field from its text form; throws InvalidArgument naming the key.
    void set(const std::string& key, const std::string& value);
    void load(const std::filesystem::path& path);
    void validate() const;

    [[nodiscard]] SessionWindow session() const { return {session_open, session_close}; }
    [[nodiscard]] FitConfig fit_config() const;
    [[nodiscard]] double simulation_horizon() const { return horizon.value_or(session_close - session_open); }

    /// Key reference with defaults, used by --help.
    static std::string help();
};

} // namespace hawkesvol
