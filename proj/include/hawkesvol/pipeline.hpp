#pragma once

#include "hawkesvol/attribution.hpp"
#include "hawkesvol/config.hpp"
#include "hawkesvol/estimation.hpp"
#include "hawkesvol/io.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hawkesvol {

inline constexpr const char* kRemainderAgent = "__rest__";

/// Outcome of a batch command. Hard failures throw; `partial` marks runs in
/// which some days or items failed and were flagged in the outputs.
struct CommandReport {
    bool partial = false;
    std::vector<std::string> notes;
};

/// One day's agent-vs-market fits: every agent above the event threshold plus
/// the remainder agent aggregating everyone else.
struct DayFit {
    std::string day;
    double session_open = 0.0;
    double duration = 0.0;
    std::vector<std::string> eligible;
    std::vector<std::string> remainder_members;
    std::optional<AgentFitResult> remainder;
    std::vector<AgentFitResult> fits; // same order as `eligible`
    std::optional<double> realized_variance;
    double rv_tau = 0.0;
    std::vector<std::string> flags;
};

/// Throws NoEligibleAgents when no agent reaches the threshold.
DayFit fit_day(const EventStream& stream, const RunConfig& config);
Json day_fit_to_json(const DayFit& fit);
DayFit day_fit_from_json(const Json& doc);

struct ComponentReport {
    std::string agent;
    EventType type = EventType::PriceUp;
    double lambda = 0.0;
    double mean_baseline = 0.0;
    double delta = 0.0;
    double xi = 0.0;
    double u = 0.0;
};

struct AgentReport {
    std::string agent;
    bool present = false;
    double events = 0.0;
    std::optional<double> rho;
    std::optional<double> exogenous_fraction;
    std::optional<double> xi; // intensity-weighted over the agent's components
};

struct DayAttribution {
    std::string day;
    bool stable = false;
    std::string instability;
    double sigma2 = 0.0;
    double sigma2_poisson = 0.0;
    std::optional<double> realized_variance;
    std::optional<double> annualized;
    double spectral_radius = 0.0;
    std::vector<ComponentReport> components;
    std::vector<AgentReport> agents;
    std::vector<std::string> negative_baselines;
    Vector mean_baseline;
    Vector u;
};

/// Stitches the day's fits over `universe` (agents missing that day are
/// zeroed) and evaluates the attribution quantities.
DayAttribution attribute_day(const DayFit& fit, const std::vector<std::string>& universe, const RunConfig& config);

/// Agent universe across days: sorted eligible names, then the remainder.
std::vector<std::string> agent_universe(const std::vector<DayFit>& days);

/// A single file, or every *.csv / *.json (by `extension`) in a directory, sorted by name.
std::vector<std::filesystem::path> list_inputs(const std::filesystem::path& path, const std::string& extension);

/// Independent seed for (base, a, b) via splitmix64 mixing.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

CommandReport run_simulate(const RunConfig& config);
CommandReport run_fit(const RunConfig& config);
CommandReport run_attribute(const RunConfig& config);
CommandReport run_control(const RunConfig& config);
CommandReport run_features(const RunConfig& config);

} // namespace hawkesvol
