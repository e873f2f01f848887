#pragma once

#include "hawkesvol/event_stream.hpp"
#include "hawkesvol/model_core.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hawkesvol {

/// Column layout of the agent-vs-market design: K baseline indicators, then
/// the self block (type-major, L per type), then the market block.
struct FeatureLayout {
    std::size_t bins = 1;
    std::size_t basis = 1;

    [[nodiscard]] std::size_t kernel_features() const noexcept { return 2 * kNumEventTypes * basis; }
    [[nodiscard]] std::size_t size() const noexcept { return bins + kernel_features(); }
    [[nodiscard]] std::size_t baseline(std::size_t k) const noexcept { return k; }
    [[nodiscard]] std::size_t self(EventType source, std::size_t l) const noexcept {
        return bins + type_index(source) * basis + l;
    }
    [[nodiscard]] std::size_t market(EventType source, std::size_t l) const noexcept {
        return bins + (kNumEventTypes + type_index(source)) * basis + l;
    }
};

struct FilteredFeatures {
    FeatureLayout layout;
    std::vector<double> times;
    Matrix values; // one row per evaluation time
};

/// Exact recursive evaluation of the indicator, self and market features at
/// each evaluation time. Events at exactly t only enter features after t.
FilteredFeatures filter_events(const EventStream& stream, const std::string& focus_agent,
                               const BasisDictionary& basis, const std::vector<double>& edges,
                               const std::vector<double>& eval_times);

/// Quadratic form of the least-squares contrast for all eight target types of
/// one focus agent: C(theta) = theta' A theta - 2 b' theta, where
/// A = T^-1 int X X' ds (shared across targets) and column `type` of `rhs`
/// is T^-1 sum over that type's events of X(t-).
struct NormalEquations {
    FeatureLayout layout;
    double horizon = 0.0;
    Matrix gram;
    Matrix rhs;
    std::array<std::size_t, kNumEventTypes> target_counts{};
};

NormalEquations assemble_normal_equations(const EventStream& stream, const std::string& focus_agent,
                                          const BasisDictionary& basis, const std::vector<double>& edges);

double contrast_value(const Matrix& gram, const Vector& rhs, const Vector& theta);

/// Solves (A + ridge Id) theta = b with a Cholesky factorization. A negative
/// ridge selects the default 1e-8 * trace(A) / dim.
Vector solve_least_squares(const Matrix& gram, const Vector& rhs, double ridge = -1.0);

/// Diagonal equilibration followed by solve_least_squares with the default
/// relative ridge on the scaled system; zero-variance columns solve to zero.
Matrix solve_equilibrated(const Matrix& gram, const Matrix& rhs, double relative_ridge = 1e-8);

struct FitConfig {
    BasisDictionary basis = BasisDictionary::log_spaced(10, 1e-6, 1.0);
    std::size_t baseline_bins = 17;
    std::vector<double> edges; // empty: baseline_bins equal bins over the session
    std::size_t min_events = 1000;
    double relative_ridge = 1e-8;

    [[nodiscard]] std::vector<double> edges_for(const EventStream& stream) const;
};

struct AgentFitResult {
    std::string agent;
    std::string day;
    std::vector<double> decays;
    std::vector<double> edges;
    Matrix baseline;                  // 8 x K
    std::vector<double> self_coeffs;   // [target][source][l]
    std::vector<double> market_coeffs; // [target][source][l]
    std::array<double, kNumEventTypes> delta{};
    std::array<double, kNumEventTypes> contrast{};
    std::array<double, kNumEventTypes> rate{}; // empirical events / second
    std::array<std::size_t, kNumEventTypes> counts{};
    std::array<bool, kNumEventTypes> failed{};
    std::vector<std::string> flags;

    [[nodiscard]] std::size_t basis_size() const noexcept { return decays.size(); }
    [[nodiscard]] double self_at(EventType target, EventType source, std::size_t l) const;
    [[nodiscard]] double market_at(EventType target, EventType source, std::size_t l) const;
    [[nodiscard]] std::size_t total_events() const;
};

AgentFitResult fit_agent_vs_market(const EventStream& stream, const std::string& agent,
                                   const FitConfig& config);

/// Mean signed jump per price type; fewer than three events falls back to +1/-1.
std::array<double, kNumEventTypes> estimate_jumps(const EventStream& stream, AgentId agent);

struct AgentSlot {
    std::string agent;
    std::optional<AgentFitResult> fit; // nullopt: absent that day
};

struct GlobalModel {
    HawkesModel model; // one baseline bin holding the recovered mean baseline
    Matrix phi;
    Vector lambda;
    Vector mean_baseline;
    std::vector<std::size_t> negative_baselines;
    std::optional<BranchingSummary> summary;
    std::string instability;

    [[nodiscard]] bool stable() const noexcept { return summary.has_value(); }
    /// Throws Unstable when the stitched phi could not be inverted.
    const BranchingSummary& require_stable() const;
    [[nodiscard]] std::size_t agent_count() const noexcept { return model.dim() / kNumEventTypes; }
};

/// Tiles per-agent self/market blocks into the 8M x 8M kernel tensor, zeroes
/// absent agents and recovers the mean baseline from the empirical rates.
/// `lambda` is ordered slot-major, type-minor.
GlobalModel assemble_global(std::span<const AgentSlot> slots, const Vector& lambda);

} // namespace hawkesvol
