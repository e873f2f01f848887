#pragma once

#include "hawkesvol/event_stream.hpp"
#include "hawkesvol/model_core.hpp"

#include <cstdint>
#include <vector>

namespace hawkesvol {

struct SimulationOptions {
    std::size_t max_events = 10'000'000;
    double session_open = 8.0 * 3600.0;
    std::string day;
};

/// Ogata thinning over the clamped intensity max(0, lambda). The baseline is
/// read relative to its own first edge, so the simulated window is
/// [0, horizon) and must satisfy horizon <= baseline span for non-periodic use;
/// beyond the last edge the last bin's rates persist.
EventStream simulate_thinning(const HawkesModel& model, double horizon, std::uint64_t seed,
                              const SimulationOptions& options = {});

/// Branching (immigrant + offspring) construction. Requires nonnegative
/// kernels and a stable phi.
EventStream simulate_cluster(const HawkesModel& model, double horizon, std::uint64_t seed,
                             const SimulationOptions& options = {});

struct PricePath {
    double initial = 0.0; // half-ticks
    double start = 0.0;
    double end = 0.0;
    std::vector<double> jump_times;
    std::vector<double> jump_sizes;

    /// P(t) = initial + sum of jumps at times <= t.
    [[nodiscard]] double at(double t) const;
    [[nodiscard]] double final_price() const;
};

PricePath build_price_path(const EventStream& stream, double initial);

/// Mean squared increment over consecutive non-overlapping windows of length
/// tau starting at the path start, divided by tau.
double realized_variance(const PricePath& path, double tau);

/// Per-window squared increments (the samples averaged by realized_variance).
std::vector<double> squared_increments(const PricePath& path, double tau);

} // namespace hawkesvol
