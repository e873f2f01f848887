#pragma once

#include "hawkesvol/model_core.hpp"

#include <span>
#include <string>
#include <vector>

namespace hawkesvol {

// All volatilities are in half-ticks^2 per second until annualize().

double sigma2_asymptotic(const BranchingSummary& summary, const Vector& jumps);

/// xi_m = |sum_j delta_j R(j, m)|: mean long-run price displacement caused by
/// one event of component m.
Vector xi_per_event(const BranchingSummary& summary, const Vector& jumps);

/// u_i = sum_j R(j, i) xi_j^2, so that mu . u = sigma2 whenever Lambda = R mu.
Vector u_vector(const BranchingSummary& summary, const Vector& jumps);

/// Fraction of sigma2 attributable to activity triggered by the agent owning
/// `agent_components`. Uses the full R.
double rho_impact(const BranchingSummary& summary, const Vector& jumps, const Vector& mean_baseline,
                  std::span<const std::size_t> agent_components);

/// Same quantity with R re-inverted after removing the agent's components.
double rho_impact_exact(const BranchingSummary& summary, const Vector& jumps, const Vector& mean_baseline,
                        std::span<const std::size_t> agent_components);

/// sum of the agent's baselines over the sum of its mean intensities.
double exogenous_fraction(const Vector& mean_baseline, const Vector& lambda, std::span<const std::size_t> agent_components);

struct DailyDecomposition {
    Vector mean_baseline;
    Vector u;
};

struct RatioPoint {
    double sigma2 = 0.0;
    double sigma2_mu = 0.0;
    double ratio = 1.0;
    std::size_t window_days = 0; // days actually averaged, smaller near the edges
    bool truncated = false;
};

/// sigma2_t / sigma2_{mu,t} with u replaced by its centered mean over
/// [t - window/2, t + window/2], clipped to the series.
std::vector<RatioPoint> sigma2_mu_ratio(std::span<const DailyDecomposition> daily, std::size_t window = 20);

inline constexpr double kAnnualizationSeconds = 8.5 * 3600.0 * 252.0;

double annualize(double sigma2, double half_tick, double open_price);

/// Component indices of `agent` in a slot-major layout with eight types per agent.
std::vector<std::size_t> agent_components(std::size_t agent);

} // namespace hawkesvol
