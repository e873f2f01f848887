#include "hawkesvol/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hawkesvol {

namespace {

void require_stable(const BranchingSummary& summary, const Vector& jumps) {
    if (summary.r.size() == 0 || !(summary.rho_spec < 1.0)) {
        throw Error(ErrorCode::Unstable, "branching summary is not stable");
    }
    if (summary.r.rows() != jumps.size() || summary.lambda.size() != jumps.size()) {
        throw Error(ErrorCode::DimensionMismatch, "jump vector does not match the summary");
    }
}

std::vector<Eigen::Index> complement(Eigen::Index n, std::span<const std::size_t> removed) {
    std::vector<bool> drop(static_cast<std::size_t>(n), false);
    for (std::size_t c : removed) {
        if (c >= drop.size()) {
            throw Error(ErrorCode::DimensionMismatch, "agent component index out of range");
        }
        drop[c] = true;
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < n; ++c) {
        if (!drop[static_cast<std::size_t>(c)]) {
            keep.push_back(c);
        }
    }
    return keep;
}

} // namespace

double sigma2_asymptotic(const BranchingSummary& summary, const Vector& jumps) {
    require_stable(summary, jumps);
    const Vector reach = summary.r.transpose() * jumps;
    return summary.lambda.dot(reach.cwiseAbs2());
}

Vector xi_per_event(const BranchingSummary& summary, const Vector& jumps) {
    require_stable(summary, jumps);
    return (summary.r.transpose() * jumps).cwiseAbs();
}

Vector u_vector(const BranchingSummary& summary, const Vector& jumps) {
    require_stable(summary, jumps);
    const Vector xi2 = (summary.r.transpose() * jumps).cwiseAbs2();
    return summary.r.transpose() * xi2;
}

double rho_impact(const BranchingSummary& summary, const Vector& jumps, const Vector& mean_baseline,
                  std::span<const std::size_t> agent_components) {
    require_stable(summary, jumps);
    if (mean_baseline.size() != jumps.size()) {
        throw Error(ErrorCode::DimensionMismatch, "baseline does not match the summary");
    }
    // Zeroing the agent's rows and columns of R is the restriction to the
    // others; keeping full length makes both sums round identically.
    auto masked_sigma2 = [&](const Matrix& r, const Vector& keep) {
        const Vector reach = r.transpose() * jumps.cwiseProduct(keep);
        const Vector lambda = r * mean_baseline.cwiseProduct(keep);
        return lambda.dot(reach.cwiseAbs2());
    };
    const Eigen::Index n = jumps.size();
    const double sigma2 = masked_sigma2(summary.r, Vector::Ones(n));
    if (sigma2 == 0.0) {
        throw Error(ErrorCode::ZeroSigma, "squared volatility is zero");
    }
    Vector keep = Vector::Zero(n);
    for (Eigen::Index c : complement(n, agent_components)) {
        keep[c] = 1.0;
    }
    const Matrix r = keep.asDiagonal() * summary.r * keep.asDiagonal();
    return 1.0 - masked_sigma2(r, keep) / sigma2;
}

double rho_impact_exact(const BranchingSummary& summary, const Vector& jumps, const Vector& mean_baseline,
                        std::span<const std::size_t> agent_components) {
    require_stable(summary, jumps);
    if (mean_baseline.size() != jumps.size()) {
        throw Error(ErrorCode::DimensionMismatch, "baseline does not match the summary");
    }
    const double sigma2 = sigma2_asymptotic(summary, jumps);
    if (sigma2 == 0.0) {
        throw Error(ErrorCode::ZeroSigma, "squared volatility is zero");
    }
    const auto keep = complement(jumps.size(), agent_components);
    if (keep.empty()) {
        return 1.0;
    }
    const Matrix r = compute_R(summary.phi(keep, keep));
    const Vector reach = r.transpose() * jumps(keep);
    const Vector lambda = r * mean_baseline(keep);
    return 1.0 - lambda.dot(reach.cwiseAbs2()) / sigma2;
}

double exogenous_fraction(const Vector& mean_baseline, const Vector& lambda,
                          std::span<const std::size_t> agent_components) {
    if (mean_baseline.size() != lambda.size()) {
        throw Error(ErrorCode::DimensionMismatch, "baseline and intensity sizes differ");
    }
    double mu_sum = 0.0;
    double lambda_sum = 0.0;
    for (std::size_t c : agent_components) {
        if (c >= static_cast<std::size_t>(lambda.size())) {
            throw Error(ErrorCode::DimensionMismatch, "agent component index out of range");
        }
        mu_sum += mean_baseline[static_cast<Eigen::Index>(c)];
        lambda_sum += lambda[static_cast<Eigen::Index>(c)];
    }
    if (!(lambda_sum > 0.0)) {
        throw Error(ErrorCode::ZeroIntensity, "agent has zero mean intensity");
    }
    return mu_sum / lambda_sum;
}

std::vector<RatioPoint> sigma2_mu_ratio(std::span<const DailyDecomposition> daily, std::size_t window) {
    if (daily.empty()) {
        throw Error(ErrorCode::EmptySeries, "no days to evaluate");
    }
    const Eigen::Index n = daily.front().u.size();
    for (const auto& day : daily) {
        if (day.u.size() != n || day.mean_baseline.size() != n) {
            throw Error(ErrorCode::DimensionMismatch, "daily decompositions differ in size");
        }
    }
    const auto days = static_cast<std::ptrdiff_t>(daily.size());
    const auto half = static_cast<std::ptrdiff_t>(window / 2);
    std::vector<RatioPoint> out;
    out.reserve(daily.size());
    for (std::ptrdiff_t t = 0; t < days; ++t) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, t - half);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(days - 1, t + half);
        Vector u_bar = Vector::Zero(n);
        for (std::ptrdiff_t s = lo; s <= hi; ++s) {
            u_bar += daily[static_cast<std::size_t>(s)].u;
        }
        u_bar /= static_cast<double>(hi - lo + 1);

        const auto& today = daily[static_cast<std::size_t>(t)];
        RatioPoint point;
        point.sigma2 = today.mean_baseline.dot(today.u);
        point.sigma2_mu = today.mean_baseline.dot(u_bar);
        point.window_days = static_cast<std::size_t>(hi - lo + 1);
        point.truncated = lo > t - half || hi < t + half;
        if (point.sigma2_mu != 0.0) {
            point.ratio = point.sigma2 / point.sigma2_mu;
        } else {
            point.ratio = point.sigma2 == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
        }
        out.push_back(point);
    }
    return out;
}

double annualize(double sigma2, double half_tick, double open_price) {
    if (!(open_price > 0.0)) {
        throw Error(ErrorCode::NonpositivePrice, "open price must be positive");
    }
    if (sigma2 < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "squared volatility must be nonnegative");
    }
    return std::sqrt(sigma2 * kAnnualizationSeconds) * half_tick / open_price;
}

std::vector<std::size_t> agent_components(std::size_t agent) {
    std::vector<std::size_t> out(kNumEventTypes);
    for (std::size_t a = 0; a < kNumEventTypes; ++a) {
        out[a] = agent * kNumEventTypes + a;
    }
    return out;
}

} // namespace hawkesvol
