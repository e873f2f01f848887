#pragma once

#include "hawkesvol/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace hawkesvol {

/// Dictionary of unit-mass exponential kernels g(s) = beta * exp(-beta * s).
class BasisDictionary {
public:
    explicit BasisDictionary(std::vector<double> decays);

    /// L decays beta = 1/tau with tau log-spaced on [tau_min, tau_max],
    /// returned in increasing order of beta.
    static BasisDictionary log_spaced(std::size_t count, double tau_min, double tau_max);

    [[nodiscard]] std::size_t size() const noexcept { return decays_.size(); }
    [[nodiscard]] double decay(std::size_t l) const { return decays_.at(l); }
    [[nodiscard]] const std::vector<double>& decays() const noexcept { return decays_; }
    [[nodiscard]] double evaluate(std::size_t l, double lag) const;

    bool operator==(const BasisDictionary&) const = default;

private:
    std::vector<double> decays_;
};

/// Coefficient tensor alpha[target][source][l] over a shared dictionary.
/// Coefficients may be negative.
class KernelMatrix {
public:
    KernelMatrix(std::size_t dim, BasisDictionary basis);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] const BasisDictionary& basis() const noexcept { return basis_; }

    double& at(std::size_t target, std::size_t source, std::size_t l) {
        return coeffs_[index(target, source, l)];
    }
    [[nodiscard]] double at(std::size_t target, std::size_t source, std::size_t l) const {
        return coeffs_[index(target, source, l)];
    }
    [[nodiscard]] std::span<const double> row(std::size_t target, std::size_t source) const {
        return {coeffs_.data() + index(target, source, 0), basis_.size()};
    }
    [[nodiscard]] const std::vector<double>& coefficients() const noexcept { return coeffs_; }
    [[nodiscard]] bool has_negative() const;

private:
    [[nodiscard]] std::size_t index(std::size_t target, std::size_t source, std::size_t l) const {
        return (target * dim_ + source) * basis_.size() + l;
    }

    std::size_t dim_;
    BasisDictionary basis_;
    std::vector<double> coeffs_;
};

/// Piecewise-constant baseline: K bins between K+1 edges (seconds from
/// session open), one rate per (component, bin).
class PiecewiseBaseline {
public:
    PiecewiseBaseline(std::vector<double> edges, std::size_t components);

    /// K equal bins over [0, duration].
    static PiecewiseBaseline uniform(double duration, std::size_t bins, std::size_t components);

    [[nodiscard]] std::size_t bins() const noexcept { return edges_.size() - 1; }
    [[nodiscard]] std::size_t components() const noexcept { return components_; }
    [[nodiscard]] const std::vector<double>& edges() const noexcept { return edges_; }
    [[nodiscard]] double start() const noexcept { return edges_.front(); }
    [[nodiscard]] double end() const noexcept { return edges_.back(); }

    double& value(std::size_t component, std::size_t bin) { return values_[component * bins() + bin]; }
    [[nodiscard]] double value(std::size_t component, std::size_t bin) const {
        return values_[component * bins() + bin];
    }
    /// Bin containing t; times before the first edge map to bin 0 and times at
    /// or after the last edge map to the last bin.
    [[nodiscard]] std::size_t bin_of(double t) const;
    [[nodiscard]] Vector time_average() const;

private:
    std::vector<double> edges_;
    std::size_t components_;
    std::vector<double> values_;
};

struct ComponentLabel {
    std::string agent;
    EventType type;

    bool operator==(const ComponentLabel&) const = default;
};

std::string component_name(const ComponentLabel& label);

struct HawkesModel {
    std::vector<ComponentLabel> components;
    KernelMatrix kernels;
    PiecewiseBaseline baseline;
    std::vector<double> jumps; // signed half-ticks, zero off P+/P-

    [[nodiscard]] std::size_t dim() const noexcept { return components.size(); }
    /// Throws InvalidArgument / DimensionMismatch on violated invariants.
    void validate() const;
    [[nodiscard]] Vector jump_vector() const;
};

struct BranchingSummary {
    Matrix phi;
    Matrix r;
    Vector lambda;
    double rho_spec = 0.0;
};

struct BaselineRecovery {
    Vector mu;
    std::vector<std::size_t> negative; // indices flagged as negative
};

Matrix integrate_kernels(const KernelMatrix& kernels);

/// Spectral radius of |phi| by power iteration on |phi| + Id.
double spectral_radius(const Matrix& phi, double tolerance = 1e-10, int max_iterations = 10000);

Matrix compute_R(const Matrix& phi);

Vector mean_intensities(const Matrix& r, const Vector& mean_baseline);

BaselineRecovery recover_baselines(const Vector& lambda, const Matrix& phi);

/// Full summary for a model: phi, R, Lambda = R * time-averaged baseline.
BranchingSummary summarize(const HawkesModel& model);

Matrix toy_model_R(double phi_self, double phi_cross);

double toy_model_sigma2(double mu, double phi_self, double phi_cross);

} // namespace hawkesvol
