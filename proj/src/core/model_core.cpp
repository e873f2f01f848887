#include "hawkesvol/model_core.hpp"

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/strong_components.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hawkesvol {

namespace {

constexpr double kPivotFloor = 1e-14;
constexpr double kResidualLimit = 1e-10;

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorCode::DimensionMismatch, std::string(what) + " must be square");
    }
}

// Perron root of an irreducible nonnegative block.
double perron_root(const Matrix& block, double tolerance, int max_iterations) {
    const Eigen::Index n = block.rows();
    // Shifting by the largest row sum makes the Perron root strictly dominant
    // in modulus, so periodic (e.g. purely cross) blocks cannot oscillate, and
    // keeps the contraction rate independent of the block's scale.
    const double shift = block.rowwise().sum().maxCoeff();
    Matrix shifted = block;
    shifted.diagonal().array() += shift;

    Vector x = Vector::Ones(n);
    double estimate = 0.0;
    double previous_change = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        Vector y = shifted * x;
        const double norm = y.lpNorm<Eigen::Infinity>();
        // Collatz-Wielandt bounds hold for any positive iterate.
        double upper = 0.0;
        double lower = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (x[i] > 0.0) {
                upper = std::max(upper, y[i] / x[i]);
                lower = std::min(lower, y[i] / x[i]);
            } else {
                lower = 0.0;
            }
        }
        if (upper - lower < tolerance) {
            return std::max(0.0, 0.5 * (upper + lower) - shift);
        }
        const double change = std::abs(norm - estimate);
        estimate = norm;
        x = y / norm;
        if (it > 0) {
            // At the rounding floor the contraction ratio is noise.
            if (change <= 64.0 * std::numeric_limits<double>::epsilon() * norm) {
                return std::max(0.0, estimate - shift);
            }
            const double q = previous_change > 0.0 ? change / previous_change : 1.0;
            if (change < tolerance && q < 1.0 && change * q / (1.0 - q) < tolerance) {
                return std::max(0.0, estimate - shift);
            }
        }
        previous_change = change;
    }
    throw Error(ErrorCode::NonConvergence, "power iteration did not settle");
}

} // namespace

BasisDictionary::BasisDictionary(std::vector<double> decays) : decays_(std::move(decays)) {
    if (decays_.empty()) {
        throw Error(ErrorCode::InvalidArgument, "basis dictionary needs at least one decay");
    }
    for (std::size_t l = 0; l < decays_.size(); ++l) {
        if (!std::isfinite(decays_[l]) || decays_[l] <= 0.0) {
            throw Error(ErrorCode::InvalidArgument, "basis decays must be finite and positive");
        }
        if (l > 0 && decays_[l] <= decays_[l - 1]) {
            throw Error(ErrorCode::InvalidArgument, "basis decays must be strictly increasing");
        }
    }
}

BasisDictionary BasisDictionary::log_spaced(std::size_t count, double tau_min, double tau_max) {
    if (count == 0 || !(tau_min > 0.0) || !(tau_max > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "log-spaced grid needs count >= 1 and positive bounds");
    }
    if (count == 1) {
        return BasisDictionary({1.0 / tau_min});
    }
    if (!(tau_min < tau_max)) {
        throw Error(ErrorCode::InvalidArgument, "log-spaced grid needs tau_min < tau_max");
    }
    std::vector<double> decays(count);
    const double lo = std::log(tau_min);
    const double step = (std::log(tau_max) - lo) / static_cast<double>(count - 1);
    // tau increasing <=> beta decreasing, so fill from the back.
    for (std::size_t k = 0; k < count; ++k) {
        decays[count - 1 - k] = std::exp(-(lo + step * static_cast<double>(k)));
    }
    return BasisDictionary(std::move(decays));
}

double BasisDictionary::evaluate(std::size_t l, double lag) const {
    const double beta = decay(l);
    return lag < 0.0 ? 0.0 : beta * std::exp(-beta * lag);
}

KernelMatrix::KernelMatrix(std::size_t dim, BasisDictionary basis)
    : dim_(dim), basis_(std::move(basis)), coeffs_(dim * dim * basis_.size(), 0.0) {}

bool KernelMatrix::has_negative() const {
    return std::any_of(coeffs_.begin(), coeffs_.end(), [](double c) { return c < 0.0; });
}

PiecewiseBaseline::PiecewiseBaseline(std::vector<double> edges, std::size_t components)
    : edges_(std::move(edges)), components_(components) {
    if (edges_.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "baseline needs at least two edges");
    }
    for (std::size_t k = 1; k < edges_.size(); ++k) {
        if (!(edges_[k] > edges_[k - 1])) {
            throw Error(ErrorCode::InvalidArgument, "baseline edges must be strictly increasing");
        }
    }
    values_.assign(components_ * bins(), 0.0);
}

PiecewiseBaseline PiecewiseBaseline::uniform(double duration, std::size_t bins, std::size_t components) {
    if (!(duration > 0.0) || bins == 0) {
        throw Error(ErrorCode::InvalidArgument, "uniform baseline needs positive duration and bins");
    }
    std::vector<double> edges(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) {
        edges[k] = duration * static_cast<double>(k) / static_cast<double>(bins);
    }
    edges.back() = duration;
    return PiecewiseBaseline(std::move(edges), components);
}

std::size_t PiecewiseBaseline::bin_of(double t) const {
    const auto it = std::upper_bound(edges_.begin() + 1, edges_.end() - 1, t);
    return static_cast<std::size_t>(it - (edges_.begin() + 1));
}

Vector PiecewiseBaseline::time_average() const {
    Vector avg = Vector::Zero(static_cast<Eigen::Index>(components_));
    const double span = end() - start();
    for (std::size_t c = 0; c < components_; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < bins(); ++k) {
            acc += value(c, k) * (edges_[k + 1] - edges_[k]);
        }
        avg[static_cast<Eigen::Index>(c)] = acc / span;
    }
    return avg;
}

std::string component_name(const ComponentLabel& label) {
    return label.agent + ":" + std::string(event_type_name(label.type));
}

void HawkesModel::validate() const {
    const std::size_t n = components.size();
    if (n == 0) {
        throw Error(ErrorCode::InvalidArgument, "model has no components");
    }
    if (kernels.dim() != n || baseline.components() != n || jumps.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "components, kernels, baseline and jumps disagree in size");
    }
    for (std::size_t c = 0; c < n; ++c) {
        const EventType type = components[c].type;
        if (!is_price_type(type) && jumps[c] != 0.0) {
            throw Error(ErrorCode::InvalidArgument,
                        "non-price component " + component_name(components[c]) + " has a nonzero jump");
        }
        if ((type == EventType::PriceUp && !(jumps[c] > 0.0)) ||
            (type == EventType::PriceDown && !(jumps[c] < 0.0))) {
            throw Error(ErrorCode::InvalidArgument,
                        "jump of " + component_name(components[c]) + " has the wrong sign");
        }
        for (std::size_t d = 0; d < c; ++d) {
            if (components[d] == components[c]) {
                throw Error(ErrorCode::InvalidArgument, "duplicate component " + component_name(components[c]));
            }
        }
        for (std::size_t k = 0; k < baseline.bins(); ++k) {
            const double v = baseline.value(c, k);
            if (!std::isfinite(v) || v < 0.0) {
                throw Error(ErrorCode::InvalidArgument, "baseline values must be finite and nonnegative");
            }
        }
    }
    for (double coeff : kernels.coefficients()) {
        if (!std::isfinite(coeff)) {
            throw Error(ErrorCode::InvalidArgument, "kernel coefficients must be finite");
        }
    }
}

Vector HawkesModel::jump_vector() const {
    return Eigen::Map<const Vector>(jumps.data(), static_cast<Eigen::Index>(jumps.size()));
}

Matrix integrate_kernels(const KernelMatrix& kernels) {
    const auto n = static_cast<Eigen::Index>(kernels.dim());
    Matrix phi = Matrix::Zero(n, n);
    for (Eigen::Index t = 0; t < n; ++t) {
        for (Eigen::Index s = 0; s < n; ++s) {
            double acc = 0.0;
            for (double c : kernels.row(static_cast<std::size_t>(t), static_cast<std::size_t>(s))) {
                acc += c;
            }
            phi(t, s) = acc;
        }
    }
    return phi;
}

double spectral_radius(const Matrix& phi, double tolerance, int max_iterations) {
    require_square(phi, "phi");
    const Eigen::Index n = phi.rows();
    if (n == 0) {
        return 0.0;
    }
    // rho(|phi|) is the largest Perron root over the strongly connected
    // blocks. Iterating per block avoids the Jordan chains that reducible
    // matrices (one-way coupling, silent agents) put on the top eigenvalue.
    const Matrix magnitude = phi.cwiseAbs();
    boost::adjacency_list<boost::vecS, boost::vecS, boost::directedS> graph(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && magnitude(i, j) > 0.0) {
                boost::add_edge(static_cast<std::size_t>(j), static_cast<std::size_t>(i), graph);
            }
        }
    }
    std::vector<std::size_t> component(static_cast<std::size_t>(n));
    const std::size_t count = boost::strong_components(
        graph, boost::make_iterator_property_map(component.begin(), boost::get(boost::vertex_index, graph)));
    std::vector<std::vector<Eigen::Index>> members(count);
    for (Eigen::Index i = 0; i < n; ++i) {
        members[component[static_cast<std::size_t>(i)]].push_back(i);
    }
    double radius = 0.0;
    for (const auto& idx : members) {
        const double root = idx.size() == 1 ? magnitude(idx[0], idx[0])
                                            : perron_root(magnitude(idx, idx), tolerance, max_iterations);
        radius = std::max(radius, root);
    }
    return radius;
}

Matrix compute_R(const Matrix& phi) {
    require_square(phi, "phi");
    const Eigen::Index n = phi.rows();
    const double rho = spectral_radius(phi);
    if (rho >= 1.0) {
        throw Error(ErrorCode::Unstable, "spectral radius of |phi| is " + std::to_string(rho));
    }
    const Matrix identity = Matrix::Identity(n, n);
    const Matrix system = identity - phi;
    Eigen::PartialPivLU<Matrix> lu(system);
    const Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
    if (n > 0 && pivots.minCoeff() < kPivotFloor) {
        throw Error(ErrorCode::Singular, "Id - phi is numerically singular");
    }
    Matrix r = lu.inverse();
    for (int refine = 0; refine < 2; ++refine) {
        const Matrix residual = identity - r * system;
        if (n == 0 || residual.cwiseAbs().maxCoeff() < 0.25 * kResidualLimit) {
            break;
        }
        r += residual * r;
    }
    if (n > 0 && (r * system - identity).cwiseAbs().maxCoeff() >= kResidualLimit) {
        throw Error(ErrorCode::Singular, "R residual above tolerance; Id - phi is ill-conditioned");
    }
    return r;
}

Vector mean_intensities(const Matrix& r, const Vector& mean_baseline) {
    if (r.rows() != r.cols() || r.cols() != mean_baseline.size()) {
        throw Error(ErrorCode::DimensionMismatch, "R and baseline sizes differ");
    }
    return r * mean_baseline;
}

BaselineRecovery recover_baselines(const Vector& lambda, const Matrix& phi) {
    if (phi.rows() != phi.cols() || phi.cols() != lambda.size()) {
        throw Error(ErrorCode::DimensionMismatch, "phi and lambda sizes differ");
    }
    BaselineRecovery out;
    out.mu = lambda - phi * lambda;
    for (Eigen::Index i = 0; i < out.mu.size(); ++i) {
        if (out.mu[i] < 0.0) {
            out.negative.push_back(static_cast<std::size_t>(i));
        }
    }
    return out;
}

BranchingSummary summarize(const HawkesModel& model) {
    model.validate();
    BranchingSummary summary;
    summary.phi = integrate_kernels(model.kernels);
    summary.rho_spec = spectral_radius(summary.phi);
    summary.r = compute_R(summary.phi);
    summary.lambda = mean_intensities(summary.r, model.baseline.time_average());
    return summary;
}

Matrix toy_model_R(double phi_self, double phi_cross) {
    const double diag = 1.0 - phi_self;
    const double denom = diag * diag - phi_cross * phi_cross;
    if (std::abs(denom) < 1e-14) {
        throw Error(ErrorCode::DegenerateDenominator, "(1 - phi_S)^2 equals phi_C^2");
    }
    Matrix r(2, 2);
    r << diag / denom, phi_cross / denom, phi_cross / denom, diag / denom;
    return r;
}

double toy_model_sigma2(double mu, double phi_self, double phi_cross) {
    if (phi_self + phi_cross >= 1.0) {
        throw Error(ErrorCode::Unstable, "phi_S + phi_C must be below 1");
    }
    const double plus = 1.0 - phi_self + phi_cross;
    return 2.0 * mu / ((1.0 - phi_self - phi_cross) * plus * plus);
}

} // namespace hawkesvol
