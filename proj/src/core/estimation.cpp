#include "hawkesvol/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hawkesvol {

namespace {

constexpr std::size_t kSelfFlow = 0;
constexpr std::size_t kMarketFlow = 1;

// Exponential registers for the self and market flows of one focus agent:
// state[(flow * 8 + type) * L + l] = sum over past source events of
// beta_l * exp(-beta_l * age).
class FlowRegisters {
public:
    explicit FlowRegisters(const BasisDictionary& basis)
        : basis_(basis.size()),
          betas_(basis.decays().begin(), basis.decays().end()),
          state_(Vector::Zero(static_cast<Eigen::Index>(2 * kNumEventTypes * basis.size()))),
          factors_(basis.size(), 1.0) {
        group_beta_ = Eigen::Map<const Vector>(betas_.data(), static_cast<Eigen::Index>(basis_));
    }

    void advance_to(double t) {
        const double dt = t - time_;
        if (dt > 0.0) {
            for (std::size_t l = 0; l < basis_; ++l) {
                factors_[l] = std::exp(-betas_[l] * dt);
            }
            for (std::size_t g = 0; g < 2 * kNumEventTypes; ++g) {
                for (std::size_t l = 0; l < basis_; ++l) {
                    state_[static_cast<Eigen::Index>(g * basis_ + l)] *= factors_[l];
                }
            }
        }
        time_ = std::max(time_, t);
    }

    [[nodiscard]] Eigen::Index group_offset(std::size_t flow, EventType type) const {
        return static_cast<Eigen::Index>((flow * kNumEventTypes + type_index(type)) * basis_);
    }

    void jump(Eigen::Index offset) { state_.segment(offset, static_cast<Eigen::Index>(basis_)) += group_beta_; }

    [[nodiscard]] const Vector& state() const noexcept { return state_; }
    [[nodiscard]] const Vector& group_beta() const noexcept { return group_beta_; }
    [[nodiscard]] double beta_of(Eigen::Index feature) const {
        return betas_[static_cast<std::size_t>(feature) % basis_];
    }
    [[nodiscard]] Eigen::Index basis() const noexcept { return static_cast<Eigen::Index>(basis_); }
    [[nodiscard]] Eigen::Index size() const noexcept { return state_.size(); }

private:
    std::size_t basis_;
    std::vector<double> betas_;
    Vector state_;
    Vector group_beta_;
    std::vector<double> factors_;
    double time_ = -std::numeric_limits<double>::infinity();
};

void check_edges(const std::vector<double>& edges) {
    if (edges.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "baseline edges need at least two entries");
    }
    for (std::size_t k = 1; k < edges.size(); ++k) {
        if (!(edges[k] > edges[k - 1])) {
            throw Error(ErrorCode::InvalidArgument, "baseline edges must be strictly increasing");
        }
    }
}

std::size_t bin_index(const std::vector<double>& edges, double t) {
    const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, t);
    return static_cast<std::size_t>(it - (edges.begin() + 1));
}

std::size_t coeff_index(std::size_t target, std::size_t source, std::size_t l, std::size_t basis) {
    return (target * kNumEventTypes + source) * basis + l;
}

} // namespace

FilteredFeatures filter_events(const EventStream& stream, const std::string& focus_agent,
                               const BasisDictionary& basis, const std::vector<double>& edges,
                               const std::vector<double>& eval_times) {
    if (!stream.is_sorted()) {
        throw Error(ErrorCode::UnsortedInput, "event stream is not time-ordered");
    }
    check_edges(edges);
    if (!std::is_sorted(eval_times.begin(), eval_times.end())) {
        throw Error(ErrorCode::InvalidArgument, "evaluation times must be ordered");
    }
    const auto focus = stream.find_agent(focus_agent);

    FilteredFeatures out;
    out.layout = FeatureLayout{edges.size() - 1, basis.size()};
    out.times = eval_times;
    out.values = Matrix::Zero(static_cast<Eigen::Index>(eval_times.size()),
                              static_cast<Eigen::Index>(out.layout.size()));

    FlowRegisters registers(basis);
    const auto& events = stream.events();
    std::size_t next = 0;
    const auto kb = static_cast<Eigen::Index>(out.layout.bins);
    for (std::size_t row = 0; row < eval_times.size(); ++row) {
        const double t = eval_times[row];
        while (next < events.size() && events[next].t < t) {
            const Event& e = events[next++];
            registers.advance_to(e.t);
            const std::size_t flow = (focus && e.agent == *focus) ? kSelfFlow : kMarketFlow;
            registers.jump(registers.group_offset(flow, e.type));
        }
        registers.advance_to(t);
        const auto r = static_cast<Eigen::Index>(row);
        if (t >= edges.front() && t <= edges.back()) {
            out.values(r, static_cast<Eigen::Index>(bin_index(edges, t))) = 1.0;
        }
        out.values.row(r).segment(kb, registers.size()) = registers.state().transpose();
    }
    return out;
}

NormalEquations assemble_normal_equations(const EventStream& stream, const std::string& focus_agent,
                                          const BasisDictionary& basis, const std::vector<double>& edges) {
    if (!stream.is_sorted()) {
        throw Error(ErrorCode::UnsortedInput, "event stream is not time-ordered");
    }
    check_edges(edges);
    const double t0 = edges.front();
    const double t1 = edges.back();
    const double horizon = t1 - t0;
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw Error(ErrorCode::EmptyHorizon, "integration window is empty");
    }
    const auto focus = stream.find_agent(focus_agent);

    NormalEquations ne;
    ne.layout = FeatureLayout{edges.size() - 1, basis.size()};
    ne.horizon = horizon;
    ne.target_counts.fill(0);
    const auto nbins = static_cast<Eigen::Index>(ne.layout.bins);

    FlowRegisters reg(basis);
    const Eigen::Index dim = reg.size();
    const Eigen::Index nl = reg.basis();

    // products(j, j') accumulates S_j S_j'(t0) plus every jump of S_j S_j'
    // inside the window; then int S_j S_j' = (products - S_j S_j'(t1)) / (b_j + b_j')
    // because d(S_j S_j') = -(b_j + b_j') S_j S_j' ds between events.
    Matrix products = Matrix::Zero(dim, dim);
    // cross(k, j) accumulates S_j(e_k-) + b_j * (#jumps of j in bin k) - S_j(e_{k+1}-),
    // which equals b_j * int_{bin k} S_j.
    Matrix cross = Matrix::Zero(nbins, dim);
    Matrix rhs = Matrix::Zero(static_cast<Eigen::Index>(ne.layout.size()), kNumEventTypes);

    const auto& events = stream.events();
    std::size_t i = 0;
    auto flow_of = [&](const Event& e) { return (focus && e.agent == *focus) ? kSelfFlow : kMarketFlow; };

    for (; i < events.size() && events[i].t < t0; ++i) {
        reg.advance_to(events[i].t);
        reg.jump(reg.group_offset(flow_of(events[i]), events[i].type));
    }
    reg.advance_to(t0);
    products.noalias() += reg.state() * reg.state().transpose();
    cross.row(0) += reg.state().transpose();

    Eigen::Index bin = 0;
    auto close_bins_until = [&](double t) {
        while (bin + 1 < nbins && edges[static_cast<std::size_t>(bin + 1)] <= t) {
            reg.advance_to(edges[static_cast<std::size_t>(bin + 1)]);
            cross.row(bin) -= reg.state().transpose();
            ++bin;
            cross.row(bin) += reg.state().transpose();
        }
    };

    while (i < events.size() && events[i].t < t1) {
        const double t = events[i].t;
        close_bins_until(t);
        reg.advance_to(t);
        std::size_t group_end = i;
        while (group_end < events.size() && events[group_end].t == t) {
            ++group_end;
        }
        // Every target in a tie group sees the state before any of the group's jumps.
        for (std::size_t k = i; k < group_end; ++k) {
            const Event& e = events[k];
            if (focus && e.agent == *focus) {
                const auto col = static_cast<Eigen::Index>(type_index(e.type));
                rhs(bin, col) += 1.0;
                rhs.col(col).segment(nbins, dim) += reg.state();
                ++ne.target_counts[type_index(e.type)];
            }
        }
        for (std::size_t k = i; k < group_end; ++k) {
            const Eigen::Index g = reg.group_offset(flow_of(events[k]), events[k].type);
            products.middleRows(g, nl).noalias() += reg.group_beta() * reg.state().transpose();
            reg.jump(g);
            products.middleCols(g, nl).noalias() += reg.state() * reg.group_beta().transpose();
            cross.row(bin).segment(g, nl) += reg.group_beta().transpose();
        }
        i = group_end;
    }
    close_bins_until(t1);
    reg.advance_to(t1);
    cross.row(nbins - 1) -= reg.state().transpose();
    products.noalias() -= reg.state() * reg.state().transpose();

    Matrix gram = Matrix::Zero(static_cast<Eigen::Index>(ne.layout.size()),
                               static_cast<Eigen::Index>(ne.layout.size()));
    for (Eigen::Index k = 0; k < nbins; ++k) {
        gram(k, k) = edges[static_cast<std::size_t>(k + 1)] - edges[static_cast<std::size_t>(k)];
        for (Eigen::Index j = 0; j < dim; ++j) {
            const double v = cross(k, j) / reg.beta_of(j);
            gram(k, nbins + j) = v;
            gram(nbins + j, k) = v;
        }
    }
    for (Eigen::Index j = 0; j < dim; ++j) {
        for (Eigen::Index jp = j; jp < dim; ++jp) {
            const double v = 0.5 * (products(j, jp) + products(jp, j)) / (reg.beta_of(j) + reg.beta_of(jp));
            gram(nbins + j, nbins + jp) = v;
            gram(nbins + jp, nbins + j) = v;
        }
    }
    ne.gram = gram / horizon;
    ne.rhs = rhs / horizon;
    return ne;
}

double contrast_value(const Matrix& gram, const Vector& rhs, const Vector& theta) {
    return theta.dot(gram * theta) - 2.0 * rhs.dot(theta);
}

Vector solve_least_squares(const Matrix& gram, const Vector& rhs, double ridge) {
    if (gram.rows() != gram.cols() || gram.rows() != rhs.size()) {
        throw Error(ErrorCode::DimensionMismatch, "normal equations have inconsistent sizes");
    }
    const Eigen::Index n = gram.rows();
    if (n == 0) {
        return Vector();
    }
    if (ridge < 0.0) {
        ridge = 1e-8 * gram.trace() / static_cast<double>(n);
    }
    Matrix system = gram;
    system.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularSystem, "Cholesky factorization failed");
    }
    Vector theta = llt.solve(rhs);
    if (!theta.allFinite()) {
        throw Error(ErrorCode::SingularSystem, "solution is not finite");
    }
    return theta;
}

Matrix solve_equilibrated(const Matrix& gram, const Matrix& rhs, double relative_ridge) {
    if (gram.rows() != gram.cols() || gram.rows() != rhs.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "normal equations have inconsistent sizes");
    }
    const Eigen::Index n = gram.rows();
    Vector scale(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double d = gram(j, j);
        scale[j] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    }
    Matrix scaled = scale.asDiagonal() * gram * scale.asDiagonal();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (scale[j] == 0.0) {
            scaled(j, j) = 1.0; // inert column, its rhs is zero after scaling
        }
    }
    const Matrix scaled_rhs = scale.asDiagonal() * rhs;
    const double ridge = relative_ridge * scaled.trace() / static_cast<double>(std::max<Eigen::Index>(n, 1));

    Matrix system = scaled;
    system.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularSystem, "Cholesky factorization failed");
    }
    Matrix theta = llt.solve(scaled_rhs);
    return scale.asDiagonal() * theta;
}

std::vector<double> FitConfig::edges_for(const EventStream& stream) const {
    if (!edges.empty()) {
        return edges;
    }
    return PiecewiseBaseline::uniform(stream.duration(), baseline_bins, 1).edges();
}

double AgentFitResult::self_at(EventType target, EventType source, std::size_t l) const {
    return self_coeffs.at(coeff_index(type_index(target), type_index(source), l, basis_size()));
}

double AgentFitResult::market_at(EventType target, EventType source, std::size_t l) const {
    return market_coeffs.at(coeff_index(type_index(target), type_index(source), l, basis_size()));
}

std::size_t AgentFitResult::total_events() const {
    std::size_t total = 0;
    for (auto c : counts) {
        total += c;
    }
    return total;
}

std::array<double, kNumEventTypes> estimate_jumps(const EventStream& stream, AgentId agent) {
    std::array<double, kNumEventTypes> delta{};
    std::array<double, kNumEventTypes> sum{};
    std::array<std::size_t, kNumEventTypes> count{};
    for (const Event& e : stream.events()) {
        if (e.agent == agent && is_price_type(e.type)) {
            sum[type_index(e.type)] += e.delta;
            ++count[type_index(e.type)];
        }
    }
    for (EventType type : {EventType::PriceUp, EventType::PriceDown}) {
        const auto k = type_index(type);
        if (count[k] < 3) {
            delta[k] = type == EventType::PriceUp ? 1.0 : -1.0;
        } else {
            delta[k] = sum[k] / static_cast<double>(count[k]);
        }
    }
    return delta;
}

AgentFitResult fit_agent_vs_market(const EventStream& stream, const std::string& agent,
                                   const FitConfig& config) {
    const auto id = stream.find_agent(agent);
    const auto edges = config.edges_for(stream);
    check_edges(edges);

    std::size_t in_window = 0;
    if (id) {
        for (const Event& e : stream.events()) {
            if (e.agent == *id && e.t >= edges.front() && e.t < edges.back()) {
                ++in_window;
            }
        }
    }
    if (!id || in_window == 0 || in_window < config.min_events) {
        throw Error(ErrorCode::InsufficientEvents, "agent " + agent + " has " + std::to_string(in_window) +
                                                       " events, below the threshold of " +
                                                       std::to_string(config.min_events));
    }

    const NormalEquations ne = assemble_normal_equations(stream, agent, config.basis, edges);
    const std::size_t nl = config.basis.size();
    const std::size_t nbins = ne.layout.bins;

    AgentFitResult fit;
    fit.agent = agent;
    fit.day = stream.day();
    fit.decays = config.basis.decays();
    fit.edges = edges;
    fit.baseline = Matrix::Zero(kNumEventTypes, static_cast<Eigen::Index>(nbins));
    fit.self_coeffs.assign(kNumEventTypes * kNumEventTypes * nl, 0.0);
    fit.market_coeffs.assign(kNumEventTypes * kNumEventTypes * nl, 0.0);
    fit.counts = ne.target_counts;
    fit.delta = estimate_jumps(stream, *id);
    fit.failed.fill(false);
    for (std::size_t a = 0; a < kNumEventTypes; ++a) {
        fit.rate[a] = static_cast<double>(ne.target_counts[a]) / ne.horizon;
    }

    Matrix theta;
    try {
        theta = solve_equilibrated(ne.gram, ne.rhs, config.relative_ridge);
    } catch (const Error& err) {
        fit.failed.fill(true);
        fit.flags.push_back(std::string("solver_failed:all:") + err.what());
        return fit;
    }

    for (std::size_t a = 0; a < kNumEventTypes; ++a) {
        const auto col = static_cast<Eigen::Index>(a);
        const Vector th = theta.col(col);
        if (!th.allFinite()) {
            fit.failed[a] = true;
            fit.flags.push_back("solver_failed:" + std::string(event_type_name(static_cast<EventType>(a))));
            continue;
        }
        fit.contrast[a] = contrast_value(ne.gram, ne.rhs.col(col), th);
        for (std::size_t k = 0; k < nbins; ++k) {
            fit.baseline(col, static_cast<Eigen::Index>(k)) = th[static_cast<Eigen::Index>(k)];
        }
        for (EventType source : kAllEventTypes) {
            for (std::size_t l = 0; l < nl; ++l) {
                const std::size_t idx = coeff_index(a, type_index(source), l, nl);
                fit.self_coeffs[idx] = th[static_cast<Eigen::Index>(ne.layout.self(source, l))];
                fit.market_coeffs[idx] = th[static_cast<Eigen::Index>(ne.layout.market(source, l))];
            }
        }
    }
    return fit;
}

const BranchingSummary& GlobalModel::require_stable() const {
    if (!summary) {
        throw Error(ErrorCode::Unstable, instability.empty() ? "global model is unstable" : instability);
    }
    return *summary;
}

GlobalModel assemble_global(std::span<const AgentSlot> slots, const Vector& lambda) {
    const std::size_t agents = slots.size();
    const std::size_t n = agents * kNumEventTypes;
    if (agents == 0) {
        throw Error(ErrorCode::InvalidArgument, "no agents to assemble");
    }
    if (static_cast<std::size_t>(lambda.size()) != n) {
        throw Error(ErrorCode::DimensionMismatch, "lambda must have 8 entries per agent");
    }

    const AgentFitResult* reference = nullptr;
    for (const auto& slot : slots) {
        if (slot.fit) {
            if (reference && slot.fit->decays != reference->decays) {
                throw Error(ErrorCode::InvalidArgument, "agent fits use different basis dictionaries");
            }
            if (!reference) {
                reference = &*slot.fit;
            }
        }
    }
    BasisDictionary basis(reference ? reference->decays : std::vector<double>{1.0});
    const std::size_t nl = basis.size();
    const double horizon = reference ? reference->edges.back() - reference->edges.front() : 1.0;

    std::vector<ComponentLabel> components;
    std::vector<double> jumps;
    components.reserve(n);
    for (const auto& slot : slots) {
        for (EventType type : kAllEventTypes) {
            components.push_back({slot.agent, type});
            double d = 0.0;
            if (is_price_type(type)) {
                d = slot.fit ? slot.fit->delta[type_index(type)] : (type == EventType::PriceUp ? 1.0 : -1.0);
            }
            jumps.push_back(d);
        }
    }

    KernelMatrix kernels(n, basis);
    for (std::size_t i = 0; i < agents; ++i) {
        const auto& fit = slots[i].fit;
        if (!fit) {
            continue;
        }
        for (std::size_t j = 0; j < agents; ++j) {
            if (!slots[j].fit) {
                continue; // absent sources excite nobody
            }
            const auto& coeffs = (i == j) ? fit->self_coeffs : fit->market_coeffs;
            for (std::size_t a = 0; a < kNumEventTypes; ++a) {
                for (std::size_t b = 0; b < kNumEventTypes; ++b) {
                    for (std::size_t l = 0; l < nl; ++l) {
                        kernels.at(i * kNumEventTypes + a, j * kNumEventTypes + b, l) =
                            coeffs[coeff_index(a, b, l, nl)];
                    }
                }
            }
        }
    }

    GlobalModel global{HawkesModel{components, kernels, PiecewiseBaseline({0.0, horizon}, n), jumps},
                       Matrix(), lambda, Vector(), {}, std::nullopt, {}};
    global.phi = integrate_kernels(global.model.kernels);
    const BaselineRecovery recovered = recover_baselines(lambda, global.phi);
    global.mean_baseline = recovered.mu;
    global.negative_baselines = recovered.negative;
    for (std::size_t c = 0; c < n; ++c) {
        global.model.baseline.value(c, 0) = recovered.mu[static_cast<Eigen::Index>(c)];
    }

    try {
        BranchingSummary summary;
        summary.phi = global.phi;
        summary.rho_spec = spectral_radius(global.phi);
        summary.r = compute_R(global.phi);
        summary.lambda = lambda;
        global.summary = std::move(summary);
    } catch (const Error& err) {
        global.instability = err.what();
    }
    return global;
}

} // namespace hawkesvol
