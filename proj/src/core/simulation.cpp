#include "hawkesvol/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace hawkesvol {

namespace {

EventStream make_stream(const HawkesModel& model, double horizon, const SimulationOptions& options,
                        std::vector<AgentId>& component_agent) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw Error(ErrorCode::InvalidArgument, "horizon must be positive and finite");
    }
    model.validate();
    EventStream stream(options.session_open, horizon, options.day);
    component_agent.clear();
    for (const auto& label : model.components) {
        component_agent.push_back(stream.intern(label.agent));
    }
    return stream;
}

void check_cap(std::size_t count, const SimulationOptions& options) {
    if (count > options.max_events) {
        throw Error(ErrorCode::ExplosionGuard,
                    "simulation exceeded " + std::to_string(options.max_events) + " events");
    }
}

} // namespace

EventStream simulate_thinning(const HawkesModel& model, double horizon, std::uint64_t seed,
                              const SimulationOptions& options) {
    std::vector<AgentId> component_agent;
    EventStream stream = make_stream(model, horizon, options, component_agent);

    const std::size_t n = model.dim();
    const BasisDictionary& basis = model.kernels.basis();
    const std::size_t nl = basis.size();
    const auto& edges = model.baseline.edges();

    // Column sums of the positive coefficient parts bound the excitation term.
    std::vector<double> positive_mass(n * nl, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t l = 0; l < nl; ++l) {
                positive_mass[s * nl + l] += std::max(0.0, model.kernels.at(c, s, l));
            }
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    std::vector<double> state(n * nl, 0.0); // sum over past events of beta * exp(-beta * age)
    std::vector<double> intensity(n, 0.0);
    std::vector<double> decay_factor(nl, 1.0);

    auto advance = [&](double dt) {
        for (std::size_t l = 0; l < nl; ++l) {
            decay_factor[l] = std::exp(-basis.decay(l) * dt);
        }
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t l = 0; l < nl; ++l) {
                state[s * nl + l] *= decay_factor[l];
            }
        }
    };

    double t = 0.0;
    std::size_t bin = model.baseline.bin_of(t);
    auto next_edge_after = [&](std::size_t b) {
        return b + 1 < model.baseline.bins() ? edges[b + 1] : std::numeric_limits<double>::infinity();
    };
    double next_edge = next_edge_after(bin);

    while (t < horizon) {
        double base_total = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            base_total += model.baseline.value(c, bin);
        }
        double bound = base_total;
        for (std::size_t j = 0; j < n * nl; ++j) {
            bound += positive_mass[j] * state[j];
        }

        const double limit = std::min(next_edge, horizon);
        const double candidate =
            bound > 0.0 ? t + std::exponential_distribution<double>(bound)(rng)
                        : std::numeric_limits<double>::infinity();
        if (candidate >= limit) {
            if (limit >= horizon) {
                break;
            }
            advance(limit - t);
            t = limit;
            bin = model.baseline.bin_of(t);
            next_edge = next_edge_after(bin);
            continue;
        }

        advance(candidate - t);
        t = candidate;

        double total = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            double lambda = model.baseline.value(c, bin);
            for (std::size_t s = 0; s < n; ++s) {
                const auto row = model.kernels.row(c, s);
                for (std::size_t l = 0; l < nl; ++l) {
                    lambda += row[l] * state[s * nl + l];
                }
            }
            intensity[c] = std::max(0.0, lambda);
            total += intensity[c];
        }

        const double u = uniform(rng) * bound;
        if (u >= total) {
            continue;
        }
        std::size_t chosen = 0;
        double cumulative = intensity[0];
        while (u >= cumulative && chosen + 1 < n) {
            ++chosen;
            cumulative += intensity[chosen];
        }

        const auto& label = model.components[chosen];
        stream.push_back(Event{t, component_agent[chosen], label.type, model.jumps[chosen]});
        check_cap(stream.size(), options);
        for (std::size_t l = 0; l < nl; ++l) {
            state[chosen * nl + l] += basis.decay(l);
        }
    }
    return stream;
}

EventStream simulate_cluster(const HawkesModel& model, double horizon, std::uint64_t seed,
                             const SimulationOptions& options) {
    std::vector<AgentId> component_agent;
    EventStream stream = make_stream(model, horizon, options, component_agent);
    if (model.kernels.has_negative()) {
        throw Error(ErrorCode::NegativeKernel, "cluster simulation requires nonnegative kernels");
    }
    const Matrix phi = integrate_kernels(model.kernels);
    if (spectral_radius(phi) >= 1.0) {
        throw Error(ErrorCode::Unstable, "cluster simulation requires spectral radius below 1");
    }

    const std::size_t n = model.dim();
    const BasisDictionary& basis = model.kernels.basis();
    const std::size_t nl = basis.size();
    const auto& edges = model.baseline.edges();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    struct Pending {
        double t;
        std::size_t component;
    };
    std::vector<Pending> events;

    // Immigrants: homogeneous Poisson per (component, bin) on the overlap with
    // [0, horizon); the last bin extends to the horizon.
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t k = 0; k < model.baseline.bins(); ++k) {
            const double lo = std::max(0.0, k == 0 ? std::min(0.0, edges[0]) : edges[k]);
            const double hi = std::min(horizon, k + 1 == model.baseline.bins() ? horizon : edges[k + 1]);
            const double rate = model.baseline.value(c, k);
            if (hi <= lo || rate <= 0.0) {
                continue;
            }
            const auto count = std::poisson_distribution<std::size_t>(rate * (hi - lo))(rng);
            for (std::size_t i = 0; i < count; ++i) {
                events.push_back({lo + (hi - lo) * uniform(rng), c});
            }
            check_cap(events.size(), options);
        }
    }

    for (std::size_t next = 0; next < events.size(); ++next) {
        const Pending parent = events[next];
        for (std::size_t c = 0; c < n; ++c) {
            const double mass = phi(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(parent.component));
            if (mass <= 0.0) {
                continue;
            }
            const auto children = std::poisson_distribution<std::size_t>(mass)(rng);
            const auto row = model.kernels.row(c, parent.component);
            for (std::size_t i = 0; i < children; ++i) {
                double pick = uniform(rng) * mass;
                std::size_t l = 0;
                while (l + 1 < nl && pick >= row[l]) {
                    pick -= row[l];
                    ++l;
                }
                const double lag = std::exponential_distribution<double>(basis.decay(l))(rng);
                if (parent.t + lag < horizon) {
                    events.push_back({parent.t + lag, c});
                }
            }
        }
        check_cap(events.size(), options);
    }

    for (const Pending& p : events) {
        const auto& label = model.components[p.component];
        stream.push_back(Event{p.t, component_agent[p.component], label.type, model.jumps[p.component]});
    }
    stream.sort_canonical();
    return stream;
}

double PricePath::at(double t) const {
    double price = initial;
    for (std::size_t i = 0; i < jump_times.size() && jump_times[i] <= t; ++i) {
        price += jump_sizes[i];
    }
    return price;
}

double PricePath::final_price() const {
    double price = initial;
    for (double d : jump_sizes) {
        price += d;
    }
    return price;
}

PricePath build_price_path(const EventStream& stream, double initial) {
    PricePath path;
    path.initial = initial;
    path.start = 0.0;
    path.end = stream.duration();
    for (const Event& e : stream.events()) {
        if (is_price_type(e.type) && e.delta != 0.0) {
            path.jump_times.push_back(e.t);
            path.jump_sizes.push_back(e.delta);
        }
    }
    return path;
}

std::vector<double> squared_increments(const PricePath& path, double tau) {
    if (!(tau > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "tau must be positive");
    }
    const double span = path.end - path.start;
    if (span < 10.0 * tau * (1.0 - 1e-12)) {
        throw Error(ErrorCode::InsufficientSpan, "path must span at least 10 tau");
    }
    const auto windows = static_cast<std::size_t>(std::floor(span / tau + 1e-9));
    std::vector<double> out;
    out.reserve(windows);
    std::size_t j = 0;
    // Increment over (a, b] collects jumps with a < time <= b.
    while (j < path.jump_times.size() && path.jump_times[j] <= path.start) {
        ++j;
    }
    for (std::size_t w = 0; w < windows; ++w) {
        const double b = path.start + tau * static_cast<double>(w + 1);
        double increment = 0.0;
        while (j < path.jump_times.size() && path.jump_times[j] <= b) {
            increment += path.jump_sizes[j];
            ++j;
        }
        out.push_back(increment * increment);
    }
    return out;
}

double realized_variance(const PricePath& path, double tau) {
    const auto samples = squared_increments(path, tau);
    double sum = 0.0;
    for (double s : samples) {
        sum += s;
    }
    return sum / static_cast<double>(samples.size()) / tau;
}

} // namespace hawkesvol
