#include "doctest.h"
#include "fixtures.hpp"

#include "hawkesvol/simulation.hpp"

#include <cmath>
#include <numeric>

using namespace hawkesvol;

namespace {

std::vector<std::size_t> component_counts(const EventStream& stream) {
    std::vector<std::size_t> out;
    for (const auto& row : stream.counts()) {
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double standard_error(const std::vector<double>& v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) {
        ss += (x - m) * (x - m);
    }
    return std::sqrt(ss / (v.size() - 1) / v.size());
}

} // namespace

TEST_CASE("thinning reduces to Poisson without kernels") {
    const auto model = fixtures::poisson_model({"A"}, {EventType::PriceUp, EventType::PriceDown}, 1.0, 1e4);
    const EventStream stream = simulate_thinning(model, 1e4, 42);
    const auto counts = stream.counts();
    for (std::size_t t : {0u, 1u}) {
        CHECK(std::abs(static_cast<double>(counts[0][t]) - 1e4) < 4.0 * 100.0);
    }
    CHECK_NOTHROW(stream.validate());
    CHECK(stream.is_sorted());
}

TEST_CASE("toy model rates match the mean intensity") {
    const auto model = fixtures::toy_model(0.5, 0.2, 0.3, 1.0, 1e5);
    const double horizon = 1e5;
    for (auto* sim : {&simulate_thinning, &simulate_cluster}) {
        const EventStream stream = sim(model, horizon, 3, SimulationOptions{});
        const auto counts = stream.counts();
        CHECK(counts[0][0] / horizon == doctest::Approx(1.0).epsilon(0.03));
        CHECK(counts[0][1] / horizon == doctest::Approx(1.0).epsilon(0.03));
    }
}

TEST_CASE("supercritical model hits the explosion guard") {
    const auto model = fixtures::toy_model(0.5, 0.6, 0.6);
    SimulationOptions options;
    options.max_events = 20000;
    try {
        simulate_thinning(model, 1e5, 1, options);
        FAIL("expected ExplosionGuard");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ExplosionGuard);
    }
}

TEST_CASE("cluster simulation rejects negative kernels and unstable models") {
    auto model = fixtures::toy_model(0.5, 0.2, 0.3);
    model.kernels.at(0, 1, 0) = -0.1;
    try {
        simulate_cluster(model, 100.0, 1);
        FAIL("expected NegativeKernel");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::NegativeKernel);
    }
    try {
        simulate_cluster(fixtures::toy_model(0.5, 0.6, 0.6), 100.0, 1);
        FAIL("expected Unstable");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::Unstable);
    }
}

TEST_CASE("cluster simulation without kernels is Poisson") {
    const auto model = fixtures::poisson_model({"A", "B"}, {EventType::LimitAsk}, 2.0, 5e3);
    const EventStream stream = simulate_cluster(model, 5e3, 9);
    for (std::size_t c : component_counts(stream)) {
        if (c > 0) {
            CHECK(std::abs(static_cast<double>(c) - 1e4) < 4.0 * 100.0);
        }
    }
}

TEST_CASE("simulation is deterministic per seed") {
    const auto model = fixtures::toy_model(0.5, 0.2, 0.3);
    CHECK(simulate_thinning(model, 2000.0, 17) == simulate_thinning(model, 2000.0, 17));
    CHECK(simulate_cluster(model, 2000.0, 17) == simulate_cluster(model, 2000.0, 17));
    CHECK_FALSE(simulate_thinning(model, 2000.0, 17) == simulate_thinning(model, 2000.0, 18));
}

TEST_CASE("thinning and cluster agree in mean counts") {
    // Multi-bin baseline and two decays exercise the bound refresh.
    HawkesModel model{{{"A", EventType::PriceUp}, {"A", EventType::PriceDown}, {"B", EventType::LimitBid}},
                      KernelMatrix(3, BasisDictionary({0.5, 5.0})),
                      PiecewiseBaseline({0.0, 500.0, 1000.0, 2000.0}, 3),
                      {1.0, -1.0, 0.0}};
    const double rates[3][3] = {{0.3, 1.0, 0.5}, {0.3, 0.2, 0.5}, {1.0, 0.1, 0.4}};
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t k = 0; k < 3; ++k) {
            model.baseline.value(c, k) = rates[c][k];
        }
    }
    model.kernels.at(0, 0, 1) = 0.2;
    model.kernels.at(1, 0, 0) = 0.15;
    model.kernels.at(0, 2, 0) = 0.1;
    model.kernels.at(2, 1, 1) = 0.3;
    model.kernels.at(2, 2, 0) = 0.25;

    std::vector<std::vector<double>> thin(3);
    std::vector<std::vector<double>> cluster(3);
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto a = simulate_thinning(model, 2000.0, seed);
        const auto b = simulate_cluster(model, 2000.0, 1000 + seed);
        auto per_component = [&](const EventStream& s) {
            std::vector<double> out(3, 0.0);
            for (const Event& e : s.events()) {
                const auto& name = s.agent_name(e.agent);
                out[name == "B" ? 2 : (e.type == EventType::PriceUp ? 0 : 1)] += 1.0;
            }
            return out;
        };
        const auto ca = per_component(a);
        const auto cb = per_component(b);
        for (std::size_t c = 0; c < 3; ++c) {
            thin[c].push_back(ca[c]);
            cluster[c].push_back(cb[c]);
        }
    }
    for (std::size_t c = 0; c < 3; ++c) {
        const double se = std::hypot(standard_error(thin[c]), standard_error(cluster[c]));
        CHECK(std::abs(mean(thin[c]) - mean(cluster[c])) < 3.0 * se);
    }
}

TEST_CASE("symmetric model has no trend") {
    const auto model = fixtures::toy_model(0.5, 0.2, 0.3);
    std::vector<double> moves;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        moves.push_back(build_price_path(simulate_thinning(model, 2000.0, seed), 0.0).final_price());
    }
    CHECK(std::abs(mean(moves)) < 3.0 * standard_error(moves));
}

TEST_CASE("price path") {
    EventStream empty(0.0, 10.0);
    empty.push_back({1.0, empty.intern("A"), EventType::LimitAsk, 0.0});
    const PricePath flat = build_price_path(empty, 100.0);
    CHECK(flat.at(5.0) == 100.0);
    CHECK(flat.final_price() == 100.0);

    EventStream s(0.0, 10.0);
    const AgentId a = s.intern("A");
    s.push_back({1.0, a, EventType::PriceUp, 1.0});
    s.push_back({2.0, a, EventType::PriceDown, -1.0});
    s.push_back({3.0, a, EventType::TradeAsk, 0.0});
    s.push_back({4.0, a, EventType::PriceUp, 2.0});
    const PricePath path = build_price_path(s, 10.0);
    CHECK(path.final_price() == 12.0);
    CHECK(path.at(0.5) == 10.0);
    CHECK(path.at(1.0) == 11.0);
    CHECK(path.at(2.5) == 10.0);
}

TEST_CASE("realized variance") {
    // Alternating +1/-1 at unit spacing: every window of two seconds cancels.
    EventStream s(0.0, 40.0);
    const AgentId a = s.intern("A");
    for (int k = 0; k < 40; ++k) {
        const bool up = k % 2 == 0;
        s.push_back({k + 0.5, a, up ? EventType::PriceUp : EventType::PriceDown, up ? 1.0 : -1.0});
    }
    CHECK(realized_variance(build_price_path(s, 0.0), 2.0) == 0.0);
    CHECK(squared_increments(build_price_path(s, 0.0), 2.0).size() == 20);
    try {
        realized_variance(build_price_path(s, 0.0), 5.0);
        FAIL("expected InsufficientSpan");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::InsufficientSpan);
    }

    // Two independent unit-rate Poisson price flows: RV/tau -> 2.
    const auto model = fixtures::poisson_model({"A"}, {EventType::PriceUp, EventType::PriceDown}, 1.0, 1e5);
    std::vector<double> samples;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto inc = squared_increments(build_price_path(simulate_thinning(model, 1e5, seed), 0.0), 100.0);
        for (double x : inc) {
            samples.push_back(x / 100.0);
        }
    }
    CHECK(std::abs(mean(samples) - 2.0) < 4.0 * standard_error(samples));
}
