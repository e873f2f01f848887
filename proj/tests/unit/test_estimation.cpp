#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "hawkesvol/estimation.hpp"
#include "hawkesvol/simulation.hpp"

#include <cmath>
#include <random>

using namespace hawkesvol;

namespace {

// Direct evaluation of the regressor vector at time t from its definition:
// indicator of t's bin, then sum over strictly earlier events of
// beta * exp(-beta (t - s)) split into the focus agent's flow and the rest.
Vector direct_features(const EventStream& stream, AgentId focus, const std::vector<double>& decays,
                       const std::vector<double>& edges, double t) {
    const std::size_t bins = edges.size() - 1;
    const std::size_t nl = decays.size();
    Vector x = Vector::Zero(static_cast<Eigen::Index>(bins + 16 * nl));
    std::size_t k = 0;
    while (k + 1 < bins && t >= edges[k + 1]) {
        ++k;
    }
    x[static_cast<Eigen::Index>(k)] = 1.0;
    for (const Event& e : stream.events()) {
        if (!(e.t < t)) {
            break;
        }
        const std::size_t block = (e.agent == focus ? 0 : 8) + type_index(e.type);
        for (std::size_t l = 0; l < nl; ++l) {
            x[static_cast<Eigen::Index>(bins + block * nl + l)] += decays[l] * std::exp(-decays[l] * (t - e.t));
        }
    }
    return x;
}

EventStream random_stream(std::mt19937_64& rng, std::size_t events, double horizon) {
    EventStream s(0.0, horizon);
    const AgentId a = s.intern("A");
    const AgentId b = s.intern("B");
    std::uniform_real_distribution<double> when(0.0, horizon);
    std::uniform_int_distribution<int> type(0, 7);
    std::vector<double> times;
    for (std::size_t k = 0; k < events; ++k) {
        times.push_back(when(rng));
    }
    std::sort(times.begin(), times.end());
    for (std::size_t k = 0; k < events; ++k) {
        const auto t = static_cast<EventType>(type(rng));
        const double d = t == EventType::PriceUp ? 1.0 : t == EventType::PriceDown ? -1.0 : 0.0;
        s.push_back({times[k], k % 3 == 0 ? b : a, t, d});
    }
    return s;
}

AgentFitResult synthetic_fit(const std::string& agent, std::size_t nl, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.05, 0.1);
    AgentFitResult fit;
    fit.agent = agent;
    fit.day = "d";
    for (std::size_t l = 0; l < nl; ++l) {
        fit.decays.push_back(1.0 + static_cast<double>(l));
    }
    fit.edges = {0.0, 100.0};
    fit.baseline = Matrix::Constant(8, 1, 0.1);
    for (std::size_t k = 0; k < 64 * nl; ++k) {
        fit.self_coeffs.push_back(u(rng) * 0.3);
        fit.market_coeffs.push_back(u(rng) * 0.1);
    }
    fit.delta = {1.0, -1.0, 0, 0, 0, 0, 0, 0};
    return fit;
}

} // namespace

TEST_CASE("filter_events examples") {
    const BasisDictionary basis({2.0});
    const std::vector<double> edges = {0.0, 10.0};
    EventStream s(0.0, 10.0);
    const AgentId a = s.intern("A");
    s.push_back({0.0, a, EventType::LimitBid, 0.0});
    auto f = filter_events(s, "A", basis, edges, {1.0});
    const FeatureLayout layout = f.layout;
    CHECK(f.values(0, static_cast<Eigen::Index>(layout.self(EventType::LimitBid, 0))) ==
          doctest::Approx(2.0 * std::exp(-2.0)).epsilon(1e-14));

    s.push_back({0.5, a, EventType::LimitBid, 0.0});
    f = filter_events(s, "A", basis, edges, {1.0});
    CHECK(f.values(0, static_cast<Eigen::Index>(layout.self(EventType::LimitBid, 0))) ==
          doctest::Approx(2.0 * std::exp(-2.0) + 2.0 * std::exp(-1.0)).epsilon(1e-14));
    CHECK(f.values(0, static_cast<Eigen::Index>(layout.market(EventType::LimitBid, 0))) == 0.0);

    // An event exactly at the evaluation time enters only afterwards.
    f = filter_events(s, "A", basis, edges, {0.5});
    CHECK(f.values(0, static_cast<Eigen::Index>(layout.self(EventType::LimitBid, 0))) ==
          doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-14));

    EventStream none(0.0, 10.0);
    f = filter_events(none, "A", basis, {0.0, 5.0, 10.0}, {1.0, 7.0});
    CHECK(f.values(0, 0) == 1.0);
    CHECK(f.values(1, 1) == 1.0);
    CHECK(f.values.rightCols(16).isZero(0.0));
    CHECK(f.layout.size() == 2 + 16);

    EventStream unsorted(0.0, 10.0);
    unsorted.push_back({2.0, unsorted.intern("A"), EventType::LimitBid, 0.0});
    unsorted.push_back({1.0, 0, EventType::LimitBid, 0.0});
    CHECK_THROWS_AS(filter_events(unsorted, "A", basis, edges, {3.0}), Error);
}

TEST_CASE("filter_events matches the direct sum") {
    std::mt19937_64 rng(3);
    const EventStream s = random_stream(rng, 40, 5.0);
    const std::vector<double> decays = {0.7, 3.0, 11.0};
    const std::vector<double> edges = {0.0, 2.0, 5.0};
    std::vector<double> times;
    for (int k = 0; k < 50; ++k) {
        times.push_back(0.1 * k);
    }
    const auto f = filter_events(s, "A", BasisDictionary(decays), edges, times);
    for (std::size_t r = 0; r < times.size(); ++r) {
        const Vector x = direct_features(s, 0, decays, edges, times[r]);
        CHECK((f.values.row(static_cast<Eigen::Index>(r)).transpose() - x).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("normal equations reproduce the contrast by quadrature") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> normal(0.0, 0.3);
    const std::vector<double> decays = {0.8, 4.0};
    for (int trial = 0; trial < 5; ++trial) {
        const double horizon = 5.0;
        EventStream s = random_stream(rng, 20 + 6 * trial, horizon);
        if (trial == 4) {
            // Tied timestamps exercise the left-limit convention.
            auto& ev = s.mutable_events();
            ev[5].t = ev[4].t;
            ev[6].t = ev[4].t;
        }
        const std::vector<double> edges = {0.0, 1.5, horizon};
        const NormalEquations ne = assemble_normal_equations(s, "A", BasisDictionary(decays), edges);
        const Eigen::Index dim = static_cast<Eigen::Index>(ne.layout.size());
        Vector theta(dim);
        for (Eigen::Index j = 0; j < dim; ++j) {
            theta[j] = normal(rng);
        }
        theta.head(2).array() += 1.0;

        // Composite Simpson on each event-free stretch, step <= 1e-4.
        std::vector<double> cuts = {0.0, 1.5, horizon};
        for (const Event& e : s.events()) {
            cuts.push_back(e.t);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        double integral = 0.0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double a = cuts[c];
            const double b = cuts[c + 1];
            const int steps = 2 * std::max(1, static_cast<int>(std::ceil((b - a) / 2e-4)));
            const double h = (b - a) / steps;
            auto lam2 = [&](double t) {
                // Inside (a, b) no event sits at t, so the strict-past sum is the right limit too.
                const double v = direct_features(s, 0, decays, edges, t).dot(theta);
                return v * v;
            };
            // Endpoints use interior limits.
            const double eps = 1e-13;
            double sum = lam2(a + eps) + lam2(b - eps);
            for (int k = 1; k < steps; ++k) {
                sum += (k % 2 ? 4.0 : 2.0) * lam2(a + k * h);
            }
            integral += sum * h / 3.0;
        }
        for (std::size_t target = 0; target < 8; ++target) {
            double jumps = 0.0;
            for (const Event& e : s.events()) {
                if (e.agent == 0 && type_index(e.type) == target) {
                    jumps += direct_features(s, 0, decays, edges, e.t).dot(theta);
                }
            }
            const double expected = integral / horizon - 2.0 * jumps / horizon;
            const double got = contrast_value(ne.gram, ne.rhs.col(static_cast<Eigen::Index>(target)), theta);
            CHECK(got == doctest::Approx(expected).epsilon(1e-4));
        }
    }
}

TEST_CASE("baseline-only contrast recovers bin rates") {
    EventStream s(0.0, 10.0);
    const AgentId a = s.intern("A");
    for (double t : {0.5, 1.0, 2.0, 6.0, 7.0, 8.0, 9.0}) {
        s.push_back({t, a, EventType::LimitAsk, 0.0});
    }
    const NormalEquations single = assemble_normal_equations(s, "A", BasisDictionary({1.0}), {0.0, 10.0});
    const Vector mu1 = solve_least_squares(single.gram.topLeftCorner(1, 1),
                                           single.rhs.col(type_index(EventType::LimitAsk)).head(1), 0.0);
    CHECK(mu1[0] == doctest::Approx(7.0 / 10.0));

    const NormalEquations split = assemble_normal_equations(s, "A", BasisDictionary({1.0}), {0.0, 4.0, 10.0});
    const Vector mu2 = solve_least_squares(split.gram.topLeftCorner(2, 2),
                                           split.rhs.col(type_index(EventType::LimitAsk)).head(2), 0.0);
    CHECK(mu2[0] == doctest::Approx(3.0 / 4.0));
    CHECK(mu2[1] == doctest::Approx(4.0 / 6.0));

    EventStream empty(0.0, 10.0);
    const NormalEquations zero = assemble_normal_equations(empty, "A", BasisDictionary({1.0}), {0.0, 10.0});
    CHECK(zero.rhs.isZero(0.0));
    const Matrix theta = solve_equilibrated(zero.gram, zero.rhs);
    CHECK(theta.isZero(0.0));
}

TEST_CASE("solve_least_squares") {
    Vector b(2);
    b << 1, 2;
    CHECK(solve_least_squares(Matrix::Identity(2, 2), b, 0.0).isApprox(b));
    Matrix bad(2, 2);
    bad << 1, 2, 2, 1; // indefinite
    CHECK_THROWS_AS(solve_least_squares(bad, b, 0.0), Error);
    // Default ridge keeps a rank-deficient PSD system solvable.
    Matrix rank1(2, 2);
    rank1 << 1, 1, 1, 1;
    CHECK(solve_least_squares(rank1, b).allFinite());
}

TEST_CASE("joint and per-target solves coincide") {
    const auto model = fixtures::toy_model(0.5, 0.2, 0.3);
    const EventStream s = simulate_thinning(model, 3000.0, 4);
    const NormalEquations ne = assemble_normal_equations(s, "A", BasisDictionary({0.5, 1.0}), {0.0, 3000.0});
    const Matrix joint = solve_equilibrated(ne.gram, ne.rhs);
    for (Eigen::Index c = 0; c < 8; ++c) {
        const Matrix one = solve_equilibrated(ne.gram, ne.rhs.col(c));
        CHECK((one.col(0) - joint.col(c)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("time shift leaves the fit unchanged") {
    const auto model = fixtures::toy_model(0.5, 0.2, 0.3);
    const EventStream s = simulate_thinning(model, 2000.0, 8);
    EventStream shifted(0.0, 3000.0);
    shifted.intern("A");
    for (Event e : s.events()) {
        e.t += 700.0;
        shifted.push_back(e);
    }
    const BasisDictionary basis({0.3, 1.0});
    const auto a = assemble_normal_equations(s, "A", basis, {0.0, 2000.0});
    const auto b = assemble_normal_equations(shifted, "A", basis, {700.0, 2700.0});
    const Matrix ta = solve_equilibrated(a.gram, a.rhs);
    const Matrix tb = solve_equilibrated(b.gram, b.rhs);
    CHECK((ta - tb).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("jump estimates") {
    EventStream s(0.0, 10.0);
    const AgentId a = s.intern("A");
    s.push_back({1.0, a, EventType::PriceUp, 1.0});
    s.push_back({2.0, a, EventType::PriceUp, 2.0});
    s.push_back({3.0, a, EventType::PriceUp, 1.0});
    s.push_back({4.0, a, EventType::PriceDown, -3.0});
    const auto d = estimate_jumps(s, a);
    CHECK(d[0] == doctest::Approx(4.0 / 3.0));
    CHECK(d[1] == -1.0); // fewer than three events
    for (std::size_t t = 2; t < 8; ++t) {
        CHECK(d[t] == 0.0);
    }
}

TEST_CASE("fit_agent_vs_market") {
    const auto model = fixtures::toy_model(0.5, 0.2, 0.3);
    const EventStream s = simulate_thinning(model, 5000.0, 12);
    FitConfig config;
    config.basis = BasisDictionary({1.0});
    config.baseline_bins = 1;
    config.min_events = 100;
    const AgentFitResult fit = fit_agent_vs_market(s, "A", config);
    CHECK(fit.self_coeffs.size() == 64);
    CHECK(fit.market_coeffs.size() == 64);
    CHECK(fit.baseline.rows() == 8);
    CHECK(fit.baseline.cols() == 1);
    for (std::size_t t = 0; t < 8; ++t) {
        CHECK(std::isfinite(fit.contrast[t]));
        CHECK_FALSE(fit.failed[t]);
    }
    CHECK(fit.delta[2] == 0.0);
    CHECK(fit.self_at(EventType::PriceUp, EventType::PriceDown, 0) == doctest::Approx(0.3).epsilon(0.5));

    try {
        fit_agent_vs_market(s, "Z", config);
        FAIL("expected InsufficientEvents");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::InsufficientEvents);
    }
    config.min_events = 1'000'000;
    CHECK_THROWS_AS(fit_agent_vs_market(s, "A", config), Error);
}

TEST_CASE("two symmetric agents give matching fits") {
    // Agents A and B each own P+/P-; self 0.1, cross-agent opposite-side 0.2.
    HawkesModel model{{{"A", EventType::PriceUp}, {"A", EventType::PriceDown},
                       {"B", EventType::PriceUp}, {"B", EventType::PriceDown}},
                      KernelMatrix(4, BasisDictionary({1.0})),
                      PiecewiseBaseline::uniform(20000.0, 1, 4),
                      {1.0, -1.0, 1.0, -1.0}};
    for (std::size_t c = 0; c < 4; ++c) {
        model.baseline.value(c, 0) = 0.2;
        model.kernels.at(c, c, 0) = 0.1;
    }
    model.kernels.at(0, 3, 0) = 0.2;
    model.kernels.at(3, 0, 0) = 0.2;
    model.kernels.at(1, 2, 0) = 0.2;
    model.kernels.at(2, 1, 0) = 0.2;

    FitConfig config;
    config.basis = BasisDictionary({1.0});
    config.baseline_bins = 1;
    config.min_events = 100;
    std::vector<double> diff;
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const EventStream s = simulate_thinning(model, 20000.0, seed);
        const auto fa = fit_agent_vs_market(s, "A", config);
        const auto fb = fit_agent_vs_market(s, "B", config);
        diff.push_back(fa.market_at(EventType::PriceUp, EventType::PriceDown, 0) -
                       fb.market_at(EventType::PriceUp, EventType::PriceDown, 0));
    }
    double m = 0.0;
    for (double d : diff) {
        m += d;
    }
    m /= diff.size();
    double ss = 0.0;
    for (double d : diff) {
        ss += (d - m) * (d - m);
    }
    const double se = std::sqrt(ss / (diff.size() - 1) / diff.size());
    CHECK(std::abs(m) < 3.0 * se + 1e-12);
}

TEST_CASE("global stitching") {
    std::mt19937_64 rng(99);
    const std::size_t nl = 2;
    const AgentFitResult a = synthetic_fit("A", nl, rng);
    const AgentFitResult b = synthetic_fit("B", nl, rng);
    const AgentFitResult c = synthetic_fit("C", nl, rng);

    SUBCASE("one agent equals its self block") {
        std::vector<AgentSlot> slots = {{"A", a}};
        const auto g = assemble_global(slots, Vector::Constant(8, 1.0));
        for (std::size_t t = 0; t < 8; ++t) {
            for (std::size_t s = 0; s < 8; ++s) {
                for (std::size_t l = 0; l < nl; ++l) {
                    CHECK(g.model.kernels.at(t, s, l) == a.self_coeffs[(t * 8 + s) * nl + l]);
                }
            }
        }
    }

    SUBCASE("two agents tile bitwise") {
        std::vector<AgentSlot> slots = {{"A", a}, {"B", b}};
        const auto g = assemble_global(slots, Vector::Constant(16, 1.0));
        for (std::size_t i = 0; i < 2; ++i) {
            const AgentFitResult& fi = i == 0 ? a : b;
            for (std::size_t j = 0; j < 2; ++j) {
                const auto& block = i == j ? fi.self_coeffs : fi.market_coeffs;
                for (std::size_t t = 0; t < 8; ++t) {
                    for (std::size_t s = 0; s < 8; ++s) {
                        for (std::size_t l = 0; l < nl; ++l) {
                            CHECK(g.model.kernels.at(i * 8 + t, j * 8 + s, l) == block[(t * 8 + s) * nl + l]);
                        }
                    }
                }
            }
        }
        CHECK(g.stable());
    }

    SUBCASE("absent agent is zeroed and drops out of R") {
        Vector lambda3 = Vector::Constant(24, 1.0);
        lambda3.segment(8, 8).setZero();
        std::vector<AgentSlot> three = {{"A", a}, {"B", std::nullopt}, {"C", c}};
        const auto g3 = assemble_global(three, lambda3);
        for (std::size_t k = 8; k < 16; ++k) {
            CHECK(g3.phi.row(static_cast<Eigen::Index>(k)).isZero(0.0));
            CHECK(g3.phi.col(static_cast<Eigen::Index>(k)).isZero(0.0));
        }
        std::vector<AgentSlot> two = {{"A", a}, {"C", c}};
        const auto g2 = assemble_global(two, Vector::Constant(16, 1.0));
        REQUIRE(g3.stable());
        REQUIRE(g2.stable());
        std::vector<Eigen::Index> keep;
        for (Eigen::Index k = 0; k < 24; ++k) {
            if (k < 8 || k >= 16) {
                keep.push_back(k);
            }
        }
        const Matrix restricted = g3.summary->r(keep, keep);
        CHECK(oracle::max_abs(restricted - g2.summary->r) < 1e-12);
        CHECK(oracle::max_abs(restricted - oracle::gauss_jordan_inverse(Matrix::Identity(16, 16) - g2.phi)) < 1e-10);
    }

    SUBCASE("unstable stitching keeps phi for inspection") {
        AgentFitResult hot = a;
        for (auto& v : hot.self_coeffs) {
            v = 0.2;
        }
        std::vector<AgentSlot> slots = {{"A", hot}};
        const auto g = assemble_global(slots, Vector::Constant(8, 1.0));
        CHECK_FALSE(g.stable());
        CHECK(g.phi(0, 0) == doctest::Approx(0.4));
        CHECK_FALSE(g.instability.empty());
        CHECK_THROWS_AS(g.require_stable(), Error);
    }
}
