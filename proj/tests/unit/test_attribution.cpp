#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "hawkesvol/attribution.hpp"

#include <cmath>
#include <random>

using namespace hawkesvol;

namespace {

BranchingSummary summary_from(const Matrix& phi, const Vector& mu) {
    BranchingSummary s;
    s.phi = phi;
    s.rho_spec = spectral_radius(phi);
    s.r = compute_R(phi);
    s.lambda = s.r * mu;
    return s;
}

Matrix sym2(double s, double c) {
    Matrix m(2, 2);
    m << s, c, c, s;
    return m;
}

// Straight transcription of the squared-volatility double sum.
double sigma2_oracle(const Matrix& r, const Vector& lambda, const Vector& delta) {
    double total = 0.0;
    for (Eigen::Index m = 0; m < r.cols(); ++m) {
        double reach = 0.0;
        for (Eigen::Index i = 0; i < r.rows(); ++i) {
            reach += delta[i] * r(i, m);
        }
        total += lambda[m] * reach * reach;
    }
    return total;
}

std::vector<std::size_t> range(std::size_t from, std::size_t to) {
    std::vector<std::size_t> out;
    for (std::size_t k = from; k < to; ++k) {
        out.push_back(k);
    }
    return out;
}

} // namespace

TEST_CASE("sigma2 examples") {
    Vector lambda(2);
    lambda << 3, 3;
    Vector delta(2);
    delta << 1, -1;
    BranchingSummary poisson = summary_from(Matrix::Zero(2, 2), lambda);
    CHECK(sigma2_asymptotic(poisson, delta) == doctest::Approx(6.0));

    Vector mu(2);
    mu << 0.5, 0.5;
    const auto toy = summary_from(sym2(0.2, 0.3), mu);
    CHECK(sigma2_asymptotic(toy, delta) == doctest::Approx(1.652892562).epsilon(1e-9));
    CHECK(sigma2_asymptotic(toy, delta) == doctest::Approx(toy_model_sigma2(0.5, 0.2, 0.3)).epsilon(1e-12));

    // A third component with no jump and no outgoing kernels changes nothing.
    Matrix phi3 = Matrix::Zero(3, 3);
    phi3.topLeftCorner(2, 2) = sym2(0.2, 0.3);
    phi3(2, 0) = 0.4;
    Vector mu3(3);
    mu3 << 0.5, 0.5, 1.0;
    Vector delta3(3);
    delta3 << 1, -1, 0;
    CHECK(sigma2_asymptotic(summary_from(phi3, mu3), delta3) ==
          doctest::Approx(sigma2_asymptotic(toy, delta)).epsilon(1e-12));

    BranchingSummary unstable = toy;
    unstable.rho_spec = 1.2;
    CHECK_THROWS_AS(sigma2_asymptotic(unstable, delta), Error);
}

TEST_CASE("xi and u examples") {
    Vector delta(2);
    delta << 1, -1;
    Vector ones = Vector::Ones(2);
    const auto poisson = summary_from(Matrix::Zero(2, 2), ones);
    CHECK(xi_per_event(poisson, delta).isApprox(ones));
    CHECK(u_vector(poisson, delta).isApprox(ones));

    Vector mu(2);
    mu << 0.5, 0.5;
    const auto toy = summary_from(sym2(0.2, 0.3), mu);
    const Vector xi = xi_per_event(toy, delta);
    CHECK(xi[0] == doctest::Approx(0.5 / 0.55).epsilon(1e-12));
    CHECK(xi[1] == doctest::Approx(0.5 / 0.55).epsilon(1e-12));
    const Vector u = u_vector(toy, delta);
    CHECK(u[0] == doctest::Approx(1.652892562).epsilon(1e-9));
    CHECK(mu.dot(u) == doctest::Approx(sigma2_asymptotic(toy, delta)).epsilon(1e-12));
    CHECK(u_vector(toy, Vector::Zero(2)).isZero(0.0));

    Matrix phi3 = Matrix::Zero(3, 3);
    phi3.topLeftCorner(2, 2) = sym2(0.2, 0.3);
    Vector mu3(3);
    mu3 << 0.5, 0.5, 1.0;
    Vector delta3(3);
    delta3 << 1, -1, 0;
    CHECK(xi_per_event(summary_from(phi3, mu3), delta3)[2] == 0.0);
}

TEST_CASE("identities on random stable models") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::uniform_int_distribution<int> sign(0, 2);
    for (int draw = 0; draw < 50; ++draw) {
        const std::size_t n = 2 + static_cast<std::size_t>(draw % 23);
        const Matrix phi = oracle::random_stable(n, 0.9, rng);
        Vector mu(static_cast<Eigen::Index>(n));
        Vector delta(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < mu.size(); ++i) {
            mu[i] = u(rng);
            delta[i] = sign(rng) - 1.0;
        }
        const auto s = summary_from(phi, mu);
        const double sigma2 = sigma2_asymptotic(s, delta);
        CHECK(sigma2 == doctest::Approx(sigma2_oracle(oracle::neumann_series(phi, 400), s.lambda, delta))
                            .epsilon(1e-9));
        const Vector xi = xi_per_event(s, delta);
        CHECK(std::abs(s.lambda.dot(xi.cwiseAbs2()) - sigma2) < 1e-10 * std::max(1.0, sigma2));
        CHECK(std::abs(mu.dot(u_vector(s, delta)) - sigma2) < 1e-10 * std::max(1.0, sigma2));
        CHECK((xi.array() >= 0.0).all());
    }
}

TEST_CASE("sigma2 is positive with two opposite price components") {
    std::mt19937_64 rng(8);
    for (int draw = 0; draw < 20; ++draw) {
        const Matrix phi = oracle::random_stable(5, 0.9, rng);
        Vector delta = Vector::Zero(5);
        delta[0] = 1.0;
        delta[1] = -1.0;
        CHECK(sigma2_asymptotic(summary_from(phi, Vector::Ones(5)), delta) > 0.0);
    }
}

TEST_CASE("rho examples") {
    // One agent: nothing is left after removing it.
    Vector mu(2);
    mu << 0.5, 0.5;
    Vector delta(2);
    delta << 1, -1;
    const auto toy = summary_from(sym2(0.2, 0.3), mu);
    const auto all = range(0, 2);
    CHECK(rho_impact(toy, delta, mu, all) == 1.0);

    // Two independent identical agents.
    Matrix phi = Matrix::Zero(4, 4);
    phi.topLeftCorner(2, 2) = sym2(0.2, 0.3);
    phi.bottomRightCorner(2, 2) = sym2(0.2, 0.3);
    Vector mu4 = Vector::Constant(4, 0.5);
    Vector delta4(4);
    delta4 << 1, -1, 1, -1;
    const auto twin = summary_from(phi, mu4);
    CHECK(rho_impact(twin, delta4, mu4, range(0, 2)) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(rho_impact(twin, delta4, mu4, range(2, 4)) == doctest::Approx(0.5).epsilon(1e-10));

    // A silent agent with no baseline and no kernels removes nothing.
    Matrix phi6 = Matrix::Zero(6, 6);
    phi6.topLeftCorner(4, 4) = phi;
    Vector mu6 = Vector::Zero(6);
    mu6.head(4) = mu4;
    Vector delta6 = Vector::Zero(6);
    delta6.head(4) = delta4;
    delta6[4] = 1.0;
    delta6[5] = -1.0;
    CHECK(rho_impact(summary_from(phi6, mu6), delta6, mu6, range(4, 6)) == 0.0);

    CHECK_THROWS_AS(rho_impact(summary_from(Matrix::Zero(2, 2), Vector::Zero(2)), delta, Vector::Zero(2), all),
                    Error);
}

TEST_CASE("rho of a split market is symmetric") {
    // One agent split into two identical halves with identical kernels.
    Matrix phi = Matrix::Zero(4, 4);
    const double s = 0.15;
    const double c = 0.2;
    phi << s / 2, c / 2, s / 2, c / 2,  //
        c / 2, s / 2, c / 2, s / 2,     //
        s / 2, c / 2, s / 2, c / 2,     //
        c / 2, s / 2, c / 2, s / 2;
    Vector mu = Vector::Constant(4, 0.25);
    Vector delta(4);
    delta << 1, -1, 1, -1;
    const auto split = summary_from(phi, mu);
    const double r1 = rho_impact(split, delta, mu, range(0, 2));
    const double r2 = rho_impact(split, delta, mu, range(2, 4));
    CHECK(std::abs(r1 - r2) < 1e-10);
    CHECK(r1 + r2 > r1);
    // The exact re-inverted variant differs only at second order here.
    CHECK(rho_impact_exact(split, delta, mu, range(0, 2)) == doctest::Approx(r1).epsilon(0.5));
}

TEST_CASE("exogenous fraction") {
    Vector lambda = Vector::Constant(2, 1.0);
    CHECK(exogenous_fraction(lambda, lambda, range(0, 2)) == 1.0);
    Vector mu = Vector::Constant(2, 0.5);
    CHECK(exogenous_fraction(mu, lambda, range(0, 2)) == doctest::Approx(0.5));
    Vector critical = Vector::Constant(2, 0.1);
    CHECK(exogenous_fraction(critical, lambda, range(0, 2)) == doctest::Approx(1.0 - 0.9));
    try {
        exogenous_fraction(mu, Vector::Zero(2), range(0, 2));
        FAIL("expected ZeroIntensity");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ZeroIntensity);
    }
}

TEST_CASE("sigma2 / sigma2_mu ratio") {
    CHECK_THROWS_AS(sigma2_mu_ratio({}), Error);

    const Vector mu = Vector::Constant(3, 0.4);
    const Vector u = Vector::Constant(3, 1.7);
    std::vector<DailyDecomposition> flat(25, {mu, u});
    for (const auto& p : sigma2_mu_ratio(flat)) {
        CHECK(p.ratio == doctest::Approx(1.0).epsilon(1e-14));
    }
    const auto single = sigma2_mu_ratio(std::vector<DailyDecomposition>{{mu, u}});
    CHECK(single[0].ratio == 1.0);
    CHECK(single[0].window_days == 1);

    // 21 days, the middle one with u doubled: that day's window holds all
    // 21 days, so the mean of u is (20 + 2) / 21 times the flat value.
    std::vector<DailyDecomposition> bump(21, {mu, u});
    bump[10].u = 2.0 * u;
    const auto points = sigma2_mu_ratio(bump, 20);
    CHECK(points[10].window_days == 21);
    CHECK_FALSE(points[10].truncated);
    CHECK(points[10].ratio == doctest::Approx(2.0 / (22.0 / 21.0)).epsilon(1e-14));
    // Day 0 averages days 0..10 and sees the bump once.
    CHECK(points[0].window_days == 11);
    CHECK(points[0].truncated);
    CHECK(points[0].ratio == doctest::Approx(1.0 / (12.0 / 11.0)).epsilon(1e-14));

    std::vector<DailyDecomposition> mismatched = {{mu, u}, {Vector::Ones(2), Vector::Ones(2)}};
    CHECK_THROWS_AS(sigma2_mu_ratio(mismatched), Error);
}

TEST_CASE("annualization") {
    CHECK(annualize(0.0, 0.25, 4500.0) == 0.0);
    // Half-tick size 0.25 and 8.5 h x 3600 s x 252 days per year.
    CHECK(kAnnualizationSeconds == 8.5 * 3600.0 * 252.0);
    CHECK(annualize(1.0, 0.25, 4500.0) == doctest::Approx(0.154280).epsilon(1e-5));
    CHECK(annualize(2.3, 0.25, 9000.0) == doctest::Approx(0.5 * annualize(2.3, 0.25, 4500.0)).epsilon(1e-14));
    try {
        annualize(1.0, 0.25, 0.0);
        FAIL("expected NonpositivePrice");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::NonpositivePrice);
    }
}
