#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mmflow/bargaining.hpp"
#include "mmflow/errors.hpp"
#include "mmflow/generators.hpp"

using namespace mmflow;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

const Eigen::VectorXd kTableFlow =
    vec({32.16, 12.10, 12.09, 5.09, 7.63, 0.09, 0.09, 0.01, 0.64, 12.13, 12.13, 11.50});
const Eigen::VectorXd kIncentiveFlow = vec({5.15, 2.11, 1.90, 0.80, 1.21, 0.22, 0.01, 0.00, 0.11, 49.98, 50.19, 50.08});
const Eigen::VectorXd kIncentive =
    vec({-0.00, -0.35, 0.16, 0.32, 0.10, -0.23, 1.23, 2.04, 1.69, -1.58, -1.30, -1.85});

// Brute force over the three-provider simplex {R : sum R = R_c, R > t}.
Eigen::Vector3d grid_nash(double R_c, const Eigen::Vector3d& t, const Eigen::Vector3d& theta, double step) {
    const double surplus = R_c - t.sum();
    double best = -std::numeric_limits<double>::infinity();
    Eigen::Vector3d arg = t;
    const int n = static_cast<int>(std::round(surplus / step));
    for (int i = 1; i < n; ++i) {
        for (int j = 1; i + j < n; ++j) {
            const double a = i * step, b = j * step, c = surplus - a - b;
            const double v = theta[0] * std::log(a) + theta[1] * std::log(b) + theta[2] * std::log(c);
            if (v > best) {
                best = v;
                arg = t + Eigen::Vector3d(a, b, c);
            }
        }
    }
    return arg;
}

}  // namespace

TEST_CASE("provider profits on the published flows") {
    const Scenario s = chengdu_fixture();
    const ProviderMap Z = ProviderMap::from(s);
    const Eigen::VectorXd before = provider_profits(kTableFlow, Eigen::VectorXd::Zero(12), s.profit, Z);
    const Eigen::VectorXd expected_before = vec({133.87, 39.25, 0.57, 56.65});
    CHECK((before - expected_before).cwiseAbs().maxCoeff() <= 0.1);
    const Eigen::VectorXd after = provider_profits(kIncentiveFlow, kIncentive, s.profit, Z);
    const Eigen::VectorXd expected_after = vec({53.02, 74.31, 0.36, 274.21});
    CHECK((after - expected_after).cwiseAbs().maxCoeff() <= 0.5);
    CHECK(provider_profits(Eigen::VectorXd::Zero(12), kIncentive, s.profit, Z).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(provider_profits(Eigen::VectorXd::Zero(3), kIncentive, s.profit, Z), DomainError);
}

TEST_CASE("asymmetric Nash allocation of the published totals") {
    const SharingResult r = asymmetric_nash(401.90, vec({133.87, 39.25, 0.57, 56.65}), vec({70, 60, 1, 200}));
    const Eigen::VectorXd expected = vec({170.15, 70.35, 1.08, 160.32});
    CHECK((r.R_star - expected).cwiseAbs().maxCoeff() <= 0.01);
    CHECK(r.R_star.sum() == doctest::Approx(401.90).epsilon(1e-14));
    CHECK((r.increase.array() > 0.0).all());

    const SharingResult sym = asymmetric_nash(10.0, Eigen::Vector2d::Zero(), Eigen::Vector2d(3.0, 3.0));
    CHECK(sym.R_star[0] == doctest::Approx(5.0));
    CHECK(sym.R_star[1] == doctest::Approx(5.0));
}

TEST_CASE("closed form agrees with a grid maximization") {
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> unit(0.5, 5.0);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Vector3d t(unit(gen), unit(gen), unit(gen));
        const Eigen::Vector3d theta(unit(gen), unit(gen), unit(gen));
        const double R_c = t.sum() + 2.0 + unit(gen);
        const SharingResult r = asymmetric_nash(R_c, t, theta);
        const Eigen::Vector3d oracle = grid_nash(R_c, t, theta, 1e-3);
        CHECK((r.R_star - oracle).cwiseAbs().maxCoeff() <= 2e-3);
    }
}

TEST_CASE("allocation properties") {
    const Eigen::VectorXd post = vec({52.6, 80.7, 0.46, 268.1});
    const Eigen::VectorXd t = vec({133.87, 39.25, 0.57, 56.65});
    const SharingResult r = asymmetric_nash(post, t, vec({70, 60, 1, 200}));
    CHECK(r.R_c == doctest::Approx(post.sum()));
    CHECK(std::abs(r.compensation.sum()) < 1e-9);
    CHECK(r.increase.sum() == doctest::Approx(r.R_c - t.sum()).epsilon(1e-12));
    // A heavier weight never receives a smaller share of the surplus.
    const SharingResult heavier = asymmetric_nash(post, t, vec({140, 60, 1, 200}));
    CHECK(heavier.increase[0] > r.increase[0]);

    const SharingResult single = asymmetric_nash(vec({42.0}), vec({10.0}), vec({3.0}));
    CHECK(single.R_star[0] == doctest::Approx(42.0));
    CHECK(single.compensation[0] == doctest::Approx(0.0));
}

TEST_CASE("bargaining errors") {
    CHECK_THROWS_AS(asymmetric_nash(10.0, vec({6.0, 4.0}), vec({1.0, 1.0})), NoSurplus);
    CHECK_THROWS_AS(asymmetric_nash(10.0, vec({1.0, 1.0}), vec({1.0, 0.0})), DomainError);
    CHECK_THROWS_AS(asymmetric_nash(10.0, vec({1.0, 1.0}), vec({1.0})), DomainError);
}

TEST_CASE("equal split") {
    const Eigen::VectorXd e = equal_split(401.90, 4);
    for (int i = 0; i < 4; ++i) CHECK(e[i] == doctest::Approx(100.475));
    CHECK(equal_split(0.0, 3).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(equal_split(1.0, 0), DomainError);
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> unit(-1000.0, 1000.0);
    for (int i = 0; i < 1000; ++i) {
        const double R = unit(gen);
        const int S = 1 + static_cast<int>(gen() % 50);
        CHECK(std::abs(equal_split(R, S).sum() - R) <= 1e-12 * std::max(1.0, std::abs(R)));
    }
}
