#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mmflow/errors.hpp"
#include "mmflow/generators.hpp"
#include "mmflow/incentive.hpp"
#include "mmflow/qp.hpp"
#include "support.hpp"

using namespace mmflow;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

double jacobian_error(const Scenario& s, const CostVector& c) {
    const Eigen::MatrixXd analytic = assignment_jacobian(c, s.classes);
    const Eigen::MatrixXd fd =
        testing::fd_jacobian([&](const Eigen::VectorXd& x) { return assign(x, s.classes); }, c, 1e-3);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < fd.rows(); ++i) {
        for (Eigen::Index j = 0; j < fd.cols(); ++j) {
            const double excess = std::abs(analytic(i, j) - fd(i, j)) - (1e-5 * std::abs(fd(i, j)) + 1e-9);
            worst = std::max(worst, excess);
        }
    }
    return worst;
}

// Linearized profit written out directly from its definition.
double linearized_profit_oracle(const Eigen::VectorXd& x, const FlowVector& f, const IncentiveVector& J,
                                const Eigen::MatrixXd& G, const LinkProfitModel& profit) {
    const Eigen::VectorXd flow = f + G * (x - J);
    return flow.dot(profit.slope.cwiseProduct(flow) + profit.intercept + x);
}

// Dense grid over the box, refined once around the best feasible point.
double grid_max(const std::function<double(double, double)>& fn, const Polytope& P) {
    double best = -std::numeric_limits<double>::infinity();
    double bx = 0.0, by = 0.0;
    auto scan = [&](double x0, double x1, double y0, double y1, int n) {
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j <= n; ++j) {
                const Eigen::Vector2d x(x0 + (x1 - x0) * i / n, y0 + (y1 - y0) * j / n);
                if (P.max_box_violation(x) > 0.0 || P.max_halfspace_violation(x) > 0.0) continue;
                const double v = fn(x[0], x[1]);
                if (v > best) {
                    best = v;
                    bx = x[0];
                    by = x[1];
                }
            }
        }
    };
    const Eigen::VectorXd lo = P.lower(), hi = P.upper();
    const int n = 1000;
    scan(lo[0], hi[0], lo[1], hi[1], n);
    const double hx = (hi[0] - lo[0]) / n, hy = (hi[1] - lo[1]) / n;
    scan(std::max(lo[0], bx - 2 * hx), std::min(hi[0], bx + 2 * hx), std::max(lo[1], by - 2 * hy),
         std::min(hi[1], by + 2 * hy), 400);
    return best;
}

Polytope sum_constraint_box(double lo, double hi) {
    Halfspace h;
    h.index = {0, 1};
    h.value = {1.0, 1.0};
    return Polytope(Eigen::Vector2d::Constant(lo), Eigen::Vector2d::Constant(hi), {h});
}

}  // namespace

TEST_CASE("assignment jacobian matches finite differences in logsum mode") {
    Scenario s = chengdu_fixture();
    for (auto& cls : s.classes) cls.satisfaction = {SatisfactionKind::logsum, 200.0};
    const EquilibriumResult eq = msa_solve(s, Eigen::VectorXd::Zero(12), MsaConfig::from(s.solver));
    const CostVector c = link_cost(eq.f_star, Eigen::VectorXd::Zero(12), s.cost);
    CHECK(jacobian_error(s, c) <= 0.0);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Scenario r = testing::small_random(seed, SatisfactionKind::logsum);
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(r.link_count());
        CHECK(jacobian_error(r, link_cost(zero, zero, r.cost)) <= 0.0);
    }
}

TEST_CASE("factored jacobian products agree with the dense matrix") {
    const Scenario s = chengdu_fixture();
    const CostVector c = link_cost(Eigen::VectorXd::Constant(12, 5.0), Eigen::VectorXd::Zero(12), s.cost);
    const AssignmentJacobian grad(c, s.classes);
    const Eigen::MatrixXd dense = grad.dense();
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(12, -1.0, 2.0);
    CHECK((grad.apply(x) - dense * x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((grad.apply_transpose(x) - dense.transpose() * x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(dense.isApprox(assignment_jacobian(c, s.classes)));
}

TEST_CASE("degenerate jacobians") {
    Scenario s = chengdu_fixture();
    const CostVector c = link_cost(Eigen::VectorXd::Zero(12), Eigen::VectorXd::Zero(12), s.cost);
    Scenario none = s;
    for (auto& cls : none.classes) cls.demand = TanhDemand{0.0, 1.0};
    CHECK(assignment_jacobian(c, none.classes).cwiseAbs().maxCoeff() == 0.0);

    Scenario one = s;
    one.classes.resize(1);
    one.classes[0].route_ids = {9};
    attach_incidence(one);
    const auto& cls = one.classes[0];
    const Eigen::VectorXd v = route_utility(c, cls);
    const double sat = satisfaction(v, cls.satisfaction);
    const Eigen::MatrixXd B(cls.incidence.B);
    const Eigen::MatrixXd expected =
        demand_derivative(sat, cls.demand) / cls.satisfaction.sigma * (-cls.beta) * B * B.transpose();
    CHECK((assignment_jacobian(c, one.classes) - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("quadratic program basics") {
    QpSettings settings;
    const QuadraticObjective concave = QuadraticObjective::dense(-Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3));
    const Polytope box(Eigen::VectorXd::Constant(3, -3.0), Eigen::VectorXd::Constant(3, 3.0), {});
    CHECK(maximize_qp(concave, box, Eigen::VectorXd::Constant(3, 2.0), settings).x.norm() < 1e-8);

    const QuadraticObjective toy = QuadraticObjective::dense(-Eigen::Matrix2d::Identity(), Eigen::Vector2d(1.0, 1.0));
    const QpResult r = maximize_qp(toy, sum_constraint_box(-3.0, 3.0), Eigen::Vector2d(1.0, -2.0), settings);
    CHECK(r.x.norm() < 1e-6);
    CHECK(r.objective >= r.start_objective);

    CHECK_THROWS_AS(Polytope(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 0.0), {}), DomainError);
}

TEST_CASE("projection agrees with a grid search for the nearest point") {
    const Polytope P = sum_constraint_box(-1.0, 2.0);
    std::mt19937 gen(4);
    std::uniform_real_distribution<double> unit(-4.0, 4.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Vector2d p(unit(gen), unit(gen));
        const Eigen::VectorXd proj = P.project(p, QpSettings{});
        const double oracle = -grid_max([&](double x, double y) { return -std::hypot(x - p[0], y - p[1]); }, P);
        CHECK((proj - p).norm() == doctest::Approx(oracle).epsilon(1e-5));
        CHECK(P.max_halfspace_violation(proj) <= QpSettings{}.projection_tol);
        CHECK(P.max_box_violation(proj) == 0.0);
    }
}

TEST_CASE("route columns are deduplicated") {
    const Scenario s = chengdu_fixture();
    const Polytope P = incentive_polytope(s);
    CHECK(P.halfspaces().size() == 9);
    CHECK(P.dimension() == 12);
}

TEST_CASE("psi agrees with a dense grid search on two-dimensional instances") {
    for (auto kind : {SatisfactionKind::scaled_max, SatisfactionKind::logsum}) {
        const Scenario s = testing::two_route_toy(kind);
        const Eigen::Vector2d zero = Eigen::Vector2d::Zero();
        const FlowVector f = msa_solve(s, zero, MsaConfig::from(s.solver)).f_star;
        for (const Eigen::Vector2d J : {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(-1.0, 0.5), Eigen::Vector2d(1.5, -2.0)}) {
            const Eigen::MatrixXd G = assignment_jacobian(link_cost(f, J, s.cost), s.classes);
            for (const Polytope& P : {sum_constraint_box(-3.0, 3.0), incentive_polytope(s)}) {
                const PsiResult psi = psi_qp(f, J, G, s.profit, P, QpSettings{});
                auto fn = [&](double x, double y) { return linearized_profit_oracle(Eigen::Vector2d(x, y), f, J, G, s.profit); };
                const double oracle = grid_max(fn, P);
                CHECK(std::abs(linearized_profit_oracle(psi.x, f, J, G, s.profit) - oracle) <= 2e-3);
                CHECK(P.max_halfspace_violation(psi.x) <= 1e-9);
            }
        }
    }

    std::mt19937 gen(8);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::Matrix2d H;
        H << unit(gen), unit(gen), unit(gen), unit(gen);
        const Eigen::Vector2d b(unit(gen), unit(gen));
        const QuadraticObjective obj = QuadraticObjective::dense(H, b);
        const Polytope P = sum_constraint_box(-2.0, 1.5);
        const QpResult r = maximize_qp(obj, P, Eigen::Vector2d::Zero(), QpSettings{});
        const double oracle = grid_max([&](double x, double y) { return obj.value(Eigen::Vector2d(x, y)); }, P);
        CHECK(std::abs(r.objective - oracle) <= 2e-3);
    }
}

TEST_CASE("psi never decreases the linearized profit along the outer loop") {
    const Scenario s = chengdu_fixture();
    const Polytope P = incentive_polytope(s);
    FlowVector f = msa_solve(s, Eigen::VectorXd::Zero(12), MsaConfig::from(s.solver)).f_star;
    IncentiveVector J = P.project(Eigen::VectorXd::Zero(12), QpSettings{});
    for (int k = 1; k <= 60; ++k) {
        const CostVector c = link_cost(f, J, s.cost);
        const FlowVector g = assign(c, s.classes);
        const AssignmentJacobian grad(c, s.classes);
        const PsiResult psi = psi_qp(f, J, grad, s.profit, P, QpSettings{});
        CHECK(psi.objective >= psi.start_objective - 1e-9);
        f = (1.0 - s.solver.alpha(k)) * f + s.solver.alpha(k) * g;
        J = (1.0 - s.solver.beta(k)) * J + s.solver.beta(k) * psi.x;
    }
}

TEST_CASE("total profit") {
    const Scenario s = chengdu_fixture();
    const Eigen::VectorXd f0 = vec({32.16, 12.10, 12.09, 5.09, 7.63, 0.09, 0.09, 0.01, 0.64, 12.13, 12.13, 11.50});
    CHECK(total_profit(f0, Eigen::VectorXd::Zero(12), s.profit) == doctest::Approx(230.34).epsilon(0.1 / 230.34));
    CHECK(total_profit(Eigen::VectorXd::Zero(12), Eigen::VectorXd::Ones(12), s.profit) == 0.0);
    const Eigen::VectorXd f1 = vec({5.15, 2.11, 1.90, 0.80, 1.21, 0.22, 0.01, 0.00, 0.11, 49.98, 50.19, 50.08});
    const Eigen::VectorXd J1 = vec({-0.00, -0.35, 0.16, 0.32, 0.10, -0.23, 1.23, 2.04, 1.69, -1.58, -1.30, -1.85});
    CHECK(total_profit(f1, J1, s.profit) == doctest::Approx(401.90).epsilon(0.5 / 401.90));
}

TEST_CASE("pinned incentive reduces to the plain equilibrium") {
    Scenario s = chengdu_fixture();
    s.box = IncentiveBox::uniform(12, 0.0, 0.0);
    const IncentiveResult r = two_timescale(s, TwoTimescaleConfig::from(s.solver));
    CHECK(r.converged);
    CHECK(r.J_star.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.profit == doctest::Approx(230.34).epsilon(0.1 / 230.34));
}

TEST_CASE("incentive optimization on the fixture") {
    const Scenario s = chengdu_fixture();
    const IncentiveResult r = two_timescale(s, TwoTimescaleConfig::from(s.solver));
    CHECK(r.converged);
    CHECK(!r.degraded);
    CHECK(std::abs(r.profit - 401.90) <= 0.05 * 401.90);
    CHECK(r.profit >= r.baseline_profit);
    CHECK(r.route_incentive_violation <= 1e-6);
    CHECK(r.box_violation == 0.0);
    for (int l : {9, 10, 11}) CHECK(r.J_star[l] < 0.0);
    for (const auto& cls : s.classes) {
        CHECK((Eigen::VectorXd(cls.incidence.B.transpose() * r.J_star).array() <= 1e-6).all());
    }
    REQUIRE(!r.trace.empty());
    CHECK(r.trace.back().delta_f < s.solver.eps_flow);
    CHECK(r.trace.back().delta_J < s.solver.eps_incentive);
}

TEST_CASE("small incentive box") {
    Scenario s = chengdu_fixture();
    s.box = IncentiveBox::uniform(12, -0.1, 0.1);
    const IncentiveResult r = two_timescale(s, TwoTimescaleConfig::from(s.solver));
    CHECK(std::abs(r.profit - 246.64) <= 2.0);
    CHECK(r.J_star.cwiseAbs().maxCoeff() <= 0.1);
}
