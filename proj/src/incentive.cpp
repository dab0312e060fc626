#include "mmflow/incentive.hpp"

#include <cmath>

#include "parallel.hpp"

namespace mmflow {

AssignmentJacobian::AssignmentJacobian(const CostVector& c, const std::vector<PassengerClass>& classes, int threads)
    : link_count_(static_cast<int>(c.size())) {
    for (const auto& cls : classes) {
        if (cls.incidence.B.rows() != c.size()) throw DomainError("assignment_jacobian: cost vector has wrong length");
    }
    blocks_.resize(classes.size());
    detail::parallel_for(static_cast<int>(classes.size()), threads, [&](int k) {
        const PassengerClass& cls = classes[k];
        const ClassResponse r = respond(c, cls);
        const Eigen::VectorXd& p = r.probability;
        const Eigen::VectorXd dS = satisfaction_gradient(r.utility, cls.satisfaction);
        const double dD = demand_derivative(r.satisfaction, cls.demand);

        Eigen::MatrixXd M = -r.demand * (p * p.transpose());
        M.diagonal() += r.demand * p;
        M.noalias() += dD * (p * dS.transpose());
        blocks_[k] = Block{&cls.incidence.B, -cls.beta * M};
    });
}

Eigen::VectorXd AssignmentJacobian::apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(link_count_);
    for (const auto& blk : blocks_) {
        const Eigen::VectorXd routes = blk.B->transpose() * x;
        out.noalias() += *blk.B * (blk.M * routes);
    }
    return out;
}

Eigen::VectorXd AssignmentJacobian::apply_transpose(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(link_count_);
    for (const auto& blk : blocks_) {
        const Eigen::VectorXd routes = blk.B->transpose() * y;
        out.noalias() += *blk.B * (blk.M.transpose() * routes);
    }
    return out;
}

Eigen::MatrixXd AssignmentJacobian::dense() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(link_count_, link_count_);
    for (const auto& blk : blocks_) {
        const Eigen::MatrixXd B(*blk.B);
        out.noalias() += B * blk.M * B.transpose();
    }
    return out;
}

Eigen::MatrixXd assignment_jacobian(const CostVector& c, const std::vector<PassengerClass>& classes) {
    return AssignmentJacobian(c, classes).dense();
}

Polytope incentive_polytope(const Scenario& scenario) {
    std::vector<const SparseMatrix*> columns;
    for (const auto& cls : scenario.classes) columns.push_back(&cls.incidence.B);
    return Polytope::from_route_columns(scenario.box.j_min, scenario.box.j_max, columns);
}

namespace {

QuadraticObjective linearized_profit(const FlowVector& f, const IncentiveVector& J, const LinearMap& G,
                                     const LinearMap& Gt, const LinkProfitModel& profit) {
    const auto L = f.size();
    if (J.size() != L || profit.slope.size() != L || profit.intercept.size() != L) {
        throw DomainError("linearized_profit: dimension mismatch");
    }
    const Eigen::VectorXd q = profit.slope;
    const Eigen::VectorXd y = f - G(J);
    Eigen::VectorXd b = Gt(2.0 * q.cwiseProduct(y) + profit.intercept) + y;
    return QuadraticObjective{
        [G, Gt, q](const Eigen::VectorXd& x) -> Eigen::VectorXd { return Gt(q.cwiseProduct(G(x)) + x); },
        [G, Gt, q](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            const Eigen::VectorXd gx = G(x);
            return Gt(q.cwiseProduct(gx)) + gx;
        },
        std::move(b)};
}

PsiResult run_psi(const QuadraticObjective& objective, const IncentiveVector& J, const Polytope& feasible,
                  const QpSettings& settings) {
    const QpResult qp = maximize_qp(objective, feasible, J, settings);
    return PsiResult{qp.x, qp.objective, qp.start_objective, qp.iterations};
}

}  // namespace

QuadraticObjective linearized_profit(const FlowVector& f, const IncentiveVector& J, const AssignmentJacobian& grad,
                                     const LinkProfitModel& profit) {
    return linearized_profit(
        f, J, [&grad](const Eigen::VectorXd& x) { return grad.apply(x); },
        [&grad](const Eigen::VectorXd& x) { return grad.apply_transpose(x); }, profit);
}

PsiResult psi_qp(const FlowVector& f, const IncentiveVector& J, const AssignmentJacobian& grad,
                 const LinkProfitModel& profit, const Polytope& feasible, const QpSettings& settings) {
    return run_psi(linearized_profit(f, J, grad, profit), J, feasible, settings);
}

PsiResult psi_qp(const FlowVector& f, const IncentiveVector& J, const Eigen::MatrixXd& grad,
                 const LinkProfitModel& profit, const Polytope& feasible, const QpSettings& settings) {
    if (grad.rows() != f.size() || grad.cols() != f.size()) throw DomainError("psi_qp: gradient has wrong shape");
    const auto objective = linearized_profit(
        f, J, [&grad](const Eigen::VectorXd& x) -> Eigen::VectorXd { return grad * x; },
        [&grad](const Eigen::VectorXd& x) -> Eigen::VectorXd { return grad.transpose() * x; }, profit);
    return run_psi(objective, J, feasible, settings);
}

double total_profit(const FlowVector& f, const IncentiveVector& J, const LinkProfitModel& profit) {
    return f.dot(profit(f) + J);
}

TwoTimescaleConfig TwoTimescaleConfig::from(const SolverSettings& solver, int threads) {
    TwoTimescaleConfig config;
    config.alpha = solver.alpha;
    config.beta = solver.beta;
    config.eps_flow = solver.eps_flow;
    config.eps_incentive = solver.eps_incentive;
    config.psi_iters = solver.psi_iters;
    config.max_iters = solver.max_iters;
    config.max_msa_iters = solver.max_iters;
    config.qp = solver.qp;
    config.threads = threads;
    return config;
}

IncentiveResult two_timescale(const Scenario& scenario, const TwoTimescaleConfig& config) {
    const int L = scenario.link_count();
    const Polytope feasible = incentive_polytope(scenario);
    const MsaConfig msa{config.alpha, config.eps_flow, config.max_msa_iters, config.threads};
    const IncentiveVector zero = IncentiveVector::Zero(L);

    IncentiveResult result;
    const EquilibriumResult baseline = msa_iterate(scenario, zero, msa);
    result.degraded = !baseline.converged;
    result.baseline_flow = baseline.f_star;
    result.baseline_profit = total_profit(baseline.f_star, zero, scenario.profit);

    FlowVector f = baseline.f_star;
    IncentiveVector J = feasible.project(zero, config.qp);

    struct Sample {
        int iteration;
        FlowVector f;
        Eigen::VectorXd step;
    };
    std::vector<Sample> samples;
    IncentiveVector warm;
    QpSettings psi_settings = config.qp;
    psi_settings.max_iters = config.psi_iters;

    for (int k = 1; k <= config.max_iters; ++k) {
        const CostVector c = link_cost(f, J, scenario.cost);
        const FlowVector g = assign(c, scenario.classes, config.threads);
        if (!g.allFinite()) throw NumericalFailure("two_timescale: non-finite assignment", k);
        const AssignmentJacobian grad(c, scenario.classes, config.threads);
        // psi is tracked across iterations: the ascent resumes from the previous
        // psi and falls back to J whenever that would not beat J itself.
        const QuadraticObjective objective = linearized_profit(f, J, grad, scenario.profit);
        PsiResult psi;
        const double at_J = objective.value(J);
        const QpResult qp = maximize_qp(objective, feasible, warm.size() ? warm : J, psi_settings);
        psi = qp.objective >= at_J ? PsiResult{qp.x, qp.objective, at_J, qp.iterations} : PsiResult{J, at_J, at_J, qp.iterations};
        warm = psi.x;
        if (!psi.x.allFinite()) throw NumericalFailure("two_timescale: non-finite psi", k);

        TracePoint point{k, (g - f).norm(), (psi.x - J).norm(), total_profit(f, J, scenario.profit)};
        result.trace.push_back(point);
        if (config.on_iteration) config.on_iteration(point);
        result.iterations = k;
        if (config.diagnostic_stride > 0 && (k == 1 || k % config.diagnostic_stride == 0)) {
            samples.push_back({k, f, psi.x - J});
        }
        if (point.delta_f < config.eps_flow && point.delta_J < config.eps_incentive) {
            result.converged = true;
            break;
        }
        const double a = config.alpha(k);
        const double b = config.beta(k);
        f = (1.0 - a) * f + a * g;
        J = (1.0 - b) * J + b * psi.x;
    }

    const EquilibriumResult final_eq = msa_iterate(scenario, J, msa, f);
    result.degraded = result.degraded || !final_eq.converged;
    result.J_star = J;
    result.f_star = final_eq.f_star;
    result.final_residual = final_eq.residual;
    result.profit = total_profit(result.f_star, J, scenario.profit);

    for (const auto& cls : scenario.classes) {
        const Eigen::VectorXd route = cls.incidence.B.transpose() * J;
        if (route.size() > 0) result.route_incentive_violation = std::max(result.route_incentive_violation, route.maxCoeff());
    }
    result.box_violation = feasible.max_box_violation(J);
    for (const auto& s : samples) {
        result.assumption_samples.emplace_back(s.iteration, (result.f_star - s.f).dot(s.step));
    }
    return result;
}

}  // namespace mmflow
