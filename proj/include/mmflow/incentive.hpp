#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mmflow/demand_choice.hpp"
#include "mmflow/equilibrium.hpp"
#include "mmflow/qp.hpp"
#include "mmflow/scenario.hpp"

namespace mmflow {

// Jacobian of the assignment map at a cost vector, kept in factored form
//   dg/dc = sum_k B^(k) M_k (-beta_k B^(k)T),
//   M_k = d_k (diag(p_k) - p_k p_k^T) + D'_k(s_k) p_k (dS/dv)^T,
// so products cost O(nnz(B)) instead of O(L^2).
class AssignmentJacobian {
public:
    AssignmentJacobian(const CostVector& c, const std::vector<PassengerClass>& classes, int threads = 1);

    int size() const { return link_count_; }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;            // (dg/dc) x
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& y) const;  // (dg/dc)^T y
    Eigen::MatrixXd dense() const;

private:
    struct Block {
        const SparseMatrix* B;
        Eigen::MatrixXd M;  // already scaled by -beta
    };
    int link_count_ = 0;
    std::vector<Block> blocks_;
};

Eigen::MatrixXd assignment_jacobian(const CostVector& c, const std::vector<PassengerClass>& classes);

struct PsiResult {
    IncentiveVector x;
    double objective = 0.0;        // linearized profit model at x (without constant)
    double start_objective = 0.0;  // same, at the projection of J
    int qp_iterations = 0;
};

// Feasible set {B^T x <= 0 for every class, j_min <= x <= j_max}.
Polytope incentive_polytope(const Scenario& scenario);

// Linearized profit f_lin(x) = (y + Gx)^T (Q (y + Gx) + pi0 + x), y = f - G J,
// written as x^T H x + b^T x + const with H = G^T (Q G + I).
QuadraticObjective linearized_profit(const FlowVector& f, const IncentiveVector& J, const AssignmentJacobian& grad,
                                     const LinkProfitModel& profit);

// psi(f, J): maximizer of the linearized profit over the feasible polytope.
// Projected gradient ascent started from J.
PsiResult psi_qp(const FlowVector& f, const IncentiveVector& J, const AssignmentJacobian& grad,
                 const LinkProfitModel& profit, const Polytope& feasible, const QpSettings& settings);

// Dense-gradient overload.
PsiResult psi_qp(const FlowVector& f, const IncentiveVector& J, const Eigen::MatrixXd& grad,
                 const LinkProfitModel& profit, const Polytope& feasible, const QpSettings& settings);

// f^T (pi(f) + J)
double total_profit(const FlowVector& f, const IncentiveVector& J, const LinkProfitModel& profit);

struct TracePoint {
    int iteration = 0;
    double delta_f = 0.0;
    double delta_J = 0.0;
    double profit = 0.0;
};

struct TwoTimescaleConfig {
    StepSchedule alpha{10.0, 0.001, 0.8};
    StepSchedule beta{10.0, 1.0, 0.9};
    double eps_flow = 1e-6;
    double eps_incentive = 1e-4;
    int psi_iters = 5;  // ascent steps per psi inside the outer loop
    int max_iters = 200000;      // outer loop
    int max_msa_iters = 200000;  // initial and final equilibrium solves
    QpSettings qp;
    int threads = 1;
    int diagnostic_stride = 100;  // iterations between (h(J*) - f_k)^T (psi_k - J_k) samples
    std::function<void(const TracePoint&)> on_iteration;  // optional progress hook

    static TwoTimescaleConfig from(const SolverSettings& solver, int threads = 1);
};

struct IncentiveResult {
    IncentiveVector J_star;
    FlowVector f_star;
    double profit = 0.0;
    FlowVector baseline_flow;  // equilibrium at J = 0
    double baseline_profit = 0.0;
    std::vector<TracePoint> trace;
    double route_incentive_violation = 0.0;  // max over classes/routes of (B^T J*)^+
    double box_violation = 0.0;
    double final_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degraded = false;  // an inner equilibrium solve hit its cap
    // (iteration, (h(J*) - f_k)^T (psi_k - J_k)); diagnostic only
    std::vector<std::pair<int, double>> assumption_samples;
};

// Two time-scale stochastic approximation for the optimal incentive.
IncentiveResult two_timescale(const Scenario& scenario, const TwoTimescaleConfig& config);

}  // namespace mmflow
