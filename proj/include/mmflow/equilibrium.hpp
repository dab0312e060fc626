#pragma once

#include <optional>
#include <vector>

#include "mmflow/demand_choice.hpp"
#include "mmflow/errors.hpp"
#include "mmflow/scenario.hpp"

namespace mmflow {

struct MsaConfig {
    StepSchedule alpha{10.0, 0.001, 0.8};
    double eps_flow = 1e-6;
    int max_iters = 200000;
    int threads = 1;

    static MsaConfig from(const SolverSettings& solver, int threads = 1);
};

struct EquilibriumResult {
    FlowVector f_star;
    std::vector<ClassResponse> per_class;  // assignment at C(f_star) + J
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> trace;  // residual before each update
    bool converged = false;
};

class NotConverged : public Error {
public:
    explicit NotConverged(EquilibriumResult best);
    const EquilibriumResult& best() const noexcept { return best_; }

private:
    EquilibriumResult best_;
};

// f_{k+1} = (1 - a_k) f_k + a_k g(C(f_k) + J) until ||g - f_k||_2 < eps.
// Returns the best iterate with converged = false when the cap is hit.
EquilibriumResult msa_iterate(const Scenario& scenario, const IncentiveVector& J, const MsaConfig& config,
                              const std::optional<FlowVector>& warm_start = std::nullopt);

// As msa_iterate, but throws NotConverged (carrying the best iterate).
EquilibriumResult msa_solve(const Scenario& scenario, const IncentiveVector& J, const MsaConfig& config,
                            const std::optional<FlowVector>& warm_start = std::nullopt);

// ||g(C(f) + J) - f||_2
double residual(const Scenario& scenario, const FlowVector& f, const IncentiveVector& J, int threads = 1);

struct MonotonicityReport {
    int link = 0;  // link id
    double delta = 0.0;
    double flow_before = 0.0;
    double flow_after = 0.0;
    double difference = 0.0;
    bool holds = false;  // difference > -1e-8
};

// Equilibrium flow on `link_id` before and after lowering its constant price by delta.
MonotonicityReport property_monotonicity(const Scenario& scenario, int link_id, double delta, const MsaConfig& config);

struct ContinuityReport {
    std::vector<double> ratios;
    double max_ratio = 0.0;
    double bound = 0.0;
    bool holds = false;
};

// ||h(J + d) - h(J)||_2 / ||d||_2 for each perturbation d (0 when d = 0).
ContinuityReport property_continuity(const Scenario& scenario, const IncentiveVector& J,
                                     const std::vector<Eigen::VectorXd>& perturbations, const MsaConfig& config,
                                     double bound = 100.0);

struct ContinuityScaleReport {
    std::vector<double> scales;
    std::vector<double> max_ratio;  // per scale
    double spread = 0.0;            // max / min over scales
    bool holds = false;             // every ratio < bound and spread < 10
};

// Runs property_continuity along fixed unit directions at each scale.
ContinuityScaleReport continuity_across_scales(const Scenario& scenario, const IncentiveVector& J,
                                               const std::vector<Eigen::VectorXd>& unit_directions,
                                               const std::vector<double>& scales, const MsaConfig& config,
                                               double bound = 100.0);

}  // namespace mmflow
