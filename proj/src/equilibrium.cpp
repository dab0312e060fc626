#include "mmflow/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmflow {

MsaConfig MsaConfig::from(const SolverSettings& solver, int threads) {
    return MsaConfig{solver.alpha, solver.eps_flow, solver.max_iters, threads};
}

NotConverged::NotConverged(EquilibriumResult best)
    : Error("equilibrium not converged after " + std::to_string(best.iterations) + " iterations (residual " +
            std::to_string(best.residual) + ")"),
      best_(std::move(best)) {}

EquilibriumResult msa_iterate(const Scenario& scenario, const IncentiveVector& J, const MsaConfig& config,
                              const std::optional<FlowVector>& warm_start) {
    const int L = scenario.link_count();
    if (J.size() != L) throw DomainError("msa: incentive vector has wrong length");
    FlowVector f = warm_start ? *warm_start : FlowVector::Zero(L);
    if (f.size() != L) throw DomainError("msa: warm start has wrong length");

    EquilibriumResult best;
    best.residual = std::numeric_limits<double>::infinity();
    std::vector<double> trace;
    for (int k = 1; k <= config.max_iters; ++k) {
        Assignment g = assign_detailed(link_cost(f, J, scenario.cost), scenario.classes, config.threads);
        if (!g.flow.allFinite()) throw NumericalFailure("msa: non-finite assignment", k);
        const double r = (g.flow - f).norm();
        trace.push_back(r);
        if (r < best.residual) {
            best.f_star = f;
            best.per_class = std::move(g.per_class);
            best.residual = r;
            best.iterations = k;
        }
        if (r < config.eps_flow) {
            best.converged = true;
            best.iterations = k;
            break;
        }
        const double a = config.alpha(k);
        f = (1.0 - a) * f + a * g.flow;
        if (!f.allFinite()) throw NumericalFailure("msa: non-finite flow iterate", k);
    }
    if (!best.converged) best.iterations = static_cast<int>(trace.size());
    best.trace = std::move(trace);
    return best;
}

EquilibriumResult msa_solve(const Scenario& scenario, const IncentiveVector& J, const MsaConfig& config,
                            const std::optional<FlowVector>& warm_start) {
    EquilibriumResult r = msa_iterate(scenario, J, config, warm_start);
    if (!r.converged) throw NotConverged(std::move(r));
    return r;
}

double residual(const Scenario& scenario, const FlowVector& f, const IncentiveVector& J, int threads) {
    return (assign(link_cost(f, J, scenario.cost), scenario.classes, threads) - f).norm();
}

MonotonicityReport property_monotonicity(const Scenario& scenario, int link_id, double delta, const MsaConfig& config) {
    if (link_id < 1 || link_id > scenario.link_count()) throw DomainError("monotonicity: unknown link id");
    if (delta < 0.0) throw DomainError("monotonicity: delta must be >= 0");
    const IncentiveVector zero = IncentiveVector::Zero(scenario.link_count());

    Scenario cheaper = scenario;
    cheaper.cost.price[link_id - 1] -= delta;

    MonotonicityReport report;
    report.link = link_id;
    report.delta = delta;
    report.flow_before = msa_solve(scenario, zero, config).f_star[link_id - 1];
    report.flow_after = msa_solve(cheaper, zero, config).f_star[link_id - 1];
    report.difference = report.flow_after - report.flow_before;
    report.holds = report.difference > -1e-8;
    return report;
}

ContinuityReport property_continuity(const Scenario& scenario, const IncentiveVector& J,
                                     const std::vector<Eigen::VectorXd>& perturbations, const MsaConfig& config,
                                     double bound) {
    const FlowVector base = msa_solve(scenario, J, config).f_star;
    ContinuityReport report;
    report.bound = bound;
    for (const auto& delta : perturbations) {
        const double size = delta.norm();
        if (size == 0.0) {
            report.ratios.push_back(0.0);
            continue;
        }
        const IncentiveVector moved = J + delta;
        if ((moved.array() < scenario.box.j_min.array()).any() || (moved.array() > scenario.box.j_max.array()).any()) {
            throw DomainError("continuity: perturbation leaves the incentive box");
        }
        const FlowVector shifted = msa_solve(scenario, moved, config, base).f_star;
        report.ratios.push_back((shifted - base).norm() / size);
    }
    report.max_ratio = report.ratios.empty() ? 0.0 : *std::max_element(report.ratios.begin(), report.ratios.end());
    report.holds = std::all_of(report.ratios.begin(), report.ratios.end(),
                               [bound](double r) { return std::isfinite(r) && r < bound; });
    return report;
}

ContinuityScaleReport continuity_across_scales(const Scenario& scenario, const IncentiveVector& J,
                                               const std::vector<Eigen::VectorXd>& unit_directions,
                                               const std::vector<double>& scales, const MsaConfig& config,
                                               double bound) {
    ContinuityScaleReport report;
    report.scales = scales;
    bool bounded = true;
    for (double scale : scales) {
        std::vector<Eigen::VectorXd> perturbations;
        for (const auto& u : unit_directions) perturbations.push_back(scale * u.normalized());
        ContinuityReport at_scale = property_continuity(scenario, J, perturbations, config, bound);
        bounded = bounded && at_scale.holds;
        report.max_ratio.push_back(at_scale.max_ratio);
    }
    if (!report.max_ratio.empty()) {
        const auto [lo, hi] = std::minmax_element(report.max_ratio.begin(), report.max_ratio.end());
        report.spread = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
    }
    report.holds = bounded && report.spread < 10.0;
    return report;
}

}  // namespace mmflow
