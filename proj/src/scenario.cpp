#include "mmflow/scenario.hpp"

#include <cmath>
#include <set>

#include "mmflow/errors.hpp"

namespace mmflow {

double StepSchedule::operator()(int k) const {
    return 1.0 / (p + q * std::pow(static_cast<double>(k), r));
}

IncentiveBox IncentiveBox::uniform(int link_count, double lo, double hi) {
    return {Eigen::VectorXd::Constant(link_count, lo), Eigen::VectorXd::Constant(link_count, hi)};
}

void attach_incidence(Scenario& scenario) {
    for (auto& cls : scenario.classes) cls.incidence = build_incidence(scenario.network, cls.route_ids);
}

namespace {

void check_length(std::vector<std::string>& out, const char* what, Eigen::Index actual, Eigen::Index expected) {
    if (actual != expected) {
        out.push_back(std::string(what) + ": length " + std::to_string(actual) + ", expected " +
                      std::to_string(expected));
    }
}

void check_schedule(std::vector<std::string>& out, const char* name, const StepSchedule& s) {
    const std::string prefix = std::string("solver.") + name + ": ";
    if (!(s.q > 0.0)) out.push_back(prefix + "q must be > 0 for a tapering step");
    if (!(s.r > 0.5 && s.r <= 1.0)) out.push_back(prefix + "r must lie in (0.5, 1]");
    if (!(s.p >= 0.0)) out.push_back(prefix + "p must be >= 0");
    if (!(s.p + s.q >= 1.0)) out.push_back(prefix + "first step 1/(p+q) must not exceed 1");
}

}  // namespace

std::vector<std::string> validate_scenario(const Scenario& scenario) {
    std::vector<std::string> out = validate_network(scenario.network);
    const int L = scenario.link_count();
    const int S = static_cast<int>(scenario.providers.size());

    check_length(out, "cost.price", scenario.cost.price.size(), L);
    check_length(out, "cost.time", scenario.cost.time_const.size(), L);
    check_length(out, "cost.congestion_slope", scenario.cost.congestion_slope.size(), L);
    check_length(out, "profit.slope", scenario.profit.slope.size(), L);
    check_length(out, "profit.intercept", scenario.profit.intercept.size(), L);
    check_length(out, "incentive_box.j_min", scenario.box.j_min.size(), L);
    check_length(out, "incentive_box.j_max", scenario.box.j_max.size(), L);
    if (!out.empty()) return out;

    for (int l = 0; l < L; ++l) {
        const std::string prefix = "link " + std::to_string(l + 1) + ": ";
        if (!(scenario.cost.price[l] >= 0.0)) out.push_back(prefix + "price must be >= 0");
        if (!(scenario.cost.congestion_slope[l] >= 0.0)) out.push_back(prefix + "congestion slope must be >= 0");
        if (!(scenario.box.j_min[l] <= scenario.box.j_max[l])) out.push_back(prefix + "j_min exceeds j_max");
        const int provider = scenario.network.links()[l].provider;
        if (provider < 0 || provider >= S) out.push_back(prefix + "provider index " + std::to_string(provider) + " out of range");
    }
    if (!(scenario.cost.gamma >= 0.0)) out.push_back("cost.gamma must be >= 0");

    if (S == 0) out.push_back("providers: at least one provider required");
    if (static_cast<int>(scenario.theta.size()) != S) {
        out.push_back("theta: length " + std::to_string(scenario.theta.size()) + ", expected " + std::to_string(S));
    }
    for (std::size_t i = 0; i < scenario.theta.size(); ++i) {
        if (!(scenario.theta[i] > 0.0)) out.push_back("theta[" + std::to_string(i) + "] must be > 0");
    }

    for (std::size_t k = 0; k < scenario.classes.size(); ++k) {
        const auto& cls = scenario.classes[k];
        const std::string prefix = "class " + std::to_string(k) + " (" + cls.name + "): ";
        if (cls.route_ids.empty()) out.push_back(prefix + "no admissible routes");
        std::set<OdPair> ods;
        for (int id : cls.route_ids) {
            const Hyperpath* hp = scenario.network.find_hyperpath(id);
            if (!hp) {
                out.push_back(prefix + "unknown route id " + std::to_string(id));
                continue;
            }
            ods.insert(hp->od);
        }
        if (ods.size() > 1) out.push_back(prefix + "routes span more than one OD pair");
        if (!(cls.satisfaction.sigma > 0.0)) out.push_back(prefix + "sigma must be > 0");
        if (!(cls.beta >= 0.0)) out.push_back(prefix + "beta must be >= 0");
        try {
            check_demand_curve(cls.demand);
        } catch (const DomainError& e) {
            out.push_back(prefix + e.what());
        }
        if (cls.route_specific_cost.size() != 0 &&
            cls.route_specific_cost.size() != static_cast<Eigen::Index>(cls.route_ids.size())) {
            out.push_back(prefix + "route_specific_cost length differs from route count");
        }
        if (cls.incidence.B.rows() != L || cls.incidence.B.cols() != static_cast<Eigen::Index>(cls.route_ids.size())) {
            out.push_back(prefix + "incidence not attached");
        }
    }

    const auto& s = scenario.solver;
    check_schedule(out, "alpha", s.alpha);
    check_schedule(out, "beta", s.beta);
    if (!(s.beta.r > s.alpha.r)) out.push_back("solver: beta.r must exceed alpha.r so that beta_k / alpha_k -> 0");
    if (!(s.eps_flow > 0.0)) out.push_back("solver.eps_flow must be > 0");
    if (!(s.eps_incentive > 0.0)) out.push_back("solver.eps_incentive must be > 0");
    if (s.psi_iters < 1) out.push_back("solver.psi_iters must be >= 1");
    if (s.max_iters < 1) out.push_back("solver.max_iters must be >= 1");
    return out;
}

}  // namespace mmflow
