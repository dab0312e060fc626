#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmflow/demand_choice.hpp"
#include "mmflow/network.hpp"
#include "mmflow/qp.hpp"

namespace mmflow {

// Step sizes 1 / (p + q k^r), k = 1, 2, ...
struct StepSchedule {
    double p = 10.0;
    double q = 0.001;
    double r = 0.8;

    double operator()(int k) const;
    bool operator==(const StepSchedule&) const = default;
};

struct SolverSettings {
    StepSchedule alpha{10.0, 0.001, 0.8};
    StepSchedule beta{10.0, 1.0, 0.9};
    double eps_flow = 1e-6;
    double eps_incentive = 1e-4;
    int psi_iters = 5;  // warm-started ascent steps on psi per outer iteration
    int max_iters = 200000;
    QpSettings qp;
};

struct IncentiveBox {
    Eigen::VectorXd j_min;
    Eigen::VectorXd j_max;

    static IncentiveBox uniform(int link_count, double lo, double hi);
};

struct Scenario {
    Network network;
    LinkCostModel cost;
    LinkProfitModel profit;
    std::vector<PassengerClass> classes;
    std::vector<OdPair> od_pairs;
    IncentiveBox box;
    std::vector<std::string> providers;
    std::vector<double> theta;
    SolverSettings solver;

    int link_count() const { return network.link_count(); }
};

// Rebuilds every class's B^(k) from its route ids.
void attach_incidence(Scenario& scenario);

// Human-readable problems; empty when the scenario is usable.
std::vector<std::string> validate_scenario(const Scenario& scenario);

}  // namespace mmflow
