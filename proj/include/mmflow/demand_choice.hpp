#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mmflow/network.hpp"

namespace mmflow {

// Link-indexed vectors (row l holds link id l + 1).
using FlowVector = Eigen::VectorXd;       // passengers
using CostVector = Eigen::VectorXd;       // currency
using IncentiveVector = Eigen::VectorXd;  // currency, < 0 is a discount

// c_i(f) = price_i + J_i + gamma * (slope_i * f_i + time_i)
struct LinkCostModel {
    Eigen::VectorXd price;
    Eigen::VectorXd time_const;
    Eigen::VectorXd congestion_slope;
    double gamma = 1.0;
};

// pi(f) = diag(slope) f + intercept
struct LinkProfitModel {
    Eigen::VectorXd slope;
    Eigen::VectorXd intercept;

    Eigen::VectorXd operator()(const FlowVector& f) const { return slope.cwiseProduct(f) + intercept; }
};

enum class SatisfactionKind { scaled_max, logsum };

struct SatisfactionMode {
    SatisfactionKind kind = SatisfactionKind::scaled_max;
    double sigma = 1.0;
};

// d = max(0, a * tanh(b * s))
struct TanhDemand {
    double a = 0.0;
    double b = 1.0;
};

// Piecewise-linear through (s, d) knots with flat extrapolation.
struct TableDemand {
    std::vector<std::pair<double, double>> knots;
};

using DemandCurve = std::variant<TanhDemand, TableDemand>;

struct PassengerClass {
    std::string name;
    double v0 = 0.0;
    double beta = 1.0;
    Eigen::VectorXd route_specific_cost;  // empty means zero
    SatisfactionMode satisfaction;
    DemandCurve demand = TanhDemand{};
    std::vector<int> route_ids;
    IncidenceData incidence;  // B^(k) over route_ids

    int route_count() const { return static_cast<int>(incidence.B.cols()); }
};

// Everything one class does in response to a cost vector.
struct ClassResponse {
    Eigen::VectorXd utility;
    Eigen::VectorXd probability;
    Eigen::VectorXd route_flow;
    double satisfaction = 0.0;
    double demand = 0.0;
};

struct Assignment {
    FlowVector flow;
    std::vector<ClassResponse> per_class;
};

CostVector link_cost(const FlowVector& f, const IncentiveVector& J, const LinkCostModel& model);

Eigen::VectorXd route_utility(const CostVector& c, const PassengerClass& cls);

Eigen::VectorXd logit_probs(const Eigen::VectorXd& v);

double satisfaction(const Eigen::VectorXd& v, const SatisfactionMode& mode);

// dS/dv: e_argmax / sigma (lowest index on ties) or p / sigma.
Eigen::VectorXd satisfaction_gradient(const Eigen::VectorXd& v, const SatisfactionMode& mode);

double demand(double s, const DemandCurve& curve);
double demand_derivative(double s, const DemandCurve& curve);

// Throws DomainError for invalid curve parameters or non-monotone tables.
void check_demand_curve(const DemandCurve& curve);

ClassResponse respond(const CostVector& c, const PassengerClass& cls);

// g(c) = sum_k B^(k) p_k d_k. Classes are evaluated on up to `threads`
// workers; the flow is accumulated in class order so the result does not
// depend on the thread count.
Assignment assign_detailed(const CostVector& c, const std::vector<PassengerClass>& classes, int threads = 1);
FlowVector assign(const CostVector& c, const std::vector<PassengerClass>& classes, int threads = 1);

}  // namespace mmflow
