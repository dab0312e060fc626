#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmflow/demand_choice.hpp"

namespace mmflow {

struct Scenario;

// Z(l, i) = 1 iff link l + 1 is operated by provider i.
struct ProviderMap {
    Eigen::MatrixXd Z;
    std::vector<std::string> names;

    static ProviderMap from(const Scenario& scenario);
};

struct SharingResult {
    Eigen::VectorXd t;             // disagreement payoffs (before cooperation)
    Eigen::VectorXd post;          // provider profits under the incentive
    double R_c = 0.0;              // total profit after cooperation
    Eigen::VectorXd R_star;        // allocation
    Eigen::VectorXd compensation;  // R_star - post
    Eigen::VectorXd increase;      // R_star - t
};

// Component i: sum_l Z(l, i) f_l (pi_l(f) + J_l)
Eigen::VectorXd provider_profits(const FlowVector& f, const IncentiveVector& J, const LinkProfitModel& profit,
                                 const ProviderMap& providers);

// Maximizer of sum_i theta_i ln(R_i - t_i) over sum R = R_c:
//   R*_i = theta_i / sum(theta) (R_c - sum t) + t_i.
// Throws NoSurplus when R_c <= sum t, DomainError on bad weights.
SharingResult asymmetric_nash(double R_c, const Eigen::VectorXd& t, const Eigen::VectorXd& theta);

// Same allocation with the post-cooperation provider profits filled in.
SharingResult asymmetric_nash(const Eigen::VectorXd& post, const Eigen::VectorXd& t, const Eigen::VectorXd& theta);

Eigen::VectorXd equal_split(double R_c, int providers);

}  // namespace mmflow
