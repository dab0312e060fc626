#include "mmflow/bargaining.hpp"

#include "mmflow/errors.hpp"
#include "mmflow/scenario.hpp"

namespace mmflow {

ProviderMap ProviderMap::from(const Scenario& scenario) {
    const int L = scenario.link_count();
    const int S = static_cast<int>(scenario.providers.size());
    ProviderMap map;
    map.names = scenario.providers;
    map.Z = Eigen::MatrixXd::Zero(L, S);
    for (int l = 0; l < L; ++l) {
        const int provider = scenario.network.links()[l].provider;
        if (provider < 0 || provider >= S) {
            throw SchemaError("link " + std::to_string(l + 1) + ": provider index out of range");
        }
        map.Z(l, provider) = 1.0;
    }
    return map;
}

Eigen::VectorXd provider_profits(const FlowVector& f, const IncentiveVector& J, const LinkProfitModel& profit,
                                 const ProviderMap& providers) {
    const auto L = providers.Z.rows();
    if (f.size() != L || J.size() != L || profit.slope.size() != L) {
        throw DomainError("provider_profits: dimension mismatch");
    }
    const Eigen::VectorXd per_link = f.cwiseProduct(profit(f) + J);
    return providers.Z.transpose() * per_link;
}

SharingResult asymmetric_nash(double R_c, const Eigen::VectorXd& t, const Eigen::VectorXd& theta) {
    if (t.size() != theta.size() || t.size() == 0) throw DomainError("asymmetric_nash: t and theta must match and be non-empty");
    if ((theta.array() <= 0.0).any()) throw DomainError("asymmetric_nash: weights must be positive");
    const double surplus = R_c - t.sum();
    if (!(surplus > 0.0)) {
        throw NoSurplus("asymmetric_nash: total profit " + std::to_string(R_c) +
                        " does not exceed the disagreement total " + std::to_string(t.sum()));
    }
    SharingResult r;
    r.t = t;
    r.R_c = R_c;
    r.R_star = theta / theta.sum() * surplus + t;
    r.increase = r.R_star - t;
    return r;
}

SharingResult asymmetric_nash(const Eigen::VectorXd& post, const Eigen::VectorXd& t, const Eigen::VectorXd& theta) {
    if (post.size() != t.size()) throw DomainError("asymmetric_nash: post and t differ in length");
    SharingResult r = asymmetric_nash(post.sum(), t, theta);
    r.post = post;
    r.compensation = r.R_star - post;
    return r;
}

Eigen::VectorXd equal_split(double R_c, int providers) {
    if (providers < 1) throw DomainError("equal_split: need at least one provider");
    return Eigen::VectorXd::Constant(providers, R_c / providers);
}

}  // namespace mmflow
