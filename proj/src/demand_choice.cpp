#include "mmflow/demand_choice.hpp"

#include <algorithm>
#include <cmath>

#include "mmflow/errors.hpp"
#include "parallel.hpp"

namespace mmflow {

namespace {

void require_size(Eigen::Index actual, Eigen::Index expected, const char* what) {
    if (actual != expected) {
        throw DomainError(std::string(what) + ": expected length " + std::to_string(expected) + ", got " +
                          std::to_string(actual));
    }
}

Eigen::Index argmax_lowest(const Eigen::VectorXd& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

double max_shifted_logsumexp(const Eigen::VectorXd& v) {
    const double top = v.maxCoeff();
    return top + std::log((v.array() - top).exp().sum());
}

}  // namespace

CostVector link_cost(const FlowVector& f, const IncentiveVector& J, const LinkCostModel& model) {
    const auto L = model.price.size();
    require_size(f.size(), L, "link_cost flow");
    require_size(J.size(), L, "link_cost incentive");
    if ((f.array() < 0.0).any()) throw DomainError("link_cost: negative link flow");
    return model.price + J + model.gamma * (model.congestion_slope.cwiseProduct(f) + model.time_const);
}

Eigen::VectorXd route_utility(const CostVector& c, const PassengerClass& cls) {
    require_size(c.size(), cls.incidence.B.rows(), "route_utility cost");
    Eigen::VectorXd v = Eigen::VectorXd::Constant(cls.incidence.B.cols(), cls.v0);
    v.noalias() -= cls.beta * (cls.incidence.B.transpose() * c);
    if (cls.route_specific_cost.size() != 0) {
        require_size(cls.route_specific_cost.size(), v.size(), "route_utility route-specific cost");
        v -= cls.route_specific_cost;
    }
    return v;
}

Eigen::VectorXd logit_probs(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw DomainError("logit_probs: empty utility vector");
    Eigen::VectorXd p = (v.array() - v.maxCoeff()).exp();
    return p / p.sum();
}

double satisfaction(const Eigen::VectorXd& v, const SatisfactionMode& mode) {
    if (v.size() == 0) throw DomainError("satisfaction: empty utility vector");
    switch (mode.kind) {
        case SatisfactionKind::scaled_max: return v.maxCoeff() / mode.sigma;
        case SatisfactionKind::logsum: return max_shifted_logsumexp(v) / mode.sigma;
    }
    return 0.0;
}

Eigen::VectorXd satisfaction_gradient(const Eigen::VectorXd& v, const SatisfactionMode& mode) {
    if (v.size() == 0) throw DomainError("satisfaction_gradient: empty utility vector");
    if (mode.kind == SatisfactionKind::logsum) return logit_probs(v) / mode.sigma;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(v.size());
    grad[argmax_lowest(v)] = 1.0 / mode.sigma;
    return grad;
}

double demand(double s, const DemandCurve& curve) {
    if (const auto* t = std::get_if<TanhDemand>(&curve)) {
        return std::max(0.0, t->a * std::tanh(t->b * s));
    }
    const auto& knots = std::get<TableDemand>(curve).knots;
    if (knots.empty()) return 0.0;
    if (s <= knots.front().first) return std::max(0.0, knots.front().second);
    if (s >= knots.back().first) return std::max(0.0, knots.back().second);
    auto hi = std::upper_bound(knots.begin(), knots.end(), s,
                               [](double x, const std::pair<double, double>& k) { return x < k.first; });
    auto lo = hi - 1;
    const double w = (s - lo->first) / (hi->first - lo->first);
    return std::max(0.0, lo->second + w * (hi->second - lo->second));
}

double demand_derivative(double s, const DemandCurve& curve) {
    if (const auto* t = std::get_if<TanhDemand>(&curve)) {
        const double th = std::tanh(t->b * s);
        if (t->a * th <= 0.0) return 0.0;  // clamped branch
        return t->a * t->b * (1.0 - th * th);
    }
    const auto& knots = std::get<TableDemand>(curve).knots;
    if (knots.size() < 2 || s <= knots.front().first || s >= knots.back().first) return 0.0;
    auto hi = std::upper_bound(knots.begin(), knots.end(), s,
                               [](double x, const std::pair<double, double>& k) { return x < k.first; });
    auto lo = hi - 1;
    if (lo->second + (s - lo->first) / (hi->first - lo->first) * (hi->second - lo->second) <= 0.0) return 0.0;
    return (hi->second - lo->second) / (hi->first - lo->first);
}

void check_demand_curve(const DemandCurve& curve) {
    if (const auto* t = std::get_if<TanhDemand>(&curve)) {
        if (!(t->a >= 0.0)) throw DomainError("demand curve: amplitude a must be >= 0");
        if (!(t->b > 0.0)) throw DomainError("demand curve: rate b must be > 0");
        return;
    }
    const auto& knots = std::get<TableDemand>(curve).knots;
    if (knots.empty()) throw DomainError("demand table: no knots");
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i].first > knots[i - 1].first)) throw DomainError("demand table: s values must increase strictly");
        if (knots[i].second < knots[i - 1].second) throw DomainError("demand table: demand must be non-decreasing in s");
    }
}

ClassResponse respond(const CostVector& c, const PassengerClass& cls) {
    ClassResponse r;
    r.utility = route_utility(c, cls);
    r.probability = logit_probs(r.utility);
    r.satisfaction = satisfaction(r.utility, cls.satisfaction);
    r.demand = demand(r.satisfaction, cls.demand);
    r.route_flow = r.probability * r.demand;
    return r;
}

Assignment assign_detailed(const CostVector& c, const std::vector<PassengerClass>& classes, int threads) {
    if (!c.allFinite()) throw DomainError("assign: non-finite link cost");
    Assignment out;
    out.per_class.resize(classes.size());
    detail::parallel_for(static_cast<int>(classes.size()), threads,
                         [&](int k) { out.per_class[k] = respond(c, classes[k]); });
    out.flow = FlowVector::Zero(c.size());
    for (std::size_t k = 0; k < classes.size(); ++k) {
        out.flow.noalias() += classes[k].incidence.B * out.per_class[k].route_flow;
    }
    return out;
}

FlowVector assign(const CostVector& c, const std::vector<PassengerClass>& classes, int threads) {
    return assign_detailed(c, classes, threads).flow;
}

}  // namespace mmflow
