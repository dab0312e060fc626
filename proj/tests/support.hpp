#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mmflow/demand_choice.hpp"
#include "mmflow/generators.hpp"
#include "mmflow/scenario.hpp"

namespace mmflow::testing {

// Two parallel links o -> d, one route each, a single passenger class.
inline Scenario two_route_toy(SatisfactionKind kind = SatisfactionKind::scaled_max, double sigma = 20.0) {
    Scenario s;
    std::vector<Link> links{{1, 0, 1, Mode::taxi, 0}, {2, 0, 1, Mode::bus, 1}};
    std::vector<Hyperpath> routes{{1, {0, 1}, {1}, {}}, {2, {0, 1}, {2}, {}}};
    s.network = Network({{0, "o"}, {1, "d"}}, std::move(links), std::move(routes));
    s.cost.price = Eigen::Vector2d(10.0, 6.0);
    s.cost.time_const = Eigen::Vector2d(4.0, 9.0);
    s.cost.congestion_slope = Eigen::Vector2d(0.3, 0.1);
    s.cost.gamma = 1.0;
    s.profit.slope = Eigen::Vector2d(-0.05, 0.02);
    s.profit.intercept = Eigen::Vector2d(3.0, 1.0);
    PassengerClass cls;
    cls.name = "toy";
    cls.v0 = 40.0;
    cls.beta = 1.0;
    cls.satisfaction = {kind, sigma};
    cls.demand = TanhDemand{30.0, 1.0};
    cls.route_ids = {1, 2};
    s.classes.push_back(cls);
    s.od_pairs = {{0, 1}};
    s.box = IncentiveBox::uniform(2, -3.0, 3.0);
    s.providers = {"taxi", "bus"};
    s.theta = {1.0, 1.0};
    attach_incidence(s);
    return s;
}

// Small random scenario from the scale-free generator.
inline Scenario small_random(std::uint64_t seed, SatisfactionKind kind = SatisfactionKind::scaled_max) {
    GeneratorConfig cfg;
    cfg.n_nodes = 12;
    cfg.m_attach = 2;
    cfg.n_od_pairs = 3;
    cfg.k_routes = 3;
    cfg.seed = seed;
    Scenario s = random_scenario(cfg);
    for (auto& cls : s.classes) cls.satisfaction.kind = kind;
    return s;
}

// Central differences with one Richardson step: error O(h^4).
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                                   const Eigen::VectorXd& x, double h) {
    const Eigen::VectorXd y0 = fn(x);
    Eigen::MatrixXd out(y0.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        auto central = [&](double step) {
            Eigen::VectorXd up = x, down = x;
            up[j] += step;
            down[j] -= step;
            return Eigen::VectorXd((fn(up) - fn(down)) / (2.0 * step));
        };
        out.col(j) = (4.0 * central(0.5 * h) - central(h)) / 3.0;
    }
    return out;
}

inline double bisect(const std::function<double(double)>& fn, double lo, double hi, double tol = 1e-14) {
    double flo = fn(lo);
    for (int i = 0; i < 200 && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = fn(mid);
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace mmflow::testing
