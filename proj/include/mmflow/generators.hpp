#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mmflow/network.hpp"
#include "mmflow/scenario.hpp"

namespace mmflow {

// All randomness goes through std::mt19937_64 (fully specified by the
// standard); draws are mapped to doubles/indices by the helpers below rather
// than by <random> distributions, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi);       // [lo, hi)
    std::uint64_t index(std::uint64_t count);  // [0, count)

private:
    std::mt19937_64 engine_;
};

struct GeneratorConfig {
    int n_nodes = 500;
    int m_attach = 2;
    int n_od_pairs = 100;
    int k_routes = 3;
    std::uint64_t seed = 0;
    double cost_lo = 10.0, cost_hi = 20.0;
    double demand_lo = 0.9, demand_hi = 1.1;
    double demand_scale = 10.0;
    std::vector<double> congestion_slopes{0.005, 0.01, 0.015};
    double profit_slope_lo = -0.1, profit_slope_hi = 0.1;
    double v0 = 200.0;
    double sigma = 200.0;
    int od_node_limit = 100;  // OD endpoints drawn from node ids 1..min(limit, n)
    double incentive_bound = 3.0;
    int max_iters = 100000;  // solver budget written into the scenario
};

// Preferential attachment from a complete seed graph on m + 1 nodes; each
// later node attaches to m distinct earlier nodes. Every undirected edge
// becomes two directed links. Node ids are 1..n.
Network barabasi_albert(int n, int m, std::uint64_t seed);

struct KShortestResult {
    std::vector<ElementaryPath> paths;
    std::vector<double> costs;
    bool truncated = false;  // fewer than k loopless paths exist
};

// Yen's k loopless shortest paths on constant link costs (indexed by link id - 1).
// Ties go to the lexicographically smaller node sequence, then link ids.
// Throws Unreachable when the destination cannot be reached.
KShortestResult k_shortest_paths(const Network& network, OdPair od, int k, const Eigen::VectorXd& costs);

// Same paths wrapped as single-path hyperpaths (ids from first_id upward).
std::vector<Hyperpath> k_shortest_hyperpaths(const Network& network, OdPair od, int k, const Eigen::VectorXd& costs,
                                             int first_id = 1, bool* truncated = nullptr);

Scenario random_scenario(const GeneratorConfig& config);

// The six-node, twelve-link Chengdu multi-modal network with two passenger classes.
Scenario chengdu_fixture();

}  // namespace mmflow
