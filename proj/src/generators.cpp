#include "mmflow/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <tuple>

#include "mmflow/errors.hpp"

namespace mmflow {

double Rng::uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

std::uint64_t Rng::index(std::uint64_t count) {
    return engine_() % count;
}

namespace {

Network barabasi_albert(int n, int m, Rng& rng) {
    if (m < 1 || n <= m) throw DomainError("barabasi_albert: need n > m >= 1");
    std::vector<std::pair<int, int>> edges;
    std::vector<int> endpoints;  // node repeated once per incident edge
    for (int u = 1; u <= m + 1; ++u) {
        for (int v = u + 1; v <= m + 1; ++v) {
            edges.emplace_back(u, v);
            endpoints.push_back(u);
            endpoints.push_back(v);
        }
    }
    for (int v = m + 2; v <= n; ++v) {
        std::set<int> targets;
        while (static_cast<int>(targets.size()) < m) {
            targets.insert(endpoints[rng.index(endpoints.size())]);
        }
        for (int t : targets) {
            edges.emplace_back(t, v);
            endpoints.push_back(t);
            endpoints.push_back(v);
        }
    }

    std::vector<Node> nodes;
    for (int id = 1; id <= n; ++id) nodes.push_back({id, {}});
    std::vector<Link> links;
    for (const auto& [u, v] : edges) {
        links.push_back({static_cast<int>(links.size()) + 1, u, v, Mode::generic, 0});
        links.push_back({static_cast<int>(links.size()) + 1, v, u, Mode::generic, 0});
    }
    return Network(std::move(nodes), std::move(links), {});
}

struct SearchGraph {
    std::map<int, std::vector<const Link*>> out;
    std::map<int, std::vector<const Link*>> in;
};

SearchGraph search_graph(const Network& network) {
    SearchGraph g;
    for (const auto& link : network.links()) {
        g.out[link.tail].push_back(&link);
        g.in[link.head].push_back(&link);
    }
    return g;
}

struct FoundPath {
    std::vector<int> nodes;
    std::vector<int> links;
};

bool close(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

// Shortest path avoiding the banned nodes/links; among equal-cost paths the
// lexicographically smallest node sequence (then link ids) wins.
std::optional<FoundPath> shortest_path(const SearchGraph& g, int source, int target, const Eigen::VectorXd& costs,
                                       const std::set<int>& banned_nodes, const std::set<int>& banned_links) {
    if (banned_nodes.count(source) || banned_nodes.count(target)) return std::nullopt;
    // Reverse Dijkstra: distance from every node to the target.
    std::map<int, double> to_target{{target, 0.0}};
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    queue.push({0.0, target});
    while (!queue.empty()) {
        auto [d, v] = queue.top();
        queue.pop();
        if (d > to_target[v]) continue;
        auto it = g.in.find(v);
        if (it == g.in.end()) continue;
        for (const Link* link : it->second) {
            if (banned_links.count(link->id) || banned_nodes.count(link->tail)) continue;
            const double nd = d + costs[link->id - 1];
            auto [pos, inserted] = to_target.try_emplace(link->tail, nd);
            if (inserted || nd < pos->second) {
                pos->second = nd;
                queue.push({nd, link->tail});
            }
        }
    }
    if (!to_target.count(source)) return std::nullopt;

    FoundPath path{{source}, {}};
    int u = source;
    while (u != target) {
        const Link* pick = nullptr;
        for (const Link* link : g.out.at(u)) {
            if (banned_links.count(link->id) || banned_nodes.count(link->head)) continue;
            auto dt = to_target.find(link->head);
            if (dt == to_target.end() || !close(costs[link->id - 1] + dt->second, to_target.at(u))) continue;
            if (!pick || std::tie(link->head, link->id) < std::tie(pick->head, pick->id)) pick = link;
        }
        if (!pick) return std::nullopt;
        path.links.push_back(pick->id);
        path.nodes.push_back(pick->head);
        u = pick->head;
    }
    return path;
}

double path_cost(const std::vector<int>& links, const Eigen::VectorXd& costs) {
    double total = 0.0;
    for (int id : links) total += costs[id - 1];
    return total;
}

}  // namespace

Network barabasi_albert(int n, int m, std::uint64_t seed) {
    Rng rng(seed);
    return barabasi_albert(n, m, rng);
}

KShortestResult k_shortest_paths(const Network& network, OdPair od, int k, const Eigen::VectorXd& costs) {
    if (k < 1) throw DomainError("k_shortest_paths: k must be >= 1");
    if (costs.size() != network.link_count()) throw DomainError("k_shortest_paths: cost vector has wrong length");
    if ((costs.array() < 0.0).any()) throw DomainError("k_shortest_paths: negative link cost");
    const SearchGraph g = search_graph(network);

    auto first = shortest_path(g, od.origin, od.destination, costs, {}, {});
    if (!first) {
        throw Unreachable("no path from node " + std::to_string(od.origin) + " to node " + std::to_string(od.destination));
    }

    using Key = std::tuple<double, std::vector<int>, std::vector<int>>;  // cost, nodes, links
    std::vector<Key> accepted{{path_cost(first->links, costs), first->nodes, first->links}};
    std::set<Key> candidates;
    std::set<std::vector<int>> known{first->links};

    while (static_cast<int>(accepted.size()) < k) {
        const auto& [prev_cost, prev_nodes, prev_links] = accepted.back();
        for (std::size_t i = 0; i + 1 < prev_nodes.size(); ++i) {
            const int spur = prev_nodes[i];
            const std::vector<int> root_links(prev_links.begin(), prev_links.begin() + i);
            std::set<int> banned_links;
            for (const auto& [c, nodes, links] : accepted) {
                if (links.size() > i && std::equal(root_links.begin(), root_links.end(), links.begin())) {
                    banned_links.insert(links[i]);
                }
            }
            std::set<int> banned_nodes(prev_nodes.begin(), prev_nodes.begin() + i);
            auto tail = shortest_path(g, spur, od.destination, costs, banned_nodes, banned_links);
            if (!tail) continue;
            std::vector<int> nodes(prev_nodes.begin(), prev_nodes.begin() + i);
            nodes.insert(nodes.end(), tail->nodes.begin(), tail->nodes.end());
            std::vector<int> links = root_links;
            links.insert(links.end(), tail->links.begin(), tail->links.end());
            if (known.insert(links).second) candidates.insert({path_cost(links, costs), nodes, links});
        }
        if (candidates.empty()) break;
        accepted.push_back(*candidates.begin());
        candidates.erase(candidates.begin());
    }

    KShortestResult result;
    result.truncated = static_cast<int>(accepted.size()) < k;
    for (auto& [c, nodes, links] : accepted) {
        result.paths.push_back(ElementaryPath{od, links});
        result.costs.push_back(c);
    }
    return result;
}

std::vector<Hyperpath> k_shortest_hyperpaths(const Network& network, OdPair od, int k, const Eigen::VectorXd& costs,
                                             int first_id, bool* truncated) {
    KShortestResult found = k_shortest_paths(network, od, k, costs);
    if (truncated) *truncated = found.truncated;
    std::vector<Hyperpath> out;
    for (auto& path : found.paths) {
        Hyperpath hp;
        hp.id = first_id + static_cast<int>(out.size());
        hp.od = od;
        hp.links = path.links;
        for (int id : path.links) hp.diversion[{network.find_link(id)->tail, id}] = 1.0;
        out.push_back(std::move(hp));
    }
    return out;
}

Scenario random_scenario(const GeneratorConfig& config) {
    if (config.k_routes < 1) throw DomainError("random_scenario: k_routes must be >= 1");
    if (config.n_od_pairs < 1) throw DomainError("random_scenario: n_od_pairs must be >= 1");
    if (config.congestion_slopes.empty()) throw DomainError("random_scenario: no congestion slope buckets");
    Rng rng(config.seed);
    const Network graph = barabasi_albert(config.n_nodes, config.m_attach, rng);
    const int L = graph.link_count();

    static const Mode bucket_modes[] = {Mode::subway, Mode::bus, Mode::taxi};
    const auto buckets = config.congestion_slopes.size();

    Scenario s;
    s.cost.price.resize(L);
    s.cost.time_const = Eigen::VectorXd::Zero(L);
    s.cost.congestion_slope.resize(L);
    s.cost.gamma = 1.0;
    s.profit.slope.resize(L);
    s.profit.intercept.resize(L);
    std::vector<Link> links = graph.links();
    for (int l = 0; l < L; ++l) {
        const double c0 = rng.uniform(config.cost_lo, config.cost_hi);
        const auto bucket = rng.index(buckets);
        s.cost.price[l] = c0;
        s.cost.congestion_slope[l] = config.congestion_slopes[bucket];
        s.profit.slope[l] = rng.uniform(config.profit_slope_lo, config.profit_slope_hi);
        s.profit.intercept[l] = c0 / 2.0;
        links[l].provider = static_cast<int>(bucket);
        links[l].mode = bucket < 3 ? bucket_modes[bucket] : Mode::generic;
    }
    for (std::size_t b = 0; b < buckets; ++b) {
        s.providers.push_back(b < 3 ? std::string(to_string(bucket_modes[b])) : "mode_" + std::to_string(b + 1));
        s.theta.push_back(1.0);
    }

    const int od_range = std::min(config.od_node_limit, config.n_nodes);
    const Network plain(graph.nodes(), links, {});
    std::vector<Hyperpath> hyperpaths;
    for (int n = 0; n < config.n_od_pairs; ++n) {
        OdPair od;
        od.origin = 1 + static_cast<int>(rng.index(od_range));
        do {
            od.destination = 1 + static_cast<int>(rng.index(od_range));
        } while (od.destination == od.origin);
        const double a = rng.uniform(config.demand_lo, config.demand_hi);
        const double b = rng.uniform(config.demand_lo, config.demand_hi);

        auto routes = k_shortest_hyperpaths(plain, od, config.k_routes, s.cost.price,
                                            static_cast<int>(hyperpaths.size()) + 1);
        PassengerClass cls;
        cls.name = "od_" + std::to_string(n + 1);
        cls.v0 = config.v0;
        cls.beta = 1.0;
        cls.satisfaction = {SatisfactionKind::scaled_max, config.sigma};
        cls.demand = TanhDemand{config.demand_scale * a, b};
        for (auto& hp : routes) {
            cls.route_ids.push_back(hp.id);
            hyperpaths.push_back(std::move(hp));
        }
        s.classes.push_back(std::move(cls));
        s.od_pairs.push_back(od);
    }

    s.network = Network(graph.nodes(), std::move(links), std::move(hyperpaths));
    s.box = IncentiveBox::uniform(L, -config.incentive_bound, config.incentive_bound);
    s.solver.alpha = {10.0, 0.001, 0.8};
    s.solver.beta = {100.0, 0.8, 0.9};
    s.solver.max_iters = config.max_iters;
    attach_incidence(s);
    return s;
}

Scenario chengdu_fixture() {
    // Node 0 is the origin (railway station), node 5 the destination (airport).
    std::vector<Node> nodes{{0, "o"}, {1, "1"}, {2, "2"}, {3, "3"}, {4, "4"}, {5, "d"}};
    constexpr int taxi = 0, bus = 1, scooter = 2, subway = 3;
    struct Row {
        int tail, head;
        Mode mode;
        int provider;
        double price, minutes, profit_slope, profit_intercept;
    };
    const Row rows[] = {
        {0, 5, Mode::taxi, taxi, 50, 44, -0.2, 10},     {0, 1, Mode::taxi, taxi, 20, 14, -0.2, 4},
        {1, 2, Mode::bus, bus, 3, 42, 0.05, 0.5},        {2, 5, Mode::bus, bus, 3, 38, 0.05, 0.5},
        {2, 5, Mode::bus, bus, 4, 36, 0.05, 0.75},       {1, 3, Mode::scooter, scooter, 1, 6, -0.03, 0.7},
        {3, 1, Mode::scooter, scooter, 1, 6, -0.03, 0.7}, {2, 4, Mode::scooter, scooter, 1, 6, -0.03, 0.7},
        {4, 2, Mode::scooter, scooter, 1, 6, -0.03, 0.7}, {0, 3, Mode::bus, bus, 3, 48, 0.05, 0.5},
        {3, 4, Mode::subway, subway, 5, 34, 0.05, 2},    {4, 5, Mode::subway, subway, 4, 40, 0.05, 1.6},
    };
    constexpr int L = 12;

    Scenario s;
    std::vector<Link> links;
    s.cost.price.resize(L);
    s.cost.time_const.resize(L);
    s.cost.congestion_slope = Eigen::VectorXd::Constant(L, 0.02);
    s.cost.gamma = 0.5;
    s.profit.slope.resize(L);
    s.profit.intercept.resize(L);
    for (int l = 0; l < L; ++l) {
        const Row& r = rows[l];
        links.push_back({l + 1, r.tail, r.head, r.mode, r.provider});
        s.cost.price[l] = r.price;
        s.cost.time_const[l] = r.minutes;
        s.profit.slope[l] = r.profit_slope;
        s.profit.intercept[l] = r.profit_intercept;
    }

    // En-route split at node 2 towards d: 0.4 on link 4, 0.6 on link 5.
    const std::map<std::pair<int, int>, double> split{{{2, 4}, 0.4}, {{2, 5}, 0.6}};
    auto route = [&](int id, std::vector<int> route_links, bool via_node2_to_d) {
        Hyperpath hp{id, {0, 5}, std::move(route_links), {}};
        if (via_node2_to_d) {
            hp.links.push_back(4);
            hp.links.push_back(5);
            hp.diversion = split;
        }
        return hp;
    };
    std::vector<Hyperpath> routes{
        route(1, {1}, false),
        route(2, {2, 3}, true),
        route(3, {2, 6, 11, 12}, false),
        route(4, {2, 6, 11, 9}, true),
        route(5, {2, 3, 8, 12}, false),
        route(6, {10, 7, 3}, true),
        route(7, {10, 7, 3, 8, 12}, false),
        route(8, {10, 11, 9}, true),
        route(9, {10, 11, 12}, false),
    };
    s.network = Network(std::move(nodes), std::move(links), std::move(routes));
    s.od_pairs = {{0, 5}};

    auto make_class = [](std::string name, double amplitude, std::vector<int> route_ids) {
        PassengerClass cls;
        cls.name = std::move(name);
        cls.v0 = 200.0;
        cls.beta = 1.0;
        cls.satisfaction = {SatisfactionKind::scaled_max, 200.0};
        cls.demand = TanhDemand{amplitude, 1.0};
        cls.route_ids = std::move(route_ids);
        return cls;
    };
    s.classes.push_back(make_class("A", 60.0, {1, 2, 9}));
    s.classes.push_back(make_class("B", 40.0, {1, 2, 3, 4, 5, 6, 7, 8, 9}));

    s.box = IncentiveBox::uniform(L, -3.0, 3.0);
    s.providers = {"taxi", "bus", "scooter", "subway"};
    s.theta = {70.0, 60.0, 1.0, 200.0};
    s.solver.alpha = {10.0, 0.001, 0.8};
    s.solver.beta = {10.0, 1.0, 0.9};
    attach_incidence(s);
    return s;
}

}  // namespace mmflow
