#include "mmflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>

#include "mmflow/errors.hpp"

namespace mmflow {

namespace {

constexpr double kDiversionTolerance = 1e-12;
constexpr double kPathMassTolerance = 1e-10;

std::string hp_prefix(const Hyperpath& hp) {
    return "hyperpath " + std::to_string(hp.id) + ": ";
}

// Outgoing hyperpath links per tail node, ascending by link id.
std::map<int, std::vector<const Link*>> outgoing_links(const Network& network, const Hyperpath& hp) {
    std::map<int, std::vector<const Link*>> out;
    for (int id : hp.links) {
        if (const Link* link = network.find_link(id)) {
            out[link->tail].push_back(link);
        }
    }
    for (auto& [node, links] : out) {
        std::sort(links.begin(), links.end(), [](const Link* a, const Link* b) { return a->id < b->id; });
    }
    return out;
}

double diversion_of(const Hyperpath& hp, int node, int link, std::size_t out_degree, bool& missing) {
    missing = false;
    auto it = hp.diversion.find({node, link});
    if (it != hp.diversion.end()) return it->second;
    if (out_degree == 1) return 1.0;
    missing = true;
    return 0.0;
}

// Structural problems of a hyperpath, excluding unknown link ids (reported separately).
std::vector<std::string> hyperpath_problems(const Network& network, const Hyperpath& hp) {
    std::vector<std::string> problems;
    const std::string prefix = hp_prefix(hp);

    if (hp.links.empty()) {
        problems.push_back(prefix + "has no links");
        return problems;
    }
    if (hp.od.origin == hp.od.destination) {
        problems.push_back(prefix + "origin equals destination");
    }
    std::set<int> seen;
    for (int id : hp.links) {
        if (!seen.insert(id).second) problems.push_back(prefix + "link " + std::to_string(id) + " listed twice");
    }

    auto out = outgoing_links(network, hp);

    // Kahn's algorithm over the nodes touched by the link set.
    std::map<int, int> indegree;
    for (int id : seen) {
        const Link* link = network.find_link(id);
        if (!link) continue;
        indegree.try_emplace(link->tail, 0);
        ++indegree[link->head];
    }
    std::vector<int> ready;
    for (auto& [node, deg] : indegree) {
        if (deg == 0) ready.push_back(node);
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        int node = ready.back();
        ready.pop_back();
        ++visited;
        auto it = out.find(node);
        if (it == out.end()) continue;
        for (const Link* link : it->second) {
            if (--indegree[link->head] == 0) ready.push_back(link->head);
        }
    }
    if (visited != indegree.size()) {
        problems.push_back(prefix + "link set contains a cycle");
        return problems;
    }

    for (const auto& [node, links] : out) {
        if (node == hp.od.destination) {
            problems.push_back(prefix + "destination node " + std::to_string(node) + " has outgoing links");
            continue;
        }
        double sum = 0.0;
        for (const Link* link : links) {
            bool missing = false;
            double p = diversion_of(hp, node, link->id, links.size(), missing);
            if (missing) {
                problems.push_back(prefix + "missing diversion probability for link " + std::to_string(link->id) +
                                   " at node " + std::to_string(node));
            } else if (!(p >= 0.0 && p <= 1.0)) {
                problems.push_back(prefix + "diversion probability " + std::to_string(p) + " for link " +
                                   std::to_string(link->id) + " at node " + std::to_string(node) +
                                   " outside [0, 1]");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kDiversionTolerance) {
            std::ostringstream msg;
            msg << prefix << "diversion probabilities at node " << node << " sum to " << sum;
            problems.push_back(msg.str());
        }
    }
    for (const auto& [key, p] : hp.diversion) {
        const auto [node, link_id] = key;
        const Link* link = network.find_link(link_id);
        if (!seen.count(link_id) || !link || link->tail != node) {
            problems.push_back(prefix + "diversion entry (node " + std::to_string(node) + ", link " +
                               std::to_string(link_id) + ") does not name an outgoing hyperpath link");
        }
    }

    // Reachability from the origin and dead ends.
    std::set<int> reached{hp.od.origin};
    std::vector<int> stack{hp.od.origin};
    while (!stack.empty()) {
        int node = stack.back();
        stack.pop_back();
        auto it = out.find(node);
        if (it == out.end()) {
            if (node != hp.od.destination) {
                problems.push_back(prefix + "node " + std::to_string(node) + " is a dead end");
            }
            continue;
        }
        for (const Link* link : it->second) {
            if (reached.insert(link->head).second) stack.push_back(link->head);
        }
    }
    for (int id : seen) {
        const Link* link = network.find_link(id);
        if (link && !reached.count(link->tail)) {
            problems.push_back(prefix + "link " + std::to_string(id) + " is not reachable from the origin");
        }
    }
    if (!reached.count(hp.od.destination)) {
        problems.push_back(prefix + "destination not reachable from the origin");
    }
    return problems;
}

void require_known_links(const Network& network, const Hyperpath& hp) {
    for (int id : hp.links) {
        if (!network.find_link(id)) {
            throw SchemaError(hp_prefix(hp) + "unknown link id " + std::to_string(id));
        }
    }
}

}  // namespace

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::taxi: return "taxi";
        case Mode::bus: return "bus";
        case Mode::subway: return "subway";
        case Mode::bike: return "bike";
        case Mode::scooter: return "scooter";
        case Mode::generic: return "generic";
    }
    return "generic";
}

std::optional<Mode> mode_from_string(std::string_view name) {
    for (Mode m : {Mode::taxi, Mode::bus, Mode::subway, Mode::bike, Mode::scooter, Mode::generic}) {
        if (to_string(m) == name) return m;
    }
    return std::nullopt;
}

Network::Network(std::vector<Node> nodes, std::vector<Link> links, std::vector<Hyperpath> hyperpaths)
    : nodes_(std::move(nodes)), links_(std::move(links)), hyperpaths_(std::move(hyperpaths)) {
    std::stable_sort(links_.begin(), links_.end(), [](const Link& a, const Link& b) { return a.id < b.id; });
    std::stable_sort(hyperpaths_.begin(), hyperpaths_.end(),
                     [](const Hyperpath& a, const Hyperpath& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < links_.size(); ++i) link_index_.try_emplace(links_[i].id, i);
    for (std::size_t i = 0; i < hyperpaths_.size(); ++i) hyperpath_index_.try_emplace(hyperpaths_[i].id, i);
}

const Link* Network::find_link(int id) const {
    auto it = link_index_.find(id);
    return it == link_index_.end() ? nullptr : &links_[it->second];
}

const Hyperpath* Network::find_hyperpath(int id) const {
    auto it = hyperpath_index_.find(id);
    return it == hyperpath_index_.end() ? nullptr : &hyperpaths_[it->second];
}

bool Network::has_node(int id) const {
    return std::any_of(nodes_.begin(), nodes_.end(), [id](const Node& n) { return n.id == id; });
}

std::vector<PathProbability> enumerate_paths(const Network& network, const Hyperpath& hp) {
    require_known_links(network, hp);
    if (auto problems = hyperpath_problems(network, hp); !problems.empty()) {
        throw InvalidHyperpath(problems.front());
    }
    const auto out = outgoing_links(network, hp);

    std::vector<PathProbability> result;
    std::vector<int> trail;
    // Depth-first over the DAG; ascending link ids give the canonical order.
    auto visit = [&](auto&& self, int node, double prob) -> void {
        if (node == hp.od.destination) {
            result.push_back({ElementaryPath{hp.od, trail}, prob});
            return;
        }
        const auto& links = out.at(node);
        for (const Link* link : links) {
            bool missing = false;
            double p = diversion_of(hp, node, link->id, links.size(), missing);
            trail.push_back(link->id);
            self(self, link->head, prob * p);
            trail.pop_back();
        }
    };
    visit(visit, hp.od.origin, 1.0);

    double mass = 0.0;
    for (const auto& pp : result) mass += pp.probability;
    if (std::abs(mass - 1.0) > kPathMassTolerance) {
        throw InvalidHyperpath(hp_prefix(hp) + "path probabilities sum to " + std::to_string(mass));
    }
    return result;
}

IncidenceData build_incidence(const Network& network, const std::vector<Hyperpath>& hyperpaths) {
    std::vector<const Hyperpath*> ordered;
    ordered.reserve(hyperpaths.size());
    for (const auto& hp : hyperpaths) ordered.push_back(&hp);
    std::stable_sort(ordered.begin(), ordered.end(), [](const Hyperpath* a, const Hyperpath* b) { return a->id < b->id; });

    const int L = network.link_count();
    std::vector<std::vector<PathProbability>> per_route;
    std::set<std::pair<OdPair, std::vector<int>>> unique_paths;
    for (const Hyperpath* hp : ordered) {
        per_route.push_back(enumerate_paths(network, *hp));
        for (const auto& pp : per_route.back()) unique_paths.insert({pp.path.od, pp.path.links});
    }

    IncidenceData data;
    std::map<std::pair<OdPair, std::vector<int>>, int> path_column;
    for (const auto& key : unique_paths) {
        path_column.emplace(key, static_cast<int>(data.paths.size()));
        data.paths.push_back(ElementaryPath{key.first, key.second});
    }
    for (const Hyperpath* hp : ordered) data.route_ids.push_back(hp->id);

    const int N = static_cast<int>(data.paths.size());
    const int M = static_cast<int>(ordered.size());

    std::vector<Eigen::Triplet<double>> a_entries;
    for (int n = 0; n < N; ++n) {
        for (int id : data.paths[n].links) {
            if (id < 1 || id > L) throw SchemaError("link id " + std::to_string(id) + " outside 1.." + std::to_string(L));
            a_entries.emplace_back(id - 1, n, 1.0);
        }
    }
    std::vector<Eigen::Triplet<double>> e_entries;
    for (int m = 0; m < M; ++m) {
        for (const auto& pp : per_route[m]) {
            e_entries.emplace_back(path_column.at({pp.path.od, pp.path.links}), m, pp.probability);
        }
    }
    data.A.resize(L, N);
    data.A.setFromTriplets(a_entries.begin(), a_entries.end());
    data.E.resize(N, M);
    data.E.setFromTriplets(e_entries.begin(), e_entries.end());
    data.B = (data.A * data.E).pruned();
    data.B.makeCompressed();
    return data;
}

IncidenceData build_incidence(const Network& network, const std::vector<int>& route_ids) {
    std::vector<Hyperpath> selected;
    selected.reserve(route_ids.size());
    for (int id : route_ids) {
        const Hyperpath* hp = network.find_hyperpath(id);
        if (!hp) throw SchemaError("unknown route id " + std::to_string(id));
        selected.push_back(*hp);
    }
    return build_incidence(network, selected);
}

std::vector<std::string> validate_network(const Network& network) {
    std::vector<std::string> diagnostics;

    std::set<int> node_ids;
    for (const auto& node : network.nodes()) {
        if (node.id < 0) diagnostics.push_back("node " + std::to_string(node.id) + ": negative id");
        if (!node_ids.insert(node.id).second) diagnostics.push_back("node " + std::to_string(node.id) + ": duplicate id");
    }

    const auto& links = network.links();
    for (std::size_t i = 0; i < links.size(); ++i) {
        const Link& link = links[i];
        const std::string prefix = "link " + std::to_string(link.id) + ": ";
        if (link.id != static_cast<int>(i) + 1) {
            diagnostics.push_back(prefix + "link ids must be exactly 1.." + std::to_string(links.size()));
        }
        if (link.tail == link.head) diagnostics.push_back(prefix + "tail equals head (self-loop)");
        if (!node_ids.count(link.tail)) diagnostics.push_back(prefix + "unknown tail node " + std::to_string(link.tail));
        if (!node_ids.count(link.head)) diagnostics.push_back(prefix + "unknown head node " + std::to_string(link.head));
    }

    std::set<int> route_ids;
    for (const auto& hp : network.hyperpaths()) {
        if (!route_ids.insert(hp.id).second) diagnostics.push_back(hp_prefix(hp) + "duplicate id");
        bool known = true;
        for (int id : hp.links) {
            if (!network.find_link(id)) {
                diagnostics.push_back(hp_prefix(hp) + "unknown link id " + std::to_string(id));
                known = false;
            }
        }
        if (!known) continue;
        for (auto& problem : hyperpath_problems(network, hp)) diagnostics.push_back(std::move(problem));
    }
    return diagnostics;
}

void write_incidence_csv(std::ostream& out, const IncidenceData& incidence, int link_count) {
    Eigen::MatrixXd dense(incidence.B);
    out << "link";
    for (int id : incidence.route_ids) out << ",route_" << id;
    out << '\n';
    for (int l = 0; l < link_count; ++l) {
        out << l + 1;
        for (Eigen::Index m = 0; m < dense.cols(); ++m) out << ',' << (l < dense.rows() ? dense(l, m) : 0.0);
        out << '\n';
    }
}

}  // namespace mmflow
