#pragma once

#include <compare>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

namespace mmflow {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class Mode { taxi, bus, subway, bike, scooter, generic };

std::string_view to_string(Mode mode);
std::optional<Mode> mode_from_string(std::string_view name);

struct Node {
    int id = 0;
    std::string label;
};

struct Link {
    int id = 0;  // 1..L, also the row index + 1 in every link-indexed vector
    int tail = 0;
    int head = 0;
    Mode mode = Mode::generic;
    int provider = 0;
};

struct OdPair {
    int origin = 0;
    int destination = 0;
    auto operator<=>(const OdPair&) const = default;
};

struct ElementaryPath {
    OdPair od;
    std::vector<int> links;
    bool operator==(const ElementaryPath&) const = default;
};

// A bundle of elementary paths. Diversion probabilities are keyed by
// (node, outgoing link); a node with a single outgoing hyperpath link may omit
// its entry, which then defaults to 1.
struct Hyperpath {
    int id = 0;
    OdPair od;
    std::vector<int> links;
    std::map<std::pair<int, int>, double> diversion;
};

struct PathProbability {
    ElementaryPath path;
    double probability = 0.0;
};

class Network {
public:
    Network() = default;
    Network(std::vector<Node> nodes, std::vector<Link> links, std::vector<Hyperpath> hyperpaths);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Link>& links() const { return links_; }
    const std::vector<Hyperpath>& hyperpaths() const { return hyperpaths_; }

    int link_count() const { return static_cast<int>(links_.size()); }

    // nullptr when the id is unknown.
    const Link* find_link(int id) const;
    const Hyperpath* find_hyperpath(int id) const;
    bool has_node(int id) const;

private:
    std::vector<Node> nodes_;
    std::vector<Link> links_;
    std::vector<Hyperpath> hyperpaths_;
    std::map<int, std::size_t> link_index_;
    std::map<int, std::size_t> hyperpath_index_;
};

// Link-path (A), path-route (E) and link-route (B = A E) incidence.
// Rows follow ascending link id, columns follow ascending route id and the
// canonical (lexicographic link sequence) order of elementary paths.
struct IncidenceData {
    std::vector<int> route_ids;
    std::vector<ElementaryPath> paths;
    SparseMatrix A;  // L x N
    SparseMatrix E;  // N x M
    SparseMatrix B;  // L x M
};

// Every elementary path of the hyperpath with its en-route probability
// (product of diversion probabilities along it), ordered by link sequence.
// Throws InvalidHyperpath on cycles, bad diversion rows, dead ends.
std::vector<PathProbability> enumerate_paths(const Network& network, const Hyperpath& hyperpath);

// Incidence over the given hyperpaths. Throws SchemaError on unknown link ids.
IncidenceData build_incidence(const Network& network, const std::vector<Hyperpath>& hyperpaths);

// Convenience: incidence over the network's hyperpaths with the given route ids.
IncidenceData build_incidence(const Network& network, const std::vector<int>& route_ids);

std::vector<std::string> validate_network(const Network& network);

// Dense CSV dump of B: one row per link id, one column per route id.
void write_incidence_csv(std::ostream& out, const IncidenceData& incidence, int link_count);

}  // namespace mmflow
