#include <doctest.h>

#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "mmflow/errors.hpp"
#include "mmflow/generators.hpp"
#include "mmflow/network.hpp"

using namespace mmflow;

namespace {

Network tiny_network(std::vector<Hyperpath> routes) {
    std::vector<Link> links{{1, 0, 1}, {2, 1, 2}, {3, 1, 2}, {4, 0, 2}};
    return Network({{0, "o"}, {1, "a"}, {2, "d"}}, std::move(links), std::move(routes));
}

// Random DAG on nodes 0..n-1 (links only go to higher ids) that always contains
// the chain 0 -> 1 -> ... -> n-1, used as one hyperpath from 0 to n-1.
struct RandomDag {
    Network network;
    Hyperpath hp;
    int branching_nodes = 0;
};

RandomDag random_dag(unsigned seed, int n) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Node> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back({i, std::to_string(i)});
    std::vector<Link> links;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (j == i + 1 || unit(gen) < 0.4) links.push_back({static_cast<int>(links.size()) + 1, i, j});
        }
    }
    RandomDag dag;
    dag.hp.id = 1;
    dag.hp.od = {0, n - 1};
    std::map<int, std::vector<int>> out;
    for (const auto& l : links) {
        dag.hp.links.push_back(l.id);
        out[l.tail].push_back(l.id);
    }
    for (auto& [node, ids] : out) {
        if (ids.size() < 2) continue;
        ++dag.branching_nodes;
        std::vector<double> w;
        double total = 0.0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            w.push_back(0.1 + unit(gen));
            total += w.back();
        }
        double assigned = 0.0;
        for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
            dag.hp.diversion[{node, ids[i]}] = w[i] / total;
            assigned += w[i] / total;
        }
        dag.hp.diversion[{node, ids.back()}] = 1.0 - assigned;
    }
    dag.network = Network(std::move(nodes), std::move(links), {dag.hp});
    return dag;
}

// Independent oracle: walk every link sequence by recursion on node ids.
std::map<std::vector<int>, double> brute_force_paths(const Network& net, const Hyperpath& hp) {
    std::map<std::vector<int>, double> out;
    std::function<void(int, std::vector<int>&, double)> walk = [&](int node, std::vector<int>& prefix, double p) {
        if (node == hp.od.destination) {
            out[prefix] += p;
            return;
        }
        std::vector<int> next;
        for (int id : hp.links) {
            if (net.find_link(id)->tail == node) next.push_back(id);
        }
        for (int id : next) {
            double q = 1.0;
            if (next.size() > 1) q = hp.diversion.at({node, id});
            prefix.push_back(id);
            walk(net.find_link(id)->head, prefix, p * q);
            prefix.pop_back();
        }
    };
    std::vector<int> prefix;
    walk(hp.od.origin, prefix, 1.0);
    return out;
}

}  // namespace

TEST_CASE("en-route split on the fixture route 2") {
    const Scenario s = chengdu_fixture();
    const auto paths = enumerate_paths(s.network, *s.network.find_hyperpath(2));
    REQUIRE(paths.size() == 2);
    CHECK(paths[0].path.links == std::vector<int>{2, 3, 4});
    CHECK(paths[0].probability == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(paths[1].path.links == std::vector<int>{2, 3, 5});
    CHECK(paths[1].probability == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("single elementary path has probability one") {
    const Network net = tiny_network({{7, {0, 2}, {1, 2}, {}}});
    const auto paths = enumerate_paths(net, net.hyperpaths()[0]);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].probability == 1.0);
    CHECK(paths[0].path.links == std::vector<int>{1, 2});
}

TEST_CASE("random DAG hyperpaths match brute-force enumeration") {
    int checked = 0;
    for (unsigned seed = 1; seed <= 60; ++seed) {
        const RandomDag dag = random_dag(seed, 7);
        if (dag.branching_nodes < 3) continue;
        ++checked;
        const auto oracle = brute_force_paths(dag.network, dag.hp);
        const auto paths = enumerate_paths(dag.network, dag.hp);
        REQUIRE(paths.size() == oracle.size());
        double mass = 0.0;
        for (const auto& p : paths) {
            REQUIRE(oracle.count(p.path.links));
            CHECK(p.probability == doctest::Approx(oracle.at(p.path.links)).epsilon(1e-13));
            mass += p.probability;
        }
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(checked >= 20);
}

TEST_CASE("cycles and bad diversion rows are rejected") {
    std::vector<Link> links{{1, 0, 1}, {2, 1, 0}, {3, 1, 2}};
    const Network cyclic({{0, ""}, {1, ""}, {2, ""}}, links, {});
    Hyperpath loop{1, {0, 2}, {1, 2, 3}, {{{1, 2}, 0.5}, {{1, 3}, 0.5}}};
    CHECK_THROWS_AS(enumerate_paths(cyclic, loop), InvalidHyperpath);

    const Network net = tiny_network({});
    Hyperpath bad{1, {0, 2}, {1, 2, 3}, {{{1, 2}, 0.5}, {{1, 3}, 0.4}}};
    CHECK_THROWS_AS(enumerate_paths(net, bad), InvalidHyperpath);
    Hyperpath unknown{1, {0, 2}, {1, 9}, {}};
    CHECK_THROWS_AS(build_incidence(net, std::vector<Hyperpath>{unknown}), SchemaError);
}

TEST_CASE("fixture incidence columns") {
    const Scenario s = chengdu_fixture();
    const auto& B = s.classes[1].incidence.B;
    REQUIRE(B.rows() == 12);
    REQUIRE(B.cols() == 9);
    const Eigen::MatrixXd dense(B);
    for (int l = 0; l < 12; ++l) {
        const double expected9 = (l == 9 || l == 10 || l == 11) ? 1.0 : 0.0;
        CHECK(dense(l, 8) == expected9);
    }
    Eigen::VectorXd route2 = Eigen::VectorXd::Zero(12);
    route2[1] = 1.0;
    route2[2] = 1.0;
    route2[3] = 0.4;
    route2[4] = 0.6;
    CHECK((dense.col(1) - route2).cwiseAbs().maxCoeff() < 1e-15);
    // Every column is a probability flow: mass leaving the origin is 1.
    CHECK((dense.row(0) + dense.row(1) + dense.row(9)).minCoeff() == doctest::Approx(1.0));
    CHECK(Eigen::MatrixXd(s.classes[1].incidence.A * s.classes[1].incidence.E).isApprox(dense));
}

TEST_CASE("empty hyperpath list gives an empty incidence") {
    const Network net = tiny_network({});
    const IncidenceData inc = build_incidence(net, std::vector<Hyperpath>{});
    CHECK(inc.B.rows() == 4);
    CHECK(inc.B.cols() == 0);
    CHECK(inc.paths.empty());
}

TEST_CASE("incidence does not depend on the order routes are listed") {
    const Scenario s = chengdu_fixture();
    const auto& all = s.network.hyperpaths();
    std::vector<Hyperpath> reversed(all.rbegin(), all.rend());
    const IncidenceData a = build_incidence(s.network, all);
    const IncidenceData b = build_incidence(s.network, reversed);
    CHECK(a.route_ids == b.route_ids);
    CHECK(Eigen::MatrixXd(a.B).isApprox(Eigen::MatrixXd(b.B)));
    CHECK(a.paths == b.paths);
}

TEST_CASE("validation diagnostics") {
    CHECK(validate_network(chengdu_fixture().network).empty());

    std::vector<Link> links{{1, 0, 1}, {2, 1, 1}, {3, 1, 2}};
    const Network loop({{0, ""}, {1, ""}, {2, ""}}, links, {});
    const auto diag = validate_network(loop);
    REQUIRE(diag.size() == 1);
    CHECK(diag[0].find("link 2") != std::string::npos);

    const Network split = tiny_network({{5, {0, 2}, {1, 2, 3}, {{{1, 2}, 0.5}, {{1, 3}, 0.4}}}});
    const auto d2 = validate_network(split);
    REQUIRE(d2.size() == 1);
    CHECK(d2[0].find("hyperpath 5") != std::string::npos);
    CHECK(d2[0].find("node 1") != std::string::npos);
}

TEST_CASE("incidence csv has one row per link") {
    const Scenario s = chengdu_fixture();
    std::ostringstream out;
    write_incidence_csv(out, s.classes[0].incidence, 12);
    std::istringstream in(out.str());
    std::string line;
    int rows = 0;
    std::getline(in, line);
    CHECK(line == "link,route_1,route_2,route_9");
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 12);
}
