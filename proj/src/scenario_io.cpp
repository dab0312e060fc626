#include "mmflow/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include "mmflow/errors.hpp"

namespace mmflow {

using nlohmann::json;

namespace {

// A JSON value plus its location, for error messages.
class Field {
public:
    Field(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw SchemaError((path_.empty() ? std::string("/") : path_) + ": " + what);
    }

    bool has(const char* key) const { return value_.is_object() && value_.contains(key); }

    Field at(const char* key) const {
        if (!value_.is_object()) fail("expected an object");
        auto it = value_.find(key);
        if (it == value_.end()) throw SchemaError(path_ + "/" + key + ": missing");
        return Field(*it, path_ + "/" + key);
    }

    std::vector<Field> items() const {
        if (!value_.is_array()) fail("expected an array");
        std::vector<Field> out;
        for (std::size_t i = 0; i < value_.size(); ++i) out.emplace_back(value_[i], path_ + "/" + std::to_string(i));
        return out;
    }

    double number() const {
        if (!value_.is_number()) fail("expected a number");
        return value_.get<double>();
    }

    int integer() const {
        if (!value_.is_number_integer()) fail("expected an integer");
        return value_.get<int>();
    }

    std::string text() const {
        if (!value_.is_string()) fail("expected a string");
        return value_.get<std::string>();
    }

    Eigen::VectorXd vector() const {
        auto elems = items();
        Eigen::VectorXd v(elems.size());
        for (std::size_t i = 0; i < elems.size(); ++i) v[i] = elems[i].number();
        return v;
    }

    std::vector<int> integers() const {
        std::vector<int> v;
        for (const auto& e : items()) v.push_back(e.integer());
        return v;
    }

    OdPair od() const {
        auto pair = items();
        if (pair.size() != 2) fail("expected [origin, destination]");
        return {pair[0].integer(), pair[1].integer()};
    }

    const std::string& path() const { return path_; }

private:
    const json& value_;
    std::string path_;
};

// Missing coefficients keep their current values.
StepSchedule parse_schedule(const Field& f, StepSchedule s) {
    if (!f.has("p") && !f.has("q") && !f.has("r")) f.at("p");
    if (f.has("p")) s.p = f.at("p").number();
    if (f.has("q")) s.q = f.at("q").number();
    if (f.has("r")) s.r = f.at("r").number();
    return s;
}

json schedule_json(const StepSchedule& s) {
    return {{"p", s.p}, {"q", s.q}, {"r", s.r}};
}

void read_solver(SolverSettings& s, const Field& f) {
    if (f.has("alpha")) s.alpha = parse_schedule(f.at("alpha"), s.alpha);
    if (f.has("beta")) s.beta = parse_schedule(f.at("beta"), s.beta);
    if (f.has("eps_flow")) s.eps_flow = f.at("eps_flow").number();
    if (f.has("eps_incentive")) s.eps_incentive = f.at("eps_incentive").number();
    if (f.has("max_iters")) s.max_iters = f.at("max_iters").integer();
    if (f.has("psi_iters")) s.psi_iters = f.at("psi_iters").integer();
    if (f.has("qp")) {
        const Field qp = f.at("qp");
        if (qp.has("max_iters")) s.qp.max_iters = qp.at("max_iters").integer();
        if (qp.has("tol")) s.qp.tol = qp.at("tol").number();
        if (qp.has("max_projection_sweeps")) s.qp.max_projection_sweeps = qp.at("max_projection_sweeps").integer();
        if (qp.has("projection_tol")) s.qp.projection_tol = qp.at("projection_tol").number();
    }
}

PassengerClass parse_class(const Field& f) {
    PassengerClass cls;
    cls.name = f.has("name") ? f.at("name").text() : std::string();
    cls.v0 = f.at("v0").number();
    cls.beta = f.has("beta") ? f.at("beta").number() : 1.0;
    cls.satisfaction.sigma = f.has("sigma") ? f.at("sigma").number() : 1.0;
    const std::string mode = f.has("satisfaction_mode") ? f.at("satisfaction_mode").text() : "scaled_max";
    if (mode == "scaled_max") {
        cls.satisfaction.kind = SatisfactionKind::scaled_max;
    } else if (mode == "logsum") {
        cls.satisfaction.kind = SatisfactionKind::logsum;
    } else {
        f.at("satisfaction_mode").fail("expected \"scaled_max\" or \"logsum\"");
    }
    const Field demand = f.at("demand");
    if (demand.has("table")) {
        TableDemand table;
        for (const auto& knot : demand.at("table").items()) {
            auto pair = knot.items();
            if (pair.size() != 2) knot.fail("expected [s, d]");
            table.knots.emplace_back(pair[0].number(), pair[1].number());
        }
        cls.demand = std::move(table);
    } else {
        cls.demand = TanhDemand{demand.at("a").number(), demand.at("b").number()};
    }
    try {
        check_demand_curve(cls.demand);
    } catch (const DomainError& e) {
        demand.fail(e.what());
    }
    cls.route_ids = f.at("route_ids").integers();
    if (f.has("route_specific_cost")) {
        cls.route_specific_cost = f.at("route_specific_cost").vector();
        if (cls.route_specific_cost.size() != static_cast<Eigen::Index>(cls.route_ids.size())) {
            f.at("route_specific_cost").fail("length differs from route_ids");
        }
    }
    return cls;
}

void require_length(const Field& f, Eigen::Index actual, int expected) {
    if (actual != expected) {
        f.fail("length " + std::to_string(actual) + ", expected " + std::to_string(expected));
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

Scenario parse_scenario(const json& doc) {
    const Field root(doc, "");
    Scenario s;

    std::vector<Node> nodes;
    for (const auto& n : root.at("nodes").items()) {
        nodes.push_back({n.at("id").integer(), n.has("label") ? n.at("label").text() : std::string()});
    }

    const auto link_items = root.at("links").items();
    const int L = static_cast<int>(link_items.size());
    s.cost.price.resize(L);
    s.cost.time_const.resize(L);
    s.cost.congestion_slope.resize(L);
    s.profit.slope.resize(L);
    s.profit.intercept.resize(L);
    std::vector<Link> links;
    for (int l = 0; l < L; ++l) {
        const Field& f = link_items[l];
        Link link;
        link.id = f.at("id").integer();
        if (link.id != l + 1) f.at("id").fail("links must be listed with ids 1..L in order");
        link.tail = f.at("tail").integer();
        link.head = f.at("head").integer();
        if (f.has("mode")) {
            auto mode = mode_from_string(f.at("mode").text());
            if (!mode) f.at("mode").fail("unknown mode");
            link.mode = *mode;
        }
        link.provider = f.at("provider").integer();
        s.cost.price[l] = f.at("price").number();
        s.cost.time_const[l] = f.has("time") ? f.at("time").number() : 0.0;
        s.cost.congestion_slope[l] = f.at("congestion_slope").number();
        s.profit.slope[l] = f.at("profit_slope").number();
        s.profit.intercept[l] = f.at("profit_intercept").number();
        links.push_back(link);
    }
    s.cost.gamma = root.has("cost") && root.at("cost").has("gamma") ? root.at("cost").at("gamma").number() : 1.0;

    std::vector<Hyperpath> hyperpaths;
    for (const auto& h : root.at("hyperpaths").items()) {
        Hyperpath hp;
        hp.id = h.at("id").integer();
        hp.od = h.at("od").od();
        hp.links = h.at("links").integers();
        if (h.has("diversion")) {
            for (const auto& d : h.at("diversion").items()) {
                hp.diversion[{d.at("node").integer(), d.at("link").integer()}] = d.at("p").number();
            }
        }
        hyperpaths.push_back(std::move(hp));
    }
    s.network = Network(std::move(nodes), std::move(links), std::move(hyperpaths));

    const auto class_items = root.at("classes").items();
    for (const auto& c : class_items) s.classes.push_back(parse_class(c));
    if (root.has("od_pairs")) {
        for (const auto& od : root.at("od_pairs").items()) s.od_pairs.push_back(od.od());
    }

    const Field box = root.at("incentive_box");
    s.box.j_min = box.at("j_min").vector();
    s.box.j_max = box.at("j_max").vector();
    require_length(box.at("j_min"), s.box.j_min.size(), L);
    require_length(box.at("j_max"), s.box.j_max.size(), L);

    for (const auto& p : root.at("providers").items()) s.providers.push_back(p.text());
    for (const auto& t : root.at("theta").items()) s.theta.push_back(t.number());
    if (root.has("solver")) read_solver(s.solver, root.at("solver"));

    // Route ids must resolve before incidence can be built.
    for (std::size_t k = 0; k < s.classes.size(); ++k) {
        for (std::size_t r = 0; r < s.classes[k].route_ids.size(); ++r) {
            if (!s.network.find_hyperpath(s.classes[k].route_ids[r])) {
                throw SchemaError("/classes/" + std::to_string(k) + "/route_ids/" + std::to_string(r) +
                                  ": unknown route id " + std::to_string(s.classes[k].route_ids[r]));
            }
        }
    }
    if (auto problems = validate_network(s.network); !problems.empty()) {
        throw SchemaError("network: " + problems.front());
    }
    attach_incidence(s);
    if (auto problems = validate_scenario(s); !problems.empty()) {
        throw SchemaError("scenario: " + problems.front());
    }
    return s;
}

Scenario parse_scenario_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("malformed JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

Scenario load_scenario(const std::filesystem::path& path) {
    try {
        return parse_scenario_text(read_file(path));
    } catch (const SchemaError& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

json solver_to_json(const SolverSettings& s) {
    return {{"alpha", schedule_json(s.alpha)},
            {"beta", schedule_json(s.beta)},
            {"eps_flow", s.eps_flow},
            {"eps_incentive", s.eps_incentive},
            {"max_iters", s.max_iters},
            {"psi_iters", s.psi_iters},
            {"qp",
             {{"max_iters", s.qp.max_iters},
              {"tol", s.qp.tol},
              {"max_projection_sweeps", s.qp.max_projection_sweeps},
              {"projection_tol", s.qp.projection_tol}}}};
}

json scenario_to_json(const Scenario& s) {
    json doc;
    doc["nodes"] = json::array();
    for (const auto& n : s.network.nodes()) {
        json node{{"id", n.id}};
        if (!n.label.empty()) node["label"] = n.label;
        doc["nodes"].push_back(node);
    }
    doc["links"] = json::array();
    const auto& links = s.network.links();
    for (std::size_t l = 0; l < links.size(); ++l) {
        const Link& link = links[l];
        doc["links"].push_back({{"id", link.id},
                                {"tail", link.tail},
                                {"head", link.head},
                                {"mode", std::string(to_string(link.mode))},
                                {"provider", link.provider},
                                {"price", s.cost.price[l]},
                                {"time", s.cost.time_const[l]},
                                {"congestion_slope", s.cost.congestion_slope[l]},
                                {"profit_slope", s.profit.slope[l]},
                                {"profit_intercept", s.profit.intercept[l]}});
    }
    doc["cost"] = {{"gamma", s.cost.gamma}};
    doc["hyperpaths"] = json::array();
    for (const auto& hp : s.network.hyperpaths()) {
        json diversion = json::array();
        for (const auto& [key, p] : hp.diversion) diversion.push_back({{"node", key.first}, {"link", key.second}, {"p", p}});
        doc["hyperpaths"].push_back({{"id", hp.id},
                                     {"od", {hp.od.origin, hp.od.destination}},
                                     {"links", hp.links},
                                     {"diversion", diversion}});
    }
    doc["classes"] = json::array();
    for (const auto& cls : s.classes) {
        json c{{"name", cls.name},
               {"v0", cls.v0},
               {"beta", cls.beta},
               {"sigma", cls.satisfaction.sigma},
               {"satisfaction_mode", cls.satisfaction.kind == SatisfactionKind::logsum ? "logsum" : "scaled_max"},
               {"route_ids", cls.route_ids}};
        if (const auto* t = std::get_if<TanhDemand>(&cls.demand)) {
            c["demand"] = {{"a", t->a}, {"b", t->b}};
        } else {
            json table = json::array();
            for (const auto& [x, d] : std::get<TableDemand>(cls.demand).knots) table.push_back({x, d});
            c["demand"] = {{"table", table}};
        }
        if (cls.route_specific_cost.size() != 0) {
            c["route_specific_cost"] = std::vector<double>(cls.route_specific_cost.begin(), cls.route_specific_cost.end());
        }
        doc["classes"].push_back(c);
    }
    doc["od_pairs"] = json::array();
    for (const auto& od : s.od_pairs) doc["od_pairs"].push_back({od.origin, od.destination});
    doc["incentive_box"] = {{"j_min", std::vector<double>(s.box.j_min.begin(), s.box.j_min.end())},
                            {"j_max", std::vector<double>(s.box.j_max.begin(), s.box.j_max.end())}};
    doc["providers"] = s.providers;
    doc["theta"] = s.theta;
    doc["solver"] = solver_to_json(s.solver);
    return doc;
}

void save_scenario(const std::filesystem::path& path, const Scenario& scenario) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write " + path.string());
    out << scenario_to_json(scenario).dump(1) << '\n';
}

void apply_solver_overrides(SolverSettings& settings, const json& overrides) {
    const Field root(overrides, "");
    read_solver(settings, root.has("solver") ? root.at("solver") : root);
}

}  // namespace mmflow
