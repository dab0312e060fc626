#include "mmflow/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmflow/bargaining.hpp"
#include "mmflow/equilibrium.hpp"
#include "mmflow/errors.hpp"
#include "mmflow/generators.hpp"
#include "mmflow/incentive.hpp"
#include "mmflow/reports.hpp"
#include "mmflow/scenario_io.hpp"

namespace mmflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunOptions {
    std::string scenario;
    std::string out_dir = ".";
    std::string config;
    int threads = 1;
    int progress = 0;
};

struct ShareOptions {
    std::string run_dir;
    std::optional<double> total_profit;
    std::vector<double> before;
    std::vector<double> after;
};

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + ": malformed JSON: " + e.what());
    }
}

Scenario load(const RunOptions& opts) {
    Scenario scenario = load_scenario(opts.scenario);
    if (!opts.config.empty()) {
        try {
            apply_solver_overrides(scenario.solver, read_json_file(opts.config));
        } catch (const SchemaError& e) {
            throw SchemaError(opts.config + ": " + e.what());
        }
        if (auto problems = validate_scenario(scenario); !problems.empty()) {
            throw SchemaError(opts.config + ": " + problems.front());
        }
    }
    if (opts.threads < 1) throw SchemaError("--threads must be >= 1");
    return scenario;
}

void write_report(const fs::path& dir, const std::string& name, const std::function<void(std::ostream&)>& body) {
    fs::create_directories(dir);
    std::ofstream out(dir / name);
    if (!out) throw SchemaError("cannot write " + (dir / name).string());
    body(out);
}

IncentiveVector read_incentive(const std::string& spec, int L) {
    if (spec.empty() || spec == "zeros") return IncentiveVector::Zero(L);
    const fs::path path(spec);
    std::vector<double> values;
    if (path.extension() == ".json") {
        json doc = read_json_file(path);
        const json& arr = doc.is_object() && doc.contains("J_star") ? doc["J_star"] : doc;
        if (!arr.is_array()) throw SchemaError(spec + ": expected an array of incentives or a run.json");
        for (const auto& v : arr) {
            if (!v.is_number()) throw SchemaError(spec + ": incentive entries must be numbers");
            values.push_back(v.get<double>());
        }
    } else {
        values = read_csv(path).numbers("J");
    }
    if (static_cast<int>(values.size()) != L) {
        throw SchemaError(spec + ": " + std::to_string(values.size()) + " incentives for " + std::to_string(L) + " links");
    }
    return to_eigen(values);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_equilibrium(const RunOptions& opts, const std::string& incentive, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const Scenario scenario = load(opts);
    const IncentiveVector J = read_incentive(incentive, scenario.link_count());
    const EquilibriumResult eq = msa_iterate(scenario, J, MsaConfig::from(scenario.solver, opts.threads));

    const fs::path dir(opts.out_dir);
    write_report(dir, "equilibrium.csv", [&](std::ostream& os) { write_equilibrium_csv(os, scenario, eq.f_star, J); });
    write_report(dir, "trace.csv", [&](std::ostream& os) { write_equilibrium_trace_csv(os, eq.trace); });
    write_report(dir, "timings.json", [&](std::ostream& os) { os << json{{"seconds", seconds_since(start)}}.dump(1) << '\n'; });

    out << "equilibrium: " << (eq.converged ? "converged" : "NOT converged") << " after " << eq.iterations
        << " iterations, residual " << format_number(eq.residual) << ", profit "
        << format_number(total_profit(eq.f_star, J, scenario.profit)) << '\n';
    return eq.converged ? kExitOk : kExitNotConverged;
}

json run_summary(const Scenario& scenario, const IncentiveResult& r, int threads) {
    const TracePoint last = r.trace.empty() ? TracePoint{} : r.trace.back();
    json samples = json::array();
    for (const auto& [k, v] : r.assumption_samples) samples.push_back({k, v});
    return {{"solver", solver_to_json(scenario.solver)},
            {"threads", threads},
            {"converged", r.converged},
            {"degraded", r.degraded},
            {"iterations", r.iterations},
            {"profit", r.profit},
            {"baseline_profit", r.baseline_profit},
            {"final_delta_f", last.delta_f},
            {"final_delta_J", last.delta_J},
            {"final_residual", r.final_residual},
            {"route_incentive_violation", r.route_incentive_violation},
            {"box_violation", r.box_violation},
            {"J_star", to_std(r.J_star)},
            {"f_star", to_std(r.f_star)},
            {"baseline_flow", to_std(r.baseline_flow)},
            {"assumption_samples", samples}};
}

int share_from(const Scenario& scenario, const json& run, const ShareOptions& opts, const fs::path& dir,
               std::ostream& out) {
    auto vec = [&](const char* key) {
        if (!run.contains(key) || !run[key].is_array()) throw SchemaError(std::string("run.json: missing '") + key + "'");
        Eigen::VectorXd v = to_eigen(run[key].get<std::vector<double>>());
        if (v.size() != scenario.link_count()) throw SchemaError(std::string("run.json: '") + key + "' has wrong length");
        return v;
    };
    const int S = static_cast<int>(scenario.providers.size());
    const ProviderMap providers = ProviderMap::from(scenario);
    const IncentiveVector zero = IncentiveVector::Zero(scenario.link_count());

    Eigen::VectorXd t = provider_profits(vec("baseline_flow"), zero, scenario.profit, providers);
    Eigen::VectorXd post = provider_profits(vec("f_star"), vec("J_star"), scenario.profit, providers);
    if (!opts.before.empty()) {
        if (static_cast<int>(opts.before.size()) != S) throw SchemaError("--before needs one value per provider");
        t = to_eigen(opts.before);
    }
    if (!opts.after.empty()) {
        if (static_cast<int>(opts.after.size()) != S) throw SchemaError("--after needs one value per provider");
        post = to_eigen(opts.after);
    }
    const double R_c = opts.total_profit.value_or(post.sum());

    SharingResult sharing = asymmetric_nash(R_c, t, to_eigen(scenario.theta));
    sharing.post = post;
    sharing.compensation = sharing.R_star - post;
    write_report(dir, "sharing.csv", [&](std::ostream& os) { write_sharing_csv(os, scenario.providers, sharing); });
    out << "share: total " << format_number(R_c) << " over " << S << " providers\n";
    return kExitOk;
}

int cmd_optimize(const RunOptions& opts, std::ostream& out, std::ostream& err, json* summary_out = nullptr,
                 Scenario* scenario_out = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    Scenario scenario = load(opts);
    TwoTimescaleConfig config = TwoTimescaleConfig::from(scenario.solver, opts.threads);
    if (opts.progress > 0) {
        config.on_iteration = [&err, every = opts.progress](const TracePoint& p) {
            if (p.iteration % every == 0) {
                err << "iteration " << p.iteration << ": delta_f " << format_number(p.delta_f) << ", delta_J "
                    << format_number(p.delta_J) << ", profit " << format_number(p.profit) << std::endl;
            }
        };
    }
    const IncentiveResult r = two_timescale(scenario, config);

    const fs::path dir(opts.out_dir);
    const json summary = run_summary(scenario, r, opts.threads);
    write_report(dir, "equilibrium.csv",
                 [&](std::ostream& os) { write_equilibrium_csv(os, scenario, r.baseline_flow, IncentiveVector::Zero(scenario.link_count())); });
    write_report(dir, "incentive.csv", [&](std::ostream& os) { write_incentive_csv(os, scenario, r.f_star, r.J_star); });
    write_report(dir, "trace.csv", [&](std::ostream& os) { write_incentive_trace_csv(os, r.trace); });
    write_report(dir, "run.json", [&](std::ostream& os) { os << summary.dump(1) << '\n'; });
    write_report(dir, "timings.json", [&](std::ostream& os) { os << json{{"seconds", seconds_since(start)}}.dump(1) << '\n'; });

    out << "optimize: profit " << format_number(r.profit) << " (no incentive " << format_number(r.baseline_profit)
        << "), " << r.iterations << " iterations, " << (r.converged ? "converged" : "NOT converged")
        << (r.degraded ? ", degraded" : "") << '\n';
    if (summary_out) *summary_out = summary;
    if (scenario_out) *scenario_out = std::move(scenario);
    return r.converged && !r.degraded ? kExitOk : kExitNotConverged;
}

int cmd_share(const RunOptions& opts, const ShareOptions& share, std::ostream& out) {
    const Scenario scenario = load(opts);
    const fs::path run_path = fs::path(share.run_dir) / "run.json";
    if (!fs::exists(run_path)) throw SchemaError("missing optimize artifact " + run_path.string());
    return share_from(scenario, read_json_file(run_path), share, opts.out_dir, out);
}

int cmd_generate(const GeneratorConfig& config, const std::string& path, std::ostream& out) {
    const Scenario scenario = random_scenario(config);
    save_scenario(path, scenario);
    out << "generate: " << scenario.link_count() << " links, " << scenario.classes.size() << " OD pairs -> " << path
        << '\n';
    return kExitOk;
}

void add_run_options(CLI::App* cmd, RunOptions& opts) {
    cmd->add_option("scenario", opts.scenario, "Scenario JSON file")->required();
    cmd->add_option("--out", opts.out_dir, "Report directory");
    cmd->add_option("--config", opts.config, "JSON file overriding solver settings");
    cmd->add_option("--threads", opts.threads, "Worker threads for per-class evaluation");
    cmd->add_option("--progress", opts.progress, "Print the incentive trace every N iterations to stderr");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-modal stochastic equilibrium, incentive design and profit sharing"};
    app.require_subcommand(1);

    RunOptions eq_opts, opt_opts, share_opts, pipe_opts;
    std::string incentive = "zeros";
    ShareOptions share, pipe_share;
    GeneratorConfig gen;
    std::string gen_out = "scenario.json";

    auto* eq = app.add_subcommand("equilibrium", "Solve the equilibrium for a fixed incentive");
    add_run_options(eq, eq_opts);
    eq->add_option("--incentive", incentive, "'zeros', an incentive.csv (column J) or a JSON array / run.json");

    auto* opt = app.add_subcommand("optimize", "Optimize link incentives (two time-scale algorithm)");
    add_run_options(opt, opt_opts);

    auto* sh = app.add_subcommand("share", "Split the profit with the asymmetric Nash bargaining solution");
    add_run_options(sh, share_opts);
    sh->add_option("--incentive-result", share.run_dir, "Directory holding an optimize run.json")->required();
    sh->add_option("--total-profit", share.total_profit, "Override the cooperative total profit");
    sh->add_option("--before", share.before, "Override the disagreement payoffs (one per provider)")->delimiter(',');
    sh->add_option("--after", share.after, "Override the post-incentive provider profits")->delimiter(',');

    auto* gen_cmd = app.add_subcommand("generate", "Generate a random scale-free scenario");
    gen_cmd->add_option("--n", gen.n_nodes, "Nodes");
    gen_cmd->add_option("--m", gen.m_attach, "Links per new node");
    gen_cmd->add_option("--od", gen.n_od_pairs, "OD pairs");
    gen_cmd->add_option("--k", gen.k_routes, "Routes per OD pair");
    gen_cmd->add_option("--seed", gen.seed, "Random seed");
    gen_cmd->add_option("--out", gen_out, "Output scenario JSON");
    std::string fixture;
    gen_cmd->add_option("--fixture", fixture, "Write a built-in scenario instead")->check(CLI::IsMember({"chengdu"}));

    auto* pipe = app.add_subcommand("pipeline", "optimize followed by share");
    add_run_options(pipe, pipe_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (*eq) return cmd_equilibrium(eq_opts, incentive, out);
        if (*opt) return cmd_optimize(opt_opts, out, err);
        if (*sh) return cmd_share(share_opts, share, out);
        if (*gen_cmd) {
            if (fixture == "chengdu") {
                save_scenario(gen_out, chengdu_fixture());
                out << "generate: chengdu fixture -> " << gen_out << '\n';
                return kExitOk;
            }
            if (gen.n_nodes <= gen.m_attach || gen.m_attach < 1 || gen.n_od_pairs < 1 || gen.k_routes < 1) {
                err << "generate: need n > m >= 1, od >= 1, k >= 1\n";
                return kExitInputError;
            }
            return cmd_generate(gen, gen_out, out);
        }
        if (*pipe) {
            json summary;
            Scenario scenario;
            const int code = cmd_optimize(pipe_opts, out, err, &summary, &scenario);
            const int shared = share_from(scenario, summary, pipe_share, pipe_opts.out_dir, out);
            return std::max(code, shared);
        }
    } catch (const NotConverged& e) {
        err << "error: " << e.what() << '\n';
        return kExitNotConverged;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNotConverged;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    return kExitInputError;
}

}  // namespace mmflow
