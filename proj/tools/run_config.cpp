#include "cli.hpp"

#include "locport/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace locport::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::InvalidConfig, path + ": " + what);
}

void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) fail(path, "unknown key '" + key + "'");
    }
}

double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
}

std::size_t get_count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(path, "expected a non-negative integer");
    return v.get<std::size_t>();
}

std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

// A scalar or an array of numbers.
std::vector<double> get_numbers(const json& v, const std::string& path) {
    if (!v.is_array()) return {get_number(v, path)};
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(get_number(v[k], path + "[" + std::to_string(k) + "]"));
    if (out.empty()) fail(path, "empty list");
    return out;
}

std::vector<std::size_t> get_counts(const json& v, const std::string& path) {
    if (!v.is_array()) return {get_count(v, path)};
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(get_count(v[k], path + "[" + std::to_string(k) + "]"));
    if (out.empty()) fail(path, "empty list");
    return out;
}

StrategyKind get_strategy(const json& v, const std::string& path) {
    const auto name = get_string(v, path);
    const auto kind = parse_strategy(name);
    if (!kind) fail(path, "unknown strategy '" + name + "'");
    return *kind;
}

void read_model(const json& m, RunConfig& cfg) {
    only_keys(m, "model", {"p", "beta", "mu0", "gamma", "lower", "upper"});
    if (m.contains("p")) cfg.ps = get_counts(m["p"], "model.p");
    if (m.contains("beta")) cfg.beta = get_number(m["beta"], "model.beta");
    if (m.contains("mu0")) {
        const auto& v = m["mu0"];
        if (v.is_string()) {
            if (v.get<std::string>() != "index") fail("model.mu0", "expected a number or \"index\"");
            cfg.mu0.reset();
        } else {
            cfg.mu0 = get_number(v, "model.mu0");
        }
    }
    if (m.contains("gamma")) cfg.gammas = get_numbers(m["gamma"], "model.gamma");
    if (m.contains("lower")) cfg.lower = get_numbers(m["lower"], "model.lower");
    if (m.contains("upper")) cfg.upper = get_numbers(m["upper"], "model.upper");
}

void read_backtest(const json& b, RunConfig& cfg) {
    only_keys(b, "backtest", {"in_len", "out_len", "strategy", "on_infeasible", "threads"});
    if (b.contains("in_len")) cfg.in_len = get_count(b["in_len"], "backtest.in_len");
    if (b.contains("out_len")) cfg.out_len = get_count(b["out_len"], "backtest.out_len");
    if (b.contains("strategy")) {
        const auto& v = b["strategy"];
        cfg.strategies.clear();
        if (v.is_array()) {
            for (std::size_t k = 0; k < v.size(); ++k) {
                cfg.strategies.push_back(get_strategy(v[k], "backtest.strategy[" + std::to_string(k) + "]"));
            }
            if (cfg.strategies.empty()) fail("backtest.strategy", "empty list");
        } else {
            cfg.strategies.push_back(get_strategy(v, "backtest.strategy"));
        }
    }
    if (b.contains("on_infeasible")) {
        const auto v = get_string(b["on_infeasible"], "backtest.on_infeasible");
        if (v == "abort") cfg.on_infeasible = InfeasiblePolicy::Abort;
        else if (v == "pure_cvar") cfg.on_infeasible = InfeasiblePolicy::FallbackPureCvar;
        else fail("backtest.on_infeasible", "expected \"abort\" or \"pure_cvar\"");
    }
    if (b.contains("threads")) cfg.threads = get_count(b["threads"], "backtest.threads");
}

void read_solver(const json& s, RunConfig& cfg) {
    only_keys(s, "solver", {"time_limit", "rel_gap_tol", "int_tol", "node_limit", "branching", "timings"});
    if (s.contains("time_limit")) cfg.time_limit = get_number(s["time_limit"], "solver.time_limit");
    if (s.contains("rel_gap_tol")) cfg.rel_gap_tol = get_number(s["rel_gap_tol"], "solver.rel_gap_tol");
    if (s.contains("int_tol")) cfg.int_tol = get_number(s["int_tol"], "solver.int_tol");
    if (s.contains("node_limit")) cfg.node_limit = get_count(s["node_limit"], "solver.node_limit");
    if (s.contains("branching")) {
        const auto v = get_string(s["branching"], "solver.branching");
        if (v == "most_fractional") cfg.branching = Branching::MostFractional;
        else if (v == "pseudo_cost") cfg.branching = Branching::PseudoCost;
        else fail("solver.branching", "expected \"most_fractional\" or \"pseudo_cost\"");
    }
    if (s.contains("timings")) {
        if (!s["timings"].is_boolean()) fail("solver.timings", "expected true or false");
        cfg.timings = s["timings"].get<bool>();
    }
}

void read_synthetic(const json& s, RunConfig& cfg) {
    only_keys(s, "synthetic", {"assets", "periods", "blocks"});
    SyntheticMarketSpec spec;
    if (!s.contains("assets") || !s.contains("periods")) fail("synthetic", "needs 'assets' and 'periods'");
    spec.num_assets = get_count(s["assets"], "synthetic.assets");
    spec.num_periods = get_count(s["periods"], "synthetic.periods");
    if (s.contains("blocks")) {
        if (!s["blocks"].is_array()) fail("synthetic.blocks", "expected a list of block sizes");
        spec.block_sizes = get_counts(s["blocks"], "synthetic.blocks");
    }
    cfg.synthetic = spec;
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
    only_keys(root, "config", {"prices", "out", "seed", "synthetic", "model", "backtest", "solver"});
    RunConfig cfg;
    if (root.contains("prices")) cfg.prices = get_string(root["prices"], "prices");
    if (root.contains("out")) cfg.out = get_string(root["out"], "out");
    if (root.contains("seed")) cfg.seed = get_count(root["seed"], "seed");
    if (root.contains("synthetic")) read_synthetic(root["synthetic"], cfg);
    if (root.contains("model")) read_model(root["model"], cfg);
    if (root.contains("backtest")) read_backtest(root["backtest"], cfg);
    if (root.contains("solver")) read_solver(root["solver"], cfg);
    check_run_config(cfg);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::FileNotFound, "cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

void check_run_config(const RunConfig& cfg) {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (cfg.ps.empty()) bad("p: no values");
    for (std::size_t p : cfg.ps)
        if (p < 1) bad("p must be at least 1");
    if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) bad("beta must lie in (0, 1]");
    if (cfg.gammas.empty()) bad("gamma: no values");
    for (double g : cfg.gammas)
        if (!(g >= 0.0 && g <= 1.0)) bad("gamma must lie in [0, 1]");
    for (std::size_t a = 0; a < cfg.gammas.size(); ++a)
        for (std::size_t b = a + 1; b < cfg.gammas.size(); ++b)
            if (cfg.gammas[a] == cfg.gammas[b]) bad("gamma values repeat");
    if (cfg.in_len < 2) bad("in_len must be at least 2");
    if (cfg.out_len < 1) bad("out_len must be at least 1");
    if (cfg.threads < 1) bad("threads must be at least 1");
    if (!(cfg.time_limit > 0.0)) bad("time_limit must be positive");
    if (!(cfg.rel_gap_tol > 0.0 && cfg.rel_gap_tol < 1e-2)) bad("rel_gap_tol must lie in (0, 1e-2)");
    if (!(cfg.int_tol > 0.0 && cfg.int_tol < 1e-2)) bad("int_tol must lie in (0, 1e-2)");
    if (cfg.node_limit && *cfg.node_limit < 1) bad("node_limit must be at least 1");
}

} // namespace locport::cli
