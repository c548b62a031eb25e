#include "cli.hpp"

#include "locport/errors.hpp"
#include "locport/formulations.hpp"
#include "locport/numfmt.hpp"
#include "locport/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

namespace locport::cli {

namespace {

namespace fs = std::filesystem;

int exit_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::InfeasibleAtMu0: return kExitInfeasible;
    case ErrorCode::SolverFailure:
    case ErrorCode::FractionalSolution: return kExitSolver;
    default: return kExitInput;
    }
}

int exit_code(MilpStatus status) {
    switch (status) {
    case MilpStatus::Optimal:
    case MilpStatus::FeasibleTimeLimit: return kExitOk;
    case MilpStatus::Infeasible: return kExitInfeasible;
    default: return kExitSolver;
    }
}

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) out.push_back(item);
    return out;
}

double to_number(const std::string& text, const std::string& flag) {
    const auto v = parse_double(text);
    if (!v || !std::isfinite(*v)) throw Error(ErrorCode::InvalidConfig, flag + ": not a number: '" + text + "'");
    return *v;
}

std::size_t to_count(const std::string& text, const std::string& flag) {
    const auto v = parse_double(text);
    if (!v || *v < 0 || *v != std::floor(*v) || *v > 1e15) {
        throw Error(ErrorCode::InvalidConfig, flag + ": not a non-negative integer: '" + text + "'");
    }
    return static_cast<std::size_t>(*v);
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
}

std::vector<std::size_t> default_blocks(std::size_t n) {
    const std::size_t k = std::min<std::size_t>(4, std::max<std::size_t>(1, n / 2));
    std::vector<std::size_t> out(k, n / k);
    for (std::size_t b = 0; b < n % k; ++b) ++out[b];
    return out;
}

PricePanel load_panel(const RunConfig& cfg) {
    if (cfg.prices) return load_prices(*cfg.prices);
    if (cfg.synthetic) {
        auto spec = *cfg.synthetic;
        spec.seed = cfg.seed;
        if (spec.block_sizes.empty()) spec.block_sizes = default_blocks(spec.num_assets);
        return synthetic_market(spec);
    }
    throw Error(ErrorCode::InvalidConfig, "no price data: pass --prices or give a 'synthetic' section");
}

std::vector<double> expand(const std::vector<double>& v, std::size_t n, double fallback, const char* what) {
    if (v.empty()) return std::vector<double>(n, fallback);
    if (v.size() == 1) return std::vector<double>(n, v.front());
    if (v.size() != n) {
        throw Error(ErrorCode::InvalidConfig, std::string(what) + " has " + std::to_string(v.size()) +
                                                  " entries for " + std::to_string(n) + " assets");
    }
    return v;
}

BnbOptions solver_options(const RunConfig& cfg) {
    BnbOptions o;
    o.time_limit = cfg.time_limit;
    o.rel_gap_tol = cfg.rel_gap_tol;
    o.int_tol = cfg.int_tol;
    o.node_limit = cfg.node_limit;
    o.branching = cfg.branching;
    return o;
}

ModelConfig model_config(const RunConfig& cfg, std::size_t n, std::size_t p, double gamma) {
    ModelConfig m;
    m.p = p;
    m.beta = cfg.beta;
    m.gamma = gamma;
    m.lower = expand(cfg.lower, n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0, "lower");
    m.upper = expand(cfg.upper, n, 1.0, "upper");
    return m;
}

std::string sig(double v) { return format_sig6(v); }

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

// ---- info -------------------------------------------------------------

int cmd_info(const RunConfig& cfg, std::ostream& out) {
    const auto panel = load_panel(cfg);
    const auto r = simple_returns(panel);
    const std::size_t n = panel.num_assets();
    const std::size_t T = r.num_periods();
    out << "assets   " << n << "\n";
    out << "returns  " << T << "\n";
    out << "dates    " << panel.dates.front() << " .. " << panel.dates.back() << "\n\n";
    out << pad("asset", 12) << pad("mean", 14) << pad("stddev", 14) << pad("min", 14) << "max\n";
    for (std::size_t j = 0; j < n; ++j) {
        const auto col = r.returns.column(j);
        const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(T);
        double ss = 0.0;
        for (double x : col) ss += (x - mean) * (x - mean);
        const std::string sd = T > 1 ? sig(std::sqrt(ss / static_cast<double>(T - 1))) : "n/a";
        out << pad(panel.asset_ids[j], 12) << pad(sig(mean), 14) << pad(sd, 14)
            << pad(sig(*std::min_element(col.begin(), col.end())), 14) << sig(*std::max_element(col.begin(), col.end()))
            << "\n";
    }
    out << "\n";
    if (n < 2 || T < 2) {
        out << "correlation  n/a\n";
        return kExitOk;
    }
    const auto d = correlation_distances(log_returns(panel));
    std::size_t lo_i = 0, lo_j = 1, hi_i = 0, hi_j = 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (d.rho(i, j) < d.rho(lo_i, lo_j)) lo_i = i, lo_j = j;
            if (d.rho(i, j) > d.rho(hi_i, hi_j)) hi_i = i, hi_j = j;
        }
    }
    out << "min rho  " << sig(d.rho(lo_i, lo_j)) << "  (" << panel.asset_ids[lo_i] << ", " << panel.asset_ids[lo_j]
        << ")\n";
    out << "max rho  " << sig(d.rho(hi_i, hi_j)) << "  (" << panel.asset_ids[hi_i] << ", " << panel.asset_ids[hi_j]
        << ")\n";
    for (const auto& w : d.warnings) out << "warning: " << w << "\n";
    return kExitOk;
}

// ---- solve ------------------------------------------------------------

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto panel = load_panel(cfg);
    const std::size_t n = panel.num_assets();
    const auto s = scenario_set(simple_returns(panel));
    const auto d = correlation_distances(log_returns(panel));
    for (const auto& w : d.warnings) err << "warning: " << w << "\n";

    const auto kind = cfg.strategies.empty() ? StrategyKind::Unified : cfg.strategies.front();
    if (cfg.strategies.size() > 1) err << "warning: solve uses only the first strategy\n";
    if (kind == StrategyKind::Index) throw Error(ErrorCode::InvalidConfig, "the index strategy has nothing to solve");
    const double gamma = cfg.gammas.front();
    auto mc = model_config(cfg, n, cfg.ps.front(), gamma);
    mc.mu0 = cfg.mu0 ? *cfg.mu0 : equal_weight_mu0(s);
    for (const auto& w : validate_config(mc, n)) err << "warning: " << w << "\n";

    const auto opts = solver_options(cfg);
    // Bound subproblems must finish for the main model to exist, so the
    // time limit only applies to the main model.
    auto aux = opts;
    aux.time_limit = std::max(opts.time_limit, BnbOptions{}.time_limit);
    const MilpSolver aux_solver = [&](const MilpModel& m) { return solve_milp(m, aux); };

    SolveRecord rec;
    rec.model = std::string(strategy_name(kind));
    rec.cfg = mc;
    BuiltModel built;
    if (kind == StrategyKind::PureCvar) {
        built = build_pure_cvar(s, mc);
        rec.solution = solve_milp(built.model, opts);
        if (rec.solution.status == MilpStatus::Infeasible) {
            throw Error(ErrorCode::InfeasibleAtMu0, "no portfolio reaches mu0 = " + format_double(mc.mu0));
        }
    } else {
        const auto bounds = compute_bounds_detailed(s, d, mc, aux_solver);
        rec.bounds = bounds.bounds;
        if (kind == StrategyKind::CvarCardinality) {
            built = bounds.cvar_cc;
            rec.solution = bounds.cvar_cc_solution;
        } else {
            auto two = solve_two_step(s, d, mc, bounds, aux);
            if (gamma == 1.0) {
                built = std::move(two.built);
                rec.solution = std::move(two.solution);
            } else {
                built = build_unified(s, d, mc, bounds.bounds.fp0);
                auto o = opts;
                if (two.solution.has_solution()) {
                    const auto seed = extract_portfolio(two.solution, two.built, s, d, mc);
                    o.warm_start = assignment_from_portfolio(built, seed);
                }
                rec.solution = solve_milp(built.model, o);
            }
        }
    }
    if (!rec.solution.has_solution()) {
        err << "error: " << to_string(rec.solution.status) << "\n";
        return exit_code(rec.solution.status);
    }
    rec.portfolio = extract_portfolio(rec.solution, built, s, d, mc);

    const auto path = fs::path(cfg.out) / "portfolio.json";
    write_file(path, portfolio_json(rec, panel.asset_ids, cfg.timings));

    const auto& pf = rec.portfolio;
    out << "model            " << rec.model;
    if (kind == StrategyKind::Unified) out << " (gamma=" << sig(gamma) << ")";
    out << ", p=" << mc.p << ", beta=" << sig(mc.beta) << "\n";
    out << "status           " << to_string(rec.solution.status) << "\n";
    out << "objective        " << sig(rec.solution.objective) << "\n";
    if (rec.bounds) {
        out << "F_p lower        " << sig(rec.bounds->fp_lower) << "\n";
        out << "F_p upper        " << sig(rec.bounds->fp_upper) << "\n";
        if (kind == StrategyKind::Unified) out << "F_p0             " << sig(rec.bounds->fp0) << "\n";
    }
    out << "representatives ";
    for (std::size_t r : pf.representatives) out << " " << panel.asset_ids[r];
    out << "\nweights\n";
    for (std::size_t j = 0; j < n; ++j) {
        if (pf.weights[j] >= 1e-6) out << "  " << pad(panel.asset_ids[j], 10) << sig(pf.weights[j]) << "\n";
    }
    out << "CVaR             " << sig(pf.cvar_value) << "\n";
    out << "mu(x)            " << sig(pf.mean_return) << "  (mu0 " << sig(mc.mu0) << ")\n";
    out << "F_p(x)           " << sig(pf.fp_value) << "\n";
    out << "time             " << sig(rec.solution.wall_time) << " s\n";
    out << "gap              " << sig(rec.solution.gap) << "\n";
    out << "nodes            " << rec.solution.node_count << "\n";
    for (const auto& w : rec.solution.warnings) err << "warning: " << w << "\n";
    out << "wrote " << path.string() << "\n";
    return exit_code(rec.solution.status);
}

// ---- backtest / compare ----------------------------------------------

std::vector<BacktestReport> run_reports(const RunConfig& cfg, const PricePanel& panel,
                                        const std::vector<StrategyKind>& requested) {
    const std::set<StrategyKind> kinds(requested.begin(), requested.end());
    std::vector<double> gammas = cfg.gammas;
    std::sort(gammas.begin(), gammas.end(), std::greater<>());

    std::vector<BacktestReport> reports;
    for (std::size_t p : cfg.ps) {
        BacktestConfig bc;
        bc.in_len = cfg.in_len;
        bc.out_len = cfg.out_len;
        bc.model_cfg = model_config(cfg, panel.num_assets(), p, 1.0);
        bc.mu0 = cfg.mu0;
        bc.solver_opts = solver_options(cfg);
        bc.on_infeasible = cfg.on_infeasible;
        bc.threads = cfg.threads;

        if (kinds.count(StrategyKind::Unified)) {
            auto sweep = gamma_sweep(panel, bc, gammas);
            std::reverse(sweep.begin(), sweep.end());
            for (auto& r : sweep) reports.push_back(std::move(r));
        }
        for (auto kind : {StrategyKind::CvarCardinality, StrategyKind::PureCvar, StrategyKind::Index}) {
            if (!kinds.count(kind)) continue;
            bc.strategy = {kind, 0.0};
            reports.push_back(run_backtest(panel, bc));
        }
    }
    return reports;
}

void print_table(std::ostream& out, std::span<const BacktestReport> reports, std::span<const CompareRow> flags) {
    out << pad("strategy", 11) << pad("gamma", 7) << pad("p", 5) << pad("Av(1e-3)", 13) << pad("Sh", 13)
        << pad("time", 12) << pad("gap", 12) << pad("nodes", 10) << "problems";
    if (!flags.empty()) out << "  italic best_av best_sh";
    out << "\n";
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& r = reports[k];
        const bool index = r.strategy.kind == StrategyKind::Index;
        out << pad(std::string(strategy_name(r.strategy.kind)), 11)
            << pad(r.strategy.kind == StrategyKind::Unified ? sig(r.strategy.gamma) : "-", 7)
            << pad(std::to_string(r.p), 5) << pad(sig(r.av * 1e3), 13) << pad(r.sharpe ? sig(*r.sharpe) : "NA", 13)
            << pad(index ? "-" : sig(r.avg_time), 12) << pad(index ? "-" : sig(r.avg_gap), 12)
            << pad(index ? "-" : sig(r.avg_nodes), 10) << r.n_problems;
        if (!flags.empty()) {
            auto mark = [](const std::optional<bool>& f) -> std::string { return !f ? "-" : *f ? "yes" : "no"; };
            out << "  " << pad(mark(flags[k].italic), 7) << pad(mark(flags[k].best_av), 8) << mark(flags[k].best_sharpe);
        }
        out << "\n";
    }
}

int cmd_backtest(const RunConfig& cfg, std::ostream& out) {
    const auto panel = load_panel(cfg);
    const auto kinds = cfg.strategies.empty() ? std::vector<StrategyKind>{StrategyKind::Unified} : cfg.strategies;
    const auto reports = run_reports(cfg, panel, kinds);
    const auto dir = fs::path(cfg.out);
    write_file(dir / "backtest.json", backtest_json(reports, panel.asset_ids, cfg.timings));
    write_file(dir / "backtest.csv", backtest_csv(reports, cfg.timings));
    print_table(out, reports, {});
    out << "wrote " << (dir / "backtest.json").string() << " and " << (dir / "backtest.csv").string() << "\n";
    return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out) {
    const auto panel = load_panel(cfg);
    const auto kinds = cfg.strategies.empty()
                           ? std::vector<StrategyKind>{StrategyKind::Unified, StrategyKind::CvarCardinality,
                                                       StrategyKind::PureCvar, StrategyKind::Index}
                           : cfg.strategies;
    const auto reports = run_reports(cfg, panel, kinds);
    const auto rows = compare_rows(reports);
    const auto dir = fs::path(cfg.out);
    write_file(dir / "compare.csv", compare_csv(rows, cfg.timings));
    write_file(dir / "compare.json", backtest_json(reports, panel.asset_ids, cfg.timings));
    print_table(out, reports, rows);
    out << "wrote " << (dir / "compare.csv").string() << " and " << (dir / "compare.json").string() << "\n";
    return kExitOk;
}

// ---- gen --------------------------------------------------------------

int cmd_gen(const RunConfig& cfg, std::ostream& out) {
    if (!cfg.synthetic) throw Error(ErrorCode::InvalidConfig, "gen needs --assets and --periods");
    auto spec = *cfg.synthetic;
    spec.seed = cfg.seed;
    if (spec.block_sizes.empty()) spec.block_sizes = default_blocks(spec.num_assets);
    const auto panel = synthetic_market(spec);
    fs::path path = cfg.out;
    if (fs::is_directory(path) || path.extension() != ".csv") path /= "prices.csv";
    write_file(path, format_prices(panel));
    out << "wrote " << panel.num_assets() << " assets x " << panel.num_dates() << " prices to " << path.string()
        << "\n";
    return kExitOk;
}

// ---- argument handling -----------------------------------------------

struct Flags {
    std::string config, prices, out, p, gamma, mu0, strategy, on_infeasible, blocks, branching;
    double beta = 0, time_limit = 0, rel_gap_tol = 0;
    std::size_t in_len = 0, out_len = 0, threads = 0, assets = 0, periods = 0, node_limit = 0;
    std::uint64_t seed = 0;
    bool timings = false, p_sweep = false;
};

void add_common(CLI::App* cmd, Flags& f, bool model_flags) {
    cmd->add_option("--config", f.config, "JSON run configuration");
    cmd->add_option("--prices", f.prices, "price CSV (dates x assets)");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--seed", f.seed, "seed for synthetic data");
    if (!model_flags) return;
    cmd->add_option("--p", f.p, "number of representatives, or a comma-separated list");
    cmd->add_flag("--p-sweep", f.p_sweep, "p = 5,10,15,20");
    cmd->add_option("--gamma", f.gamma, "gamma in [0,1], or a comma-separated list");
    cmd->add_option("--beta", f.beta, "CVaR tolerance");
    cmd->add_option("--mu0", f.mu0, "minimum expected return, or 'index'");
    cmd->add_option("--strategy", f.strategy, "unified, cvar_cc, pure_cvar, index (comma-separated)");
    cmd->add_option("--in-len", f.in_len, "in-sample length in returns");
    cmd->add_option("--out-len", f.out_len, "out-of-sample length in returns");
    cmd->add_option("--on-infeasible", f.on_infeasible, "abort or pure_cvar");
    cmd->add_option("--time-limit", f.time_limit, "seconds per solve");
    cmd->add_option("--rel-gap", f.rel_gap_tol, "relative gap tolerance");
    cmd->add_option("--node-limit", f.node_limit, "branch-and-bound node limit");
    cmd->add_option("--branching", f.branching, "most_fractional or pseudo_cost");
    cmd->add_option("--threads", f.threads, "worker threads across windows");
    cmd->add_flag("--timings", f.timings, "include wall-clock times in reports");
    cmd->add_option("--assets", f.assets, "synthetic market: number of assets");
    cmd->add_option("--periods", f.periods, "synthetic market: number of returns");
    cmd->add_option("--blocks", f.blocks, "synthetic market: comma-separated block sizes");
}

RunConfig resolve(const CLI::App* cmd, const Flags& f) {
    auto given = [&](const char* name) {
        const auto* opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    RunConfig cfg = given("--config") ? load_run_config(f.config) : RunConfig{};
    if (given("--prices")) cfg.prices = f.prices;
    if (given("--out")) cfg.out = f.out;
    if (given("--seed")) cfg.seed = f.seed;
    if (given("--p")) {
        cfg.ps.clear();
        for (const auto& s : split(f.p)) cfg.ps.push_back(to_count(s, "--p"));
    }
    if (given("--p-sweep")) cfg.ps = {5, 10, 15, 20};
    if (given("--gamma")) {
        cfg.gammas.clear();
        for (const auto& s : split(f.gamma)) cfg.gammas.push_back(to_number(s, "--gamma"));
    }
    if (given("--beta")) cfg.beta = f.beta;
    if (given("--mu0")) {
        if (f.mu0 == "index") cfg.mu0.reset();
        else cfg.mu0 = to_number(f.mu0, "--mu0");
    }
    if (given("--strategy")) {
        cfg.strategies.clear();
        for (const auto& s : split(f.strategy)) {
            const auto kind = parse_strategy(s);
            if (!kind) throw Error(ErrorCode::InvalidConfig, "--strategy: unknown strategy '" + s + "'");
            cfg.strategies.push_back(*kind);
        }
    }
    if (given("--in-len")) cfg.in_len = f.in_len;
    if (given("--out-len")) cfg.out_len = f.out_len;
    if (given("--on-infeasible")) {
        if (f.on_infeasible == "abort") cfg.on_infeasible = InfeasiblePolicy::Abort;
        else if (f.on_infeasible == "pure_cvar") cfg.on_infeasible = InfeasiblePolicy::FallbackPureCvar;
        else throw Error(ErrorCode::InvalidConfig, "--on-infeasible: expected abort or pure_cvar");
    }
    if (given("--time-limit")) cfg.time_limit = f.time_limit;
    if (given("--rel-gap")) cfg.rel_gap_tol = f.rel_gap_tol;
    if (given("--node-limit")) cfg.node_limit = f.node_limit;
    if (given("--branching")) {
        if (f.branching == "most_fractional") cfg.branching = Branching::MostFractional;
        else if (f.branching == "pseudo_cost") cfg.branching = Branching::PseudoCost;
        else throw Error(ErrorCode::InvalidConfig, "--branching: expected most_fractional or pseudo_cost");
    }
    if (given("--threads")) cfg.threads = f.threads;
    if (given("--timings")) cfg.timings = f.timings;
    if (given("--assets") || given("--periods") || given("--blocks")) {
        auto spec = cfg.synthetic.value_or(SyntheticMarketSpec{});
        if (given("--assets")) spec.num_assets = f.assets;
        if (given("--periods")) spec.num_periods = f.periods;
        if (given("--blocks")) {
            spec.block_sizes.clear();
            for (const auto& s : split(f.blocks)) spec.block_sizes.push_back(to_count(s, "--blocks"));
        }
        cfg.synthetic = spec;
    }
    check_run_config(cfg);
    return cfg;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Clustering-aware CVaR portfolio selection"};
    app.name("locport");
    app.require_subcommand(1);
    Flags f;
    auto* info = app.add_subcommand("info", "summarize a price file");
    add_common(info, f, false);
    auto* solve = app.add_subcommand("solve", "solve one model on the whole panel");
    add_common(solve, f, true);
    auto* backtest = app.add_subcommand("backtest", "rolling-window backtest");
    add_common(backtest, f, true);
    auto* compare = app.add_subcommand("compare", "backtest several strategies and flag the winners");
    add_common(compare, f, true);
    auto* gen = app.add_subcommand("gen", "write a synthetic market to CSV");
    add_common(gen, f, true);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        if (info->parsed()) {
            const auto cfg = resolve(info, f);
            if (!cfg.prices) throw Error(ErrorCode::InvalidConfig, "info needs --prices");
            return cmd_info(cfg, out);
        }
        if (solve->parsed()) return cmd_solve(resolve(solve, f), out, err);
        if (backtest->parsed()) return cmd_backtest(resolve(backtest, f), out);
        if (compare->parsed()) return cmd_compare(resolve(compare, f), out);
        if (gen->parsed()) return cmd_gen(resolve(gen, f), out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

} // namespace locport::cli
