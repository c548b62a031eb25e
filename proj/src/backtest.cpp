#include "locport/backtest.hpp"

#include "locport/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <thread>

namespace locport {

std::string_view strategy_name(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::Unified: return "unified";
    case StrategyKind::CvarCardinality: return "cvar_cc";
    case StrategyKind::PureCvar: return "pure_cvar";
    case StrategyKind::Index: return "index";
    }
    return "unknown";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) {
    for (auto kind : {StrategyKind::Unified, StrategyKind::CvarCardinality, StrategyKind::PureCvar,
                      StrategyKind::Index}) {
        if (strategy_name(kind) == name) return kind;
    }
    return std::nullopt;
}

std::vector<Window> make_windows(std::size_t total_obs, std::size_t in_len, std::size_t out_len) {
    if (in_len < 2) throw Error(ErrorCode::InvalidConfig, "in_len must be at least 2");
    if (out_len < 1) throw Error(ErrorCode::InvalidConfig, "out_len must be at least 1");
    if (total_obs < in_len + 1) {
        throw Error(ErrorCode::TooFewObservations, std::to_string(total_obs) + " returns cannot fill an in-sample of " +
                                                       std::to_string(in_len) + " plus one out-of-sample return");
    }
    std::vector<Window> out;
    for (std::size_t start = 0; start + in_len < total_obs; start += out_len) {
        const std::size_t in_end = start + in_len;
        out.push_back({start, in_end, std::min(in_end + out_len, total_obs)});
    }
    return out;
}

double average_return(std::span<const double> oos) {
    if (oos.empty()) throw Error(ErrorCode::Empty, "empty return series");
    return std::accumulate(oos.begin(), oos.end(), 0.0) / static_cast<double>(oos.size());
}

double sharpe_ratio(std::span<const double> oos, double rf) {
    if (oos.size() < 2) throw Error(ErrorCode::TooShort, "Sharpe ratio needs at least two returns");
    const double mean = average_return(oos);
    double ss = 0.0;
    for (double r : oos) ss += (r - mean) * (r - mean);
    const double sd = std::sqrt(ss / static_cast<double>(oos.size() - 1));
    if (!(sd > 0.0)) throw Error(ErrorCode::ZeroVariance, "constant return series");
    return (mean - rf) / sd;
}

namespace {

struct WindowData {
    ScenarioSet scenarios;
    DistanceMatrix distances;
    ModelConfig cfg;
};

ModelConfig with_default_bounds(ModelConfig cfg, std::size_t n) {
    if (cfg.lower.empty()) cfg.lower.assign(n, 1.0 / static_cast<double>(n));
    if (cfg.upper.empty()) cfg.upper.assign(n, 1.0);
    return cfg;
}

WindowData prepare(const PricePanel& panel, const Window& w, const BacktestConfig& bc) {
    const auto slice = panel.slice(w.in_start, w.in_end);
    WindowData out{scenario_set(simple_returns(slice)), correlation_distances(log_returns(slice)),
                   with_default_bounds(bc.model_cfg, panel.num_assets())};
    out.cfg.mu0 = bc.mu0 ? *bc.mu0 : equal_weight_mu0(out.scenarios);
    return out;
}

void require_solution(const MilpSolution& sol, std::string_view what) {
    if (sol.has_solution()) return;
    if (sol.status == MilpStatus::Infeasible) {
        throw Error(ErrorCode::InfeasibleAtMu0, std::string(what) + " is infeasible");
    }
    throw Error(ErrorCode::SolverFailure, std::string(what) + " ended with status " + std::string(to_string(sol.status)));
}

void record(WindowResult& r, const MilpSolution& sol, const BuiltModel& built, const WindowData& data) {
    r.solved_as = built.layout.kind == ModelKind::Unified           ? StrategyKind::Unified
                  : built.layout.kind == ModelKind::CvarCardinality ? StrategyKind::CvarCardinality
                                                                    : StrategyKind::PureCvar;
    r.portfolio = extract_portfolio(sol, built, data.scenarios, data.distances, data.cfg);
    r.status = sol.status;
    r.objective = sol.objective;
    r.gap = sol.gap;
    r.nodes = sol.node_count;
    r.wall_time = sol.wall_time;
    r.warnings.insert(r.warnings.end(), sol.warnings.begin(), sol.warnings.end());
}

std::vector<double> index_returns(const Matrix& returns, const Window& w) {
    std::vector<double> out;
    for (std::size_t t = w.in_end; t < w.out_end; ++t) {
        const auto row = returns.row(t);
        out.push_back(std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
    }
    return out;
}

std::vector<double> held_returns(const Matrix& returns, const Window& w, const std::vector<double>& weights) {
    std::vector<double> out;
    for (std::size_t t = w.in_end; t < w.out_end; ++t) {
        const auto row = returns.row(t);
        out.push_back(std::inner_product(row.begin(), row.end(), weights.begin(), 0.0));
    }
    return out;
}

// Solves one window for every gamma (or once for a non-unified strategy).
std::vector<WindowResult> solve_window(const PricePanel& panel, const Matrix& returns, const Window& w,
                                       const BacktestConfig& bc, std::span<const double> gammas) {
    const std::size_t count = bc.strategy.kind == StrategyKind::Unified ? gammas.size() : 1;
    std::vector<WindowResult> out(count);
    for (auto& r : out) r.window = w;

    if (bc.strategy.kind == StrategyKind::Index) {
        out[0].oos_returns = index_returns(returns, w);
        return out;
    }

    const auto data = prepare(panel, w, bc);
    const auto& opts = bc.solver_opts;
    auto solver = [&](const MilpModel& m) { return solve_milp(m, opts); };

    auto fallback = [&] {
        const auto built = build_pure_cvar(data.scenarios, data.cfg);
        const auto sol = solve_milp(built.model, opts);
        require_solution(sol, "pure CVaR fallback");
        for (auto& r : out) {
            r = WindowResult{};
            r.window = w;
            r.mu0 = data.cfg.mu0;
            record(r, sol, built, data);
            r.warnings.push_back("InfeasibleAtMu0: window solved as pure_cvar");
        }
    };

    try {
        if (bc.strategy.kind == StrategyKind::PureCvar) {
            const auto built = build_pure_cvar(data.scenarios, data.cfg);
            const auto sol = solve_milp(built.model, opts);
            require_solution(sol, "pure CVaR model");
            record(out[0], sol, built, data);
        } else {
            const auto bc_result = compute_bounds_detailed(data.scenarios, data.distances, data.cfg, solver);
            std::vector<std::size_t> pm_reps;
            for (std::size_t j = 0; j < bc_result.pmedian.layout.n; ++j) {
                if (bc_result.pmedian_solution.values[*bc_result.pmedian.layout.z + j] > 0.5) pm_reps.push_back(j);
            }
            for (auto& r : out) {
                r.bounds = bc_result.bounds;
                r.pmedian_representatives = pm_reps;
                r.cvar_cc_objective = bc_result.cvar_cc_solution.objective;
            }

            if (bc.strategy.kind == StrategyKind::CvarCardinality) {
                record(out[0], bc_result.cvar_cc_solution, bc_result.cvar_cc, data);
            } else {
                std::optional<Portfolio> previous;
                for (std::size_t k = 0; k < gammas.size(); ++k) {
                    auto& r = out[k];
                    const double gamma = gammas[k];
                    if (gamma == 1.0) {
                        const auto solved =
                            solve_two_step(data.scenarios, data.distances, data.cfg, bc_result, opts);
                        require_solution(solved.solution, "unified model");
                        record(r, solved.solution, solved.built, data);
                    } else {
                        const double fp0 = interpolate_fp0(bc_result.bounds.fp_lower, bc_result.bounds.fp_upper, gamma);
                        const auto built = build_unified(data.scenarios, data.distances, data.cfg, fp0);
                        BnbOptions o = opts;
                        if (previous) o.warm_start = assignment_from_portfolio(built, *previous);
                        const auto sol = solve_milp(built.model, o);
                        require_solution(sol, "unified model");
                        record(r, sol, built, data);
                    }
                    r.bounds->fp0 = interpolate_fp0(r.bounds->fp_lower, r.bounds->fp_upper, gamma);
                    previous = r.portfolio;
                }
            }
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InfeasibleAtMu0 || bc.on_infeasible == InfeasiblePolicy::Abort) throw;
        fallback();
    }

    for (auto& r : out) {
        r.mu0 = data.cfg.mu0;
        r.oos_returns = held_returns(returns, w, r.portfolio->weights);
    }
    return out;
}

BacktestReport aggregate(const BacktestConfig& bc, Strategy strategy, std::vector<WindowResult> windows) {
    BacktestReport rep;
    rep.strategy = strategy;
    rep.p = bc.model_cfg.p;
    rep.beta = bc.model_cfg.beta;
    rep.in_len = bc.in_len;
    rep.out_len = bc.out_len;
    rep.windows = std::move(windows);
    for (const auto& w : rep.windows) {
        rep.oos_returns.insert(rep.oos_returns.end(), w.oos_returns.begin(), w.oos_returns.end());
        rep.avg_time += w.wall_time;
        rep.avg_gap += w.gap;
        rep.avg_nodes += static_cast<double>(w.nodes);
    }
    rep.n_problems = rep.windows.size();
    if (rep.n_problems > 0) {
        const auto k = static_cast<double>(rep.n_problems);
        rep.avg_time /= k;
        rep.avg_gap /= k;
        rep.avg_nodes /= k;
    }
    rep.av = average_return(rep.oos_returns);
    try {
        rep.sharpe = sharpe_ratio(rep.oos_returns);
    } catch (const Error&) {
        rep.sharpe.reset();
    }
    return rep;
}

// Runs every window, in parallel across windows when allowed, and returns the
// per-window results in window order.
std::vector<std::vector<WindowResult>> run_windows(const PricePanel& panel, const BacktestConfig& bc,
                                                   std::span<const double> gammas) {
    if (panel.num_assets() == 0) throw Error(ErrorCode::InvalidConfig, "price panel has no assets");
    if (panel.num_dates() < 2) throw Error(ErrorCode::TooFewObservations, "need at least two prices");
    const auto windows = make_windows(panel.num_dates() - 1, bc.in_len, bc.out_len);
    if (bc.strategy.kind != StrategyKind::Index) {
        auto cfg = with_default_bounds(bc.model_cfg, panel.num_assets());
        cfg.mu0 = 0.0; // set per window
        (void)validate_config(cfg, panel.num_assets());
    }

    const auto returns = simple_returns(panel).returns;
    std::vector<std::vector<WindowResult>> results(windows.size());
    std::vector<std::exception_ptr> errors(windows.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < windows.size(); k = next++) {
            try {
                results[k] = solve_window(panel, returns, windows[k], bc, gammas);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(bc.threads, 1, std::max<std::size_t>(1, windows.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

} // namespace

SolvedModel solve_two_step(const ScenarioSet& s, const DistanceMatrix& d, const ModelConfig& cfg,
                           const BoundsComputation& bounds, const BnbOptions& opts) {
    SolvedModel out{build_unified(s, d, cfg, bounds.bounds.fp_lower), {}};
    const auto& lay = out.built.layout;
    std::map<std::size_t, int> pins;
    for (std::size_t j = 0; j < lay.n; ++j) {
        pins[*lay.z + j] = bounds.pmedian_solution.values[*bounds.pmedian.layout.z + j] > 0.5 ? 1 : 0;
    }
    BnbOptions pinned = opts;
    pinned.warm_start.reset();
    out.solution = solve_milp(fix_binaries(out.built.model, pins), pinned);
    if (out.solution.has_solution()) {
        // Tied p-median optima pin one representative set among several; the
        // full model, seeded with the pinned solution, settles which is best.
        BnbOptions verify = opts;
        verify.warm_start = out.solution.values;
        auto full = solve_milp(out.built.model, verify);
        if (full.has_solution()) {
            full.node_count += out.solution.node_count;
            full.wall_time += out.solution.wall_time;
            out.solution = std::move(full);
        }
        return out;
    }

    auto full = solve_milp(out.built.model, pinned);
    full.warnings.push_back("pinned p-median representatives admit no portfolio; solved the full model");
    out.solution = std::move(full);
    return out;
}

std::vector<BacktestReport> gamma_sweep(const PricePanel& panel, const BacktestConfig& cfg,
                                        std::span<const double> gammas) {
    if (gammas.empty()) throw Error(ErrorCode::InvalidConfig, "no gamma values");
    for (std::size_t k = 0; k < gammas.size(); ++k) {
        if (!(gammas[k] >= 0.0 && gammas[k] <= 1.0)) throw Error(ErrorCode::InvalidConfig, "gamma outside [0, 1]");
        if (k > 0 && !(gammas[k] < gammas[k - 1])) {
            throw Error(ErrorCode::InvalidConfig, "gamma values must be strictly decreasing");
        }
    }
    BacktestConfig bc = cfg;
    bc.strategy = Strategy::unified(gammas.front());
    const auto per_window = run_windows(panel, bc, gammas);

    std::vector<BacktestReport> out;
    for (std::size_t k = 0; k < gammas.size(); ++k) {
        std::vector<WindowResult> windows;
        for (const auto& w : per_window) windows.push_back(w[k]);
        out.push_back(aggregate(bc, Strategy::unified(gammas[k]), std::move(windows)));
    }
    return out;
}

BacktestReport run_backtest(const PricePanel& panel, const BacktestConfig& cfg) {
    if (cfg.strategy.kind == StrategyKind::Unified) {
        const double gamma = cfg.strategy.gamma;
        return gamma_sweep(panel, cfg, std::span<const double>(&gamma, 1)).front();
    }
    auto per_window = run_windows(panel, cfg, {});
    std::vector<WindowResult> windows;
    for (auto& w : per_window) windows.push_back(std::move(w.front()));
    return aggregate(cfg, cfg.strategy, std::move(windows));
}

} // namespace locport
