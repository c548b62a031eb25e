#pragma once

/*
 * Rolling-window evaluation. Windows index the return series: window k
 * fits on returns [k*out, k*out + in) and holds the resulting weights
 * fixed over returns [k*out + in, min(k*out + in + out, total)).
 */

#include "locport/branch_bound.hpp"
#include "locport/formulations.hpp"
#include "locport/market_data.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace locport {

enum class StrategyKind { Unified, CvarCardinality, PureCvar, Index };

struct Strategy {
    StrategyKind kind = StrategyKind::Unified;
    double gamma = 1.0; // unified only

    static Strategy unified(double gamma) { return {StrategyKind::Unified, gamma}; }
    static Strategy cvar_cc() { return {StrategyKind::CvarCardinality, 0.0}; }
    static Strategy pure_cvar() { return {StrategyKind::PureCvar, 0.0}; }
    static Strategy index() { return {StrategyKind::Index, 0.0}; }
};

/// "unified", "cvar_cc", "pure_cvar" or "index".
std::string_view strategy_name(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(std::string_view name);

enum class InfeasiblePolicy { Abort, FallbackPureCvar };

struct BacktestConfig {
    std::size_t in_len = 104;
    std::size_t out_len = 52;
    Strategy strategy;
    /// p, beta and the weight bounds. Empty lower/upper mean 1/n and 1;
    /// gamma comes from the strategy.
    ModelConfig model_cfg;
    /// Fixed return target; nullopt uses each window's equal-weighted mean.
    std::optional<double> mu0;
    BnbOptions solver_opts;
    InfeasiblePolicy on_infeasible = InfeasiblePolicy::Abort;
    std::size_t threads = 1;
};

struct Window {
    std::size_t in_start = 0;
    std::size_t in_end = 0; // exclusive; also the first out-of-sample return
    std::size_t out_end = 0;

    bool operator==(const Window&) const = default;
};

struct WindowResult {
    Window window;
    StrategyKind solved_as = StrategyKind::Index; // differs from the request after a fallback
    std::optional<Portfolio> portfolio;           // empty for the index
    MilpStatus status = MilpStatus::Optimal;
    double objective = 0.0; // in-sample CVaR objective of the solved model
    double gap = 0.0;
    std::size_t nodes = 0;
    double wall_time = 0.0;
    double mu0 = 0.0;
    std::optional<FpBounds> bounds;
    std::vector<std::size_t> pmedian_representatives;
    double cvar_cc_objective = 0.0;
    std::vector<double> oos_returns;
    std::vector<std::string> warnings;
};

struct BacktestReport {
    Strategy strategy;
    std::size_t p = 0;
    double beta = 0.0;
    std::size_t in_len = 0;
    std::size_t out_len = 0;
    std::vector<WindowResult> windows;
    std::vector<double> oos_returns;
    double av = 0.0;
    std::optional<double> sharpe; // undefined for constant or one-point series
    double avg_time = 0.0;
    double avg_gap = 0.0;
    double avg_nodes = 0.0;
    std::size_t n_problems = 0;
};

struct SolvedModel {
    BuiltModel built;
    MilpSolution solution;
};

/// gamma = 1 in two steps: the p-median representatives from `bounds` are
/// pinned in the unified model at fp0 = F_p lower, leaving an LP. Its
/// solution then seeds the full model, which decides between tied p-median
/// optima. Falls back to the unseeded full model when the pinned problem has
/// no solution.
SolvedModel solve_two_step(const ScenarioSet& s, const DistanceMatrix& d, const ModelConfig& cfg,
                           const BoundsComputation& bounds, const BnbOptions& opts);

/// Throws TooFewObservations when total_obs < in_len + 1 and InvalidConfig
/// when in_len < 2 or out_len < 1.
std::vector<Window> make_windows(std::size_t total_obs, std::size_t in_len, std::size_t out_len);

BacktestReport run_backtest(const PricePanel& panel, const BacktestConfig& cfg);

/// One report per gamma, in the order given. Within a window the solves run
/// from the largest gamma down, each seeded with the previous solution;
/// gamma = 1 goes through solve_two_step.
std::vector<BacktestReport> gamma_sweep(const PricePanel& panel, const BacktestConfig& cfg,
                                        std::span<const double> gammas);

/// (mean - rf) / sample standard deviation. Throws TooShort below two points
/// and ZeroVariance for a constant series.
double sharpe_ratio(std::span<const double> oos, double rf = 0.0);

/// Throws Empty on an empty series.
double average_return(std::span<const double> oos);

} // namespace locport
