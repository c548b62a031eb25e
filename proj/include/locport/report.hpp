#pragma once

#include "locport/backtest.hpp"
#include "locport/formulations.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace locport {

/// Everything one solve reports, for the portfolio JSON.
struct SolveRecord {
    std::string model; // "unified", "cvar_cc", ...
    MilpSolution solution;
    std::optional<FpBounds> bounds;
    Portfolio portfolio;
    ModelConfig cfg;
};

/// Wall-clock fields are left out unless `timings` is set, so that reports
/// from identical runs compare equal byte for byte.
std::string portfolio_json(const SolveRecord& rec, const std::vector<std::string>& asset_ids, bool timings);

std::string backtest_json(std::span<const BacktestReport> reports, const std::vector<std::string>& asset_ids,
                          bool timings);

/// One row per report: Av scaled by 1e3, full precision, "NA" for an
/// undefined Sharpe ratio, solver columns empty for the index.
std::string backtest_csv(std::span<const BacktestReport> reports, bool timings);

struct CompareRow {
    const BacktestReport* report = nullptr;
    std::optional<bool> italic;      // unified rows only, when a benchmark is present
    std::optional<bool> best_av;     // empty when a single strategy is compared
    std::optional<bool> best_sharpe;
};

/// Italic: a unified row whose Av and Sh both beat every benchmark row with
/// the same p. Best: the largest value per (measure, p); ties go to
/// unified, cvar_cc, pure_cvar, index in that order, then the lowest gamma.
/// Every flag is empty when fewer than two strategy kinds are present.
std::vector<CompareRow> compare_rows(std::span<const BacktestReport> reports);

std::string compare_csv(std::span<const CompareRow> rows, bool timings);

} // namespace locport
