#pragma once

#include "locport/backtest.hpp"
#include "locport/branch_bound.hpp"
#include "locport/market_data.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace locport::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitSolver = 4;

/// Everything a run needs, read from one JSON document and then overridden
/// by command-line flags.
struct RunConfig {
    std::optional<std::string> prices;
    std::optional<SyntheticMarketSpec> synthetic; // used when no price file is given
    std::string out = ".";
    std::uint64_t seed = 1;

    std::vector<std::size_t> ps{5};
    double beta = 0.05;
    std::optional<double> mu0; // nullopt: equal-weighted mean of the window
    std::vector<double> gammas{1.0};
    std::vector<double> lower; // empty: 1/n; one value: every asset
    std::vector<double> upper; // empty: 1

    std::size_t in_len = 104;
    std::size_t out_len = 52;
    std::vector<StrategyKind> strategies; // empty: the command's default
    InfeasiblePolicy on_infeasible = InfeasiblePolicy::Abort;
    std::size_t threads = 1;

    double time_limit = 7200.0;
    double rel_gap_tol = 1e-6;
    double int_tol = 1e-6;
    std::optional<std::size_t> node_limit;
    Branching branching = Branching::MostFractional;
    bool timings = false;
};

/// Throws Error(InvalidConfig) on malformed JSON, wrong types, out-of-range
/// values and unknown keys.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Checks the cross-field invariants that flags can also break.
void check_run_config(const RunConfig& cfg);

/// Lowest layer of the command-line front end; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace locport::cli
