#pragma once

#include "locport/model_ir.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace locport {

struct SimplexOptions {
    double feas_tol = 1e-9;
    double opt_tol = 1e-9;
    std::size_t max_iters = 0;         ///< 0 means 50 * (rows + cols)
    std::size_t bland_threshold = 50;  ///< consecutive degenerate pivots before Bland's rule
    std::size_t refactor_interval = 100;
    int verbosity = 0;                 ///< > 0 writes one trace line per iteration to `trace`
    std::ostream* trace = nullptr;
};

enum class NonbasicState : std::uint8_t { AtLower, AtUpper, AtZero };

/// Columns are the model variables followed by one logical per row (the row
/// activity). `nonbasic_state` has an entry for every column; entries of
/// basic columns are ignored.
struct Basis {
    std::vector<std::size_t> basic;
    std::vector<NonbasicState> nonbasic_state;

    bool empty() const { return basic.empty() && nonbasic_state.empty(); }
};

struct LpResult {
    LpSolution solution;
    Basis basis;
};

/// Two-phase bounded-variable primal simplex. Integrality marks are ignored.
/// A warm basis of the right shape is used when it factorizes; otherwise the
/// solve starts from the all-logical basis.
LpResult solve_lp(const MilpModel& model, const SimplexOptions& opts = {}, const Basis* warm = nullptr);

/// Convenience wrapper returning only the solution.
LpSolution solve_lp_relaxation(const MilpModel& model);

/// CVaR of the scenario returns `y` at tolerance `beta`: the mean of the
/// worst beta-mass of outcomes, computed by a greedy fill of the primal
/// weights u_t <= p_t in increasing order of y.
double cvar_primal_oracle(std::span<const double> y, std::span<const double> probs, double beta);

} // namespace locport
