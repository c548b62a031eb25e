#pragma once

#include "locport/model_ir.hpp"
#include "locport/simplex.hpp"

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace locport {

enum class Branching { MostFractional, PseudoCost };

struct BnbProgress {
    double elapsed = 0.0;
    bool has_incumbent = false;
    double incumbent = 0.0;
    double bound = 0.0;
    double gap = 0.0;
    std::size_t nodes = 0;
};

/// Reported for every solved node; `parent_bound` is +/-inf at the root.
struct NodeEvent {
    std::size_t depth = 0;
    double parent_bound = 0.0;
    double lp_objective = 0.0;
    bool feasible = false;
};

struct BnbOptions {
    double time_limit = 7200.0; // seconds
    double rel_gap_tol = 1e-6;
    double int_tol = 1e-6;
    std::optional<std::size_t> node_limit;
    Branching branching = Branching::MostFractional;
    std::optional<std::vector<double>> warm_start; // full variable assignment
    SimplexOptions lp;
    std::function<void(const BnbProgress&)> progress;
    std::function<void(const NodeEvent&)> node_observer;
};

/// Branch-and-bound node: the binaries pinned on the path from the root.
struct Node {
    std::vector<std::pair<std::size_t, int>> bound_changes;
    double parent_objective = 0.0;
    std::size_t depth = 0;
};

/// Throws Error(InvalidConfig) when the model or options fail validation.
MilpSolution solve_milp(const MilpModel& model, const BnbOptions& opts = {});

/// Binary whose LP value has fractional part closest to 0.5 (ties to the
/// lowest position); nullopt when every binary is within int_tol of 0 or 1.
std::optional<std::size_t> branch_variable(std::span<const double> lp_values, std::span<const std::size_t> binaries,
                                           double int_tol);

} // namespace locport
