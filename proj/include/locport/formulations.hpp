#pragma once

/*
 * Model builders for the location/portfolio problems.
 *
 * Shared notation (n assets, T scenarios):
 *   x_j      portfolio weight                      continuous in [0, 1]
 *   z_jj     asset j is a representative           binary
 *   z_ij     asset i represented by j (i != j)      continuous >= 0
 *   eta      CVaR dual threshold                    free
 *   d_t      shortfall below eta in scenario t      continuous >= 0
 *
 * Unified model:
 *   max  eta - (1/beta) sum_t p_t d_t
 *   s.t. sum_j x_j = 1
 *        d_t - eta + sum_j r_jt x_j >= 0          every t
 *        sum_j mu_j x_j >= mu0
 *        sum_{i!=j} d_ij z_ij <= fp0
 *        sum_j z_jj = p
 *        z_ii + sum_{j!=i} z_ij = 1               every i
 *        z_ij - z_jj <= 0                         every i != j
 *        l_j z_jj <= x_j <= u_j z_jj              every j
 *
 * Assignment variables z_ij stay continuous: once the representatives are
 * fixed, some optimal assignment sends each asset to its nearest one.
 */

#include "locport/branch_bound.hpp"
#include "locport/market_data.hpp"
#include "locport/model_ir.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace locport {

struct ModelConfig {
    std::size_t p = 1;
    double beta = 0.05;
    double mu0 = -kInf;
    double gamma = 1.0;
    std::vector<double> lower; // l_j
    std::vector<double> upper; // u_j
};

/// l_j = 1/n, u_j = 1, mu0 = equal-weighted mean of the asset means.
ModelConfig default_model_config(const ScenarioSet& scenarios, std::size_t p, double beta = 0.05,
                                 double gamma = 1.0);

double equal_weight_mu0(const ScenarioSet& scenarios);

/// Throws Error(InvalidConfig) on hard violations; returns soft warnings
/// (e.g. the p largest upper bounds cannot reach a total weight of 1).
std::vector<std::string> validate_config(const ModelConfig& cfg, std::size_t num_assets);

enum class ModelKind { Unified, PMedian, CvarCardinality, PureCvar };

std::string_view to_string(ModelKind kind);

/// Where each block of variables lives in a built model.
struct VariableLayout {
    ModelKind kind = ModelKind::Unified;
    std::size_t n = 0;
    std::size_t T = 0;
    std::size_t x = 0;
    std::optional<std::size_t> z;          // n representative binaries
    std::optional<std::size_t> assignment; // n(n-1) assignment variables
    std::optional<std::size_t> eta;
    std::optional<std::size_t> shortfall;  // T
    std::optional<std::size_t> fp_row;

    std::size_t assignment_var(std::size_t i, std::size_t j) const {
        return *assignment + i * (n - 1) + (j < i ? j : j - 1);
    }
};

struct BuiltModel {
    MilpModel model;
    VariableLayout layout;
};

/// fp0 = +inf omits the clustering row.
BuiltModel build_unified(const ScenarioSet& s, const DistanceMatrix& d, const ModelConfig& cfg, double fp0);
BuiltModel build_pmedian(const ScenarioSet& s, const DistanceMatrix& d, const ModelConfig& cfg);
BuiltModel build_cvar_cc(const ScenarioSet& s, const ModelConfig& cfg);
BuiltModel build_pure_cvar(const ScenarioSet& s, const ModelConfig& cfg);

struct FpBounds {
    double fp_lower = 0.0;
    double fp_upper = 0.0;
    double fp0 = 0.0;
};

double interpolate_fp0(double fp_lower, double fp_upper, double gamma);

using MilpSolver = std::function<MilpSolution(const MilpModel&)>;

/// The bounds plus the two subproblem solutions they were read from.
struct BoundsComputation {
    FpBounds bounds;
    BuiltModel pmedian;
    MilpSolution pmedian_solution;
    BuiltModel cvar_cc;
    MilpSolution cvar_cc_solution;
};

BoundsComputation compute_bounds_detailed(const ScenarioSet& s, const DistanceMatrix& d, const ModelConfig& cfg,
                                          const MilpSolver& solver);
FpBounds compute_bounds(const ScenarioSet& s, const DistanceMatrix& d, const ModelConfig& cfg,
                        const MilpSolver& solver);

/// Sum over all vertices of the distance to the closest member of `reps`.
double evaluate_fp(std::span<const std::size_t> reps, const DistanceMatrix& d);

/// Nearest member of `reps` for every asset; ties go to the lowest index and
/// members map to themselves.
std::vector<std::size_t> nearest_assignment(std::span<const std::size_t> reps, const DistanceMatrix& d);

struct Portfolio {
    std::vector<double> weights;
    std::vector<std::size_t> representatives; // ascending
    std::vector<std::size_t> assignment;      // asset -> representative
    double fp_value = 0.0;
    double cvar_value = 0.0;
    double mean_return = 0.0;
    double eta = 0.0;
    std::vector<double> shortfalls;
};

/// Reads weights and representatives off a solved model and recomputes the
/// derived quantities from the data. Representatives of a pure-CVaR model
/// are the assets with positive weight.
Portfolio extract_portfolio(const MilpSolution& sol, const BuiltModel& built, const ScenarioSet& s,
                            const DistanceMatrix& d, const ModelConfig& cfg);

/// Optimal (eta, d_t) of the CVaR dual for fixed portfolio returns y.
std::pair<double, std::vector<double>> cvar_dual_point(std::span<const double> y, std::span<const double> probs,
                                                       double beta);

/// Full variable assignment of `built` realizing the given portfolio, with
/// z_ij set to the nearest-representative assignment.
std::vector<double> assignment_from_portfolio(const BuiltModel& built, const Portfolio& portfolio);

} // namespace locport
