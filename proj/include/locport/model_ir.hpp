#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace locport {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Maximize, Minimize };
enum class VarType { Continuous, Binary };

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    VarType type = VarType::Continuous;
};

struct Term {
    std::size_t var;
    double coef;
    bool operator==(const Term&) const = default;
};

/// Two-sided row: lower <= sum coef * x <= upper. Equalities use lower == upper.
struct Row {
    std::string name;
    std::vector<Term> terms;
    double lower = -kInf;
    double upper = kInf;
};

/// Solver-agnostic linear program with integrality marks.
struct MilpModel {
    Sense sense = Sense::Maximize;
    std::vector<Variable> vars;
    std::vector<double> objective; // one coefficient per variable
    std::vector<Row> rows;
    /// Row known to be "sum of all binaries = p"; lets the enumeration oracle
    /// restrict itself to C(n, p) patterns.
    std::optional<std::size_t> cardinality_row;

    std::size_t num_vars() const { return vars.size(); }
    std::size_t num_rows() const { return rows.size(); }

    std::size_t add_var(std::string name, double lower, double upper, VarType type = VarType::Continuous,
                        double obj = 0.0);
    std::size_t add_row(std::string name, std::vector<Term> terms, double lower, double upper);

    std::vector<std::size_t> binaries() const;
    std::optional<std::size_t> find_var(const std::string& name) const;
    double objective_value(const std::vector<double>& values) const;
};

struct Violation {
    std::string what;
};

/// Every invariant violation, each naming the offending row or variable.
std::vector<Violation> validate(const MilpModel& model);

/// Largest bound or row violation of `values` (0 when feasible), ignoring
/// integrality.
double max_infeasibility(const MilpModel& model, const std::vector<double>& values);

/// Pins the given binaries to 0/1 and marks them continuous.
MilpModel fix_binaries(const MilpModel& model, const std::map<std::size_t, int>& assignment);

/// Line-oriented text format:
///   milp 1
///   sense maximize|minimize
///   var <name> <lower> <upper> C|B <objective>
///   row <name> <lower> <upper> <count> <var>:<coef> ...
///   cardinality <row>|none
///   end
std::string serialize(const MilpModel& model);
MilpModel parse_model(const std::string& text);

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

std::string_view to_string(LpStatus status);

struct LpSolution {
    LpStatus status = LpStatus::NumericalFailure;
    double objective = 0.0;
    std::vector<double> values;
    std::vector<double> dual_values;   // per row, d objective / d rhs in the model's own sense
    std::vector<double> reduced_costs; // per variable, same convention
    std::size_t iterations = 0;
};

enum class MilpStatus { Optimal, FeasibleTimeLimit, Infeasible, NoSolution, Unbounded };

std::string_view to_string(MilpStatus status);

struct MilpSolution {
    MilpStatus status = MilpStatus::Infeasible;
    double objective = 0.0;
    double best_bound = 0.0;
    double gap = 0.0;
    std::vector<double> values;
    std::size_t node_count = 0;
    double wall_time = 0.0;
    std::vector<std::string> warnings;

    bool has_solution() const { return status == MilpStatus::Optimal || status == MilpStatus::FeasibleTimeLimit; }
};

/// |bound - objective| / max(1e-10, |objective|).
double relative_gap(double objective, double bound);

using LpSolveFn = std::function<LpSolution(const MilpModel&)>;

inline constexpr std::size_t kMaxOracleBinaries = 25;

/// Enumerates every 0/1 pattern of the binaries (only the C(n, p) patterns
/// when a cardinality row is tagged), solving the continuous LP for each.
MilpSolution brute_force_milp(const MilpModel& model, const LpSolveFn& lp);

} // namespace locport
