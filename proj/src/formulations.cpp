#include "locport/formulations.hpp"

#include "locport/errors.hpp"
#include "locport/numfmt.hpp"
#include "locport/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace locport {

namespace {

std::string indexed(const char* base, std::size_t i) { return std::string(base) + "[" + std::to_string(i) + "]"; }

std::string indexed(const char* base, std::size_t i, std::size_t j) {
    return std::string(base) + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
}

void require_config(const ModelConfig& cfg, std::size_t n) { (void)validate_config(cfg, n); }

// Sum-to-one row shared by every model.
void add_simplex_row(MilpModel& m, const VariableLayout& lay) {
    std::vector<Term> terms;
    for (std::size_t j = 0; j < lay.n; ++j) terms.push_back({lay.x + j, 1.0});
    m.add_row("budget", std::move(terms), 1.0, 1.0);
}

void add_portfolio_vars(MilpModel& m, VariableLayout& lay) {
    lay.x = m.num_vars();
    for (std::size_t j = 0; j < lay.n; ++j) m.add_var(indexed("x", j), 0.0, 1.0);
}

void add_representative_vars(MilpModel& m, VariableLayout& lay) {
    lay.z = m.num_vars();
    for (std::size_t j = 0; j < lay.n; ++j) m.add_var(indexed("z", j, j), 0.0, 1.0, VarType::Binary);
}

void add_assignment_vars(MilpModel& m, VariableLayout& lay, const DistanceMatrix& d, bool distance_objective) {
    lay.assignment = m.num_vars();
    for (std::size_t i = 0; i < lay.n; ++i) {
        for (std::size_t j = 0; j < lay.n; ++j) {
            if (i == j) continue;
            m.add_var(indexed("z", i, j), 0.0, kInf, VarType::Continuous, distance_objective ? d.d(i, j) : 0.0);
        }
    }
}

void add_cvar_vars(MilpModel& m, VariableLayout& lay, const ScenarioSet& s, double beta) {
    lay.eta = m.add_var("eta", -kInf, kInf, VarType::Continuous, 1.0);
    lay.shortfall = m.num_vars();
    for (std::size_t t = 0; t < lay.T; ++t) {
        m.add_var(indexed("d", t), 0.0, kInf, VarType::Continuous, -s.probs[t] / beta);
    }
}

// d_t >= eta - y_t(x)  <=>  d_t - eta + sum_j r_jt x_j >= 0
void add_shortfall_rows(MilpModel& m, const VariableLayout& lay, const ScenarioSet& s) {
    for (std::size_t t = 0; t < lay.T; ++t) {
        std::vector<Term> terms{{*lay.shortfall + t, 1.0}, {*lay.eta, -1.0}};
        for (std::size_t j = 0; j < lay.n; ++j) {
            const double r = s.returns(t, j);
            if (r != 0.0) terms.push_back({lay.x + j, r});
        }
        m.add_row(indexed("shortfall", t), std::move(terms), 0.0, kInf);
    }
}

void add_return_row(MilpModel& m, const VariableLayout& lay, const ScenarioSet& s, double mu0) {
    std::vector<Term> terms;
    for (std::size_t j = 0; j < lay.n; ++j)
        if (s.mu[j] != 0.0) terms.push_back({lay.x + j, s.mu[j]});
    if (terms.empty()) {
        if (mu0 > 0.0) throw Error(ErrorCode::InfeasibleAtMu0, "every asset has zero mean return");
        return;
    }
    m.add_row("min_return", std::move(terms), mu0, kInf);
}

void add_cardinality_row(MilpModel& m, const VariableLayout& lay, std::size_t p) {
    std::vector<Term> terms;
    for (std::size_t j = 0; j < lay.n; ++j) terms.push_back({*lay.z + j, 1.0});
    m.cardinality_row = m.add_row("cardinality", std::move(terms), static_cast<double>(p), static_cast<double>(p));
}

void add_assignment_rows(MilpModel& m, const VariableLayout& lay) {
    for (std::size_t i = 0; i < lay.n; ++i) {
        std::vector<Term> terms{{*lay.z + i, 1.0}};
        for (std::size_t j = 0; j < lay.n; ++j)
            if (j != i) terms.push_back({lay.assignment_var(i, j), 1.0});
        m.add_row(indexed("assign", i), std::move(terms), 1.0, 1.0);
    }
    for (std::size_t i = 0; i < lay.n; ++i) {
        for (std::size_t j = 0; j < lay.n; ++j) {
            if (i == j) continue;
            m.add_row(indexed("open", i, j), {{lay.assignment_var(i, j), 1.0}, {*lay.z + j, -1.0}}, -kInf, 0.0);
        }
    }
}

// l_j z_j <= x_j <= u_j z_j as two rows.
void add_linking_rows(MilpModel& m, const VariableLayout& lay, const ModelConfig& cfg) {
    for (std::size_t j = 0; j < lay.n; ++j) {
        std::vector<Term> lo{{lay.x + j, 1.0}};
        if (cfg.lower[j] != 0.0) lo.push_back({*lay.z + j, -cfg.lower[j]});
        m.add_row(indexed("min_weight", j), std::move(lo), 0.0, kInf);
        std::vector<Term> hi{{lay.x + j, 1.0}};
        if (cfg.upper[j] != 0.0) hi.push_back({*lay.z + j, -cfg.upper[j]});
        m.add_row(indexed("max_weight", j), std::move(hi), -kInf, 0.0);
    }
}

void check_dimensions(const ScenarioSet& s, const DistanceMatrix& d) {
    if (d.size() != s.num_assets() || d.d.cols() != s.num_assets()) {
        throw Error(ErrorCode::DimensionMismatch, "distance matrix is " + std::to_string(d.size()) + "x" +
                                                      std::to_string(d.d.cols()) + " for " +
                                                      std::to_string(s.num_assets()) + " assets");
    }
}

std::vector<std::size_t> read_representatives(const MilpSolution& sol, const VariableLayout& lay) {
    std::vector<std::size_t> reps;
    for (std::size_t j = 0; j < lay.n; ++j) {
        const double v = sol.values[*lay.z + j];
        if (std::abs(v - std::round(v)) > 1e-6) {
            throw Error(ErrorCode::FractionalSolution, "z[" + std::to_string(j) + "," + std::to_string(j) +
                                                           "] = " + format_double(v));
        }
        if (v > 0.5) reps.push_back(j);
    }
    return reps;
}

} // namespace

double equal_weight_mu0(const ScenarioSet& scenarios) {
    if (scenarios.mu.empty()) return 0.0;
    return std::accumulate(scenarios.mu.begin(), scenarios.mu.end(), 0.0) / static_cast<double>(scenarios.mu.size());
}

ModelConfig default_model_config(const ScenarioSet& scenarios, std::size_t p, double beta, double gamma) {
    const std::size_t n = scenarios.num_assets();
    ModelConfig cfg;
    cfg.p = p;
    cfg.beta = beta;
    cfg.gamma = gamma;
    cfg.mu0 = equal_weight_mu0(scenarios);
    cfg.lower.assign(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
    cfg.upper.assign(n, 1.0);
    return cfg;
}

std::vector<std::string> validate_config(const ModelConfig& cfg, std::size_t n) {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (cfg.p < 1 || cfg.p > n) fail("p must satisfy 1 <= p <= n (p=" + std::to_string(cfg.p) + ", n=" + std::to_string(n) + ")");
    if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) fail("beta must lie in (0, 1]");
    if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) fail("gamma must lie in [0, 1]");
    if (std::isnan(cfg.mu0)) fail("mu0 is NaN");
    if (cfg.lower.size() != n || cfg.upper.size() != n) fail("lower/upper bounds need one entry per asset");
    for (std::size_t j = 0; j < n; ++j) {
        if (!(cfg.lower[j] >= 0.0 && cfg.lower[j] <= cfg.upper[j] && cfg.upper[j] <= 1.0)) {
            fail("bounds must satisfy 0 <= l <= u <= 1 for asset " + std::to_string(j));
        }
    }

    std::vector<std::string> warnings;
    auto upper = cfg.upper;
    std::sort(upper.begin(), upper.end(), std::greater<>());
    if (std::accumulate(upper.begin(), upper.begin() + static_cast<std::ptrdiff_t>(cfg.p), 0.0) < 1.0 - 1e-12) {
        warnings.push_back("the p largest upper bounds sum below 1: every portfolio is infeasible");
    }
    auto lower = cfg.lower;
    std::sort(lower.begin(), lower.end());
    if (std::accumulate(lower.begin(), lower.begin() + static_cast<std::ptrdiff_t>(cfg.p), 0.0) > 1.0 + 1e-12) {
        warnings.push_back("the p smallest lower bounds sum above 1: every portfolio is infeasible");
    }
    return warnings;
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::Unified: return "unified";
    case ModelKind::PMedian: return "pmedian";
    case ModelKind::CvarCardinality: return "cvar_cc";
    case ModelKind::PureCvar: return "pure_cvar";
    }
    return "unknown";
}

BuiltModel build_unified(const ScenarioSet& s, const DistanceMatrix& d, const ModelConfig& cfg, double fp0) {
    check_dimensions(s, d);
    require_config(cfg, s.num_assets());
    BuiltModel out;
    auto& m = out.model;
    auto& lay = out.layout;
    lay.kind = ModelKind::Unified;
    lay.n = s.num_assets();
    lay.T = s.num_scenarios();
    m.sense = Sense::Maximize;

    add_portfolio_vars(m, lay);
    add_representative_vars(m, lay);
    add_assignment_vars(m, lay, d, false);
    add_cvar_vars(m, lay, s, cfg.beta);

    add_simplex_row(m, lay);
    add_shortfall_rows(m, lay, s);
    add_return_row(m, lay, s, cfg.mu0);
    if (fp0 != kInf) {
        std::vector<Term> terms;
        for (std::size_t i = 0; i < lay.n; ++i)
            for (std::size_t j = 0; j < lay.n; ++j)
                if (i != j && d.d(i, j) != 0.0) terms.push_back({lay.assignment_var(i, j), d.d(i, j)});
        if (!terms.empty()) {
            lay.fp_row = m.add_row("clustering", std::move(terms), -kInf, fp0);
        } else if (fp0 < 0.0) {
            throw Error(ErrorCode::InvalidConfig, "clustering bound below zero");
        }
    }
    add_cardinality_row(m, lay, cfg.p);
    add_assignment_rows(m, lay);
    add_linking_rows(m, lay, cfg);
    return out;
}

BuiltModel build_pmedian(const ScenarioSet& s, const DistanceMatrix& d, const ModelConfig& cfg) {
    check_dimensions(s, d);
    require_config(cfg, s.num_assets());
    BuiltModel out;
    auto& m = out.model;
    auto& lay = out.layout;
    lay.kind = ModelKind::PMedian;
    lay.n = s.num_assets();
    lay.T = s.num_scenarios();
    m.sense = Sense::Minimize;

    add_portfolio_vars(m, lay);
    add_representative_vars(m, lay);
    add_assignment_vars(m, lay, d, true);

    add_simplex_row(m, lay);
    add_return_row(m, lay, s, cfg.mu0);
    add_cardinality_row(m, lay, cfg.p);
    add_assignment_rows(m, lay);
    add_linking_rows(m, lay, cfg);
    return out;
}

BuiltModel build_cvar_cc(const ScenarioSet& s, const ModelConfig& cfg) {
    require_config(cfg, s.num_assets());
    BuiltModel out;
    auto& m = out.model;
    auto& lay = out.layout;
    lay.kind = ModelKind::CvarCardinality;
    lay.n = s.num_assets();
    lay.T = s.num_scenarios();
    m.sense = Sense::Maximize;

    add_portfolio_vars(m, lay);
    lay.z = m.num_vars();
    for (std::size_t j = 0; j < lay.n; ++j) m.add_var(indexed("z", j), 0.0, 1.0, VarType::Binary);
    add_cvar_vars(m, lay, s, cfg.beta);

    add_simplex_row(m, lay);
    add_shortfall_rows(m, lay, s);
    add_return_row(m, lay, s, cfg.mu0);
    add_cardinality_row(m, lay, cfg.p);
    add_linking_rows(m, lay, cfg);
    return out;
}

BuiltModel build_pure_cvar(const ScenarioSet& s, const ModelConfig& cfg) {
    if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) throw Error(ErrorCode::InvalidConfig, "beta must lie in (0, 1]");
    BuiltModel out;
    auto& m = out.model;
    auto& lay = out.layout;
    lay.kind = ModelKind::PureCvar;
    lay.n = s.num_assets();
    lay.T = s.num_scenarios();
    m.sense = Sense::Maximize;

    add_portfolio_vars(m, lay);
    add_cvar_vars(m, lay, s, cfg.beta);
    add_simplex_row(m, lay);
    add_shortfall_rows(m, lay, s);
    add_return_row(m, lay, s, cfg.mu0);
    return out;
}

double interpolate_fp0(double fp_lower, double fp_upper, double gamma) {
    return gamma * fp_lower + (1.0 - gamma) * fp_upper;
}

BoundsComputation compute_bounds_detailed(const ScenarioSet& s, const DistanceMatrix& d, const ModelConfig& cfg,
                                          const MilpSolver& solver) {
    BoundsComputation out;
    out.pmedian = build_pmedian(s, d, cfg);
    out.pmedian_solution = solver(out.pmedian.model);
    out.cvar_cc = build_cvar_cc(s, cfg);
    out.cvar_cc_solution = solver(out.cvar_cc.model);

    const bool pm_ok = out.pmedian_solution.has_solution();
    const bool cc_ok = out.cvar_cc_solution.has_solution();
    if (!pm_ok && !cc_ok && out.pmedian_solution.status == MilpStatus::Infeasible &&
        out.cvar_cc_solution.status == MilpStatus::Infeasible) {
        throw Error(ErrorCode::InfeasibleAtMu0, "no portfolio reaches mu0 = " + format_double(cfg.mu0));
    }
    if (!pm_ok || !cc_ok) {
        throw Error(ErrorCode::SolverFailure,
                    std::string("bound subproblem unsolved (p-median: ") +
                        std::string(to_string(out.pmedian_solution.status)) +
                        ", cvar_cc: " + std::string(to_string(out.cvar_cc_solution.status)) + ")");
    }

    out.bounds.fp_lower = out.pmedian_solution.objective;
    const auto reps = read_representatives(out.cvar_cc_solution, out.cvar_cc.layout);
    out.bounds.fp_upper = evaluate_fp(reps, d);
    out.bounds.fp0 = interpolate_fp0(out.bounds.fp_lower, out.bounds.fp_upper, cfg.gamma);
    return out;
}

FpBounds compute_bounds(const ScenarioSet& s, const DistanceMatrix& d, const ModelConfig& cfg,
                        const MilpSolver& solver) {
    return compute_bounds_detailed(s, d, cfg, solver).bounds;
}

double evaluate_fp(std::span<const std::size_t> reps, const DistanceMatrix& d) {
    if (reps.empty()) throw Error(ErrorCode::EmptySet, "no representatives");
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double best = kInf;
        for (std::size_t j : reps) best = std::min(best, i == j ? 0.0 : d.d(i, j));
        total += best;
    }
    return total;
}

std::vector<std::size_t> nearest_assignment(std::span<const std::size_t> reps, const DistanceMatrix& d) {
    if (reps.empty()) throw Error(ErrorCode::EmptySet, "no representatives");
    std::vector<std::size_t> sorted(reps.begin(), reps.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (std::binary_search(sorted.begin(), sorted.end(), i)) {
            out[i] = i;
            continue;
        }
        std::size_t best = sorted.front();
        for (std::size_t j : sorted)
            if (d.d(i, j) < d.d(i, best)) best = j;
        out[i] = best;
    }
    return out;
}

std::pair<double, std::vector<double>> cvar_dual_point(std::span<const double> y, std::span<const double> probs,
                                                       double beta) {
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
    double remaining = beta;
    double eta = y.empty() ? 0.0 : y[order.front()];
    for (std::size_t t : order) {
        if (remaining <= 0.0) break;
        eta = y[t];
        remaining -= probs[t];
    }
    std::vector<double> shortfall(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) shortfall[t] = std::max(0.0, eta - y[t]);
    return {eta, std::move(shortfall)};
}

Portfolio extract_portfolio(const MilpSolution& sol, const BuiltModel& built, const ScenarioSet& s,
                            const DistanceMatrix& d, const ModelConfig& cfg) {
    const auto& lay = built.layout;
    if (!sol.has_solution() || sol.values.size() != built.model.num_vars()) {
        throw Error(ErrorCode::FractionalSolution, "solution carries no values for this model");
    }
    Portfolio out;
    out.weights.resize(lay.n);
    for (std::size_t j = 0; j < lay.n; ++j) out.weights[j] = std::clamp(sol.values[lay.x + j], 0.0, 1.0);

    if (lay.z) {
        out.representatives = read_representatives(sol, lay);
    } else {
        for (std::size_t j = 0; j < lay.n; ++j)
            if (out.weights[j] > 1e-9) out.representatives.push_back(j);
    }
    if (!out.representatives.empty() && d.size() == lay.n) {
        out.assignment = nearest_assignment(out.representatives, d);
        out.fp_value = evaluate_fp(out.representatives, d);
    }

    const auto y = s.portfolio_returns(out.weights);
    out.cvar_value = cvar_primal_oracle(y, s.probs, cfg.beta);
    out.mean_return = s.expected_return(out.weights);
    if (lay.eta) {
        out.eta = sol.values[*lay.eta];
        out.shortfalls.assign(sol.values.begin() + static_cast<std::ptrdiff_t>(*lay.shortfall),
                              sol.values.begin() + static_cast<std::ptrdiff_t>(*lay.shortfall + lay.T));
    } else {
        std::tie(out.eta, out.shortfalls) = cvar_dual_point(y, s.probs, cfg.beta);
    }
    return out;
}

std::vector<double> assignment_from_portfolio(const BuiltModel& built, const Portfolio& portfolio) {
    const auto& lay = built.layout;
    std::vector<double> values(built.model.num_vars(), 0.0);
    for (std::size_t j = 0; j < lay.n; ++j) values[lay.x + j] = portfolio.weights[j];
    if (lay.z) {
        for (std::size_t j : portfolio.representatives) values[*lay.z + j] = 1.0;
    }
    if (lay.assignment) {
        for (std::size_t i = 0; i < lay.n; ++i) {
            const std::size_t j = portfolio.assignment[i];
            if (j != i) values[lay.assignment_var(i, j)] = 1.0;
        }
    }
    if (lay.eta) {
        values[*lay.eta] = portfolio.eta;
        for (std::size_t t = 0; t < lay.T; ++t) values[*lay.shortfall + t] = portfolio.shortfalls[t];
    }
    return values;
}

} // namespace locport
