#include "locport/branch_bound.hpp"

#include "locport/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <queue>

namespace locport {

std::optional<std::size_t> branch_variable(std::span<const double> lp_values, std::span<const std::size_t> binaries,
                                           double int_tol) {
    std::optional<std::size_t> best;
    double best_dist = kInf;
    for (std::size_t j : binaries) {
        const double v = lp_values[j];
        const double frac = v - std::floor(v);
        if (frac <= int_tol || frac >= 1.0 - int_tol) continue;
        const double dist = std::abs(frac - 0.5);
        if (dist < best_dist - 1e-12 || (dist <= best_dist + 1e-12 && best && j < *best)) {
            best_dist = std::min(best_dist, dist);
            best = j;
        }
    }
    return best;
}

namespace {

using Clock = std::chrono::steady_clock;

struct OpenNode {
    Node node;
    Basis basis;
    std::size_t id = 0;
    double bound = kInf; // in maximization score units
    // Branching record for pseudo-costs.
    std::size_t branched_var = static_cast<std::size_t>(-1);
    int branched_dir = 0;
    double branched_frac = 0.0;
    double parent_score = 0.0;
};

struct NodeOrder {
    bool operator()(const std::shared_ptr<OpenNode>& a, const std::shared_ptr<OpenNode>& b) const {
        if (a->bound != b->bound) return a->bound < b->bound; // larger bound first
        return a->id > b->id;                                // then older first
    }
};

class PseudoCosts {
public:
    explicit PseudoCosts(std::size_t num_vars) : sum_(num_vars, {0.0, 0.0}), count_(num_vars, {0, 0}) {}

    void record(std::size_t var, int dir, double frac, double degradation) {
        const double unit = dir > 0 ? 1.0 - frac : frac;
        if (unit <= 1e-9) return;
        const int k = dir > 0 ? 1 : 0;
        sum_[var][k] += std::max(0.0, degradation) / unit;
        ++count_[var][k];
    }

    std::optional<std::size_t> choose(std::span<const double> values, std::span<const std::size_t> binaries,
                                      double int_tol) const {
        double avg[2] = {0.0, 0.0};
        std::size_t seen[2] = {0, 0};
        for (std::size_t j : binaries) {
            for (int k = 0; k < 2; ++k) {
                if (count_[j][k] > 0) {
                    avg[k] += sum_[j][k] / static_cast<double>(count_[j][k]);
                    ++seen[k];
                }
            }
        }
        if (seen[0] == 0 || seen[1] == 0) return branch_variable(values, binaries, int_tol);
        avg[0] /= static_cast<double>(seen[0]);
        avg[1] /= static_cast<double>(seen[1]);

        std::optional<std::size_t> best;
        double best_score = -1.0;
        for (std::size_t j : binaries) {
            const double frac = values[j] - std::floor(values[j]);
            if (frac <= int_tol || frac >= 1.0 - int_tol) continue;
            const double down = (count_[j][0] ? sum_[j][0] / static_cast<double>(count_[j][0]) : avg[0]) * frac;
            const double up = (count_[j][1] ? sum_[j][1] / static_cast<double>(count_[j][1]) : avg[1]) * (1.0 - frac);
            const double score = std::max(down, 1e-6) * std::max(up, 1e-6);
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        return best;
    }

private:
    std::vector<std::array<double, 2>> sum_;
    std::vector<std::array<std::size_t, 2>> count_;
};

} // namespace

MilpSolution solve_milp(const MilpModel& model, const BnbOptions& opts) {
    const auto start = Clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

    if (const auto violations = validate(model); !violations.empty()) {
        throw Error(ErrorCode::InvalidConfig, "model fails validation: " + violations.front().what);
    }
    if (!(opts.time_limit > 0.0)) throw Error(ErrorCode::InvalidConfig, "time_limit must be positive");
    if (!(opts.rel_gap_tol > 0.0 && opts.rel_gap_tol < 1e-2) || !(opts.int_tol > 0.0 && opts.int_tol < 1e-2)) {
        throw Error(ErrorCode::InvalidConfig, "tolerances must lie in (0, 1e-2)");
    }

    const auto binaries = model.binaries();
    const double sign = model.sense == Sense::Maximize ? 1.0 : -1.0;

    MilpSolution result;
    bool have_incumbent = false;
    double incumbent = -kInf; // score units (maximization)

    auto round_binaries = [&](std::vector<double>& values) {
        for (std::size_t j : binaries) {
            if (std::abs(values[j] - std::round(values[j])) <= opts.int_tol) values[j] = std::round(values[j]);
        }
    };

    auto accept = [&](std::vector<double> values) {
        round_binaries(values);
        const double obj = model.objective_value(values);
        if (!have_incumbent || sign * obj > incumbent) {
            have_incumbent = true;
            incumbent = sign * obj;
            result.objective = obj;
            result.values = std::move(values);
        }
    };

    if (opts.warm_start) {
        auto values = *opts.warm_start;
        bool ok = values.size() == model.num_vars();
        if (ok) {
            for (std::size_t j : binaries) {
                if (std::abs(values[j] - std::round(values[j])) > opts.int_tol) ok = false;
            }
        }
        if (ok) {
            round_binaries(values);
            ok = max_infeasibility(model, values) <= 1e-7;
        }
        if (ok) {
            accept(std::move(values));
        } else {
            result.warnings.push_back("InfeasibleWarmStart: warm start discarded");
        }
    }

    // Node LPs share one working copy whose binary bounds are reset per node.
    MilpModel work = model;
    std::vector<std::pair<double, double>> original_bounds;
    for (std::size_t j : binaries) original_bounds.emplace_back(model.vars[j].lower, model.vars[j].upper);

    auto prune_tol = [&] { return opts.rel_gap_tol * std::max(1e-10, std::abs(incumbent)) * 0.5 + 1e-12; };

    std::priority_queue<std::shared_ptr<OpenNode>, std::vector<std::shared_ptr<OpenNode>>, NodeOrder> open;
    std::shared_ptr<OpenNode> dive;
    std::size_t next_id = 0;
    {
        auto root = std::make_shared<OpenNode>();
        root->id = next_id++;
        root->node.parent_objective = sign * kInf;
        dive = root;
    }

    PseudoCosts pseudo(model.num_vars());
    double last_report = -kInf;
    bool limit_hit = false;
    bool unbounded = false;

    auto open_bound = [&] {
        double b = -kInf;
        if (dive) b = std::max(b, dive->bound);
        if (!open.empty()) b = std::max(b, open.top()->bound);
        return b;
    };

    auto report = [&](bool force) {
        if (!opts.progress) return;
        const double now = elapsed();
        if (!force && now - last_report < 1.0) return;
        last_report = now;
        BnbProgress p;
        p.elapsed = now;
        p.nodes = result.node_count;
        p.has_incumbent = have_incumbent;
        const double bound = std::max(open_bound(), have_incumbent ? incumbent : -kInf);
        p.bound = sign * bound;
        if (have_incumbent) {
            p.incumbent = result.objective;
            p.gap = relative_gap(result.objective, p.bound);
        } else {
            p.incumbent = sign * -kInf;
            p.gap = kInf;
        }
        opts.progress(p);
    };
    report(true);

    while (dive || !open.empty()) {
        // The root is always solved so that a timed-out run still reports a finite bound.
        const bool out_of_time = result.node_count > 0 && elapsed() >= opts.time_limit;
        if (out_of_time || (opts.node_limit && result.node_count >= *opts.node_limit)) {
            limit_hit = true;
            break;
        }

        std::shared_ptr<OpenNode> current;
        if (dive) {
            current = std::move(dive);
            dive.reset();
        } else {
            current = open.top();
            open.pop();
        }
        if (have_incumbent) {
            if (current->bound <= incumbent + prune_tol()) continue;
            const double global = std::max(current->bound, open_bound());
            if (relative_gap(sign * incumbent, sign * global) <= opts.rel_gap_tol * 0.5) {
                open = {};
                break;
            }
        }

        for (std::size_t k = 0; k < binaries.size(); ++k) {
            work.vars[binaries[k]].lower = original_bounds[k].first;
            work.vars[binaries[k]].upper = original_bounds[k].second;
        }
        for (const auto& [var, value] : current->node.bound_changes) {
            work.vars[var].lower = work.vars[var].upper = static_cast<double>(value);
        }

        LpResult lp = solve_lp(work, opts.lp, current->basis.empty() ? nullptr : &current->basis);
        if (lp.solution.status == LpStatus::IterationLimit || lp.solution.status == LpStatus::NumericalFailure) {
            lp = solve_lp(work, opts.lp);
        }
        ++result.node_count;
        const auto status = lp.solution.status;
        if (status == LpStatus::IterationLimit || status == LpStatus::NumericalFailure) {
            throw Error(ErrorCode::SolverFailure, "node LP failed: " + std::string(to_string(status)));
        }

        NodeEvent event;
        event.depth = current->node.depth;
        event.parent_bound = current->node.parent_objective;
        event.feasible = status == LpStatus::Optimal;
        event.lp_objective = lp.solution.objective;
        if (opts.node_observer) opts.node_observer(event);

        report(false);
        if (status == LpStatus::Infeasible) continue;
        if (status == LpStatus::Unbounded) {
            if (current->node.depth == 0) {
                unbounded = true;
                break;
            }
            continue;
        }

        const double score = sign * lp.solution.objective;
        if (current->branched_dir != 0) {
            pseudo.record(current->branched_var, current->branched_dir, current->branched_frac,
                          current->parent_score - score);
        }
        const double bound = std::min(score, sign * current->node.parent_objective);
        if (have_incumbent && bound <= incumbent + prune_tol()) continue;

        const auto& values = lp.solution.values;
        const auto var = opts.branching == Branching::PseudoCost ? pseudo.choose(values, binaries, opts.int_tol)
                                                                 : branch_variable(values, binaries, opts.int_tol);
        if (!var) {
            accept(values);
            continue;
        }

        const double frac = values[*var] - std::floor(values[*var]);
        const int first = frac >= 0.5 ? 1 : 0;
        std::shared_ptr<OpenNode> children[2];
        for (int k = 0; k < 2; ++k) {
            const int value = k == 0 ? first : 1 - first;
            auto child = std::make_shared<OpenNode>();
            child->id = next_id++;
            child->node.bound_changes = current->node.bound_changes;
            child->node.bound_changes.emplace_back(*var, value);
            child->node.parent_objective = sign * bound;
            child->node.depth = current->node.depth + 1;
            child->basis = lp.basis;
            child->bound = bound;
            child->branched_var = *var;
            child->branched_dir = value == 1 ? 1 : -1;
            child->branched_frac = frac;
            child->parent_score = score;
            children[k] = std::move(child);
        }
        if (!have_incumbent) {
            dive = std::move(children[0]);
            open.push(std::move(children[1]));
        } else {
            open.push(std::move(children[0]));
            open.push(std::move(children[1]));
        }
    }

    result.wall_time = elapsed();
    if (unbounded) {
        result.status = MilpStatus::Unbounded;
    } else if (!limit_hit) {
        if (have_incumbent) {
            result.status = MilpStatus::Optimal;
            result.best_bound = result.objective;
            result.gap = 0.0;
        } else {
            result.status = MilpStatus::Infeasible;
        }
    } else if (have_incumbent) {
        result.status = MilpStatus::FeasibleTimeLimit;
        result.best_bound = sign * std::max(open_bound(), incumbent);
        result.gap = relative_gap(result.objective, result.best_bound);
    } else {
        result.status = MilpStatus::NoSolution;
        result.best_bound = sign * open_bound();
        result.gap = kInf;
    }
    report(true);
    return result;
}

} // namespace locport
