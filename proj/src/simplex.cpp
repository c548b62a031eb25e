#include "locport/simplex.hpp"

#include "locport/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace locport {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kSingularTol = 1e-11;
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

/// Compressed-column copy of the constraint matrix.
struct SparseColumns {
    std::vector<std::size_t> start;
    std::vector<std::size_t> row;
    std::vector<double> value;

    static SparseColumns from(const MilpModel& model) {
        const std::size_t n = model.num_vars();
        SparseColumns a;
        std::vector<std::size_t> count(n, 0);
        for (const auto& r : model.rows)
            for (const auto& t : r.terms)
                if (t.coef != 0.0) ++count[t.var];
        a.start.assign(n + 1, 0);
        for (std::size_t j = 0; j < n; ++j) a.start[j + 1] = a.start[j] + count[j];
        a.row.resize(a.start[n]);
        a.value.resize(a.start[n]);
        std::vector<std::size_t> fill(a.start.begin(), a.start.end() - 1);
        for (std::size_t i = 0; i < model.rows.size(); ++i) {
            for (const auto& t : model.rows[i].terms) {
                if (t.coef == 0.0) continue;
                a.row[fill[t.var]] = i;
                a.value[fill[t.var]] = t.coef;
                ++fill[t.var];
            }
        }
        return a;
    }
};

/// Basis factorization. Logical columns are -e_r, so only the block of
/// structural basic columns restricted to rows without a basic logical (the
/// kernel) needs a dense LU. Later basis changes are appended as eta columns.
class BasisFactor {
public:
    BasisFactor(const SparseColumns& a, std::size_t num_structural, std::size_t num_rows)
        : a_(a), n_(num_structural), m_(num_rows) {}

    /// Returns false when the kernel is numerically singular.
    bool factorize(const std::vector<std::size_t>& head) {
        etas_.clear();
        kernel_of_row_.assign(m_, kNone);
        logical_row_pos_.assign(m_, kNone);
        struct_pos_.clear();
        struct_col_.clear();
        for (std::size_t p = 0; p < m_; ++p) {
            const std::size_t col = head[p];
            if (col >= n_) {
                logical_row_pos_[col - n_] = p;
            } else {
                struct_pos_.push_back(p);
                struct_col_.push_back(col);
            }
        }
        kernel_rows_.clear();
        for (std::size_t r = 0; r < m_; ++r) {
            if (logical_row_pos_[r] == kNone) {
                kernel_of_row_[r] = kernel_rows_.size();
                kernel_rows_.push_back(r);
            }
        }
        k_ = struct_col_.size();
        if (kernel_rows_.size() != k_) return false;

        lu_.assign(k_ * k_, 0.0);
        for (std::size_t b = 0; b < k_; ++b) {
            const std::size_t col = struct_col_[b];
            for (std::size_t e = a_.start[col]; e < a_.start[col + 1]; ++e) {
                const std::size_t kr = kernel_of_row_[a_.row[e]];
                if (kr != kNone) lu_[kr * k_ + b] = a_.value[e];
            }
        }
        perm_.resize(k_);
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        for (std::size_t c = 0; c < k_; ++c) {
            std::size_t piv = c;
            double best = std::abs(lu_[c * k_ + c]);
            for (std::size_t r = c + 1; r < k_; ++r) {
                const double v = std::abs(lu_[r * k_ + c]);
                if (v > best) {
                    best = v;
                    piv = r;
                }
            }
            if (best < kSingularTol) return false;
            if (piv != c) {
                std::swap_ranges(lu_.begin() + static_cast<std::ptrdiff_t>(c * k_),
                                 lu_.begin() + static_cast<std::ptrdiff_t>((c + 1) * k_),
                                 lu_.begin() + static_cast<std::ptrdiff_t>(piv * k_));
                std::swap(perm_[c], perm_[piv]);
            }
            const double d = lu_[c * k_ + c];
            for (std::size_t r = c + 1; r < k_; ++r) {
                double& l = lu_[r * k_ + c];
                if (l == 0.0) continue;
                l /= d;
                const double* src = &lu_[c * k_ + c + 1];
                double* dst = &lu_[r * k_ + c + 1];
                for (std::size_t j = 0; j < k_ - c - 1; ++j) dst[j] -= l * src[j];
            }
        }
        return true;
    }

    std::size_t num_etas() const { return etas_.size(); }

    /// Solves B x = rhs (rhs indexed by row) and returns x indexed by basis position.
    std::vector<double> ftran(const std::vector<double>& rhs) const {
        std::vector<double> x(m_, 0.0);
        std::vector<double> ks(k_);
        for (std::size_t a = 0; a < k_; ++a) ks[a] = rhs[kernel_rows_[perm_[a]]];
        lu_solve(ks);
        std::vector<double> acc(m_, 0.0);
        for (std::size_t b = 0; b < k_; ++b) {
            x[struct_pos_[b]] = ks[b];
            if (ks[b] == 0.0) continue;
            const std::size_t col = struct_col_[b];
            for (std::size_t e = a_.start[col]; e < a_.start[col + 1]; ++e) acc[a_.row[e]] += a_.value[e] * ks[b];
        }
        for (std::size_t r = 0; r < m_; ++r) {
            if (logical_row_pos_[r] != kNone) x[logical_row_pos_[r]] = acc[r] - rhs[r];
        }
        for (const auto& eta : etas_) {
            const double xr = x[eta.pos] / eta.pivot;
            if (xr != 0.0)
                for (const auto& [i, v] : eta.entries) x[i] -= v * xr;
            x[eta.pos] = xr;
        }
        return x;
    }

    /// Solves B^T y = c (c indexed by basis position) and returns y indexed by row.
    std::vector<double> btran(std::vector<double> c) const {
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double s = c[it->pos];
            for (const auto& [i, v] : it->entries) s -= v * c[i];
            c[it->pos] = s / it->pivot;
        }
        std::vector<double> y(m_, 0.0);
        for (std::size_t r = 0; r < m_; ++r) {
            if (logical_row_pos_[r] != kNone) y[r] = -c[logical_row_pos_[r]];
        }
        std::vector<double> ks(k_);
        for (std::size_t b = 0; b < k_; ++b) {
            double s = c[struct_pos_[b]];
            const std::size_t col = struct_col_[b];
            for (std::size_t e = a_.start[col]; e < a_.start[col + 1]; ++e) {
                const std::size_t r = a_.row[e];
                if (logical_row_pos_[r] != kNone) s -= a_.value[e] * y[r];
            }
            ks[b] = s;
        }
        lu_solve_transposed(ks);
        for (std::size_t a = 0; a < k_; ++a) y[kernel_rows_[a]] = ks[a];
        return y;
    }

    void push_eta(std::size_t pos, const std::vector<double>& alpha) {
        Eta eta;
        eta.pos = pos;
        eta.pivot = alpha[pos];
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (i != pos && std::abs(alpha[i]) > 1e-14) eta.entries.emplace_back(i, alpha[i]);
        }
        etas_.push_back(std::move(eta));
    }

private:
    struct Eta {
        std::size_t pos = 0;
        double pivot = 1.0;
        std::vector<std::pair<std::size_t, double>> entries;
    };

    // Kernel LU with row permutation: P K = L U, perm_[a] = original kernel row at a.
    void lu_solve(std::vector<double>& b) const {
        for (std::size_t r = 0; r < k_; ++r) {
            double s = b[r];
            const double* row = &lu_[r * k_];
            for (std::size_t c = 0; c < r; ++c) s -= row[c] * b[c];
            b[r] = s;
        }
        for (std::size_t r = k_; r-- > 0;) {
            double s = b[r];
            const double* row = &lu_[r * k_];
            for (std::size_t c = r + 1; c < k_; ++c) s -= row[c] * b[c];
            b[r] = s / row[r];
        }
    }

    // Solves K^T y = b; result indexed by original kernel row.
    void lu_solve_transposed(std::vector<double>& b) const {
        // U^T w = b
        for (std::size_t c = 0; c < k_; ++c) {
            double s = b[c];
            for (std::size_t r = 0; r < c; ++r) s -= lu_[r * k_ + c] * b[r];
            b[c] = s / lu_[c * k_ + c];
        }
        // L^T v = w
        for (std::size_t c = k_; c-- > 0;) {
            double s = b[c];
            for (std::size_t r = c + 1; r < k_; ++r) s -= lu_[r * k_ + c] * b[r];
            b[c] = s;
        }
        std::vector<double> out(k_);
        for (std::size_t a = 0; a < k_; ++a) out[perm_[a]] = b[a];
        b = std::move(out);
    }

    const SparseColumns& a_;
    std::size_t n_;
    std::size_t m_;
    std::size_t k_ = 0;
    std::vector<std::size_t> kernel_of_row_;
    std::vector<std::size_t> kernel_rows_;
    std::vector<std::size_t> logical_row_pos_;
    std::vector<std::size_t> struct_pos_;
    std::vector<std::size_t> struct_col_;
    std::vector<double> lu_;
    std::vector<std::size_t> perm_;
    std::vector<Eta> etas_;
};

class PrimalSimplex {
public:
    PrimalSimplex(const MilpModel& model, const SimplexOptions& opts)
        : model_(model), opts_(opts), a_(SparseColumns::from(model)), n_(model.num_vars()),
          m_(model.num_rows()), factor_(a_, n_, m_) {
        const std::size_t total = n_ + m_;
        lb_.resize(total);
        ub_.resize(total);
        cost_.assign(total, 0.0);
        const double s = model.sense == Sense::Minimize ? 1.0 : -1.0;
        for (std::size_t j = 0; j < n_; ++j) {
            lb_[j] = model.vars[j].lower;
            ub_[j] = model.vars[j].upper;
            cost_[j] = s * model.objective[j];
        }
        for (std::size_t r = 0; r < m_; ++r) {
            lb_[n_ + r] = model.rows[r].lower;
            ub_[n_ + r] = model.rows[r].upper;
        }
        max_iters_ = opts.max_iters > 0 ? opts.max_iters : 50 * (m_ + total);
    }

    LpResult run(const Basis* warm) {
        if (!(warm && load_basis(*warm))) load_slack_basis();
        LpResult out;
        out.solution.status = iterate();
        out.solution.iterations = iterations_;
        finish(out);
        return out;
    }

private:
    // ---- basis management -------------------------------------------------

    NonbasicState default_state(std::size_t j) const {
        if (std::isfinite(lb_[j])) return NonbasicState::AtLower;
        if (std::isfinite(ub_[j])) return NonbasicState::AtUpper;
        return NonbasicState::AtZero;
    }

    NonbasicState sanitize(std::size_t j, NonbasicState s) const {
        if (s == NonbasicState::AtLower && std::isfinite(lb_[j])) return s;
        if (s == NonbasicState::AtUpper && std::isfinite(ub_[j])) return s;
        return default_state(j);
    }

    double nonbasic_value(std::size_t j) const {
        switch (state_[j]) {
        case NonbasicState::AtLower: return lb_[j];
        case NonbasicState::AtUpper: return ub_[j];
        case NonbasicState::AtZero: return 0.0;
        }
        return 0.0;
    }

    void load_slack_basis() {
        const std::size_t total = n_ + m_;
        head_.resize(m_);
        pos_.assign(total, kNone);
        state_.resize(total);
        for (std::size_t j = 0; j < total; ++j) state_[j] = default_state(j);
        for (std::size_t r = 0; r < m_; ++r) {
            head_[r] = n_ + r;
            pos_[n_ + r] = r;
        }
        x_.assign(total, 0.0);
        for (std::size_t j = 0; j < n_; ++j) x_[j] = nonbasic_value(j);
        factor_.factorize(head_);
        recompute_basics();
    }

    bool load_basis(const Basis& warm) {
        const std::size_t total = n_ + m_;
        if (warm.basic.size() != m_ || warm.nonbasic_state.size() != total) return false;
        std::vector<std::size_t> pos(total, kNone);
        for (std::size_t p = 0; p < m_; ++p) {
            const std::size_t col = warm.basic[p];
            if (col >= total || pos[col] != kNone) return false;
            pos[col] = p;
        }
        head_ = warm.basic;
        pos_ = std::move(pos);
        state_.resize(total);
        for (std::size_t j = 0; j < total; ++j) state_[j] = sanitize(j, warm.nonbasic_state[j]);
        if (!factor_.factorize(head_)) return false;
        x_.assign(total, 0.0);
        for (std::size_t j = 0; j < total; ++j)
            if (pos_[j] == kNone) x_[j] = nonbasic_value(j);
        recompute_basics();
        return true;
    }

    /// x_B = B^{-1} (-N x_N), since [A | -I] x = 0.
    void recompute_basics() {
        std::vector<double> rhs(m_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            if (pos_[j] != kNone || x_[j] == 0.0) continue;
            for (std::size_t e = a_.start[j]; e < a_.start[j + 1]; ++e) rhs[a_.row[e]] -= a_.value[e] * x_[j];
        }
        for (std::size_t r = 0; r < m_; ++r) {
            if (pos_[n_ + r] == kNone) rhs[r] += x_[n_ + r];
        }
        const auto xb = factor_.ftran(rhs);
        for (std::size_t p = 0; p < m_; ++p) x_[head_[p]] = xb[p];
    }

    bool refactor() {
        if (factor_.factorize(head_)) {
            recompute_basics();
            return true;
        }
        if (fallback_used_) return false;
        fallback_used_ = true;
        // Restart from the logical basis, keeping nonbasic structurals where they are.
        for (std::size_t p = 0; p < m_; ++p) {
            const std::size_t col = head_[p];
            pos_[col] = kNone;
            if (col < n_) {
                const double v = x_[col];
                if (std::isfinite(lb_[col]) && (!std::isfinite(ub_[col]) || v - lb_[col] <= ub_[col] - v))
                    state_[col] = NonbasicState::AtLower;
                else
                    state_[col] = default_state(col) == NonbasicState::AtZero ? NonbasicState::AtZero
                                                                               : NonbasicState::AtUpper;
                state_[col] = sanitize(col, state_[col]);
                x_[col] = nonbasic_value(col);
            }
        }
        for (std::size_t r = 0; r < m_; ++r) {
            head_[r] = n_ + r;
            pos_[n_ + r] = r;
        }
        if (!factor_.factorize(head_)) return false;
        recompute_basics();
        return true;
    }

    // ---- iteration --------------------------------------------------------

    double infeasibility(std::size_t j) const {
        const double v = x_[j];
        if (v < lb_[j] - opts_.feas_tol) return lb_[j] - v;
        if (v > ub_[j] + opts_.feas_tol) return v - ub_[j];
        return 0.0;
    }

    double total_infeasibility() const {
        double s = 0.0;
        for (std::size_t p = 0; p < m_; ++p) s += infeasibility(head_[p]);
        return s;
    }

    double internal_objective() const {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += cost_[j] * x_[j];
        return s;
    }

    std::vector<double> basic_costs(bool phase1) const {
        std::vector<double> cb(m_, 0.0);
        for (std::size_t p = 0; p < m_; ++p) {
            const std::size_t j = head_[p];
            if (phase1) {
                const double v = x_[j];
                if (v < lb_[j] - opts_.feas_tol) cb[p] = -1.0;
                else if (v > ub_[j] + opts_.feas_tol) cb[p] = 1.0;
            } else {
                cb[p] = cost_[j];
            }
        }
        return cb;
    }

    double reduced_cost(std::size_t j, const std::vector<double>& y, bool phase1) const {
        const double c = phase1 ? 0.0 : cost_[j];
        if (j >= n_) return c + y[j - n_];
        double s = c;
        for (std::size_t e = a_.start[j]; e < a_.start[j + 1]; ++e) s -= a_.value[e] * y[a_.row[e]];
        return s;
    }

    struct Entering {
        std::size_t col = kNone;
        double direction = 0.0;
        double reduced = 0.0;
    };

    Entering price(const std::vector<double>& y, bool phase1, bool bland) const {
        Entering best;
        double best_score = 0.0;
        const double tol = opts_.opt_tol;
        for (std::size_t j = 0; j < n_ + m_; ++j) {
            if (pos_[j] != kNone || lb_[j] == ub_[j]) continue;
            const double d = reduced_cost(j, y, phase1);
            double dir = 0.0;
            switch (state_[j]) {
            case NonbasicState::AtLower:
                if (d < -tol) dir = 1.0;
                break;
            case NonbasicState::AtUpper:
                if (d > tol) dir = -1.0;
                break;
            case NonbasicState::AtZero:
                if (d < -tol) dir = 1.0;
                else if (d > tol) dir = -1.0;
                break;
            }
            if (dir == 0.0) continue;
            if (bland) return {j, dir, d};
            if (std::abs(d) > best_score) {
                best_score = std::abs(d);
                best = {j, dir, d};
            }
        }
        return best;
    }

    enum class StepKind { Pivot, BoundFlip, Unbounded };

    struct Step {
        StepKind kind = StepKind::Unbounded;
        double theta = 0.0;
        std::size_t leave_pos = kNone;
        double leave_value = 0.0;
        NonbasicState leave_state = NonbasicState::AtLower;
    };

    Step ratio_test(const Entering& in, const std::vector<double>& alpha, bool phase1, bool bland) const {
        const double tol = opts_.feas_tol;
        const std::size_t q = in.col;
        double flip = kInf;
        if (std::isfinite(lb_[q]) && std::isfinite(ub_[q])) flip = ub_[q] - lb_[q];

        struct Candidate {
            std::size_t pos;
            double ratio;
            double relaxed;
            double rate;
            double target;
            NonbasicState state;
        };
        std::vector<Candidate> cands;
        for (std::size_t p = 0; p < m_; ++p) {
            const double rate = -in.direction * alpha[p];
            if (std::abs(rate) <= kPivotTol) continue;
            const std::size_t j = head_[p];
            const double v = x_[j];
            const bool below = phase1 && v < lb_[j] - tol;
            const bool above = phase1 && v > ub_[j] + tol;
            if (below) {
                if (rate > 0.0) {
                    const double r = (lb_[j] - v) / rate;
                    cands.push_back({p, r, r + tol / rate, rate, lb_[j], NonbasicState::AtLower});
                }
            } else if (above) {
                if (rate < 0.0) {
                    const double r = (v - ub_[j]) / -rate;
                    cands.push_back({p, r, r + tol / -rate, rate, ub_[j], NonbasicState::AtUpper});
                }
            } else if (rate > 0.0) {
                if (std::isfinite(ub_[j])) {
                    cands.push_back({p, std::max(0.0, (ub_[j] - v) / rate), (ub_[j] + tol - v) / rate, rate, ub_[j],
                                     NonbasicState::AtUpper});
                }
            } else if (std::isfinite(lb_[j])) {
                cands.push_back({p, std::max(0.0, (v - lb_[j]) / -rate), (v - lb_[j] + tol) / -rate, rate, lb_[j],
                                 NonbasicState::AtLower});
            }
        }

        Step step;
        if (cands.empty()) {
            if (std::isfinite(flip)) {
                step.kind = StepKind::BoundFlip;
                step.theta = flip;
            }
            return step;
        }

        const Candidate* chosen = nullptr;
        if (bland) {
            // Strict minimum ratio, ties to the smallest column index.
            for (const auto& c : cands) {
                if (!chosen || c.ratio < chosen->ratio - 1e-12 ||
                    (c.ratio <= chosen->ratio + 1e-12 && head_[c.pos] < head_[chosen->pos])) {
                    chosen = &c;
                }
            }
            if (flip <= chosen->ratio) {
                step.kind = StepKind::BoundFlip;
                step.theta = flip;
                return step;
            }
        } else {
            // Harris two-pass: largest pivot among ratios within the relaxed bound.
            double limit = kInf;
            for (const auto& c : cands) limit = std::min(limit, c.relaxed);
            if (flip <= limit) {
                step.kind = StepKind::BoundFlip;
                step.theta = flip;
                return step;
            }
            for (const auto& c : cands) {
                if (c.ratio <= limit && (!chosen || std::abs(c.rate) > std::abs(chosen->rate))) chosen = &c;
            }
        }
        step.kind = StepKind::Pivot;
        step.theta = std::max(0.0, chosen->ratio);
        step.leave_pos = chosen->pos;
        step.leave_value = chosen->target;
        step.leave_state = chosen->state;
        return step;
    }

    LpStatus iterate() {
        std::size_t degenerate_run = 0;
        bool bland = false;
        bool fresh = true;
        while (true) {
            if (iterations_ >= max_iters_) return LpStatus::IterationLimit;
            if (factor_.num_etas() >= opts_.refactor_interval) {
                if (!refactor()) return LpStatus::NumericalFailure;
                fresh = true;
            }

            const double infeas = total_infeasibility();
            const bool phase1 = infeas > 0.0;
            const auto y = factor_.btran(basic_costs(phase1));
            const Entering in = price(y, phase1, bland);

            if (opts_.verbosity > 0 && opts_.trace) {
                *opts_.trace << "iter " << iterations_ << " phase " << (phase1 ? 1 : 2) << " obj "
                             << internal_objective() << " infeas " << infeas << '\n';
            }

            if (in.col == kNone) {
                if (!fresh) {
                    if (!refactor()) return LpStatus::NumericalFailure;
                    fresh = true;
                    continue;
                }
                phase1_infeasibility_ = infeas;
                return phase1 ? LpStatus::Infeasible : LpStatus::Optimal;
            }

            std::vector<double> column(m_, 0.0);
            if (in.col < n_) {
                for (std::size_t e = a_.start[in.col]; e < a_.start[in.col + 1]; ++e) column[a_.row[e]] = a_.value[e];
            } else {
                column[in.col - n_] = -1.0;
            }
            const auto alpha = factor_.ftran(column);
            const Step step = ratio_test(in, alpha, phase1, bland);

            if (step.kind == StepKind::Unbounded) {
                if (phase1 || !fresh) {
                    if (!refactor()) return LpStatus::NumericalFailure;
                    if (fresh) return LpStatus::NumericalFailure;
                    fresh = true;
                    continue;
                }
                return LpStatus::Unbounded;
            }

            ++iterations_;
            fresh = false;
            const double theta = step.theta;
            if (theta * std::abs(in.reduced) <= 1e-12) {
                if (++degenerate_run > opts_.bland_threshold) bland = true;
            } else {
                degenerate_run = 0;
                bland = false;
            }

            x_[in.col] += in.direction * theta;
            if (theta != 0.0) {
                for (std::size_t p = 0; p < m_; ++p) {
                    if (alpha[p] != 0.0) x_[head_[p]] -= in.direction * alpha[p] * theta;
                }
            }

            if (step.kind == StepKind::BoundFlip) {
                state_[in.col] = in.direction > 0 ? NonbasicState::AtUpper : NonbasicState::AtLower;
                x_[in.col] = nonbasic_value(in.col);
                continue;
            }

            const std::size_t leave = head_[step.leave_pos];
            x_[leave] = step.leave_value;
            state_[leave] = step.leave_state;
            pos_[leave] = kNone;
            head_[step.leave_pos] = in.col;
            pos_[in.col] = step.leave_pos;
            factor_.push_eta(step.leave_pos, alpha);
        }
    }

    void finish(LpResult& out) {
        auto& sol = out.solution;
        const std::size_t total = n_ + m_;
        sol.values.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
        sol.objective = model_.objective_value(sol.values);

        const double s = model_.sense == Sense::Minimize ? 1.0 : -1.0;
        const auto y = factor_.btran(basic_costs(false));
        sol.dual_values.resize(m_);
        for (std::size_t r = 0; r < m_; ++r) sol.dual_values[r] = s * y[r];
        sol.reduced_costs.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) sol.reduced_costs[j] = pos_[j] == kNone ? s * reduced_cost(j, y, false) : 0.0;

        out.basis.basic = head_;
        out.basis.nonbasic_state.assign(total, NonbasicState::AtLower);
        for (std::size_t j = 0; j < total; ++j)
            if (pos_[j] == kNone) out.basis.nonbasic_state[j] = state_[j];
    }

    const MilpModel& model_;
    SimplexOptions opts_;
    SparseColumns a_;
    std::size_t n_;
    std::size_t m_;
    BasisFactor factor_;
    std::vector<double> lb_, ub_, cost_, x_;
    std::vector<std::size_t> head_, pos_;
    std::vector<NonbasicState> state_;
    std::size_t iterations_ = 0;
    std::size_t max_iters_ = 0;
    bool fallback_used_ = false;
    double phase1_infeasibility_ = 0.0;
};

} // namespace

LpResult solve_lp(const MilpModel& model, const SimplexOptions& opts, const Basis* warm) {
    PrimalSimplex solver(model, opts);
    return solver.run(warm);
}

LpSolution solve_lp_relaxation(const MilpModel& model) { return solve_lp(model).solution; }

double cvar_primal_oracle(std::span<const double> y, std::span<const double> probs, double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::BadBeta, "beta must lie in (0, 1]");
    if (y.size() != probs.size()) throw Error(ErrorCode::DimensionMismatch, "returns and probabilities differ in length");
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });

    double remaining = beta;
    double total = 0.0;
    for (std::size_t t : order) {
        if (remaining <= 0.0) break;
        const double u = std::min(probs[t], remaining);
        total += y[t] * u;
        remaining -= u;
    }
    if (remaining > 1e-12) throw Error(ErrorCode::BadProbabilities, "probabilities hold less mass than beta");
    return total / beta;
}

} // namespace locport
