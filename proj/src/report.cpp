#include "locport/report.hpp"

#include "locport/numfmt.hpp"

#include <json.hpp>

#include <cmath>
#include <set>
#include <sstream>

namespace locport {

namespace {

using Json = nlohmann::ordered_json;

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void add_portfolio_fields(Json& j, const Portfolio& pf, const std::vector<std::string>& ids) {
    Json weights = Json::array();
    for (std::size_t k = 0; k < pf.weights.size(); ++k) weights.push_back({{"asset", ids[k]}, {"weight", pf.weights[k]}});
    j["weights"] = std::move(weights);
    Json reps = Json::array();
    for (std::size_t r : pf.representatives) reps.push_back(ids[r]);
    j["representatives"] = std::move(reps);
    Json assignment = Json::array();
    for (std::size_t k = 0; k < pf.assignment.size(); ++k) {
        assignment.push_back({{"asset", ids[k]}, {"representative", ids[pf.assignment[k]]}});
    }
    j["assignment"] = std::move(assignment);
    j["fp_value"] = number(pf.fp_value);
    j["cvar_value"] = number(pf.cvar_value);
    j["mean_return"] = number(pf.mean_return);
}

Json bounds_fields(const FpBounds& b) {
    return {{"fp_lower", number(b.fp_lower)}, {"fp_upper", number(b.fp_upper)}, {"fp0", number(b.fp0)}};
}

bool is_index(const BacktestReport& r) { return r.strategy.kind == StrategyKind::Index; }

std::string gamma_text(const BacktestReport& r) {
    return r.strategy.kind == StrategyKind::Unified ? format_double(r.strategy.gamma) : "";
}

std::string csv_header(bool timings) {
    std::string h = "strategy,gamma,p,beta,in_len,out_len,n_problems,av_1e3,sharpe,avg_gap,avg_nodes";
    if (timings) h += ",avg_time";
    return h;
}

std::string csv_fields(const BacktestReport& r, bool timings) {
    std::ostringstream os;
    os << strategy_name(r.strategy.kind) << ',' << gamma_text(r) << ',' << r.p << ',' << format_double(r.beta) << ','
       << r.in_len << ',' << r.out_len << ',' << r.n_problems << ',' << format_double(r.av * 1e3) << ','
       << (r.sharpe ? format_double(*r.sharpe) : "NA") << ',';
    if (is_index(r)) {
        os << ',';
        if (timings) os << ',';
    } else {
        os << format_double(r.avg_gap) << ',' << format_double(r.avg_nodes);
        if (timings) os << ',' << format_double(r.avg_time);
    }
    return os.str();
}

int strategy_rank(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::Unified: return 0;
    case StrategyKind::CvarCardinality: return 1;
    case StrategyKind::PureCvar: return 2;
    case StrategyKind::Index: return 3;
    }
    return 4;
}

// Smaller wins ties.
bool tie_before(const BacktestReport& a, const BacktestReport& b) {
    if (strategy_rank(a.strategy.kind) != strategy_rank(b.strategy.kind)) {
        return strategy_rank(a.strategy.kind) < strategy_rank(b.strategy.kind);
    }
    return a.strategy.gamma < b.strategy.gamma;
}

const char* flag(const std::optional<bool>& f) {
    if (!f) return "";
    return *f ? "1" : "0";
}

} // namespace

std::string portfolio_json(const SolveRecord& rec, const std::vector<std::string>& asset_ids, bool timings) {
    Json j;
    j["model"] = rec.model;
    j["status"] = std::string(to_string(rec.solution.status));
    j["objective"] = number(rec.solution.objective);
    j["best_bound"] = number(rec.solution.best_bound);
    j["gap"] = number(rec.solution.gap);
    j["nodes"] = rec.solution.node_count;
    if (timings) j["wall_time"] = rec.solution.wall_time;
    if (rec.bounds) j["bounds"] = bounds_fields(*rec.bounds);
    add_portfolio_fields(j, rec.portfolio, asset_ids);
    Json cfg;
    cfg["p"] = rec.cfg.p;
    cfg["beta"] = rec.cfg.beta;
    cfg["mu0"] = number(rec.cfg.mu0);
    cfg["gamma"] = rec.cfg.gamma;
    cfg["lower"] = rec.cfg.lower;
    cfg["upper"] = rec.cfg.upper;
    j["config"] = std::move(cfg);
    j["warnings"] = rec.solution.warnings;
    return j.dump(2) + "\n";
}

std::string backtest_json(std::span<const BacktestReport> reports, const std::vector<std::string>& asset_ids,
                          bool timings) {
    Json list = Json::array();
    for (const auto& r : reports) {
        Json j;
        j["strategy"] = std::string(strategy_name(r.strategy.kind));
        j["gamma"] = r.strategy.kind == StrategyKind::Unified ? Json(r.strategy.gamma) : Json(nullptr);
        j["p"] = r.p;
        j["beta"] = r.beta;
        j["in_len"] = r.in_len;
        j["out_len"] = r.out_len;
        j["n_problems"] = r.n_problems;
        j["av"] = number(r.av);
        j["sharpe"] = r.sharpe ? number(*r.sharpe) : Json(nullptr);
        if (!is_index(r)) {
            j["avg_gap"] = number(r.avg_gap);
            j["avg_nodes"] = r.avg_nodes;
            if (timings) j["avg_time"] = r.avg_time;
        }
        j["oos_returns"] = r.oos_returns;

        Json windows = Json::array();
        for (const auto& w : r.windows) {
            Json wj;
            wj["in_start"] = w.window.in_start;
            wj["in_end"] = w.window.in_end;
            wj["out_end"] = w.window.out_end;
            if (w.portfolio) {
                wj["solved_as"] = std::string(strategy_name(w.solved_as));
                wj["status"] = std::string(to_string(w.status));
                wj["objective"] = number(w.objective);
                wj["gap"] = number(w.gap);
                wj["nodes"] = w.nodes;
                if (timings) wj["wall_time"] = w.wall_time;
                wj["mu0"] = number(w.mu0);
                if (w.bounds) wj["bounds"] = bounds_fields(*w.bounds);
                add_portfolio_fields(wj, *w.portfolio, asset_ids);
            }
            wj["warnings"] = w.warnings;
            windows.push_back(std::move(wj));
        }
        j["windows"] = std::move(windows);
        list.push_back(std::move(j));
    }
    Json root;
    root["reports"] = std::move(list);
    return root.dump(2) + "\n";
}

std::string backtest_csv(std::span<const BacktestReport> reports, bool timings) {
    std::string out = csv_header(timings) + "\n";
    for (const auto& r : reports) out += csv_fields(r, timings) + "\n";
    return out;
}

std::vector<CompareRow> compare_rows(std::span<const BacktestReport> reports) {
    std::vector<CompareRow> rows;
    std::set<StrategyKind> kinds;
    for (const auto& r : reports) {
        rows.push_back({&r, std::nullopt, std::nullopt, std::nullopt});
        kinds.insert(r.strategy.kind);
    }
    if (kinds.size() < 2) return rows;

    for (auto& row : rows) {
        row.best_av = false;
        row.best_sharpe = false;
        const auto& r = *row.report;
        if (r.strategy.kind != StrategyKind::Unified) continue;
        bool any = false;
        bool beats = r.sharpe.has_value();
        for (const auto& other : reports) {
            if (other.strategy.kind == StrategyKind::Unified || other.p != r.p) continue;
            any = true;
            if (!(r.av > other.av)) beats = false;
            if (r.sharpe && other.sharpe && !(*r.sharpe > *other.sharpe)) beats = false;
        }
        if (any) row.italic = beats;
    }

    std::set<std::size_t> ps;
    for (const auto& r : reports) ps.insert(r.p);
    for (std::size_t p : ps) {
        CompareRow* best_av = nullptr;
        CompareRow* best_sh = nullptr;
        for (auto& row : rows) {
            const auto& r = *row.report;
            if (r.p != p) continue;
            if (!best_av || r.av > best_av->report->av ||
                (r.av == best_av->report->av && tie_before(r, *best_av->report))) {
                best_av = &row;
            }
            if (!r.sharpe) continue;
            const auto& b = best_sh ? best_sh->report->sharpe : std::nullopt;
            if (!b || *r.sharpe > *b || (*r.sharpe == *b && tie_before(r, *best_sh->report))) best_sh = &row;
        }
        if (best_av) best_av->best_av = true;
        if (best_sh) best_sh->best_sharpe = true;
    }
    return rows;
}

std::string compare_csv(std::span<const CompareRow> rows, bool timings) {
    std::string out = csv_header(timings) + ",italic,best_av,best_sharpe\n";
    for (const auto& row : rows) {
        out += csv_fields(*row.report, timings) + "," + flag(row.italic) + "," + flag(row.best_av) + "," +
               flag(row.best_sharpe) + "\n";
    }
    return out;
}

} // namespace locport
