#include "locport/model_ir.hpp"

#include "locport/errors.hpp"
#include "locport/numfmt.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <sstream>

namespace locport {

std::size_t MilpModel::add_var(std::string name, double lower, double upper, VarType type, double obj) {
    vars.push_back({std::move(name), lower, upper, type});
    objective.push_back(obj);
    return vars.size() - 1;
}

std::size_t MilpModel::add_row(std::string name, std::vector<Term> terms, double lower, double upper) {
    rows.push_back({std::move(name), std::move(terms), lower, upper});
    return rows.size() - 1;
}

std::vector<std::size_t> MilpModel::binaries() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < vars.size(); ++j)
        if (vars[j].type == VarType::Binary) out.push_back(j);
    return out;
}

std::optional<std::size_t> MilpModel::find_var(const std::string& name) const {
    for (std::size_t j = 0; j < vars.size(); ++j)
        if (vars[j].name == name) return j;
    return std::nullopt;
}

double MilpModel::objective_value(const std::vector<double>& values) const {
    double total = 0.0;
    for (std::size_t j = 0; j < objective.size(); ++j) total += objective[j] * values[j];
    return total;
}

std::vector<Violation> validate(const MilpModel& model) {
    std::vector<Violation> out;
    auto has_space = [](const std::string& s) {
        return s.empty() || std::any_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    };

    if (model.objective.size() != model.vars.size()) {
        out.push_back({"objective has " + std::to_string(model.objective.size()) + " coefficients for " +
                       std::to_string(model.vars.size()) + " variables"});
    }
    for (std::size_t j = 0; j < model.vars.size(); ++j) {
        const auto& v = model.vars[j];
        const std::string label = "variable " + v.name + " (#" + std::to_string(j) + ")";
        if (std::isnan(v.lower) || std::isnan(v.upper)) out.push_back({label + ": NaN bound"});
        if (v.lower > v.upper) out.push_back({label + ": lower bound exceeds upper bound"});
        if (v.type == VarType::Binary && (v.lower < 0.0 || v.upper > 1.0)) {
            out.push_back({label + ": binary bounds outside [0,1]"});
        }
        if (has_space(v.name)) out.push_back({label + ": name must be non-empty without whitespace"});
        if (j < model.objective.size() && !std::isfinite(model.objective[j])) {
            out.push_back({label + ": non-finite objective coefficient"});
        }
    }
    for (std::size_t r = 0; r < model.rows.size(); ++r) {
        const auto& row = model.rows[r];
        const std::string label = "row " + row.name + " (#" + std::to_string(r) + ")";
        const bool any_nonzero =
            std::any_of(row.terms.begin(), row.terms.end(), [](const Term& t) { return t.coef != 0.0; });
        if (!any_nonzero) out.push_back({label + ": empty row"});
        if (std::isnan(row.lower) || std::isnan(row.upper)) out.push_back({label + ": NaN bound"});
        if (row.lower > row.upper) out.push_back({label + ": lower bound exceeds upper bound"});
        if (has_space(row.name)) out.push_back({label + ": name must be non-empty without whitespace"});
        std::vector<std::size_t> seen;
        for (const auto& t : row.terms) {
            if (t.var >= model.vars.size()) {
                out.push_back({label + ": references unknown variable #" + std::to_string(t.var)});
            } else if (!std::isfinite(t.coef)) {
                out.push_back({label + ": non-finite coefficient on " + model.vars[t.var].name});
            }
            seen.push_back(t.var);
        }
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
            out.push_back({label + ": variable listed twice"});
        }
    }
    if (model.cardinality_row && *model.cardinality_row >= model.rows.size()) {
        out.push_back({"cardinality row index out of range"});
    }
    return out;
}

double max_infeasibility(const MilpModel& model, const std::vector<double>& values) {
    double worst = 0.0;
    for (std::size_t j = 0; j < model.vars.size(); ++j) {
        worst = std::max({worst, model.vars[j].lower - values[j], values[j] - model.vars[j].upper});
    }
    for (const auto& row : model.rows) {
        double activity = 0.0;
        for (const auto& t : row.terms) activity += t.coef * values[t.var];
        worst = std::max({worst, row.lower - activity, activity - row.upper});
    }
    return worst;
}

MilpModel fix_binaries(const MilpModel& model, const std::map<std::size_t, int>& assignment) {
    MilpModel out = model;
    for (const auto& [var, value] : assignment) {
        if (var >= model.vars.size() || model.vars[var].type != VarType::Binary) {
            throw Error(ErrorCode::UnknownVariable,
                        var < model.vars.size() ? model.vars[var].name + " is not binary"
                                                : "variable #" + std::to_string(var));
        }
        auto& v = out.vars[var];
        v.lower = v.upper = value != 0 ? 1.0 : 0.0;
        v.type = VarType::Continuous;
    }
    return out;
}

std::string serialize(const MilpModel& model) {
    std::string out = "milp 1\n";
    out += model.sense == Sense::Maximize ? "sense maximize\n" : "sense minimize\n";
    for (std::size_t j = 0; j < model.vars.size(); ++j) {
        const auto& v = model.vars[j];
        out += "var " + v.name + " " + format_double(v.lower) + " " + format_double(v.upper) + " " +
               (v.type == VarType::Binary ? "B" : "C") + " " + format_double(model.objective[j]) + "\n";
    }
    for (const auto& row : model.rows) {
        out += "row " + row.name + " " + format_double(row.lower) + " " + format_double(row.upper) + " " +
               std::to_string(row.terms.size());
        for (const auto& t : row.terms) out += " " + std::to_string(t.var) + ":" + format_double(t.coef);
        out += "\n";
    }
    out += "cardinality " + (model.cardinality_row ? std::to_string(*model.cardinality_row) : std::string("none")) + "\n";
    out += "end\n";
    return out;
}

namespace {

double parse_number(const std::string& token, std::size_t line) {
    const auto v = parse_double(token);
    if (!v) throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad number '" + token + "'");
    return *v;
}

std::size_t parse_index(const std::string& token, std::size_t line) {
    std::size_t pos = 0;
    unsigned long long value = 0;
    try {
        value = std::stoull(token, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != token.size() || token.empty() || token.front() == '-') {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad index '" + token + "'");
    }
    return static_cast<std::size_t>(value);
}

} // namespace

MilpModel parse_model(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    MilpModel model;
    bool header = false;
    bool done = false;
    auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string keyword;
        ls >> keyword;
        if (done) fail("content after 'end'");
        if (!header) {
            std::string version;
            ls >> version;
            if (keyword != "milp" || version != "1") fail("expected 'milp 1' header");
            header = true;
            continue;
        }
        if (keyword == "sense") {
            std::string s;
            ls >> s;
            if (s == "maximize") model.sense = Sense::Maximize;
            else if (s == "minimize") model.sense = Sense::Minimize;
            else fail("unknown sense '" + s + "'");
        } else if (keyword == "var") {
            std::string name, lo, up, type, obj;
            if (!(ls >> name >> lo >> up >> type >> obj)) fail("truncated var line");
            if (type != "B" && type != "C") fail("variable type must be B or C");
            model.add_var(name, parse_number(lo, line_no), parse_number(up, line_no),
                          type == "B" ? VarType::Binary : VarType::Continuous, parse_number(obj, line_no));
        } else if (keyword == "row") {
            std::string name, lo, up, count;
            if (!(ls >> name >> lo >> up >> count)) fail("truncated row line");
            const std::size_t k = parse_index(count, line_no);
            std::vector<Term> terms;
            for (std::size_t i = 0; i < k; ++i) {
                std::string tok;
                if (!(ls >> tok)) fail("row has fewer terms than declared");
                const auto colon = tok.find(':');
                if (colon == std::string::npos) fail("term must be <var>:<coef>");
                const std::size_t var = parse_index(tok.substr(0, colon), line_no);
                if (var >= model.vars.size()) fail("term references undeclared variable");
                terms.push_back({var, parse_number(tok.substr(colon + 1), line_no)});
            }
            std::string extra;
            if (ls >> extra) fail("row has more terms than declared");
            model.add_row(name, std::move(terms), parse_number(lo, line_no), parse_number(up, line_no));
        } else if (keyword == "cardinality") {
            std::string v;
            ls >> v;
            if (v != "none") model.cardinality_row = parse_index(v, line_no);
        } else if (keyword == "end") {
            done = true;
        } else {
            fail("unknown keyword '" + keyword + "'");
        }
    }
    if (!header || !done) throw Error(ErrorCode::ParseError, "missing header or 'end'");
    return model;
}

std::string_view to_string(LpStatus status) {
    switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
    case LpStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

std::string_view to_string(MilpStatus status) {
    switch (status) {
    case MilpStatus::Optimal: return "optimal";
    case MilpStatus::FeasibleTimeLimit: return "feasible_time_limit";
    case MilpStatus::Infeasible: return "infeasible";
    case MilpStatus::NoSolution: return "no_solution";
    case MilpStatus::Unbounded: return "unbounded";
    }
    return "unknown";
}

double relative_gap(double objective, double bound) {
    return std::abs(bound - objective) / std::max(1e-10, std::abs(objective));
}

namespace {

/// The tagged row restricts enumeration only when it reads exactly
/// "sum of every binary = integer p".
std::optional<std::size_t> cardinality_target(const MilpModel& model, const std::vector<std::size_t>& binaries) {
    if (!model.cardinality_row) return std::nullopt;
    const auto& row = model.rows[*model.cardinality_row];
    if (row.lower != row.upper || row.lower < 0 || row.lower != std::floor(row.lower)) return std::nullopt;
    if (row.terms.size() != binaries.size()) return std::nullopt;
    for (const auto& t : row.terms) {
        if (t.coef != 1.0 || model.vars[t.var].type != VarType::Binary) return std::nullopt;
    }
    return static_cast<std::size_t>(row.lower);
}

} // namespace

MilpSolution brute_force_milp(const MilpModel& model, const LpSolveFn& lp) {
    const auto binaries = model.binaries();
    if (binaries.size() > kMaxOracleBinaries) {
        throw Error(ErrorCode::TooManyBinaries, std::to_string(binaries.size()) + " binaries (limit " +
                                                   std::to_string(kMaxOracleBinaries) + ")");
    }
    const auto target = cardinality_target(model, binaries);
    const double sign = model.sense == Sense::Maximize ? 1.0 : -1.0;

    MilpSolution best;
    best.status = MilpStatus::Infeasible;
    bool found = false;
    bool unbounded = false;

    const std::size_t k = binaries.size();
    const std::uint64_t patterns = std::uint64_t{1} << k;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
        if (target && static_cast<std::size_t>(std::popcount(mask)) != *target) continue;
        std::map<std::size_t, int> assignment;
        for (std::size_t b = 0; b < k; ++b) assignment[binaries[b]] = static_cast<int>((mask >> b) & 1U);
        const auto fixed = fix_binaries(model, assignment);
        const auto sol = lp(fixed);
        ++best.node_count;
        if (sol.status == LpStatus::Unbounded) unbounded = true;
        if (sol.status != LpStatus::Optimal) continue;
        if (!found || sign * sol.objective > sign * best.objective) {
            found = true;
            best.objective = sol.objective;
            best.values = sol.values;
            for (std::size_t b = 0; b < k; ++b) best.values[binaries[b]] = static_cast<double>((mask >> b) & 1U);
        }
    }
    if (unbounded) {
        best.status = MilpStatus::Unbounded;
    } else if (found) {
        best.status = MilpStatus::Optimal;
        best.best_bound = best.objective;
        best.gap = 0.0;
    }
    return best;
}

} // namespace locport
