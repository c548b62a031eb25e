// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.

#include "cli.hpp"
#include "locport/backtest.hpp"
#include "locport/branch_bound.hpp"
#include "locport/errors.hpp"
#include "locport/formulations.hpp"
#include "locport/simplex.hpp"

#include "oracles.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace locport;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Verdict& v) {
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << title << "  (" << v.detail << ")"
              << std::endl;
    if (!v.pass) ++failures;
}

std::string sci(double v) {
    std::ostringstream os;
    os.precision(2);
    os << std::scientific << v;
    return os.str();
}

const LpSolveFn kLp = [](const MilpModel& m) { return solve_lp_relaxation(m); };
const MilpSolver kEnumerate = [](const MilpModel& m) { return brute_force_milp(m, kLp); };
const MilpSolver kBnb = [](const MilpModel& m) { return solve_milp(m, oracle::exact_bnb()); };

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Largest absolute error seen and whether every comparison held.
struct Tally {
    double tol;
    double worst = 0.0;
    std::size_t count = 0;
    std::size_t bad = 0;

    void add(double got, double want) {
        const double e = std::abs(got - want);
        worst = std::max(worst, e);
        ++count;
        if (!(e <= tol)) ++bad;
    }
    void fail() { ++count, ++bad; }
    bool ok() const { return bad == 0; }
    std::string text() const {
        return std::to_string(count - bad) + "/" + std::to_string(count) + " within " + sci(tol) + ", max err " +
               sci(worst);
    }
};

constexpr std::size_t kInstances = 50;
constexpr double kGammaGrid[] = {1.0, 0.75, 0.5, 0.25, 0.0};

oracle::Instance instance(std::size_t k) { return oracle::random_instance(k + 1, 10, 12, 3); }

// Criteria 1 and 5 share the same instances.
void criteria_1_and_5(Tally& equiv, Tally& pmedian) {
    for (std::size_t k = 0; k < kInstances; ++k) {
        const auto inst = instance(k);
        const auto& s = inst.scenarios;
        const auto& d = inst.distances;
        auto compare = [&](const MilpModel& m) {
            const auto want = kEnumerate(m);
            const auto got = kBnb(m);
            if (want.has_solution() != got.has_solution()) return equiv.fail();
            if (want.has_solution()) equiv.add(got.objective, want.objective);
        };

        const auto pm = build_pmedian(s, d, inst.cfg);
        compare(pm.model);
        compare(build_cvar_cc(s, inst.cfg).model);

        // The clustering bound comes from enumeration so that the solver under
        // test never feeds its own input.
        BoundsComputation bc;
        try {
            bc = compute_bounds_detailed(s, d, inst.cfg, kEnumerate);
        } catch (const Error&) {
            equiv.fail();
            continue;
        }
        const double gamma = kGammaGrid[k % 5];
        compare(build_unified(s, d, inst.cfg, interpolate_fp0(bc.bounds.fp_lower, bc.bounds.fp_upper, gamma)).model);

        const auto sol = kBnb(pm.model);
        if (!sol.has_solution()) {
            pmedian.fail();
            continue;
        }
        const auto port = extract_portfolio(sol, pm, s, d, inst.cfg);
        pmedian.add(evaluate_fp(port.representatives, d), sol.objective);
    }
}

Verdict criterion_2() {
    std::mt19937_64 rng(2002);
    Tally general{1e-8}, mean{1e-12};
    for (int k = 0; k < 100; ++k) {
        const std::size_t T = std::uniform_int_distribution<std::size_t>(1, 50)(rng);
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
        ScenarioSet s;
        s.returns = Matrix(T, n);
        std::normal_distribution<double> ret(0.002, 0.04);
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t j = 0; j < n; ++j) s.returns(t, j) = ret(rng);
        s.probs.resize(T);
        double total = 0.0;
        for (auto& p : s.probs) total += p = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
        for (auto& p : s.probs) p /= total;
        s.mu.assign(n, 0.0);
        std::vector<double> x(n);
        double xs = 0.0;
        for (auto& v : x) xs += v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        for (auto& v : x) v /= xs;

        ModelConfig cfg;
        cfg.beta = k % 5 == 0 ? 1.0 : std::uniform_real_distribution<double>(0.01, 1.0)(rng);
        auto built = build_pure_cvar(s, cfg);
        for (std::size_t j = 0; j < n; ++j) built.model.vars[built.layout.x + j].lower = built.model.vars[built.layout.x + j].upper = x[j];
        const auto sol = solve_lp_relaxation(built.model);
        const auto y = s.portfolio_returns(x);
        if (sol.status != LpStatus::Optimal) {
            general.fail();
            continue;
        }
        general.add(sol.objective, cvar_primal_oracle(y, s.probs, cfg.beta));
        if (cfg.beta == 1.0) {
            double m = 0.0;
            for (std::size_t t = 0; t < T; ++t) m += s.probs[t] * y[t];
            mean.add(sol.objective, m);
        }
    }
    return {general.ok() && mean.ok(), "dual vs primal " + general.text() + "; beta=1 vs mean " + mean.text()};
}

// Criteria 3 and 4 on instances of their own; criterion 4 also covers the
// criterion 1 instances.
void criteria_3_and_4(Tally& feasible, Tally& upper, Tally& monotone, Tally& nested) {
    auto run = [&](const oracle::Instance& inst, bool endpoint_checks) {
        const auto& s = inst.scenarios;
        const auto& d = inst.distances;
        BoundsComputation bc;
        try {
            bc = compute_bounds_detailed(s, d, inst.cfg, kBnb);
        } catch (const Error&) {
            if (endpoint_checks) feasible.fail();
            nested.fail();
            return;
        }
        const auto pure = solve_lp_relaxation(build_pure_cvar(s, inst.cfg).model);
        const double cc = bc.cvar_cc_solution.objective;
        nested.add(std::min(pure.objective, cc), cc);

        double previous = kInf;
        for (double gamma : kGammaGrid) {
            const double fp0 = interpolate_fp0(bc.bounds.fp_lower, bc.bounds.fp_upper, gamma);
            const auto sol = kBnb(build_unified(s, d, inst.cfg, fp0).model);
            if (!sol.has_solution()) {
                if (endpoint_checks && gamma == 1.0) feasible.fail();
                nested.fail();
                continue;
            }
            if (endpoint_checks && gamma == 1.0) feasible.add(0.0, 0.0);
            if (endpoint_checks && gamma == 0.0) upper.add(sol.objective, cc);
            nested.add(std::min(sol.objective, cc), sol.objective);
            // Walking gamma downward the optimum may only grow.
            if (endpoint_checks && previous != kInf) monotone.add(std::max(sol.objective, previous), sol.objective);
            previous = sol.objective;
        }
    };
    for (std::size_t k = 0; k < 20; ++k) run(oracle::random_instance(3001 + k, 10, 12, 3), true);
    for (std::size_t k = 0; k < kInstances; ++k) run(instance(k), false);
}

Verdict criterion_6() {
    std::mt19937_64 rng(6006);
    Tally obj{1e-9};
    std::size_t status_bad = 0, optimal = 0, infeasible = 0, unbounded = 0;
    for (int k = 0; k < 200; ++k) {
        const auto m = oracle::random_lp(rng, 30, 30);
        const auto exact = oracle::solve_lp_exact(m);
        const auto got = solve_lp_relaxation(m);
        if (got.status != exact.status) {
            ++status_bad;
            continue;
        }
        if (exact.status == LpStatus::Optimal) ++optimal, obj.add(got.objective, exact.objective);
        if (exact.status == LpStatus::Infeasible) ++infeasible;
        if (exact.status == LpStatus::Unbounded) ++unbounded;
    }
    return {obj.ok() && status_bad == 0,
            obj.text() + "; statuses disagree on " + std::to_string(status_bad) + "; optimal/infeasible/unbounded " +
                std::to_string(optimal) + "/" + std::to_string(infeasible) + "/" + std::to_string(unbounded)};
}

Verdict criterion_7() {
    Tally obj{1e-8};
    std::size_t no_more = 0, total = 0;
    for (std::size_t k = 0; k < kInstances; ++k) {
        const auto inst = instance(k);
        const auto& s = inst.scenarios;
        const auto& d = inst.distances;
        BoundsComputation bc;
        try {
            bc = compute_bounds_detailed(s, d, inst.cfg, kBnb);
        } catch (const Error&) {
            continue;
        }
        ++total;
        bool fewer = true;
        std::optional<Portfolio> previous;
        for (double gamma : kGammaGrid) {
            const double fp0 = interpolate_fp0(bc.bounds.fp_lower, bc.bounds.fp_upper, gamma);
            const auto built = build_unified(s, d, inst.cfg, fp0);
            const auto cold = solve_milp(built.model, oracle::exact_bnb());
            MilpSolution warm;
            if (gamma == 1.0) {
                warm = solve_two_step(s, d, inst.cfg, bc, oracle::exact_bnb()).solution;
            } else {
                auto o = oracle::exact_bnb();
                if (previous) o.warm_start = assignment_from_portfolio(built, *previous);
                warm = solve_milp(built.model, o);
            }
            if (!cold.has_solution() || !warm.has_solution()) {
                obj.fail();
                previous.reset();
                continue;
            }
            obj.add(warm.objective, cold.objective);
            // gamma = 1 starts the chain; only the seeded solves are compared.
            if (gamma < 1.0 && warm.node_count > cold.node_count) fewer = false;
            previous = extract_portfolio(warm, built, s, d, inst.cfg);
        }
        no_more += fewer;
    }
    const double share = total ? static_cast<double>(no_more) / static_cast<double>(total) : 0.0;
    return {obj.ok() && share >= 0.8, "objectives " + obj.text() + "; no extra nodes on " + std::to_string(no_more) +
                                          "/" + std::to_string(total) + " instances"};
}

Verdict criterion_8() {
    const auto yearly = make_windows(1352, 104, 52).size();
    const auto quarterly = make_windows(1352, 104, 12).size();
    const auto last = make_windows(1352, 104, 12).back();
    return {yearly == 24 && quarterly == 104 && last.out_end == 1352,
            "1352 returns: out 52 -> " + std::to_string(yearly) + " windows, out 12 -> " + std::to_string(quarterly)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(s);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

// Every row has the header's width and every nonempty cell past the first
// is a number or "NA".
bool valid_csv(const std::string& text, std::size_t rows_expected, std::string& why) {
    auto rows = split(text, '\n');
    if (!rows.empty() && rows.back().empty()) rows.pop_back();
    if (rows.size() != rows_expected + 1) {
        why = std::to_string(rows.size() - 1) + " rows";
        return false;
    }
    const auto width = split(rows[0], ',').size();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto c = split(rows[r], ',');
        if (c.size() != width) {
            why = "row " + std::to_string(r) + " has " + std::to_string(c.size()) + " cells";
            return false;
        }
        for (std::size_t k = 1; k < c.size(); ++k) {
            if (c[k].empty() || c[k] == "NA") continue;
            std::size_t used = 0;
            try {
                const double v = std::stod(c[k], &used);
                if (!std::isfinite(v)) used = 0;
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != c[k].size()) {
                why = "bad cell '" + c[k] + "'";
                return false;
            }
        }
    }
    return true;
}

struct SmokeResult {
    Verdict invariants;
    Verdict shape;
    std::string csv_path;
};

int run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

constexpr std::size_t kSmokePs[] = {5, 10};

std::vector<std::string> smoke_args(const fs::path& prices, const fs::path& out) {
    return {"compare", "--prices", prices.string(), "--out", out.string(), "--p", "5,10", "--gamma",
            "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0", "--in-len", "104", "--out-len", "52", "--threads", "1",
            "--rel-gap", "1e-9"};
}

SmokeResult criterion_9(const fs::path& dir) {
    SmokeResult res;
    const auto prices = dir / "prices.csv";
    if (run_cli({"gen", "--assets", "28", "--periods", "260", "--blocks", "7,7,7,7", "--seed", "2024", "--out",
                 prices.string()}) != 0) {
        res.shape = res.invariants = {false, "data generation failed"};
        return res;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const int code = run_cli(smoke_args(prices, dir / "first"));
    const double cli_time = elapsed_since(t0);

    // Reports: 10 gammas plus three benchmarks per p, three windows each.
    std::string why;
    bool shape = code == 0 && valid_csv(slurp(dir / "first" / "compare.csv"), 2 * 13, why);
    if (code != 0) why = "exit code " + std::to_string(code);
    if (shape) {
        try {
            const auto j = nlohmann::json::parse(slurp(dir / "first" / "compare.json"));
            const auto& reps = j.at("reports");
            if (reps.size() != 26) shape = false, why = "json holds " + std::to_string(reps.size()) + " reports";
            for (const auto& r : reps) {
                if (r.at("n_problems").get<std::size_t>() != 3 || r.at("oos_returns").size() != 156) {
                    shape = false;
                    why = "report shape";
                }
            }
        } catch (const std::exception& e) {
            shape = false;
            why = e.what();
        }
    }
    res.shape = {shape && cli_time < 600.0,
                 "compare run " + sci(cli_time) + " s, " + (shape ? std::string("csv/json valid") : why)};
    res.csv_path = (dir / "first" / "compare.csv").string();

    // The invariants of criteria 3 to 5 on every window, with gamma = 0
    // appended to the sweep for the upper endpoint.
    const auto panel = load_prices(prices);
    const std::vector<double> gammas{1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0};
    Tally feasible{0.0}, upper{1e-8}, monotone{1e-8}, nested{1e-8}, pmedian{1e-8}, clustering{1e-8};
    const auto t1 = std::chrono::steady_clock::now();
    for (std::size_t p : kSmokePs) {
        BacktestConfig bc;
        bc.in_len = 104;
        bc.out_len = 52;
        bc.model_cfg.p = p;
        bc.solver_opts.rel_gap_tol = 1e-9;
        bc.strategy = Strategy::unified(1.0);
        const auto sweep = gamma_sweep(panel, bc, gammas);
        bc.strategy = Strategy::pure_cvar();
        const auto pure = run_backtest(panel, bc);
        for (std::size_t w = 0; w < pure.windows.size(); ++w) {
            const auto& first = sweep.front().windows[w];
            const double cc = first.cvar_cc_objective;
            nested.add(std::min(pure.windows[w].objective, cc), cc);

            const auto& win = first.window;
            const auto d = correlation_distances(log_returns(panel.slice(win.in_start, win.in_end)));
            pmedian.add(evaluate_fp(first.pmedian_representatives, d), first.bounds->fp_lower);

            for (std::size_t g = 0; g < gammas.size(); ++g) {
                const auto& r = sweep[g].windows[w];
                if (!r.portfolio) {
                    feasible.fail();
                    continue;
                }
                if (gammas[g] == 1.0) feasible.add(0.0, 0.0);
                if (gammas[g] == 0.0) upper.add(r.objective, cc);
                nested.add(std::min(r.objective, cc), r.objective);
                clustering.add(std::min(r.portfolio->fp_value, r.bounds->fp0), r.portfolio->fp_value);
                if (g > 0) {
                    const double before = sweep[g - 1].windows[w].objective;
                    monotone.add(std::max(r.objective, before), r.objective);
                }
            }
        }
    }
    const double check_time = elapsed_since(t1);
    const bool all = feasible.ok() && upper.ok() && monotone.ok() && nested.ok() && pmedian.ok() && clustering.ok();
    std::string detail = "feasible at lower end " + std::to_string(feasible.count - feasible.bad) + "/" +
                         std::to_string(feasible.count) + "; upper end " + upper.text() + "; monotone " +
                         monotone.text() + "; nested " + nested.text() + "; p-median " + pmedian.text() +
                         "; F_p within F_p0 " + clustering.text() + "; " + sci(check_time) + " s";
    res.invariants = {all, detail};
    return res;
}

Verdict criterion_10(const fs::path& dir, const std::string& first_csv) {
    if (first_csv.empty()) return {false, "no first run"};
    if (run_cli(smoke_args(dir / "prices.csv", dir / "second")) != 0) return {false, "second run failed"};
    const auto a = slurp(first_csv);
    const auto b = slurp(dir / "second" / "compare.csv");
    return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

} // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();

    {
        Tally equiv{1e-8}, pmedian{1e-8};
        const auto t0 = std::chrono::steady_clock::now();
        criteria_1_and_5(equiv, pmedian);
        const double t = elapsed_since(t0);
        report(1, "branch and bound matches enumeration", {equiv.ok() && t < 60.0, equiv.text() + ", " + sci(t) + " s"});
        report(2, "CVaR dual equals the primal", criterion_2());
        Tally feasible{0.0}, upper{1e-8}, monotone{1e-8}, nested{1e-8};
        criteria_3_and_4(feasible, upper, monotone, nested);
        report(3, "clustering bound endpoints and gamma monotonicity",
               {feasible.ok() && upper.ok() && monotone.ok(),
                "feasible at lower end " + std::to_string(feasible.count - feasible.bad) + "/" +
                    std::to_string(feasible.count) + "; upper end " + upper.text() + "; monotone " + monotone.text()});
        report(4, "nested objectives pure >= cardinality >= unified", {nested.ok(), nested.text()});
        report(5, "p-median cost of the solved representatives", {pmedian.ok(), pmedian.text()});
    }
    report(6, "simplex matches exact rational arithmetic", criterion_6());
    report(7, "gamma-chained warm starts", criterion_7());
    report(8, "rolling window counts", criterion_8());

    const auto dir = fs::temp_directory_path() / "locport_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto smoke = criterion_9(dir);
    report(9, "end-to-end sweep on a 28-asset market",
           {smoke.shape.pass && smoke.invariants.pass, smoke.shape.detail + "; " + smoke.invariants.detail});
    report(10, "repeat run is byte identical", criterion_10(dir, smoke.csv_path));
    fs::remove_all(dir);

    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << " in "
              << sci(elapsed_since(start)) << " s" << std::endl;
    return failures ? 1 : 0;
}
