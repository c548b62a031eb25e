#include "locport/branch_bound.hpp"
#include "locport/errors.hpp"
#include "locport/formulations.hpp"
#include "locport/simplex.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace locport;

namespace {

const MilpSolver kSolve = [](const MilpModel& m) { return solve_milp(m, oracle::exact_bnb()); };

ScenarioSet scenarios(std::vector<std::vector<double>> rows) {
    ScenarioSet s;
    s.returns = Matrix(rows.size(), rows[0].size());
    s.probs.assign(rows.size(), 1.0 / static_cast<double>(rows.size()));
    s.mu.assign(rows[0].size(), 0.0);
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t j = 0; j < rows[t].size(); ++j) {
            s.returns(t, j) = rows[t][j];
            s.mu[j] += s.probs[t] * rows[t][j];
        }
    return s;
}

DistanceMatrix distances(std::vector<std::vector<double>> d) {
    DistanceMatrix out;
    out.d = Matrix(d.size(), d.size());
    out.rho = Matrix(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.size(); ++j) {
            out.d(i, j) = d[i][j];
            out.rho(i, j) = 1.0 - d[i][j] * d[i][j] / 2.0;
        }
    return out;
}

ModelConfig plain(std::size_t n, std::size_t p) {
    ModelConfig c;
    c.p = p;
    c.beta = 0.5;
    c.lower.assign(n, 0.0);
    c.upper.assign(n, 1.0);
    return c;
}

double solve_value(const MilpModel& m) {
    const auto s = solve_milp(m, oracle::exact_bnb());
    REQUIRE(s.status == MilpStatus::Optimal);
    return s.objective;
}

bool close(double a, double b, double tol = 1e-8) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

} // namespace

TEST_CASE("unified model layout and counts") {
    const auto panel = synthetic_market({5, 4, {2, 3}, 3});
    const auto four = scenario_set(simple_returns(panel));
    const auto dist = correlation_distances(log_returns(panel));
    REQUIRE(four.num_scenarios() == 4);
    const auto built = build_unified(four, dist, default_model_config(four, 2), 1.0);
    CHECK(built.model.num_vars() == 35);
    CHECK(built.model.num_rows() == 43);
    CHECK(built.model.binaries().size() == 5);
    CHECK(built.layout.fp_row.has_value());
    CHECK(built.model.cardinality_row.has_value());
    CHECK(validate(built.model).empty());
    CHECK(built.layout.assignment_var(0, 1) == *built.layout.assignment);
    CHECK(built.layout.assignment_var(1, 0) == *built.layout.assignment + 4);
    CHECK(built.layout.assignment_var(4, 3) == *built.layout.assignment + 19);

    const auto open = build_unified(four, dist, default_model_config(four, 2), kInf);
    CHECK(open.model.num_rows() == 42);
    CHECK_FALSE(open.layout.fp_row.has_value());

    CHECK_THROWS_AS(build_unified(four, distances({{0, 1}, {1, 0}}), default_model_config(four, 2), 1.0), Error);
}

TEST_CASE("all assets representatives") {
    const auto s = scenarios({{0.05, -0.02}});
    const auto d = distances({{0, 1.2}, {1.2, 0}});
    auto cfg = plain(2, 2);
    cfg.lower = {0.2, 0.2};
    cfg.upper = {0.8, 0.8};
    const auto sol = solve_milp(build_unified(s, d, cfg, 0.0).model);
    REQUIRE(sol.status == MilpStatus::Optimal);
    // T=1 so the objective is the single scenario return, best at x = (0.8, 0.2).
    CHECK(sol.objective == doctest::Approx(0.8 * 0.05 + 0.2 * -0.02).epsilon(1e-12));
}

TEST_CASE("open clustering row reproduces the cardinality model") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto inst = oracle::random_instance(seed, 6, 10, 1);
        auto cfg = inst.cfg;
        const double unified = solve_value(build_unified(inst.scenarios, inst.distances, cfg, kInf).model);
        const double cc = solve_value(build_cvar_cc(inst.scenarios, cfg).model);
        const auto bf = brute_force_milp(build_cvar_cc(inst.scenarios, cfg).model,
                                         [](const MilpModel& m) { return solve_lp_relaxation(m); });
        CHECK(close(unified, cc));
        CHECK(close(bf.objective, cc));
    }
}

TEST_CASE("p-median examples") {
    const auto s = scenarios({{0.01, 0.02, 0.03, 0.04}, {0.0, 0.01, -0.01, 0.02}});
    const auto pairs = distances({{0, 0.1, 1, 1}, {0.1, 0, 1, 1}, {1, 1, 0, 0.1}, {1, 1, 0.1, 0}});
    auto cfg = plain(4, 2);
    const auto built = build_pmedian(s, pairs, cfg);
    const auto sol = solve_milp(built.model, oracle::exact_bnb());
    CHECK(sol.objective == doctest::Approx(0.2).epsilon(1e-12));
    const auto port = extract_portfolio(sol, built, s, pairs, cfg);
    REQUIRE(port.representatives.size() == 2);
    CHECK(port.representatives[0] <= 1);
    CHECK(port.representatives[1] >= 2);
    CHECK(oracle::brute_force_pmedian(pairs, 2) == doctest::Approx(0.2));

    cfg.p = 4;
    CHECK(solve_value(build_pmedian(s, pairs, cfg).model) == doctest::Approx(0.0));

    // Star: asset 0 sits at distance 0.5 from every leaf, leaves are 1.0 apart.
    std::vector<std::vector<double>> star(5, std::vector<double>(5, 1.0));
    for (std::size_t i = 0; i < 5; ++i) star[i][i] = 0.0, star[0][i] = star[i][0] = i ? 0.5 : 0.0;
    const auto sd = distances(star);
    const auto ss = scenarios({{0.01, 0.01, 0.01, 0.01, 0.01}});
    auto c1 = plain(5, 1);
    const auto b1 = build_pmedian(ss, sd, c1);
    const auto p1 = extract_portfolio(solve_milp(b1.model, oracle::exact_bnb()), b1, ss, sd, c1);
    CHECK(p1.representatives == std::vector<std::size_t>{0});
    CHECK(p1.fp_value == doctest::Approx(2.0));
}

TEST_CASE("p-median optimum matches subset enumeration") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto inst = oracle::random_instance(seed, 9, 8, 3);
        auto cfg = inst.cfg;
        cfg.mu0 = -kInf;
        const double got = solve_value(build_pmedian(inst.scenarios, inst.distances, cfg).model);
        CHECK(close(got, oracle::brute_force_pmedian(inst.distances, cfg.p), 1e-9));
    }
}

TEST_CASE("cardinality model examples") {
    // Asset 2 beats every other asset in every scenario.
    const auto s = scenarios({{0.01, 0.0, 0.05, -0.02}, {-0.03, 0.01, 0.02, 0.0}, {0.0, -0.01, 0.03, 0.01}});
    auto cfg = plain(4, 1);
    const auto built = build_cvar_cc(s, cfg);
    const auto sol = solve_milp(built.model, oracle::exact_bnb());
    const auto port = extract_portfolio(sol, built, s, DistanceMatrix{}, cfg);
    CHECK(port.representatives == std::vector<std::size_t>{2});
    CHECK(port.weights[2] == doctest::Approx(1.0));

    cfg.p = 4;
    CHECK(close(solve_value(build_cvar_cc(s, cfg).model), solve_lp_relaxation(build_pure_cvar(s, cfg).model).objective));

    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto inst = oracle::random_instance(seed, 8, 10, 3);
        const auto b = build_cvar_cc(inst.scenarios, inst.cfg);
        const auto sl = solve_milp(b.model, oracle::exact_bnb());
        if (!sl.has_solution()) continue;
        const auto pf = extract_portfolio(sl, b, inst.scenarios, inst.distances, inst.cfg);
        const double n = static_cast<double>(inst.scenarios.num_assets());
        for (std::size_t j : pf.representatives) CHECK(pf.weights[j] >= 1.0 / n - 1e-9);
    }
}

TEST_CASE("pure CVaR model") {
    const auto one = scenarios({{-0.1}, {0.0}, {0.2}});
    auto cfg = plain(1, 1);
    cfg.beta = 1.0 / 3.0;
    CHECK(solve_lp_relaxation(build_pure_cvar(one, cfg).model).objective == doctest::Approx(-0.1));
    CHECK(build_pure_cvar(one, cfg).model.binaries().empty());

    const auto single = scenarios({{0.03, -0.01, 0.02}});
    CHECK(solve_lp_relaxation(build_pure_cvar(single, plain(3, 1)).model).objective == doctest::Approx(0.03));

    std::mt19937_64 rng(7);
    std::normal_distribution<double> r(0.0, 0.04);
    std::vector<std::vector<double>> rows(5, std::vector<double>(3));
    for (auto& row : rows)
        for (auto& v : row) v = r(rng);
    const auto s = scenarios(rows);
    auto c = plain(3, 1);
    c.beta = 0.4;
    const auto built = build_pure_cvar(s, c);
    const auto sol = solve_lp_relaxation(built.model);
    std::vector<double> x(sol.values.begin() + static_cast<std::ptrdiff_t>(built.layout.x),
                          sol.values.begin() + static_cast<std::ptrdiff_t>(built.layout.x + 3));
    CHECK(std::abs(sol.objective - cvar_primal_oracle(s.portfolio_returns(x), s.probs, c.beta)) <= 1e-8);
}

TEST_CASE("bounds and interpolation") {
    CHECK(interpolate_fp0(2.0, 6.0, 0.5) == 4.0);
    CHECK(interpolate_fp0(2.0, 6.0, 1.0) == 2.0);
    CHECK(interpolate_fp0(2.0, 6.0, 0.0) == 6.0);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto inst = oracle::random_instance(seed, 8, 10, 3);
        const auto b = compute_bounds(inst.scenarios, inst.distances, inst.cfg, kSolve);
        CHECK(b.fp_lower <= b.fp_upper + 1e-12);
        CHECK(b.fp0 == b.fp_lower);
        CHECK(b.fp_lower >= oracle::brute_force_pmedian(inst.distances, inst.cfg.p) - 1e-12);
        // The lower endpoint is attainable.
        CHECK(solve_milp(build_unified(inst.scenarios, inst.distances, inst.cfg, b.fp_lower).model,
                         oracle::exact_bnb()).has_solution());
    }

    auto inst = oracle::random_instance(4);
    inst.cfg.mu0 = 10.0;
    try {
        compute_bounds(inst.scenarios, inst.distances, inst.cfg, kSolve);
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InfeasibleAtMu0);
    }
}

TEST_CASE("objective chain across gamma") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto inst = oracle::random_instance(seed, 8, 10, 3);
        const auto bc = compute_bounds_detailed(inst.scenarios, inst.distances, inst.cfg, kSolve);
        const double pure = solve_lp_relaxation(build_pure_cvar(inst.scenarios, inst.cfg).model).objective;
        const double cc = bc.cvar_cc_solution.objective;
        CHECK(pure >= cc - 1e-8);
        double previous = cc;
        for (double gamma : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const double fp0 = interpolate_fp0(bc.bounds.fp_lower, bc.bounds.fp_upper, gamma);
            const auto built = build_unified(inst.scenarios, inst.distances, inst.cfg, fp0);
            const auto sol = solve_milp(built.model, oracle::exact_bnb());
            REQUIRE(sol.status == MilpStatus::Optimal);
            CHECK(sol.objective <= previous + 1e-8);
            CHECK(sol.objective <= cc + 1e-8);
            if (gamma == 0.0) CHECK(close(sol.objective, cc));
            const auto port = extract_portfolio(sol, built, inst.scenarios, inst.distances, inst.cfg);
            CHECK(port.fp_value <= fp0 + 1e-8);
            CHECK(close(port.cvar_value, sol.objective));
            previous = sol.objective;
        }
    }
}

TEST_CASE("evaluate_fp and nearest assignment") {
    const auto d = distances({{0, 1, 2}, {1, 0, 3}, {2, 3, 0}});
    const std::vector<std::size_t> r0{0}, all{0, 1, 2}, r1{1};
    CHECK(evaluate_fp(r0, d) == 3.0);
    CHECK(evaluate_fp(all, d) == 0.0);
    CHECK(evaluate_fp(r1, d) == 4.0);
    CHECK_THROWS_AS(evaluate_fp(std::vector<std::size_t>{}, d), Error);

    const auto tie = distances({{0, 1, 1}, {1, 0, 2}, {1, 2, 0}});
    const std::vector<std::size_t> r12{1, 2};
    CHECK(nearest_assignment(r12, tie) == std::vector<std::size_t>{1, 1, 2});
    CHECK(nearest_assignment(all, d) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("extracted portfolios") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto inst = oracle::random_instance(seed, 8, 10, 3);
        const auto bounds = compute_bounds(inst.scenarios, inst.distances, inst.cfg, kSolve);
        const double fp0 = interpolate_fp0(bounds.fp_lower, bounds.fp_upper, 0.5);
        const auto built = build_unified(inst.scenarios, inst.distances, inst.cfg, fp0);
        const auto sol = solve_milp(built.model, oracle::exact_bnb());
        REQUIRE(sol.has_solution());
        const auto port = extract_portfolio(sol, built, inst.scenarios, inst.distances, inst.cfg);

        double sum = 0.0;
        for (double w : port.weights) sum += w;
        CHECK(std::abs(sum - 1.0) <= 1e-9);
        CHECK(port.representatives.size() == inst.cfg.p);
        CHECK(std::is_sorted(port.representatives.begin(), port.representatives.end()));
        CHECK(port.mean_return >= inst.cfg.mu0 - 1e-9);
        for (std::size_t j = 0; j < port.weights.size(); ++j) {
            const bool rep = std::binary_search(port.representatives.begin(), port.representatives.end(), j);
            if (!rep) CHECK(port.weights[j] <= 1e-9);
            else CHECK(port.assignment[j] == j);
        }
        double read = 0.0;
        for (std::size_t i = 0; i < port.weights.size(); ++i)
            for (std::size_t j = 0; j < port.weights.size(); ++j)
                if (i != j) read += inst.distances.d(i, j) * sol.values[built.layout.assignment_var(i, j)];
        CHECK(port.fp_value <= read + 1e-8);

        const auto start = assignment_from_portfolio(built, port);
        CHECK(max_infeasibility(built.model, start) <= 1e-7);
        double obj = 0.0;
        for (std::size_t j = 0; j < start.size(); ++j) obj += built.model.objective[j] * start[j];
        CHECK(close(obj, sol.objective));
    }

    auto fractional = MilpSolution{};
    fractional.status = MilpStatus::Optimal;
    const auto inst = oracle::random_instance(1);
    const auto built = build_cvar_cc(inst.scenarios, inst.cfg);
    CHECK_THROWS_AS(extract_portfolio(fractional, built, inst.scenarios, inst.distances, inst.cfg), Error);
}

TEST_CASE("cvar dual point attains the primal value") {
    std::mt19937_64 rng(31);
    for (int k = 0; k < 50; ++k) {
        const std::size_t T = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
        std::vector<double> y(T), p(T);
        double total = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            y[t] = std::normal_distribution<double>(0.0, 0.05)(rng);
            total += p[t] = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
        }
        for (auto& v : p) v /= total;
        const double beta = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
        const auto [eta, d] = cvar_dual_point(y, p, beta);
        double value = eta;
        for (std::size_t t = 0; t < T; ++t) {
            CHECK(d[t] >= 0.0);
            CHECK(d[t] >= eta - y[t] - 1e-15);
            value -= p[t] * d[t] / beta;
        }
        CHECK(std::abs(value - cvar_primal_oracle(y, p, beta)) <= 1e-12);
    }
}

TEST_CASE("config validation") {
    auto cfg = plain(3, 2);
    CHECK(validate_config(cfg, 3).empty());
    auto bad = cfg;
    bad.p = 0;
    CHECK_THROWS_AS(validate_config(bad, 3), Error);
    bad = cfg;
    bad.p = 4;
    CHECK_THROWS_AS(validate_config(bad, 3), Error);
    bad = cfg;
    bad.beta = 0.0;
    CHECK_THROWS_AS(validate_config(bad, 3), Error);
    bad = cfg;
    bad.gamma = 1.5;
    CHECK_THROWS_AS(validate_config(bad, 3), Error);
    bad = cfg;
    bad.lower[1] = 0.9;
    bad.upper[1] = 0.5;
    CHECK_THROWS_AS(validate_config(bad, 3), Error);
    bad = cfg;
    bad.upper.assign(3, 0.3);
    CHECK(validate_config(bad, 3).size() == 1);

    const auto s = scenarios({{0.01, 0.03}, {0.03, 0.01}});
    const auto dflt = default_model_config(s, 1);
    CHECK(dflt.lower == std::vector<double>{0.5, 0.5});
    CHECK(dflt.upper == std::vector<double>{1.0, 1.0});
    CHECK(dflt.beta == 0.05);
    CHECK(dflt.mu0 == doctest::Approx(0.02));
    CHECK(equal_weight_mu0(s) == doctest::Approx(0.02));
}
