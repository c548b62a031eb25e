#include "locport/branch_bound.hpp"
#include "locport/errors.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace locport;

namespace {

const LpSolveFn kLp = [](const MilpModel& m) { return solve_lp_relaxation(m); };

MilpModel knapsack(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> w(3, 20);
    MilpModel m;
    std::vector<Term> cap;
    for (std::size_t j = 0; j < n; ++j) {
        m.add_var("b" + std::to_string(j), 0, 1, VarType::Binary, w(rng));
        cap.push_back({j, static_cast<double>(w(rng))});
    }
    m.add_row("cap", cap, -kInf, 5.0 * static_cast<double>(n));
    return m;
}

} // namespace

TEST_CASE("branch and bound matches enumeration on random milps") {
    std::mt19937_64 rng(17);
    int solved = 0;
    for (int k = 0; k < 60; ++k) {
        const auto m = oracle::random_milp(rng, 8);
        const auto want = brute_force_milp(m, kLp);
        for (auto rule : {Branching::MostFractional, Branching::PseudoCost}) {
            auto o = oracle::exact_bnb();
            o.branching = rule;
            const auto got = solve_milp(m, o);
            if (want.status == MilpStatus::Optimal) {
                REQUIRE(got.status == MilpStatus::Optimal);
                CHECK(std::abs(got.objective - want.objective) <= 1e-8 * std::max(1.0, std::abs(want.objective)));
                CHECK(max_infeasibility(m, got.values) <= 1e-7);
                for (std::size_t j : m.binaries()) CHECK((got.values[j] == 0.0 || got.values[j] == 1.0));
                ++solved;
            } else {
                CHECK(got.status == want.status);
            }
        }
    }
    CHECK(solved > 40);
}

TEST_CASE("child bounds never exceed the parent bound") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto m = knapsack(14, seed);
        auto o = oracle::exact_bnb();
        std::size_t events = 0;
        o.node_observer = [&](const NodeEvent& e) {
            ++events;
            if (e.depth == 0) CHECK(std::isinf(e.parent_bound));
            if (e.feasible) CHECK(e.lp_objective <= e.parent_bound + 1e-9);
        };
        const auto s = solve_milp(m, o);
        CHECK(s.status == MilpStatus::Optimal);
        CHECK(events == s.node_count);
    }
}

TEST_CASE("progress reports are consistent") {
    const auto m = knapsack(16, 9);
    auto o = oracle::exact_bnb();
    std::vector<BnbProgress> seen;
    o.progress = [&](const BnbProgress& p) { seen.push_back(p); };
    const auto s = solve_milp(m, o);
    REQUIRE(seen.size() >= 2);
    CHECK_FALSE(seen.front().has_incumbent);
    CHECK(seen.back().has_incumbent);
    CHECK(seen.back().incumbent == doctest::Approx(s.objective));
    for (const auto& p : seen) {
        if (p.has_incumbent) CHECK(p.bound >= p.incumbent - 1e-9);
    }
}

TEST_CASE("repeated solves are identical") {
    const auto m = knapsack(18, 4);
    for (auto rule : {Branching::MostFractional, Branching::PseudoCost}) {
        BnbOptions o;
        o.branching = rule;
        const auto a = solve_milp(m, o);
        const auto b = solve_milp(m, o);
        CHECK(a.objective == b.objective);
        CHECK(a.values == b.values);
        CHECK(a.node_count == b.node_count);
    }
}

TEST_CASE("warm starts") {
    const auto m = knapsack(12, 2);
    const auto cold = solve_milp(m);

    BnbOptions good;
    good.warm_start = cold.values;
    const auto warm = solve_milp(m, good);
    CHECK(warm.objective == doctest::Approx(cold.objective));
    CHECK(warm.warnings.empty());
    CHECK(warm.node_count <= cold.node_count);

    BnbOptions bad;
    bad.warm_start = std::vector<double>(m.num_vars(), 1.0);
    const auto rejected = solve_milp(m, bad);
    CHECK(rejected.objective == doctest::Approx(cold.objective));
    REQUIRE(rejected.warnings.size() == 1);
    CHECK(rejected.warnings[0].find("InfeasibleWarmStart") != std::string::npos);

    BnbOptions short_vec;
    short_vec.warm_start = std::vector<double>{0.0};
    CHECK_FALSE(solve_milp(m, short_vec).warnings.empty());
}

TEST_CASE("limits") {
    const auto m = knapsack(30, 6);

    BnbOptions one;
    one.node_limit = 1;
    const auto root_only = solve_milp(m, one);
    CHECK(root_only.node_count == 1);
    CHECK(root_only.status == MilpStatus::NoSolution);
    CHECK(std::isfinite(root_only.best_bound));

    BnbOptions few;
    few.node_limit = 40;
    const auto partial = solve_milp(m, few);
    CHECK(partial.status == MilpStatus::FeasibleTimeLimit);
    CHECK(partial.best_bound >= partial.objective);
    CHECK(partial.gap == doctest::Approx(relative_gap(partial.objective, partial.best_bound)));

    BnbOptions tiny;
    tiny.time_limit = 1e-9;
    const auto timed = solve_milp(m, tiny);
    CHECK(timed.node_count >= 1);
    CHECK((timed.status == MilpStatus::NoSolution || timed.status == MilpStatus::FeasibleTimeLimit));
}

TEST_CASE("infeasible, unbounded and invalid") {
    auto m = knapsack(4, 1);
    m.add_row("odd", {{0, 2.0}, {1, 2.0}}, 1.0, 1.0);
    CHECK(solve_milp(m).status == MilpStatus::Infeasible);

    MilpModel unb;
    unb.add_var("b", 0, 1, VarType::Binary, 1.0);
    unb.add_var("x", 0, kInf, VarType::Continuous, 1.0);
    CHECK(solve_milp(unb).status == MilpStatus::Unbounded);

    BnbOptions neg;
    neg.time_limit = -1.0;
    CHECK_THROWS_AS(solve_milp(knapsack(3, 1), neg), Error);
    BnbOptions loose;
    loose.rel_gap_tol = 0.5;
    CHECK_THROWS_AS(solve_milp(knapsack(3, 1), loose), Error);
    auto broken = knapsack(3, 1);
    broken.vars[0].upper = 3.0;
    CHECK_THROWS_AS(solve_milp(broken), Error);
}

TEST_CASE("minimization") {
    std::mt19937_64 rng(44);
    int seen = 0;
    for (int k = 0; k < 40 && seen < 10; ++k) {
        auto m = oracle::random_milp(rng, 6);
        if (m.sense != Sense::Minimize) continue;
        const auto want = brute_force_milp(m, kLp);
        const auto got = solve_milp(m, oracle::exact_bnb());
        if (!want.has_solution()) continue;
        ++seen;
        CHECK(got.objective == doctest::Approx(want.objective).epsilon(1e-8));
    }
    CHECK(seen > 0);
}

TEST_CASE("branch variable selection") {
    const std::vector<std::size_t> bins{0, 1, 2, 3};
    CHECK(branch_variable(std::vector<double>{0.0, 1.0, 1e-7, 1.0 - 1e-7}, bins, 1e-6) == std::nullopt);
    CHECK(branch_variable(std::vector<double>{0.2, 0.5, 0.9, 0.0}, bins, 1e-6) == 1u);
    CHECK(branch_variable(std::vector<double>{0.3, 0.7, 0.0, 1.0}, bins, 1e-6) == 0u);
    CHECK(branch_variable(std::vector<double>{0.0, 0.1, 0.0, 0.9}, bins, 1e-6) == 1u);
}
