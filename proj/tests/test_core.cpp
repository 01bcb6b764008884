#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "lsctl/construction.hpp"
#include "lsctl/error.hpp"
#include "lsctl/graph.hpp"
#include "lsctl/taillard.hpp"
#include "oracles.hpp"

using namespace lsctl;

namespace {

Instance two_by_two() {
    // job 0: m0 (3) -> m1 (2); job 1: m1 (4) -> m0 (1)
    return Instance(2, 2, {3, 2, 4, 1}, {0, 1, 1, 0}, "tiny");
}

Solution seq(std::vector<std::vector<OpId>> s) { return Solution{std::move(s)}; }

}  // namespace

TEST(Instance, RejectsNonPermutationMachineRow) {
    EXPECT_THROW(Instance(1, 2, {1, 1}, {0, 0}), Error);
    try {
        Instance(1, 2, {1, 1}, {0, 0});
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedInstance);
    }
}

TEST(Instance, RejectsNegativeTimes) { EXPECT_THROW(Instance(1, 1, {-1}, {0}), Error); }

TEST(Instance, WorkPrefixesAreConsistent) {
    auto inst = generate_instance(4, 5, 3);
    for (int j = 0; j < 4; ++j) {
        Time total = 0;
        for (int k = 0; k < 5; ++k) total += inst.proc(j, k);
        for (int k = 0; k < 5; ++k) EXPECT_EQ(inst.cumulative_work(j, k) + inst.remaining_work(j, k) - inst.proc(j, k), total);
    }
}

TEST(Graph, TwoByTwoHandComputed) {
    auto inst = two_by_two();
    // m0: j0 then j1; m1: j1 then j0
    auto g = build_graph(inst, seq({{{0, 0}, {1, 1}}, {{1, 0}, {0, 1}}}));
    EXPECT_EQ(g.head(inst.index(0, 0)), 0);
    EXPECT_EQ(g.head(inst.index(1, 0)), 0);
    EXPECT_EQ(g.head(inst.index(0, 1)), 4);
    EXPECT_EQ(g.head(inst.index(1, 1)), 4);
    EXPECT_EQ(g.makespan(), 6);
}

TEST(Graph, DetectsCycle) {
    auto inst = two_by_two();
    // m0: j1 before j0 and m1: j0 before j1 -> j0.1 < j1.0 < j1.1 < j0.0 < j0.1
    try {
        build_graph(inst, seq({{{1, 1}, {0, 0}}, {{0, 1}, {1, 0}}}));
        FAIL() << "expected a cycle";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CyclicSolution);
    }
}

TEST(Graph, ValidateReportsStructuralProblems) {
    auto inst = two_by_two();
    auto issues = validate(inst, seq({{{0, 0}, {0, 0}}, {{1, 0}, {0, 1}}}));
    ASSERT_FALSE(issues.empty());
    EXPECT_EQ(issues.front().code, ErrorCode::MalformedSolution);
    EXPECT_FALSE(validate(inst, seq({{{0, 0}}, {{1, 0}, {0, 1}}})).empty());
    EXPECT_FALSE(validate(inst, seq({{{0, 1}, {1, 1}}, {{1, 0}, {0, 0}}})).empty());  // wrong machine
    EXPECT_TRUE(validate(inst, seq({{{0, 0}, {1, 1}}, {{1, 0}, {0, 1}}})).empty());
}

TEST(Graph, MakespanMatchesEventSimulation) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 300; ++t) {
        const int J = 1 + static_cast<int>(rng() % 5);
        const int M = 1 + static_cast<int>(rng() % 5);
        auto inst = generate_instance(J, M, rng());
        auto sol = oracle::random_feasible_solution(inst, rng);
        auto sim = oracle::simulate_makespan(inst, sol);
        ASSERT_TRUE(sim);
        EXPECT_EQ(build_graph(inst, sol).makespan(), *sim);
    }
}

TEST(Graph, HeadTailRecurrencesHold) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        auto inst = generate_instance(5, 4, rng());
        auto g = build_graph(inst, oracle::random_feasible_solution(inst, rng));
        for (int v = 0; v < inst.num_ops(); ++v) {
            Time h = 0, q = 0;
            for (int p : {g.job_pred(v), g.machine_pred(v)})
                if (p >= 0) h = std::max(h, g.head(p) + g.proc(p));
            for (int s : {g.job_succ(v), g.machine_succ(v)})
                if (s >= 0) q = std::max(q, g.proc(s) + g.tail(s));
            EXPECT_EQ(g.head(v), h);
            EXPECT_EQ(g.tail(v), q);
            EXPECT_LE(g.head(v) + g.proc(v) + g.tail(v), g.makespan());
        }
    }
}

TEST(Graph, CriticalSetMatchesPathEnumeration) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 200; ++t) {
        auto inst = generate_instance(3, 3, rng());
        auto sol = oracle::random_feasible_solution(inst, rng);
        auto g = build_graph(inst, sol);
        auto ref = oracle::enumerate_paths(inst, sol);
        EXPECT_EQ(g.makespan(), ref.longest);
        for (int v = 0; v < inst.num_ops(); ++v) EXPECT_EQ(g.is_critical(v), ref.critical.count(v) == 1) << v;
        const auto& path = g.critical_path();
        ASSERT_FALSE(path.empty());
        Time len = 0;
        for (std::size_t i = 0; i < path.size(); ++i) {
            len += g.proc(path[i]);
            if (i + 1 < path.size())
                EXPECT_TRUE(g.job_succ(path[i]) == path[i + 1] || g.machine_succ(path[i]) == path[i + 1]);
        }
        EXPECT_EQ(g.head(path.front()), 0);
        EXPECT_EQ(g.tail(path.back()), 0);
        EXPECT_EQ(len, g.makespan());
    }
}

TEST(Graph, BlocksAreMaximalMachineRunsOnThePath) {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 100; ++t) {
        auto inst = generate_instance(6, 6, rng());
        auto g = build_graph(inst, oracle::random_feasible_solution(inst, rng));
        const auto blocks = critical_blocks(g);
        std::size_t covered = 0;
        for (const auto& b : blocks) {
            covered += static_cast<std::size_t>(b.size());
            ASSERT_EQ(static_cast<int>(b.ops.size()), b.size());
            for (int i = 0; i < b.size(); ++i) {
                const int op = g.machine_order(b.machine)[static_cast<std::size_t>(b.first + i)];
                EXPECT_EQ(inst.index(b.ops[static_cast<std::size_t>(i)].job, b.ops[static_cast<std::size_t>(i)].pos), op);
                EXPECT_TRUE(g.is_critical(op));
            }
        }
        EXPECT_EQ(covered, g.critical_path().size());
    }
}

TEST(Graph, RoundTripsThroughSolution) {
    std::mt19937_64 rng(3);
    auto inst = generate_instance(5, 5, 1);
    auto sol = oracle::random_feasible_solution(inst, rng);
    EXPECT_EQ(build_graph(inst, sol).to_solution(), sol);
}

TEST(Dispatch, EveryRuleIsFeasible) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto inst = generate_instance(6, 4, s);
        for (auto rule : kAllDispatchRules) {
            auto sol = dispatch(inst, rule, s);
            EXPECT_TRUE(validate(inst, sol).empty()) << to_string(rule);
        }
    }
}

TEST(Dispatch, ScheduleIsNonDelay) {
    // No machine idles while an op it could run is ready: every op starts at the
    // earliest time its machine and job allow.
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto inst = generate_instance(5, 5, s);
        for (auto rule : {DispatchRule::SPT, DispatchRule::FDD_over_MWKR}) {
            auto sol = dispatch(inst, rule);
            auto g = build_graph(inst, sol);
            for (int k = 0; k < inst.num_machines(); ++k) {
                const auto& order = g.machine_order(k);
                for (std::size_t i = 0; i < order.size(); ++i) {
                    const int v = order[i];
                    const Time job_ready = g.job_pred(v) < 0 ? 0 : g.head(g.job_pred(v)) + g.proc(g.job_pred(v));
                    const Time mach_free = i == 0 ? 0 : g.head(order[i - 1]) + g.proc(order[i - 1]);
                    EXPECT_EQ(g.head(v), std::max(job_ready, mach_free));
                    // an op later in the machine order that was ready before this one started
                    for (std::size_t l = i + 1; l < order.size(); ++l) {
                        const int w = order[l];
                        const Time w_ready = g.job_pred(w) < 0 ? 0 : g.head(g.job_pred(w)) + g.proc(g.job_pred(w));
                        EXPECT_FALSE(w_ready <= mach_free && g.head(v) > std::max(mach_free, w_ready))
                            << "machine idled while op " << w << " was ready";
                    }
                }
            }
        }
    }
}

TEST(Dispatch, ZeroNoiseMatchesDeterministic) {
    auto inst = generate_instance(8, 6, 4);
    EXPECT_EQ(stochastic_dispatch(inst, DispatchRule::FDD_over_MWKR, 0.0, 99), dispatch(inst, DispatchRule::FDD_over_MWKR));
    auto a = stochastic_dispatch(inst, DispatchRule::FDD_over_MWKR, 0.5, 7);
    EXPECT_EQ(a, stochastic_dispatch(inst, DispatchRule::FDD_over_MWKR, 0.5, 7));
    EXPECT_TRUE(validate(inst, a).empty());
}

TEST(Dispatch, PriorityDefinitions) {
    auto inst = two_by_two();
    DispatchState st(inst);
    EXPECT_DOUBLE_EQ(priority(DispatchRule::SPT, {0, 0}, st, inst), 3.0);
    EXPECT_DOUBLE_EQ(priority(DispatchRule::MWKR, {1, 0}, st, inst), -5.0);
    EXPECT_DOUBLE_EQ(priority(DispatchRule::MOPNR, {0, 0}, st, inst), -2.0);
    EXPECT_DOUBLE_EQ(priority(DispatchRule::FDD, {0, 0}, st, inst), 3.0);
    EXPECT_DOUBLE_EQ(priority(DispatchRule::FDD_over_MWKR, {0, 0}, st, inst), 3.0 / 5.0);
}

TEST(Dispatch, RuleNamesRoundTrip) {
    for (auto rule : kAllDispatchRules) EXPECT_EQ(parse_dispatch_rule(to_string(rule)), rule);
    EXPECT_EQ(parse_dispatch_rule("fdd/mwkr"), DispatchRule::FDD_over_MWKR);
    EXPECT_FALSE(parse_dispatch_rule("EDD"));
}
