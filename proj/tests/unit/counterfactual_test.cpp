#include "cbfl/counterfactual/verify.hpp"

#include "../support/helpers.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cbfl;
using namespace cbfl::counterfactual;
using cbfl::testing::ScriptedBackend;
using cbfl::testing::TableRunner;

namespace {

const std::string kProgram = "def f(x):\n"
                             "    y = x + 1\n"
                             "    z = y * 2\n"
                             "    w = z - 3\n"
                             "    return w\n";

RankedConstraint ranked(const std::string &id, int line, double score) {
    return {cbfl::testing::constraint(id, ir::Region::Line, "True", cbfl::testing::line_anchor(line)), score, line};
}

std::string replaced(int line, const std::string &text) { return *apply_patch(kProgram, line, text); }

CausalVerdict verdict(const std::string &id, Status s, TestSet after, int line = 1) {
    CausalVerdict v;
    v.constraint_id = id;
    v.status = s;
    v.failing_after = std::move(after);
    v.line = line;
    return v;
}

spectrum::RankedLine rl(int line, double score) {
    spectrum::RankedLine r;
    r.line = line;
    r.score = score;
    return r;
}

std::string render(const spectrum::Ranking &r) { return spectrum::to_json(r).dump(); }

// Reply patch per line, read from the target-line section of the prompt.
std::string reply_by_line(const std::string &prompt, const std::map<int, std::string> &replies) {
    for (const auto &[line, text] : replies) {
        if (prompt.find("### Target line " + std::to_string(line) + "\n") != std::string::npos) {
            return text;
        }
    }
    return "";
}

} // namespace

TEST(Classify, TruthTableAgainstCounting) {
    std::vector<std::string> universe{"t1", "t2", "t3"};
    auto subset_of = [&](int mask) {
        TestSet s;
        for (int i = 0; i < 3; ++i) {
            if (mask & (1 << i)) {
                s.insert(universe[i]);
            }
        }
        return s;
    };
    for (int obs = 0; obs < 8; ++obs) {
        for (int patched = 0; patched < 8; ++patched) {
            TestSet o = subset_of(obs);
            TestSet p = subset_of(patched);
            int remaining = __builtin_popcount(obs & patched);
            int before = __builtin_popcount(obs);
            Status want = remaining == 0 ? Status::Primary : remaining < before ? Status::Secondary : Status::Irrelevant;
            EXPECT_EQ(classify(o, p, o), want) << obs << " " << patched;
        }
    }
}

TEST(Classify, NewFailuresOutsideObservedIgnored) {
    EXPECT_EQ(classify({"t1"}, {"t9"}, {"t1"}), Status::Primary);
    EXPECT_EQ(classify({"t1", "t2"}, {"t2", "t9"}, {"t1", "t2"}), Status::Secondary);
}

TEST(Prune, SubsetBelowIsRedundant) {
    auto out = prune_redundant({verdict("j", Status::Primary, {}), verdict("k", Status::Secondary, {"T4"})});
    EXPECT_FALSE(out[0].redundant);
    EXPECT_TRUE(out[1].redundant);
}

TEST(Prune, DisjointKept) {
    auto out = prune_redundant({verdict("j", Status::Secondary, {"T3"}), verdict("k", Status::Secondary, {"T4"})});
    EXPECT_FALSE(out[0].redundant);
    EXPECT_FALSE(out[1].redundant);
}

TEST(Prune, SingleUnchanged) {
    auto out = prune_redundant({verdict("j", Status::Secondary, {"T3"})});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_FALSE(out[0].redundant);
}

TEST(Prune, OnlyCausalVerdictsDominate) {
    auto out = prune_redundant({verdict("j", Status::Irrelevant, {"T3"}), verdict("o", Status::OverApproximate, {}),
                                verdict("k", Status::Secondary, {"T3"})});
    EXPECT_FALSE(out[2].redundant);
    EXPECT_FALSE(out[1].redundant);
}

TEST(Prune, MatchesDefinitionOnRandomLists) {
    std::mt19937 rng(5);
    std::vector<Status> kinds{Status::Primary, Status::Secondary, Status::Irrelevant, Status::OverApproximate,
                              Status::Error};
    for (int round = 0; round < 500; ++round) {
        std::vector<CausalVerdict> in;
        int n = 1 + rng() % 6;
        for (int i = 0; i < n; ++i) {
            TestSet s;
            for (const char *t : {"a", "b", "c"}) {
                if (rng() % 2) {
                    s.insert(t);
                }
            }
            in.push_back(verdict("c" + std::to_string(i), kinds[rng() % kinds.size()], s));
        }
        auto out = prune_redundant(in);
        std::vector<bool> want(n, false);
        for (int k = 0; k < n; ++k) {
            if (in[k].status == Status::OverApproximate || in[k].status == Status::Error) {
                continue;
            }
            for (int j = 0; j < k; ++j) {
                bool causal = in[j].status == Status::Primary || in[j].status == Status::Secondary;
                if (causal && !want[j] &&
                    std::includes(in[k].failing_after.begin(), in[k].failing_after.end(),
                                  in[j].failing_after.begin(), in[j].failing_after.end())) {
                    want[k] = true;
                    break;
                }
            }
            EXPECT_EQ(out[k].redundant, want[k]) << round << " " << k;
        }
    }
}

TEST(Patch, ApplyKeepsIndentAndTouchesOneLine) {
    auto out = apply_patch(kProgram, 3, "z = y * 3");
    ASSERT_TRUE(out);
    EXPECT_EQ(*out, "def f(x):\n    y = x + 1\n    z = y * 3\n    w = z - 3\n    return w\n");
    EXPECT_EQ(*apply_patch(kProgram, 3, "        z = y * 3"), *out);
}

TEST(Patch, ApplyRejects) {
    EXPECT_FALSE(apply_patch(kProgram, 3, "z = = 1"));
    EXPECT_FALSE(apply_patch(kProgram, 0, "z = 1"));
    EXPECT_FALSE(apply_patch(kProgram, 9, "z = 1"));
    EXPECT_FALSE(apply_patch(kProgram, 3, "   "));
}

TEST(Patch, ExtractLine) {
    EXPECT_EQ(extract_patch_line("    z = y\n"), "z = y");
    EXPECT_EQ(extract_patch_line("```python\nz = y\n```"), "z = y");
    EXPECT_EQ(extract_patch_line("\n\nz = y  \n\n"), "z = y");
    EXPECT_FALSE(extract_patch_line("a = 1\nb = 2"));
    EXPECT_FALSE(extract_patch_line(""));
}

TEST(Patch, PromptContainsConstraintAndLine) {
    PatchRequest r{cbfl::testing::constraint("c7", ir::Region::Line, "z__1 > 0", cbfl::testing::line_anchor(3)), 3,
                   "    z = y * 2", kProgram};
    std::string p = build_patch_prompt(r);
    EXPECT_NE(p.find("id: c7\n"), std::string::npos);
    EXPECT_NE(p.find("spec: z__1 > 0\n"), std::string::npos);
    EXPECT_NE(p.find("### Target line 3\n    z = y * 2\n"), std::string::npos);
    EXPECT_NE(p.find(kProgram), std::string::npos);
    EXPECT_EQ(build_patch_prompt(r), p);
}

TEST(OverApprox, PassingViolationMarks) {
    auto r = cbfl::testing::records_from({{"p", "c1", spectrum::Verdict::Violated},
                                          {"f", "c2", spectrum::Verdict::Violated},
                                          {"p", "c3", spectrum::Verdict::EvalError}},
                                         {{"p", true}, {"f", false}});
    EXPECT_EQ(over_approximate(spectrum::build_matrix(r)), (std::set<std::string>{"c1"}));
}

TEST(Verify, EmptyListMakesNoCalls) {
    TableRunner runner;
    runner.table[kProgram] = {"t1"};
    ScriptedBackend backend;
    auto out = verify({{}, kProgram, {"t1"}, {}}, runner, backend);
    EXPECT_TRUE(out.empty());
    EXPECT_TRUE(backend.prompts.empty());
    EXPECT_EQ(runner.seen.size(), 1u);
}

TEST(Verify, OverApproximateNeverReachesBackend) {
    TableRunner runner;
    runner.table[kProgram] = {"t1"};
    ScriptedBackend backend;
    backend.reply = [](auto, const std::string &) { return "y = x"; };
    auto out = verify({{ranked("c1", 2, 0.9), ranked("c2", 3, 0.8)}, kProgram, {"t1"}, {"c1", "c2"}}, runner, backend);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].status, Status::OverApproximate);
    EXPECT_EQ(out[1].status, Status::OverApproximate);
    EXPECT_TRUE(backend.prompts.empty());
    EXPECT_EQ(runner.seen.size(), 1u);
}

TEST(Verify, StopsAtFirstPrimary) {
    TableRunner runner;
    runner.table[kProgram] = {"t1", "t2"};
    runner.table[replaced(2, "y = x + 2")] = {"t2"};
    runner.table[replaced(3, "z = y * 3")] = {};
    runner.fallback = [](const std::string &) { return TestSet{"t1", "t2"}; };
    ScriptedBackend backend;
    backend.reply = [](auto, const std::string &p) {
        return reply_by_line(p, {{2, "y = x + 2"}, {3, "z = y * 3"}, {4, "w = z"}});
    };
    auto out = verify({{ranked("c1", 2, 0.9), ranked("c2", 3, 0.8), ranked("c3", 4, 0.7)}, kProgram, {"t1", "t2"}, {}},
                      runner, backend);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].status, Status::Secondary);
    EXPECT_EQ(out[1].status, Status::Primary);
    EXPECT_EQ(backend.prompts.size(), 2u);
    for (double t : backend.temperatures) {
        EXPECT_EQ(t, 0.0);
    }
}

TEST(Verify, ZeroScoreSkipped) {
    TableRunner runner;
    runner.table[kProgram] = {"t1"};
    ScriptedBackend backend;
    auto out = verify({{ranked("c1", 2, 0.0)}, kProgram, {"t1"}, {}}, runner, backend);
    EXPECT_TRUE(out.empty());
    EXPECT_TRUE(backend.prompts.empty());
}

TEST(Verify, BaselineMismatchThrows) {
    TableRunner runner;
    runner.table[kProgram] = {"t1"};
    ScriptedBackend backend;
    EXPECT_THROW(verify({{ranked("c1", 2, 0.5)}, kProgram, {"t1", "t2"}, {}}, runner, backend), BaselineMismatch);
}

TEST(Verify, NoFailuresNothingToDo) {
    TableRunner runner;
    ScriptedBackend backend;
    EXPECT_TRUE(verify({{ranked("c1", 2, 0.5)}, kProgram, {}, {}}, runner, backend).empty());
    EXPECT_TRUE(backend.prompts.empty());
}

TEST(Verify, BadRepliesAreErrors) {
    TableRunner runner;
    runner.table[kProgram] = {"t1"};
    ScriptedBackend backend;
    backend.reply = [](auto, const std::string &p) {
        return reply_by_line(p, {{2, "y = 1\nz = 2"}, {3, "z = = y"}});
    };
    auto out = verify({{ranked("c1", 2, 0.9), ranked("c2", 3, 0.8), ranked("c3", 99, 0.7)}, kProgram, {"t1"}, {}},
                      runner, backend);
    ASSERT_EQ(out.size(), 3u);
    for (const auto &v : out) {
        EXPECT_EQ(v.status, Status::Error) << v.constraint_id;
    }
    EXPECT_EQ(runner.seen.size(), 1u);
}

TEST(Verify, BackendFailureIsError) {
    struct Failing : ScriptedBackend {
        std::string complete(inference::Namespace, const std::string &, double) override {
            throw inference::FixtureMiss("abc");
        }
    } backend;
    TableRunner runner;
    runner.table[kProgram] = {"t1"};
    auto out = verify({{ranked("c1", 2, 0.9)}, kProgram, {"t1"}, {}}, runner, backend);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].status, Status::Error);
    EXPECT_NE(out[0].detail.find("abc"), std::string::npos);
}

TEST(Verify, PatchesUseOwnNamespace) {
    TableRunner runner;
    runner.table[kProgram] = {"t1"};
    std::vector<inference::Namespace> seen;
    ScriptedBackend backend;
    backend.reply = [&](inference::Namespace ns, const std::string &) {
        seen.push_back(ns);
        return "y = x";
    };
    runner.fallback = [](const std::string &) { return TestSet{"t1"}; };
    verify({{ranked("c1", 2, 0.9)}, kProgram, {"t1"}, {}}, runner, backend);
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_EQ(seen[0], inference::Namespace::Patches);
}

TEST(FinalRanking, AllIrrelevantKeepsFallback) {
    spectrum::Ranking fallback{rl(5, 1.0), rl(3, 0.5), rl(4, 0.5)};
    std::vector<CausalVerdict> v{verdict("a", Status::Irrelevant, {"t"}, 5), verdict("b", Status::Irrelevant, {"t"}, 3)};
    EXPECT_EQ(render(final_ranking(v, fallback)), render(fallback));
    EXPECT_EQ(render(final_ranking({}, fallback)), render(fallback));
}

TEST(FinalRanking, SecondaryWithoutPrimaryKeepsFallback) {
    spectrum::Ranking fallback{rl(5, 1.0), rl(3, 0.5)};
    EXPECT_EQ(render(final_ranking({verdict("a", Status::Secondary, {"t"}, 3)}, fallback)), render(fallback));
}

TEST(FinalRanking, PrimaryThenSecondaryThenTail) {
    spectrum::Ranking fallback{rl(5, 1.0), rl(3, 0.5), rl(4, 0.4), rl(7, 0.1)};
    std::vector<CausalVerdict> v{verdict("a", Status::Secondary, {"t2"}, 5), verdict("b", Status::Irrelevant, {"t"}, 3),
                                 verdict("c", Status::Primary, {}, 4)};
    auto out = final_ranking(v, fallback);
    ASSERT_EQ(out.size(), 4u);
    EXPECT_EQ(out[0].line, 4);
    EXPECT_EQ(out[0].tier, 0);
    EXPECT_EQ(out[1].line, 5);
    EXPECT_EQ(out[1].tier, 1);
    EXPECT_EQ(out[2].line, 3);
    EXPECT_EQ(out[3].line, 7);
    EXPECT_EQ(spectrum::metrics(out, 4, 5).rank, 1);
}

TEST(FinalRanking, RedundantDropped) {
    spectrum::Ranking fallback{rl(5, 1.0), rl(3, 0.5)};
    auto v = prune_redundant({verdict("a", Status::Primary, {}, 3), verdict("b", Status::Secondary, {"t"}, 5)});
    auto out = final_ranking(v, fallback);
    EXPECT_EQ(out[0].line, 3);
    EXPECT_EQ(out[1].line, 5);
    EXPECT_EQ(out[1].tier, 2);
}
