#include "cbfl/spectrum/spectrum.hpp"

#include "../support/helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <map>
#include <random>

using namespace cbfl;
using namespace cbfl::spectrum;
using cbfl::testing::records_from;

namespace {

constexpr auto V = Verdict::Violated;
constexpr auto S = Verdict::Satisfied;
constexpr auto E = Verdict::EvalError;

// Direct formulas, written independently of the library.
double ochiai_oracle(double ef, double ep, double F) {
    if (ef == 0) {
        return 0.0;
    }
    return ef / std::sqrt(F * (ef + ep));
}

double tarantula_oracle(double ef, double ep, double F, double P) {
    double f = F > 0 ? ef / F : 0.0;
    double p = P > 0 ? ep / P : 0.0;
    return f + p == 0 ? 0.0 : f / (f + p);
}

Records softmax_records() {
    return parse_records(cbfl::testing::read_text(cbfl::testing::softmax_dir() / "violations.jsonl"));
}

ir::GroundedCheck check(std::string cid, std::vector<int> lines, double weight = 1.0) {
    ir::GroundedCheck c;
    c.constraint_id = std::move(cid);
    c.attributed_lines = std::move(lines);
    c.region_weight = weight;
    c.site_line = c.attributed_lines.empty() ? 0 : c.attributed_lines.front();
    return c;
}

RankedLine line(int l, double s) {
    RankedLine r;
    r.line = l;
    r.score = s;
    return r;
}

} // namespace

TEST(Records, ParseAndRoundTrip) {
    std::string text = R"({"kind":"check","test_id":"t::a","cid":"c1","verdict":"violated","line":4,"err":null}
{"kind":"check","test_id":"t::a","cid":"c2","verdict":"eval_error","line":5,"err":"ZeroDivisionError: division by zero"}

{"kind":"outcome","test_id":"t::a","passed":false}
)";
    Records r = parse_records(text);
    ASSERT_EQ(r.checks.size(), 2u);
    ASSERT_EQ(r.outcomes.size(), 1u);
    EXPECT_EQ(r.checks[0].verdict, Verdict::Violated);
    EXPECT_EQ(r.checks[1].verdict, Verdict::EvalError);
    EXPECT_EQ(r.checks[1].err, "ZeroDivisionError: division by zero");
    EXPECT_EQ(r.checks[0].line, 4);
    EXPECT_FALSE(r.outcomes[0].passed);
    Records again = parse_records(to_jsonl(r));
    EXPECT_EQ(to_jsonl(again), to_jsonl(r));
}

TEST(Records, MalformedThrows) {
    EXPECT_THROW(parse_records("{not json}\n"), Error);
    EXPECT_THROW(parse_records(R"({"kind":"mystery"})"), Error);
    EXPECT_THROW(parse_records(R"({"kind":"check","test_id":"a","cid":"c","verdict":"maybe","line":1,"err":null})"),
                 Error);
}

TEST(Matrix, SoftmaxC4ViolatedInFailingOnly) {
    SpectrumMatrix m = build_matrix(softmax_records(), {"c1", "c2", "c3", "c4"});
    ASSERT_EQ(m.tests.size(), 4u);
    std::size_t c4 = *m.index_of("c4");
    for (std::size_t i = 0; i < m.tests.size(); ++i) {
        EXPECT_EQ(m.V[i][c4], !m.tests[i].second) << m.tests[i].first;
    }
    ConstraintCells cells = m.cells(c4);
    EXPECT_EQ(cells.ef, 2);
    EXPECT_EQ(cells.ep, 0);
    EXPECT_EQ(m.failing_total(), 2);
    EXPECT_EQ(m.passing_total(), 2);
}

TEST(Matrix, EmptyStream) {
    SpectrumMatrix m = build_matrix({}, {"c1", "c2"});
    EXPECT_TRUE(m.tests.empty());
    EXPECT_EQ(m.constraints.size(), 2u);
    EXPECT_TRUE(m.V.empty());
}

TEST(Matrix, RepeatedViolationsCollapse) {
    Records r = records_from({{"t1", "c1", V}, {"t1", "c1", V}, {"t1", "c1", V}, {"t1", "c1", V}, {"t1", "c1", V}},
                             {{"t1", false}});
    SpectrumMatrix m = build_matrix(r);
    EXPECT_EQ(m.cells(0).ef, 1);
    int ones = 0;
    for (const auto &row : m.V) {
        for (bool b : row) {
            ones += b;
        }
    }
    EXPECT_EQ(ones, 1);
}

TEST(Matrix, EvalErrorNeverSetsCell) {
    Records r = records_from({{"t1", "c1", E}, {"t2", "c1", E}, {"t2", "c2", S}}, {{"t1", false}, {"t2", true}});
    SpectrumMatrix m = build_matrix(r);
    EXPECT_EQ(m.cells(0).ef, 0);
    EXPECT_EQ(m.cells(0).ep, 0);
    EXPECT_EQ(m.cells(0).nf, 1);
    EXPECT_EQ(m.cells(0).np, 1);
}

TEST(Matrix, MissingOutcomeThrows) {
    Records r = records_from({{"t1", "c1", V}, {"t9", "c1", V}}, {{"t1", false}});
    try {
        build_matrix(r);
        FAIL();
    } catch (const MissingOutcome &e) {
        EXPECT_EQ(e.test_id(), "t9");
    }
}

TEST(Matrix, TestsWithoutRecordsStillCount) {
    Records r = records_from({{"t1", "c1", V}}, {{"t1", false}, {"t2", true}, {"t3", false}});
    SpectrumMatrix m = build_matrix(r, {"c1"});
    ConstraintCells c = m.cells(0);
    EXPECT_EQ(c.ef, 1);
    EXPECT_EQ(c.nf, 1);
    EXPECT_EQ(c.np, 1);
}

TEST(Ochiai, Examples) {
    EXPECT_EQ(ochiai({2, 0, 0, 2}, 2), 1.0);
    EXPECT_EQ(ochiai({0, 3, 2, 0}, 2), 0.0);
    EXPECT_NEAR(ochiai({2, 2, 0, 0}, 2), 2.0 / std::sqrt(8.0), 1e-12);
}

TEST(Tarantula, Examples) {
    EXPECT_EQ(tarantula({3, 0, 0, 4}, 3, 4), 1.0);
    EXPECT_EQ(tarantula({0, 2, 3, 0}, 3, 2), 0.0);
    EXPECT_NEAR(tarantula({1, 1, 1, 1}, 2, 2), 0.5, 1e-12);
}

TEST(Scores, BoundsAndZeroIffNoFailingViolation) {
    std::mt19937 rng(11);
    for (int i = 0; i < 2000; ++i) {
        int F = 1 + rng() % 10;
        int P = 1 + rng() % 10;
        int ef = rng() % (F + 1);
        int ep = rng() % (P + 1);
        ConstraintCells c{ef, ep, F - ef, P - ep};
        double o = ochiai(c, F);
        double t = tarantula(c, F, P);
        EXPECT_GE(o, 0.0);
        EXPECT_LE(o, 1.0);
        EXPECT_GE(t, 0.0);
        EXPECT_LE(t, 1.0);
        EXPECT_EQ(o == 0.0, ef == 0);
    }
}

TEST(Scores, OchiaiStrictlyIncreasingInEf) {
    for (int F = 1; F <= 12; ++F) {
        for (int ep = 0; ep <= 12; ++ep) {
            for (int ef = 0; ef < F; ++ef) {
                EXPECT_LT(ochiai({ef, ep, F - ef, 0}, F), ochiai({ef + 1, ep, F - ef - 1, 0}, F));
            }
        }
    }
}

TEST(Scores, RandomCellsMatchOracles) {
    std::mt19937 rng(12345);
    for (int i = 0; i < 1000; ++i) {
        int F = 1 + rng() % 50;
        int P = 1 + rng() % 50;
        int ef = rng() % (F + 1);
        int ep = rng() % (P + 1);
        ConstraintCells c{ef, ep, F - ef, P - ep};
        EXPECT_NEAR(ochiai(c, F), ochiai_oracle(ef, ep, F), 1e-12);
        EXPECT_NEAR(tarantula(c, F, P), tarantula_oracle(ef, ep, F, P), 1e-12);
    }
}

// Random matrices up to 6x6: conservation and scores from V directly.
TEST(Scores, BruteForceMatricesMatchOracle) {
    std::mt19937 rng(6);
    for (int round = 0; round < 500; ++round) {
        int tests = 1 + rng() % 6;
        int cons = 1 + rng() % 6;
        Records r;
        std::vector<bool> passed(tests);
        std::vector<std::vector<bool>> want(tests, std::vector<bool>(cons));
        std::vector<std::string> ids;
        for (int j = 0; j < cons; ++j) {
            ids.push_back("c" + std::to_string(j));
        }
        for (int i = 0; i < tests; ++i) {
            passed[i] = rng() % 2;
            std::string t = "t" + std::to_string(i);
            for (int j = 0; j < cons; ++j) {
                int fires = rng() % 3;
                for (int k = 0; k < fires; ++k) {
                    Verdict v = rng() % 3 == 0 ? V : (rng() % 4 == 0 ? E : S);
                    want[i][j] = want[i][j] || v == V;
                    r.checks.push_back({t, ids[j], v, 1, v == E ? "x" : ""});
                }
            }
            r.outcomes.push_back({t, static_cast<bool>(passed[i])});
        }
        SpectrumMatrix m = build_matrix(r, ids);
        int F = static_cast<int>(std::count(passed.begin(), passed.end(), false));
        int P = tests - F;
        auto scores = score_all(m, Scorer::Ochiai);
        auto tscores = score_all(m, Scorer::Tarantula);
        for (int j = 0; j < cons; ++j) {
            int ef = 0;
            int ep = 0;
            for (int i = 0; i < tests; ++i) {
                ef += want[i][j] && !passed[i];
                ep += want[i][j] && passed[i];
            }
            ConstraintCells c = m.cells(j);
            EXPECT_EQ(c.ef, ef);
            EXPECT_EQ(c.ep, ep);
            EXPECT_EQ(c.ef + c.nf, F);
            EXPECT_EQ(c.ep + c.np, P);
            EXPECT_EQ(scores[j].first, ids[j]);
            EXPECT_NEAR(scores[j].second, F == 0 ? 0.0 : ochiai_oracle(ef, ep, F), 1e-12);
            EXPECT_NEAR(tscores[j].second, tarantula_oracle(ef, ep, F, P), 1e-12);
        }
    }
}

TEST(Scores, SoftmaxWorkedExample) {
    SpectrumMatrix m = build_matrix(softmax_records(), {"c1", "c2", "c3", "c4"});
    auto s = score_all(m, Scorer::Ochiai);
    EXPECT_EQ(s[0].second, 0.0);
    EXPECT_EQ(s[1].second, 0.0);
    EXPECT_LT(s[2].second, 1.0);
    EXPECT_EQ(s[3].second, 1.0);
}

TEST(Scorer, Parse) {
    EXPECT_EQ(parse_scorer("ochiai"), Scorer::Ochiai);
    EXPECT_EQ(parse_scorer("tarantula"), Scorer::Tarantula);
    EXPECT_FALSE(parse_scorer("dstar"));
}

TEST(Attribute, MaxOverConstraints) {
    Ranking r = attribute({check("a", {5}), check("b", {5, 6})}, {{"a", 0.4}, {"b", 0.9}});
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].score, 0.9);
    EXPECT_EQ(r[0].line, 5);
    EXPECT_EQ(r[1].line, 6);
}

TEST(Attribute, FoldWithMaxOracle) {
    std::mt19937 rng(3);
    for (int round = 0; round < 200; ++round) {
        std::vector<ir::GroundedCheck> checks;
        std::vector<std::pair<std::string, double>> scores;
        std::map<int, double> want;
        int n = 1 + rng() % 6;
        for (int k = 0; k < n; ++k) {
            std::string id = "c" + std::to_string(k);
            double s = (rng() % 11) / 10.0;
            double w = std::vector<double>{0.3, 0.6, 0.9, 1.0}[rng() % 4];
            std::vector<int> lines;
            for (int l = 1; l <= 8; ++l) {
                if (rng() % 3 == 0) {
                    lines.push_back(l);
                }
            }
            checks.push_back(check(id, lines, w));
            scores.emplace_back(id, s);
            for (int l : lines) {
                if (s * w > 0) {
                    want[l] = std::max(want[l], s * w);
                }
            }
        }
        Ranking r = attribute(checks, scores);
        ASSERT_EQ(r.size(), want.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            EXPECT_DOUBLE_EQ(r[i].score, want.at(r[i].line));
            if (i > 0) {
                EXPECT_GE(r[i - 1].score, r[i].score - kTieEpsilon);
                if (std::abs(r[i - 1].score - r[i].score) <= kTieEpsilon) {
                    EXPECT_LT(r[i - 1].line, r[i].line);
                }
            }
        }
    }
}

TEST(Attribute, NoViolationsEmpty) {
    EXPECT_TRUE(attribute({check("a", {1, 2})}, {{"a", 0.0}}).empty());
    EXPECT_TRUE(attribute({}, {}).empty());
}

TEST(Attribute, WeightScalingKeepsOrder) {
    std::mt19937 rng(8);
    for (int round = 0; round < 200; ++round) {
        std::vector<ir::GroundedCheck> checks;
        std::vector<std::pair<std::string, double>> scores;
        for (int k = 0; k < 5; ++k) {
            std::string id = "c" + std::to_string(k);
            checks.push_back(check(id, {1 + static_cast<int>(rng() % 6)},
                                   std::vector<double>{0.3, 0.6, 0.9, 1.0}[rng() % 4]));
            scores.emplace_back(id, (1 + rng() % 100) / 100.0);
        }
        Ranking base = attribute(checks, scores);
        double factor = std::vector<double>{0.5, 0.25, 2.0, 0.1}[rng() % 4];
        for (auto &c : checks) {
            c.region_weight *= factor;
        }
        Ranking scaled = attribute(checks, scores);
        ASSERT_EQ(base.size(), scaled.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            EXPECT_EQ(base[i].line, scaled[i].line);
        }
    }
}

TEST(WorstCase, TruthMovesToEndOfGroup) {
    Ranking r{line(2, 0.9), line(5, 0.9), line(7, 0.9), line(1, 0.5)};
    Ranking o = order_worst_case(r, 2);
    EXPECT_EQ(o[0].line, 5);
    EXPECT_EQ(o[1].line, 7);
    EXPECT_EQ(o[2].line, 2);
    EXPECT_EQ(o[3].line, 1);
    EXPECT_EQ(order_worst_case(r, 42)[0].line, 2);
}

TEST(WorstCase, EpsilonTies) {
    Ranking r{line(3, 0.7), line(4, 0.7 + 1e-13), line(6, 0.7 - 1e-9)};
    Ranking o = order_worst_case(r, 3);
    EXPECT_EQ(o[1].line, 3);
    EXPECT_EQ(o[2].line, 6);
}

TEST(Metrics, TieAtTop) {
    Metrics m = metrics({line(5, 1.0), line(8, 1.0)}, 5, 10);
    EXPECT_EQ(m.rank, 2);
    EXPECT_FALSE(m.acc1);
    EXPECT_TRUE(m.acc3);
    EXPECT_TRUE(m.acc5);
}

TEST(Metrics, AbsentLine) {
    Metrics m = metrics({line(5, 1.0)}, 9, 10);
    EXPECT_FALSE(m.rank);
    EXPECT_FALSE(m.acc1);
    EXPECT_FALSE(m.acc3);
    EXPECT_FALSE(m.acc5);
}

TEST(Metrics, DirectDefinition) {
    Metrics m = metrics({line(5, 1.0), line(8, 0.5)}, 5, 8);
    EXPECT_EQ(m.rank, 1);
    EXPECT_TRUE(m.acc1);
    EXPECT_DOUBLE_EQ(m.pct_susp, 2.0 / 8.0);
}

TEST(Metrics, TierOrdersBeforeScore) {
    RankedLine a = line(3, 0.2);
    a.tier = 0;
    RankedLine b = line(4, 0.2);
    b.tier = 1;
    Metrics m = metrics({a, b}, 4, 4);
    EXPECT_EQ(m.rank, 2);
    EXPECT_EQ(metrics({a, b}, 3, 4).rank, 1);
}

TEST(Metrics, ExecutableLines) {
    ssa::SourceUnit u = ssa::make_source_unit(cbfl::testing::softmax_source(), "softmax");
    EXPECT_EQ(executable_lines(u), 7);
    ssa::SourceUnit d = ssa::make_source_unit("def f(x):\n    \"\"\"Doc.\"\"\"\n    y = x\n    return y\n", "f");
    EXPECT_EQ(executable_lines(d), 2);
}

TEST(Aggregate, HandComputed) {
    Metrics a;
    a.rank = 1;
    a.acc1 = a.acc3 = a.acc5 = true;
    a.pct_susp = 0.2;
    Metrics b;
    b.rank = 4;
    b.acc5 = true;
    b.pct_susp = 0.6;
    Metrics c;
    c.pct_susp = 0.1;
    Aggregate g = aggregate({a, b, c});
    EXPECT_EQ(g.programs, 3);
    EXPECT_DOUBLE_EQ(g.acc1, 1.0 / 3);
    EXPECT_DOUBLE_EQ(g.acc3, 1.0 / 3);
    EXPECT_DOUBLE_EQ(g.acc5, 2.0 / 3);
    EXPECT_DOUBLE_EQ(g.mean_pct_susp, 0.3);
    EXPECT_EQ(g.median_rank, 4.0);
    EXPECT_EQ(aggregate({a, b}).median_rank, 2.5);
    EXPECT_FALSE(aggregate({a, c, c}).median_rank);
    EXPECT_EQ(aggregate({}).programs, 0);
}
