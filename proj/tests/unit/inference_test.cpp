#include "cbfl/inference/inference.hpp"

#include "../support/helpers.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace cbfl;
using namespace cbfl::inference;
using cbfl::testing::read_text;
using cbfl::testing::ScriptedBackend;
using cbfl::testing::TempDir;
using cbfl::testing::write_text;

namespace {

struct Softmax {
    ssa::SourceUnit unit = ssa::make_source_unit(cbfl::testing::softmax_source(), "softmax");
    ssa::SsaProgram ssa = ssa::to_ssa(unit);
};

std::vector<TestCaseDoc> docs() {
    return {{"tests/test_softmax.py::test_a", TestKind::Passing, "def test_a():\n    assert True\n", "passes"},
            {"tests/test_softmax.py::test_b", TestKind::Failing, "def test_b():\n    assert False\n",
             "AssertionError"}};
}

} // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Prompt, Deterministic) {
    Softmax s;
    PromptBundle a = build_prompt(s.unit, s.ssa, docs());
    PromptBundle b = build_prompt(s.unit, s.ssa, docs());
    EXPECT_EQ(a.text(), b.text());
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.hash(), sha256_hex(a.text()));
    auto other = docs();
    other[1].expected_or_traceback = "ValueError";
    EXPECT_NE(build_prompt(s.unit, s.ssa, other).hash(), a.hash());
}

TEST(Prompt, SectionsCarryProgramSsaAndTests) {
    Softmax s;
    PromptBundle p = build_prompt(s.unit, s.ssa, docs());
    EXPECT_NE(p.program_section.find(s.ssa.ssa_text), std::string::npos);
    EXPECT_NE(p.program_section.find(ssa::render_def_map(s.ssa)), std::string::npos);
    EXPECT_NE(p.program_section.find("shifted__1"), std::string::npos);
    EXPECT_NE(p.tests_section.find("## tests/test_softmax.py::test_a\n"), std::string::npos);
    EXPECT_NE(p.tests_section.find("AssertionError"), std::string::npos);
    for (ir::Category c : ir::all_categories()) {
        EXPECT_NE(p.task_and_schema.find(std::string(ir::to_string(c))), std::string::npos);
    }
    for (ir::Region r : ir::all_regions()) {
        EXPECT_NE(p.anchor_rules.find(std::string(ir::to_string(r))), std::string::npos);
    }
}

TEST(Prompt, MissingKindSaysNone) {
    Softmax s;
    PromptBundle p = build_prompt(s.unit, s.ssa, {docs()[0]});
    std::string failing = p.tests_section.substr(p.tests_section.find("### Failing Tests"));
    EXPECT_NE(failing.find("none\n"), std::string::npos);
}

TEST(Prompt, EmptyTestsThrows) {
    Softmax s;
    EXPECT_THROW(build_prompt(s.unit, s.ssa, {}), EmptyTests);
}

TEST(Fence, Strip) {
    EXPECT_EQ(strip_code_fence("```json\n{\"a\": 1}\n```"), "{\"a\": 1}");
    EXPECT_EQ(strip_code_fence("  {\"a\": 1}\n"), "{\"a\": 1}");
    EXPECT_EQ(strip_code_fence("```\nx\n```\n"), "x");
    EXPECT_EQ(strip_code_fence(""), "");
}

TEST(FixtureKey, Namespaces) {
    EXPECT_EQ(fixture_key(Namespace::Constraints, "p"), sha256_hex("p"));
    EXPECT_EQ(fixture_key(Namespace::Patches, "p"), "patch:" + sha256_hex("p"));
}

TEST(Replay, HitAndMiss) {
    TempDir d;
    auto path = (d.path() / "f.json").string();
    write_text(path, nlohmann::json{{sha256_hex("q"), "{}"}, {"patch:" + sha256_hex("q"), "x = 1"}}.dump());
    ReplayBackend b(path);
    EXPECT_EQ(b.complete(Namespace::Constraints, "q", 0.0), "{}");
    EXPECT_EQ(b.complete(Namespace::Patches, "q", 0.0), "x = 1");
    try {
        b.complete(Namespace::Constraints, "other", 0.0);
        FAIL();
    } catch (const FixtureMiss &e) {
        EXPECT_EQ(e.hash(), sha256_hex("other"));
    }
}

TEST(Replay, BadFileThrows) {
    TempDir d;
    EXPECT_THROW(ReplayBackend((d.path() / "missing.json").string()), IoError);
    write_text(d.path() / "bad.json", "[1, 2]");
    EXPECT_THROW(ReplayBackend((d.path() / "bad.json").string()), IoError);
}

TEST(Replay, CorpusFixtureLoads) {
    ReplayBackend b((cbfl::testing::softmax_dir() / "fixtures.json").string());
    auto j = nlohmann::json::parse(read_text(cbfl::testing::softmax_dir() / "fixtures.json"));
    EXPECT_GE(j.size(), 2u);
}

TEST(Record, RoundTripAndOverwrite) {
    TempDir d;
    std::string path = (d.path() / "fx.json").string();
    Softmax s;
    PromptBundle p = build_prompt(s.unit, s.ssa, docs());
    EXPECT_TRUE(record_fixture(p, "{\"constraints\": []}", path));
    ReplayBackend b(path);
    EXPECT_EQ(infer_constraints(p, b), "{\"constraints\": []}");
    EXPECT_FALSE(record_fixture(p, "{\"constraints\": [], \"x\": 1}", path));
    EXPECT_EQ(ReplayBackend(path).complete(Namespace::Constraints, p.text(), 0.0), "{\"constraints\": [], \"x\": 1}");
}

TEST(Record, RejectsNonJson) {
    TempDir d;
    std::string path = (d.path() / "fx.json").string();
    Softmax s;
    EXPECT_THROW(record_fixture(build_prompt(s.unit, s.ssa, docs()), "not json", path), Error);
    EXPECT_FALSE(std::filesystem::exists(path));
}

TEST(Record, ConcurrentWritersKeepAllEntries) {
    TempDir d;
    std::string path = (d.path() / "fx.json").string();
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 10; ++i) {
                record_fixture_entry(path, "k" + std::to_string(t) + "_" + std::to_string(i), "{}");
            }
        });
    }
    for (auto &t : threads) {
        t.join();
    }
    EXPECT_EQ(nlohmann::json::parse(read_text(path)).size(), 40u);
}

TEST(Recording, WrapsInnerBackend) {
    TempDir d;
    std::string path = (d.path() / "fx.json").string();
    ScriptedBackend inner;
    inner.reply = [](Namespace ns, const std::string &) { return ns == Namespace::Patches ? "y = 2" : "{}"; };
    RecordingBackend rec(inner, path);
    EXPECT_EQ(rec.complete(Namespace::Patches, "p1", 0.0), "y = 2");
    EXPECT_EQ(rec.complete(Namespace::Constraints, "p2", 0.8), "{}");
    ReplayBackend replay(path);
    EXPECT_EQ(replay.complete(Namespace::Patches, "p1", 0.0), "y = 2");
    EXPECT_EQ(replay.complete(Namespace::Constraints, "p2", 0.0), "{}");
}

TEST(Infer, LiveRetriesOnceThenEmpty) {
    struct Live : ScriptedBackend {
        BackendKind kind() const override { return BackendKind::Live; }
    };
    Softmax s;
    PromptBundle p = build_prompt(s.unit, s.ssa, docs());

    Live ok;
    int calls = 0;
    ok.reply = [&](Namespace, const std::string &) { return ++calls == 1 ? "sure!" : "```json\n{\"constraints\": []}\n```"; };
    EXPECT_EQ(infer_constraints(p, ok, 0.8), "{\"constraints\": []}");
    ASSERT_EQ(ok.prompts.size(), 2u);
    EXPECT_NE(ok.prompts[1].find(kJsonReminder), std::string::npos);
    EXPECT_EQ(ok.temperatures[0], 0.8);

    Live bad;
    bad.reply = [](Namespace, const std::string &) { return "nope"; };
    std::string out = infer_constraints(p, bad);
    EXPECT_EQ(bad.prompts.size(), 2u);
    EXPECT_TRUE(nlohmann::json::parse(out).is_object());
}

TEST(Live, MissingEnvIsUnavailable) {
    LiveConfig c;
    EXPECT_THROW(LiveBackend{c}, BackendUnavailable);
    c.api_key = "k";
    EXPECT_THROW(LiveBackend{c}, BackendUnavailable);
}
