#pragma once

#include "cbfl/counterfactual/verify.hpp"
#include "cbfl/inference/inference.hpp"
#include "cbfl/ir/constraint.hpp"
#include "cbfl/ir/ground.hpp"
#include "cbfl/spectrum/spectrum.hpp"
#include "cbfl/ssa/ssa.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace cbfl::testing {

inline std::string source_dir() { return CBFL_SOURCE_DIR; }

inline std::string read_text(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path &p, const std::string &text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::filesystem::path softmax_dir() { return std::filesystem::path(source_dir()) / "corpus" / "softmax"; }

inline std::string softmax_source() { return read_text(softmax_dir() / "buggy.py"); }

inline std::string softmax_document() {
    auto j = nlohmann::json::parse(read_text(softmax_dir() / "fixtures.json"));
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key().rfind("patch:", 0) != 0) {
            return it.value().get<std::string>();
        }
    }
    return {};
}

// Temporary directory removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "cbfl-test-XXXXXX").string();
        path_ = ::mkdtemp(tmpl.data());
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;
    const std::filesystem::path &path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline ir::Constraint constraint(std::string id, ir::Region region, std::string expr, ir::Anchor anchor = {},
                                 ir::Category category = ir::Category::Postcondition) {
    ir::Constraint c;
    c.id = std::move(id);
    c.category = category;
    c.region = region;
    c.anchor = std::move(anchor);
    c.expr = std::move(expr);
    c.intent = "test";
    return c;
}

inline ir::Anchor var_anchor(std::string v) {
    ir::Anchor a;
    a.var = std::move(v);
    return a;
}

inline ir::Anchor loop_anchor(int id) {
    ir::Anchor a;
    a.loop_id = id;
    return a;
}

inline ir::Anchor line_anchor(int l) {
    ir::Anchor a;
    a.line = l;
    return a;
}

// Runner answering from a table keyed by program text; unknown texts use
// `fallback`. Counts calls.
class TableRunner : public counterfactual::ProgramRunner {
public:
    std::map<std::string, counterfactual::TestSet> table;
    std::function<counterfactual::TestSet(const std::string &)> fallback;
    std::vector<std::string> seen;

    counterfactual::TestSet failing_tests(const std::string &program_text) override {
        seen.push_back(program_text);
        auto it = table.find(program_text);
        if (it != table.end()) {
            return it->second;
        }
        return fallback ? fallback(program_text) : counterfactual::TestSet{};
    }
};

// Backend returning a scripted reply per call and recording prompts.
class ScriptedBackend : public inference::GeneratorBackend {
public:
    std::function<std::string(inference::Namespace, const std::string &)> reply;
    std::vector<std::string> prompts;
    std::vector<double> temperatures;

    inference::BackendKind kind() const override { return inference::BackendKind::Replay; }
    std::string complete(inference::Namespace ns, const std::string &prompt, double temperature) override {
        prompts.push_back(prompt);
        temperatures.push_back(temperature);
        return reply ? reply(ns, prompt) : std::string();
    }
};

inline spectrum::Records records_from(const std::vector<std::tuple<std::string, std::string, spectrum::Verdict>> &checks,
                                      const std::vector<std::pair<std::string, bool>> &outcomes) {
    spectrum::Records r;
    for (const auto &[t, c, v] : checks) {
        r.checks.push_back({t, c, v, 1, v == spectrum::Verdict::EvalError ? "boom" : ""});
    }
    for (const auto &[t, p] : outcomes) {
        r.outcomes.push_back({t, p});
    }
    return r;
}

inline bool python_available() { return std::system("python3 -c 'import pytest' >/dev/null 2>&1") == 0; }

} // namespace cbfl::testing
