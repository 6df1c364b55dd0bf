#include "cbfl/counterfactual/verify.hpp"

#include "cbfl/python/parser.hpp"
#include "cbfl/source_text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace cbfl::counterfactual {

namespace {

std::string join(const TestSet &s) {
    std::string out;
    for (const std::string &t : s) {
        out += out.empty() ? "" : ", ";
        out += t;
    }
    return "{" + out + "}";
}

TestSet intersect(const TestSet &a, const TestSet &b) {
    TestSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

bool subset(const TestSet &a, const TestSet &b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

} // namespace

std::string_view to_string(Status s) {
    switch (s) {
    case Status::Primary:
        return "Primary";
    case Status::Secondary:
        return "Secondary";
    case Status::Irrelevant:
        return "Irrelevant";
    case Status::OverApproximate:
        return "OverApproximate";
    case Status::Error:
        return "Error";
    }
    return "?";
}

BaselineMismatch::BaselineMismatch(const TestSet &recorded, const TestSet &observed)
    : Error("baseline failing set " + join(observed) + " differs from the spectrum run " + join(recorded)) {}

std::string build_patch_prompt(const PatchRequest &r) {
    std::string out;
    out += "You are given a buggy program and a semantic constraint it violates.\n";
    out += "Propose a minimal, syntactically local patch that restores the constraint by\n";
    out += "replacing exactly one source line. Output only the replacement line, with no\n";
    out += "explanation and no code fence.\n\n";
    out += "### Constraint\n";
    out += "id: " + r.constraint.id + "\n";
    out += "category: " + std::string(ir::to_string(r.constraint.category)) + "\n";
    out += "region: " + std::string(ir::to_string(r.constraint.region)) + "\n";
    out += "spec: " + r.constraint.expr + "\n";
    out += "intent: " + r.constraint.intent + "\n\n";
    out += "### Target line " + std::to_string(r.line) + "\n" + r.statement_text + "\n\n";
    out += "### Program\n" + r.full_source;
    if (!r.full_source.empty() && r.full_source.back() != '\n') {
        out += '\n';
    }
    return out;
}

std::optional<std::string> extract_patch_line(std::string_view reply) {
    std::string text = inference::strip_code_fence(reply);
    std::optional<std::string> line;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string l = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        while (!l.empty() && (l.back() == '\r' || l.back() == ' ' || l.back() == '\t')) {
            l.pop_back();
        }
        if (l.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        if (line) {
            return std::nullopt;
        }
        line = l;
    }
    return line;
}

std::optional<std::string> apply_patch(std::string_view source, int line, std::string_view replacement) {
    LineTable lines(source);
    if (line < 1 || line > lines.line_count()) {
        return std::nullopt;
    }
    std::size_t body = replacement.find_first_not_of(" \t");
    if (body == std::string_view::npos) {
        return std::nullopt;
    }
    std::string out(source.substr(0, lines.line_start(line)));
    out += lines.indentation(line);
    out += replacement.substr(body);
    out += source.substr(lines.line_end(line));
    try {
        py::parse_module(out);
    } catch (const ParseError &) {
        return std::nullopt;
    }
    return out;
}

std::set<std::string> over_approximate(const spectrum::SpectrumMatrix &m) {
    std::set<std::string> out;
    for (std::size_t j = 0; j < m.constraints.size(); ++j) {
        if (m.cells(j).ep > 0) {
            out.insert(m.constraints[j]);
        }
    }
    return out;
}

Status classify(const TestSet &baseline_failing, const TestSet &patched_failing, const TestSet &observed) {
    TestSet orig = intersect(baseline_failing, observed);
    TestSet after = intersect(patched_failing, observed);
    if (after.empty()) {
        return Status::Primary;
    }
    if (after.size() < orig.size()) {
        return Status::Secondary;
    }
    return Status::Irrelevant;
}

std::vector<CausalVerdict> prune_redundant(std::vector<CausalVerdict> verdicts) {
    auto rerun = [](Status s) { return s == Status::Primary || s == Status::Secondary || s == Status::Irrelevant; };
    for (std::size_t k = 0; k < verdicts.size(); ++k) {
        if (!rerun(verdicts[k].status)) {
            continue;
        }
        for (std::size_t j = 0; j < k; ++j) {
            const CausalVerdict &above = verdicts[j];
            if (above.redundant || (above.status != Status::Primary && above.status != Status::Secondary)) {
                continue;
            }
            if (subset(above.failing_after, verdicts[k].failing_after)) {
                verdicts[k].redundant = true;
                break;
            }
        }
    }
    return verdicts;
}

std::vector<CausalVerdict> verify(const VerifyInput &in, ProgramRunner &runner, inference::GeneratorBackend &backend) {
    TestSet observed = runner.failing_tests(in.program);
    if (observed != in.recorded_failing) {
        throw BaselineMismatch(in.recorded_failing, observed);
    }
    std::vector<CausalVerdict> results;
    if (observed.empty()) {
        return results;
    }
    LineTable lines(in.program);
    for (const RankedConstraint &rc : in.ranked) {
        if (rc.score == 0.0) {
            continue;
        }
        CausalVerdict v;
        v.constraint_id = rc.constraint.id;
        v.line = rc.line;
        v.score = rc.score;
        if (in.overapprox.count(rc.constraint.id) != 0) {
            v.status = Status::OverApproximate;
            results.push_back(std::move(v));
            continue;
        }
        if (rc.line < 1 || rc.line > lines.line_count()) {
            v.status = Status::Error;
            v.detail = "no attributed line";
            results.push_back(std::move(v));
            continue;
        }
        PatchRequest request{rc.constraint, rc.line, std::string(lines.line_text(rc.line)), in.program};
        std::optional<std::string> patched;
        try {
            std::string reply = backend.complete(inference::Namespace::Patches, build_patch_prompt(request), 0.0);
            std::optional<std::string> line = extract_patch_line(reply);
            if (line) {
                v.patch = *line;
                patched = apply_patch(in.program, rc.line, *line);
            }
            if (!patched) {
                v.detail = line ? "patch does not parse" : "reply is not a single line";
            }
        } catch (const Error &e) {
            v.detail = e.what();
        }
        if (!patched) {
            v.status = Status::Error;
            results.push_back(std::move(v));
            continue;
        }
        try {
            v.failing_after = runner.failing_tests(*patched);
        } catch (const Error &e) {
            v.status = Status::Error;
            v.detail = e.what();
            results.push_back(std::move(v));
            continue;
        }
        v.status = classify(observed, v.failing_after, observed);
        spdlog::debug("constraint {} at line {}: {}", v.constraint_id, v.line, to_string(v.status));
        bool stop = v.status == Status::Primary;
        results.push_back(std::move(v));
        if (stop) {
            break;
        }
    }
    return prune_redundant(std::move(results));
}

spectrum::Ranking final_ranking(const std::vector<CausalVerdict> &verdicts, const spectrum::Ranking &fallback) {
    bool any_primary = std::any_of(verdicts.begin(), verdicts.end(), [](const CausalVerdict &v) {
        return v.status == Status::Primary && !v.redundant;
    });
    if (!any_primary) {
        return fallback;
    }
    spectrum::Ranking out;
    std::set<int> placed;
    auto place = [&](const CausalVerdict &v, int tier) {
        if (!placed.insert(v.line).second) {
            for (spectrum::RankedLine &r : out) {
                if (r.line == v.line) {
                    r.constraints.push_back(v.constraint_id);
                }
            }
            return;
        }
        spectrum::RankedLine r;
        r.line = v.line;
        r.score = tier == 0 ? 1.0 : v.score;
        r.constraints = {v.constraint_id};
        r.tier = tier;
        out.push_back(std::move(r));
    };
    for (const CausalVerdict &v : verdicts) {
        if (v.status == Status::Primary && !v.redundant) {
            place(v, 0);
        }
    }
    for (const CausalVerdict &v : verdicts) {
        if (v.status == Status::Secondary && !v.redundant) {
            place(v, 1);
        }
    }
    for (const spectrum::RankedLine &r : fallback) {
        if (placed.insert(r.line).second) {
            out.push_back(r);
        }
    }
    return out;
}

nlohmann::json to_json(const CausalVerdict &v) {
    return {
        {"constraint_id", v.constraint_id},
        {"status", std::string(to_string(v.status))},
        {"patch", v.patch ? nlohmann::json(*v.patch) : nlohmann::json(nullptr)},
        {"failing_after", v.failing_after},
        {"line", v.line},
        {"score", v.score},
        {"redundant", v.redundant},
        {"detail", v.detail},
    };
}

} // namespace cbfl::counterfactual
