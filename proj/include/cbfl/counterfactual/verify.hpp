#pragma once

#include "cbfl/error.hpp"
#include "cbfl/inference/inference.hpp"
#include "cbfl/ir/constraint.hpp"
#include "cbfl/spectrum/spectrum.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace cbfl::counterfactual {

using TestSet = std::set<std::string>;

enum class Status { Primary, Secondary, Irrelevant, OverApproximate, Error };

std::string_view to_string(Status s);

struct CausalVerdict {
    std::string constraint_id;
    Status status = Status::Irrelevant;
    std::optional<std::string> patch;
    TestSet failing_after;
    int line = 0;
    double score = 0.0;
    bool redundant = false;
    std::string detail;
};

struct RankedConstraint {
    ir::Constraint constraint;
    double score = 0.0;
    int line = 0;
};

struct PatchRequest {
    ir::Constraint constraint;
    int line = 0;
    std::string statement_text;
    std::string full_source;
};

class BaselineMismatch : public Error {
public:
    BaselineMismatch(const TestSet &recorded, const TestSet &observed);
};

// Runs the test suite against a full program text and reports failing ids.
class ProgramRunner {
public:
    virtual ~ProgramRunner() = default;
    virtual TestSet failing_tests(const std::string &program_text) = 0;
};

std::string build_patch_prompt(const PatchRequest &request);

// The single replacement line, or nullopt when the reply is not one line.
std::optional<std::string> extract_patch_line(std::string_view reply);

// Replaces line `line` of `source` keeping its indentation. Returns nullopt
// when the result does not parse.
std::optional<std::string> apply_patch(std::string_view source, int line, std::string_view replacement);

// Constraints violated in at least one passing test.
std::set<std::string> over_approximate(const spectrum::SpectrumMatrix &matrix);

Status classify(const TestSet &baseline_failing, const TestSet &patched_failing, const TestSet &observed);

// Marks verdict k redundant when a Primary or Secondary verdict j ranked
// above it left a subset of k's residual failures.
std::vector<CausalVerdict> prune_redundant(std::vector<CausalVerdict> verdicts);

struct VerifyInput {
    std::vector<RankedConstraint> ranked; // non-increasing score
    std::string program;                  // original source
    TestSet recorded_failing;             // failing set of the spectrum run
    std::set<std::string> overapprox;
};

std::vector<CausalVerdict> verify(const VerifyInput &input, ProgramRunner &runner,
                                  inference::GeneratorBackend &backend);

// Primary lines, then surviving Secondary lines in verdict order, then the
// fallback tail. Without a Primary the fallback is returned unchanged.
spectrum::Ranking final_ranking(const std::vector<CausalVerdict> &verdicts, const spectrum::Ranking &fallback);

nlohmann::json to_json(const CausalVerdict &v);

} // namespace cbfl::counterfactual
