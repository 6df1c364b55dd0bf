#pragma once

#include "cbfl/counterfactual/verify.hpp"
#include "cbfl/harness/run_tests.hpp"
#include "cbfl/instrument/instrument.hpp"
#include "cbfl/inference/inference.hpp"
#include "cbfl/spectrum/spectrum.hpp"

#include <optional>
#include <string>

#include <json.hpp>

namespace cbfl::harness {

class NoFailingTests : public Error {
public:
    NoFailingTests() : Error("no failing tests: nothing to localize") {}
};

class StageError : public Error {
public:
    StageError(std::string stage, const std::string &message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}
    const std::string &stage() const { return stage_; }

private:
    std::string stage_;
};

enum class Mode { Localize, SpectrumOnly, VerifyOnly };

struct Subject {
    std::string program_path;
    std::string function_name;
    std::string module_name;
    std::string tests_dir;
    std::optional<int> fault_line;
};

struct PipelineOptions {
    Mode mode = Mode::Localize;
    spectrum::Scorer scorer = spectrum::Scorer::Ochiai;
    double temperature = inference::kDefaultLiveTemperature;
    // Pre-recorded violations log used instead of the instrumented run.
    std::optional<std::string> violations_path;
    // Copy of the instrumented run's violations log.
    std::optional<std::string> save_violations_path;
    TestRunConfig run;
};

struct LocalizeReport {
    spectrum::Ranking pre_ranking;
    spectrum::Ranking ranking;
    std::vector<counterfactual::CausalVerdict> verdicts;
    std::optional<spectrum::Metrics> metrics;
    nlohmann::json trace;

    nlohmann::json to_json() const;
};

// Runs the program text through the test suite without the shim, caching
// results per text.
class PytestRunner : public counterfactual::ProgramRunner {
public:
    PytestRunner(Subject subject, TestRunConfig config);

    counterfactual::TestSet failing_tests(const std::string &program_text) override;
    const TestRunResult &run(const std::string &program_text);

private:
    Subject subject_;
    TestRunConfig config_;
    std::map<std::string, TestRunResult> cache_;
};

// Patch line: the site line violated most often in failing tests, smallest on
// ties; falls back to the first grounded site line.
int patch_line(const std::string &cid, const spectrum::Records &records, const std::set<std::string> &failing,
               const std::map<int, instrument::CheckSite> &check_index,
               const std::vector<ir::GroundedCheck> &checks);

LocalizeReport localize(const Subject &subject, const PipelineOptions &options,
                        inference::GeneratorBackend &backend);

} // namespace cbfl::harness
