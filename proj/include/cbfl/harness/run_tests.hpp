#pragma once

#include "cbfl/error.hpp"
#include "cbfl/inference/inference.hpp"

#include <chrono>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace cbfl::harness {

class Timeout : public Error {
public:
    using Error::Error;
};

class HarnessCrash : public Error {
public:
    using Error::Error;
};

struct TestRunConfig {
    std::string python = "python3";
    std::string shim_dir;    // directory holding cbfl_runtime.py
    std::string scratch_dir; // run-scoped, must exist
    std::chrono::seconds timeout{120};
};

struct TestRunResult {
    std::vector<std::pair<std::string, bool>> outcomes; // (test id, passed)
    std::map<std::string, std::string> tracebacks;      // failing test id -> text
    std::string violations;                             // JSONL, shim runs only
    int exit_status = 0;
    double duration = 0.0;
    std::string output;

    std::set<std::string> failing() const;
};

// Writes `program_text` as `<module>.py` in a fresh directory under the
// scratch dir and runs pytest over `tests_dir`, with that directory first on
// the module search path. Test ids are relative to the parent of tests_dir.
TestRunResult run_tests(const std::string &program_text, const std::string &module, const std::string &tests_dir,
                        bool shim_enabled, const TestRunConfig &config);

// Prompt documents for each outcome: the test's source as input and either a
// pass note or its traceback.
std::vector<inference::TestCaseDoc> describe_tests(const TestRunResult &run, const std::string &tests_dir);

// Directory holding the bundled shim, honouring CBFL_SHIM_PATH.
std::string default_shim_dir();

} // namespace cbfl::harness
