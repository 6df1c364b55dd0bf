#pragma once

#include "cbfl/error.hpp"

#include <chrono>
#include <map>
#include <string>
#include <vector>

namespace cbfl::harness {

class InterpreterMissing : public Error {
public:
    using Error::Error;
};

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string output; // stdout and stderr interleaved
    double seconds = 0.0;
};

// Absolute path of `program` on PATH, or empty.
std::string find_executable(const std::string &program);

// Runs argv[0] (resolved on PATH) with the current environment plus
// `env`. A run exceeding `timeout` is killed with its process group.
ProcessResult run_process(const std::vector<std::string> &argv, const std::map<std::string, std::string> &env,
                          const std::string &cwd, std::chrono::milliseconds timeout);

} // namespace cbfl::harness
