#pragma once

#include "cbfl/error.hpp"
#include "cbfl/ssa/ssa.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace cbfl::inference {

class EmptyTests : public Error {
public:
    EmptyTests() : Error("no tests to describe in the prompt") {}
};

class BackendUnavailable : public Error {
public:
    using Error::Error;
};

class FixtureMiss : public Error {
public:
    explicit FixtureMiss(const std::string &hash) : Error("no replay fixture for prompt hash " + hash), hash_(hash) {}
    const std::string &hash() const { return hash_; }

private:
    std::string hash_;
};

enum class TestKind { Passing, Failing };

struct TestCaseDoc {
    std::string test_id;
    TestKind kind = TestKind::Passing;
    std::string input_repr;
    std::string expected_or_traceback;
};

struct PromptBundle {
    std::string task_and_schema;
    std::string anchor_rules;
    std::string program_section;
    std::string tests_section;

    std::string text() const;
    // Lowercase hex SHA-256 of text().
    std::string hash() const;
};

std::string sha256_hex(std::string_view data);

PromptBundle build_prompt(const ssa::SourceUnit &unit, const ssa::SsaProgram &ssa,
                          const std::vector<TestCaseDoc> &tests);

enum class BackendKind { Live, Replay };

// Fixture keys live in separate namespaces so patch prompts never collide
// with constraint prompts.
enum class Namespace { Constraints, Patches };

std::string fixture_key(Namespace ns, std::string_view prompt_text);

class GeneratorBackend {
public:
    virtual ~GeneratorBackend() = default;
    virtual BackendKind kind() const = 0;
    virtual std::string complete(Namespace ns, const std::string &prompt, double temperature) = 0;
};

class ReplayBackend : public GeneratorBackend {
public:
    // Throws IoError when the fixture file is missing or not a JSON object.
    explicit ReplayBackend(const std::string &fixture_path);

    BackendKind kind() const override { return BackendKind::Replay; }
    std::string complete(Namespace ns, const std::string &prompt, double temperature) override;

private:
    std::map<std::string, std::string, std::less<>> entries_;
};

struct LiveConfig {
    std::string endpoint;
    std::string model;
    std::string api_key;
    int timeout_seconds = 120;
};

// Reads CBFL_LLM_API_KEY, CBFL_LLM_MODEL and CBFL_LLM_ENDPOINT.
LiveConfig live_config_from_env();

// Chat-completions style HTTP backend.
class LiveBackend : public GeneratorBackend {
public:
    explicit LiveBackend(LiveConfig config);

    BackendKind kind() const override { return BackendKind::Live; }
    std::string complete(Namespace ns, const std::string &prompt, double temperature) override;

private:
    LiveConfig config_;
};

inline constexpr double kDefaultLiveTemperature = 0.8;
inline constexpr std::string_view kJsonReminder = "Output only valid JSON";

std::string strip_code_fence(std::string_view text);

// Raw cbfl-ir text from the backend. Live output that is not JSON gets one
// retry with a reminder appended, then an empty document.
std::string infer_constraints(const PromptBundle &prompt, GeneratorBackend &backend,
                              double temperature = kDefaultLiveTemperature);

// Adds or replaces fixture entries under an exclusive file lock. Returns false
// when an existing entry was overwritten.
bool record_fixture_entry(const std::string &path, const std::string &key, const std::string &response);

// Rejects responses that are not JSON before touching the file.
bool record_fixture(const PromptBundle &prompt, const std::string &response, const std::string &path);

// Wraps a backend and records every response it returns.
class RecordingBackend : public GeneratorBackend {
public:
    RecordingBackend(GeneratorBackend &inner, std::string fixture_path);

    BackendKind kind() const override { return inner_.kind(); }
    std::string complete(Namespace ns, const std::string &prompt, double temperature) override;

private:
    GeneratorBackend &inner_;
    std::string path_;
};

} // namespace cbfl::inference
