#pragma once

#include "cbfl/harness/pipeline.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cbfl::harness {

class CorpusEntryInvalid : public Error {
public:
    using Error::Error;
};

struct CorpusEntry {
    std::string name;
    std::string dir;
    Subject subject;
    std::string reference_path;
};

// Reads `<dir>/meta.json` ({"function", "module", "fault_line"}) and checks
// that buggy.py, reference.py and tests/ exist.
CorpusEntry load_entry(const std::string &dir);

struct BenchRow {
    std::string entry;
    spectrum::Metrics metrics;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    std::vector<std::pair<std::string, std::string>> excluded; // (entry, reason)
    spectrum::Aggregate aggregate;
};

using BackendFactory = std::function<std::unique_ptr<inference::GeneratorBackend>(const CorpusEntry &)>;

struct BenchOptions {
    PipelineOptions pipeline;
    int jobs = 1;
    // Use each entry's violations.jsonl in place of the instrumented run.
    bool recorded = false;
};

BenchResult bench(const std::string &corpus_dir, const BenchOptions &options, const BackendFactory &backends);

// Fixed-format table; identical for identical results.
std::string render_table(const BenchResult &result);

} // namespace cbfl::harness
