#include "cbfl/harness/bench.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace cbfl::harness {

namespace fs = std::filesystem;

CorpusEntry load_entry(const std::string &dir) {
    fs::path root(dir);
    CorpusEntry e;
    e.name = root.filename().string();
    e.dir = root.string();
    std::ifstream in(root / "meta.json");
    if (!in) {
        throw CorpusEntryInvalid("missing meta.json");
    }
    nlohmann::json meta = nlohmann::json::parse(in, nullptr, false);
    if (meta.is_discarded() || !meta.is_object()) {
        throw CorpusEntryInvalid("meta.json is not a JSON object");
    }
    try {
        e.subject.function_name = meta.at("function").get<std::string>();
        e.subject.module_name = meta.value("module", e.subject.function_name);
        e.subject.fault_line = meta.at("fault_line").get<int>();
    } catch (const nlohmann::json::exception &ex) {
        throw CorpusEntryInvalid(std::string("meta.json: ") + ex.what());
    }
    e.subject.program_path = (root / "buggy.py").string();
    e.subject.tests_dir = (root / "tests").string();
    e.reference_path = (root / "reference.py").string();
    for (const std::string &p : {e.subject.program_path, e.reference_path}) {
        if (!fs::is_regular_file(p)) {
            throw CorpusEntryInvalid("missing " + fs::path(p).filename().string());
        }
    }
    if (!fs::is_directory(e.subject.tests_dir)) {
        throw CorpusEntryInvalid("missing tests/");
    }
    return e;
}

namespace {

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Outcome {
    std::optional<spectrum::Metrics> metrics;
    std::string excluded;
};

Outcome run_entry(const std::string &dir, const BenchOptions &options, const BackendFactory &backends) {
    try {
        CorpusEntry entry = load_entry(dir);
        if (run_tests(read_file(entry.subject.program_path), entry.subject.module_name, entry.subject.tests_dir, false,
                      options.pipeline.run)
                .failing()
                .empty()) {
            throw CorpusEntryInvalid("buggy program fails no test");
        }
        if (!run_tests(read_file(entry.reference_path), entry.subject.module_name, entry.subject.tests_dir, false,
                       options.pipeline.run)
                 .failing()
                 .empty()) {
            throw CorpusEntryInvalid("reference program fails a test");
        }
        PipelineOptions pipeline = options.pipeline;
        if (options.recorded) {
            fs::path log = fs::path(dir) / "violations.jsonl";
            if (!fs::exists(log)) {
                throw CorpusEntryInvalid("missing violations.jsonl");
            }
            pipeline.violations_path = log.string();
        }
        std::unique_ptr<inference::GeneratorBackend> backend = backends(entry);
        LocalizeReport report = localize(entry.subject, pipeline, *backend);
        return {report.metrics, {}};
    } catch (const std::exception &e) {
        return {std::nullopt, e.what()};
    }
}

std::string first_line(const std::string &s) { return s.substr(0, s.find('\n')); }

} // namespace

BenchResult bench(const std::string &corpus_dir, const BenchOptions &options, const BackendFactory &backends) {
    std::vector<std::string> dirs;
    if (fs::is_directory(corpus_dir)) {
        for (const auto &d : fs::directory_iterator(corpus_dir)) {
            if (d.is_directory()) {
                dirs.push_back(d.path().string());
            }
        }
    }
    std::sort(dirs.begin(), dirs.end());

    std::vector<Outcome> outcomes(dirs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < dirs.size(); i = next++) {
            outcomes[i] = run_entry(dirs[i], options, backends);
        }
    };
    int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(dirs.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) {
        pool.emplace_back(worker);
    }
    worker();
    for (std::thread &t : pool) {
        t.join();
    }

    BenchResult result;
    std::vector<spectrum::Metrics> all;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        std::string name = fs::path(dirs[i]).filename().string();
        if (outcomes[i].metrics) {
            result.rows.push_back({name, *outcomes[i].metrics});
            all.push_back(*outcomes[i].metrics);
        } else {
            spdlog::warn("corpus entry {} excluded: {}", name, first_line(outcomes[i].excluded));
            result.excluded.emplace_back(name, first_line(outcomes[i].excluded));
        }
    }
    result.aggregate = spectrum::aggregate(all);
    return result;
}

std::string render_table(const BenchResult &result) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-24s %6s %6s %6s %6s %8s\n", "entry", "rank", "acc@1", "acc@3", "acc@5", "%susp");
    out += buf;
    for (const BenchRow &r : result.rows) {
        std::string rank = r.metrics.rank ? std::to_string(*r.metrics.rank) : "inf";
        std::snprintf(buf, sizeof buf, "%-24s %6s %6d %6d %6d %8.4f\n", r.entry.c_str(), rank.c_str(), r.metrics.acc1,
                      r.metrics.acc3, r.metrics.acc5, 100.0 * r.metrics.pct_susp);
        out += buf;
    }
    const spectrum::Aggregate &a = result.aggregate;
    std::string median = a.median_rank ? std::to_string(*a.median_rank) : "inf";
    if (a.median_rank) {
        std::snprintf(buf, sizeof buf, "%.1f", *a.median_rank);
        median = buf;
    }
    std::snprintf(buf, sizeof buf, "programs %d  Acc@1 %.2f%%  Acc@3 %.2f%%  Acc@5 %.2f%%  Mean %%Susp %.2f%%  Med. Rank %s\n",
                  a.programs, 100.0 * a.acc1, 100.0 * a.acc3, 100.0 * a.acc5, 100.0 * a.mean_pct_susp, median.c_str());
    out += buf;
    for (const auto &[entry, reason] : result.excluded) {
        out += "excluded " + entry + ": " + reason + "\n";
    }
    return out;
}

} // namespace cbfl::harness
