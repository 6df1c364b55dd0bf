#include "cbfl/harness/bench.hpp"
#include "cbfl/harness/pipeline.hpp"
#include "cbfl/inference/inference.hpp"
#include "cbfl/ssa/ssa.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace cbfl;

namespace {

constexpr int kExitError = 1;
constexpr int kExitEmptyCorpus = 3;
constexpr int kExitNoFailingTests = 4;

struct BackendFlags {
    std::string backend = "replay";
    std::string fixtures;
    std::string record;
    double temperature = inference::kDefaultLiveTemperature;
};

struct SubjectFlags {
    std::string program;
    std::string function;
    std::string module;
    std::string tests;
    int fault_line = 0;
};

struct RunFlags {
    std::string scorer = "ochiai";
    int timeout = 120;
    std::string out;
    std::string violations;
    std::string save_violations;
    std::string scratch;
    std::string python = "python3";
};

void add_backend(CLI::App *app, BackendFlags &f) {
    app->add_option("--backend", f.backend, "Constraint and patch generator")
        ->check(CLI::IsMember({"live", "replay"}));
    app->add_option("--fixtures", f.fixtures, "Replay fixture file");
    app->add_option("--record", f.record, "Record every backend response into this fixture file");
    app->add_option("--temperature", f.temperature, "Live sampling temperature");
}

void add_subject(CLI::App *app, SubjectFlags &f) {
    app->add_option("program", f.program, "Program source file")->required()->check(CLI::ExistingFile);
    app->add_option("--function", f.function, "Function under test")->required();
    app->add_option("--module", f.module, "Module name the tests import (default: function name)");
    app->add_option("--tests", f.tests, "Test directory")->required()->check(CLI::ExistingDirectory);
    app->add_option("--fault-line", f.fault_line, "Ground-truth line for metrics");
}

void add_run(CLI::App *app, RunFlags &f) {
    app->add_option("--scorer", f.scorer, "Suspiciousness formula")->check(CLI::IsMember({"ochiai", "tarantula"}));
    app->add_option("--timeout", f.timeout, "Per test run timeout in seconds")->check(CLI::PositiveNumber);
    app->add_option("--out", f.out, "Write the report here instead of stdout");
    app->add_option("--scratch", f.scratch, "Scratch directory root");
    app->add_option("--python", f.python, "Interpreter running the tests");
}

std::unique_ptr<inference::GeneratorBackend> make_backend(const BackendFlags &f, const std::string &fallback_fixtures) {
    if (f.backend == "live") {
        return std::make_unique<inference::LiveBackend>(inference::live_config_from_env());
    }
    std::string path = f.fixtures.empty() ? fallback_fixtures : f.fixtures;
    if (path.empty()) {
        throw Error("--backend replay needs --fixtures");
    }
    return std::make_unique<inference::ReplayBackend>(path);
}

class OwningRecorder : public inference::RecordingBackend {
public:
    OwningRecorder(std::unique_ptr<inference::GeneratorBackend> inner, std::string path)
        : RecordingBackend(*inner, std::move(path)), inner_(std::move(inner)) {}

private:
    std::unique_ptr<inference::GeneratorBackend> inner_;
};

std::unique_ptr<inference::GeneratorBackend> wrap(std::unique_ptr<inference::GeneratorBackend> b,
                                                  const BackendFlags &f) {
    if (f.record.empty()) {
        return b;
    }
    return std::make_unique<OwningRecorder>(std::move(b), f.record);
}

harness::TestRunConfig run_config(const RunFlags &f) {
    harness::TestRunConfig c;
    c.python = f.python;
    c.timeout = std::chrono::seconds(f.timeout);
    c.scratch_dir = f.scratch;
    c.shim_dir = harness::default_shim_dir();
    if (!c.scratch_dir.empty()) {
        fs::create_directories(c.scratch_dir);
    }
    return c;
}

harness::Subject subject_of(const SubjectFlags &f) {
    harness::Subject s;
    s.program_path = f.program;
    s.function_name = f.function;
    s.module_name = f.module.empty() ? f.function : f.module;
    s.tests_dir = f.tests;
    if (f.fault_line > 0) {
        s.fault_line = f.fault_line;
    }
    return s;
}

void emit(const std::string &text, const std::string &out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) {
        throw IoError("cannot write " + out);
    }
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char **argv) {
    spdlog::set_default_logger(spdlog::stderr_color_st("cbfl"));
    spdlog::set_pattern("%^%l%$: %v");

    CLI::App app{"Constraint-based fault localization"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    SubjectFlags subject;
    BackendFlags backend;
    RunFlags run;

    auto *localize = app.add_subcommand("localize", "Full pipeline with counterfactual verification");
    auto *spectrum_cmd = app.add_subcommand("spectrum", "Pipeline up to the spectrum ranking");
    auto *verify = app.add_subcommand("verify", "Counterfactual verification over a recorded violations log");
    for (CLI::App *cmd : {localize, spectrum_cmd, verify}) {
        add_subject(cmd, subject);
        add_backend(cmd, backend);
        add_run(cmd, run);
    }
    localize->add_option("--violations", run.violations, "Recorded violations log replacing the instrumented run")
        ->check(CLI::ExistingFile);
    spectrum_cmd->add_option("--violations", run.violations, "Recorded violations log replacing the instrumented run")
        ->check(CLI::ExistingFile);
    for (CLI::App *cmd : {localize, spectrum_cmd}) {
        cmd->add_option("--save-violations", run.save_violations, "Write the instrumented run's violations log here");
    }
    verify->add_option("--violations", run.violations, "Recorded violations log")
        ->required()
        ->check(CLI::ExistingFile);

    std::string corpus;
    int jobs = 1;
    bool recorded = false;
    auto *bench = app.add_subcommand("bench", "Localize every corpus entry and aggregate metrics");
    bench->add_option("corpus", corpus, "Corpus directory")->required();
    bench->add_option("--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
    bench->add_flag("--recorded", recorded, "Use each entry's violations.jsonl instead of running the shim");
    add_backend(bench, backend);
    add_run(bench, run);

    std::string ssa_program;
    std::string ssa_function;
    std::string ssa_out;
    auto *ssa_cmd = app.add_subcommand("ssa", "Dump SSA text, definition map, loops and anchors");
    ssa_cmd->add_option("program", ssa_program, "Program source file")->required()->check(CLI::ExistingFile);
    ssa_cmd->add_option("--function", ssa_function, "Function to transform")->required();
    ssa_cmd->add_option("--out", ssa_out, "Write here instead of stdout");

    auto *prompt_cmd = app.add_subcommand("prompt", "Print the inference prompt and its hash");
    add_subject(prompt_cmd, subject);
    add_run(prompt_cmd, run);

    std::string key;
    std::string response_file;
    std::string fixture_file;
    auto *record_cmd = app.add_subcommand("record", "Store a backend response in a fixture file");
    record_cmd->add_option("--fixtures", fixture_file, "Fixture file")->required();
    record_cmd->add_option("--key", key, "Fixture key (prompt hash, or patch:<hash>)")->required();
    record_cmd->add_option("--response", response_file, "File holding the response text")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    if (verbose) {
        spdlog::set_level(spdlog::level::debug);
    }

    try {
        if (ssa_cmd->parsed()) {
            ssa::SourceUnit unit = ssa::load_source_unit(ssa_program, ssa_function);
            ssa::SsaProgram program = ssa::to_ssa(unit);
            std::string text = program.ssa_text;
            if (!text.empty() && text.back() != '\n') {
                text += '\n';
            }
            text += "\n" + ssa::render_def_map(program);
            for (const ssa::LoopInfo &l : program.loop_ids) {
                text += "# loop " + std::to_string(l.loop_id) + ": head byte " + std::to_string(l.head_byte_offset) +
                        ", tail byte " + std::to_string(l.tail_byte_offset) + "\n";
            }
            for (const ssa::AnchorSite &a : ssa::extract_anchors(unit)) {
                text += "# anchor " + std::string(ssa::to_string(a.family)) + " line " + std::to_string(a.line) +
                        " byte " + std::to_string(a.byte_offset);
                if (a.variable) {
                    text += " var " + *a.variable;
                }
                if (a.loop_id) {
                    text += " loop " + std::to_string(*a.loop_id);
                }
                text += "\n";
            }
            emit(text, ssa_out);
            return 0;
        }
        if (record_cmd->parsed()) {
            std::string response = read_file(response_file);
            if (key.rfind("patch:", 0) != 0 && nlohmann::json::parse(response, nullptr, false).is_discarded()) {
                throw Error("constraint responses must be JSON");
            }
            inference::record_fixture_entry(fixture_file, key, response);
            return 0;
        }
        if (prompt_cmd->parsed()) {
            harness::Subject s = subject_of(subject);
            ssa::SourceUnit unit = ssa::load_source_unit(s.program_path, s.function_name);
            ssa::SsaProgram program = ssa::to_ssa(unit);
            harness::TestRunConfig config = run_config(run);
            harness::TestRunResult baseline =
                harness::run_tests(unit.text, s.module_name, s.tests_dir, false, config);
            inference::PromptBundle p =
                inference::build_prompt(unit, program, harness::describe_tests(baseline, s.tests_dir));
            emit("# hash " + p.hash() + "\n" + p.text(), run.out);
            return 0;
        }

        auto scorer = spectrum::parse_scorer(run.scorer);
        harness::PipelineOptions options;
        options.scorer = *scorer;
        options.temperature = backend.temperature;
        options.run = run_config(run);
        if (!run.violations.empty()) {
            options.violations_path = run.violations;
        }
        if (!run.save_violations.empty()) {
            options.save_violations_path = run.save_violations;
        }

        if (bench->parsed()) {
            harness::BenchOptions bo;
            bo.pipeline = options;
            bo.jobs = jobs;
            bo.recorded = recorded;
            std::shared_ptr<inference::GeneratorBackend> shared;
            if (backend.backend == "live" || !backend.fixtures.empty()) {
                shared = wrap(make_backend(backend, {}), backend);
            }
            auto factory = [&](const harness::CorpusEntry &entry) -> std::unique_ptr<inference::GeneratorBackend> {
                if (shared) {
                    struct Borrowed : inference::GeneratorBackend {
                        explicit Borrowed(inference::GeneratorBackend &b) : b_(b) {}
                        inference::BackendKind kind() const override { return b_.kind(); }
                        std::string complete(inference::Namespace ns, const std::string &p, double t) override {
                            return b_.complete(ns, p, t);
                        }
                        inference::GeneratorBackend &b_;
                    };
                    return std::make_unique<Borrowed>(*shared);
                }
                return wrap(make_backend(backend, (fs::path(entry.dir) / "fixtures.json").string()), backend);
            };
            harness::BenchResult result = harness::bench(corpus, bo, factory);
            emit(harness::render_table(result), run.out);
            return result.rows.empty() && result.excluded.empty() ? kExitEmptyCorpus : 0;
        }

        options.mode = localize->parsed()       ? harness::Mode::Localize
                       : spectrum_cmd->parsed() ? harness::Mode::SpectrumOnly
                                                : harness::Mode::VerifyOnly;
        auto gen = wrap(make_backend(backend, {}), backend);
        harness::LocalizeReport report = harness::localize(subject_of(subject), options, *gen);
        emit(report.to_json().dump(2) + "\n", run.out);
        return 0;
    } catch (const harness::NoFailingTests &e) {
        spdlog::error("{}", e.what());
        return kExitNoFailingTests;
    } catch (const std::exception &e) {
        spdlog::error("{}", e.what());
        return kExitError;
    }
}
