#include "cbfl/harness/pipeline.hpp"

#include "cbfl/ir/ground.hpp"
#include "cbfl/ssa/ssa.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace cbfl::harness {

namespace {

template <typename F>
auto stage(const char *name, F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError &) {
        throw;
    } catch (const NoFailingTests &) {
        throw;
    } catch (const std::exception &e) {
        throw StageError(name, e.what());
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

nlohmann::json outcomes_json(const std::vector<std::pair<std::string, bool>> &outcomes) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto &[id, passed] : outcomes) {
        out.push_back({{"test_id", id}, {"passed", passed}});
    }
    return out;
}

} // namespace

nlohmann::json LocalizeReport::to_json() const {
    nlohmann::json out;
    out["ranking"] = spectrum::to_json(ranking);
    out["pre_verification_ranking"] = spectrum::to_json(pre_ranking);
    nlohmann::json v = nlohmann::json::array();
    for (const auto &verdict : verdicts) {
        v.push_back(counterfactual::to_json(verdict));
    }
    out["verdicts"] = v;
    if (metrics) {
        out["metrics"] = spectrum::to_json(*metrics);
    }
    out["trace"] = trace;
    return out;
}

PytestRunner::PytestRunner(Subject subject, TestRunConfig config)
    : subject_(std::move(subject)), config_(std::move(config)) {}

const TestRunResult &PytestRunner::run(const std::string &program_text) {
    auto it = cache_.find(program_text);
    if (it == cache_.end()) {
        it = cache_.emplace(program_text, run_tests(program_text, subject_.module_name, subject_.tests_dir, false, config_))
                 .first;
    }
    return it->second;
}

counterfactual::TestSet PytestRunner::failing_tests(const std::string &program_text) {
    return run(program_text).failing();
}

int patch_line(const std::string &cid, const spectrum::Records &records, const std::set<std::string> &failing,
               const std::map<int, instrument::CheckSite> &check_index,
               const std::vector<ir::GroundedCheck> &checks) {
    std::map<int, int> counts;
    for (const spectrum::CheckRecord &r : records.checks) {
        if (r.cid != cid || r.verdict != spectrum::Verdict::Violated || failing.count(r.test_id) == 0) {
            continue;
        }
        auto it = check_index.find(r.line);
        if (it != check_index.end() && it->second.constraint_id == cid) {
            ++counts[it->second.site_line];
        }
    }
    int best = 0;
    int best_count = 0;
    for (const auto &[line, count] : counts) {
        if (count > best_count) {
            best = line;
            best_count = count;
        }
    }
    if (best != 0) {
        return best;
    }
    for (const ir::GroundedCheck &c : checks) {
        if (c.constraint_id == cid) {
            return c.site_line;
        }
    }
    return 0;
}

LocalizeReport localize(const Subject &subject, const PipelineOptions &options, inference::GeneratorBackend &backend) {
    LocalizeReport report;
    nlohmann::json &trace = report.trace;

    ssa::SourceUnit unit =
        stage("ssa", [&] { return ssa::load_source_unit(subject.program_path, subject.function_name); });
    ssa::SsaProgram ssa = stage("ssa", [&] { return ssa::to_ssa(unit); });
    trace["ssa"] = {{"ssa_text", ssa.ssa_text}, {"def_map", ssa::render_def_map(ssa)}};

    PytestRunner runner(subject, options.run);
    const TestRunResult &baseline = stage("baseline", [&]() -> const TestRunResult & { return runner.run(unit.text); });
    trace["baseline"] = outcomes_json(baseline.outcomes);
    if (baseline.failing().empty()) {
        throw NoFailingTests();
    }

    inference::PromptBundle prompt =
        stage("prompt", [&] { return inference::build_prompt(unit, ssa, describe_tests(baseline, subject.tests_dir)); });
    trace["prompt"] = {{"hash", prompt.hash()}, {"text", prompt.text()}};

    std::string document =
        stage("inference", [&] { return inference::infer_constraints(prompt, backend, options.temperature); });
    trace["inference"] = {{"response", document}};

    ir::ValidationResult validated = stage("validation", [&] { return ir::validate_ir(document); });
    ir::GroundingResult grounded = stage("grounding", [&] { return ir::ground(validated.accepted, ssa); });
    {
        nlohmann::json accepted = nlohmann::json::array();
        nlohmann::json rejected = nlohmann::json::array();
        nlohmann::json checks = nlohmann::json::array();
        nlohmann::json ungroundable = nlohmann::json::array();
        for (const auto &c : validated.accepted) {
            accepted.push_back(ir::to_json(c));
        }
        for (const auto &r : validated.rejected) {
            rejected.push_back(ir::to_json(r));
        }
        for (const auto &c : grounded.checks) {
            checks.push_back(ir::to_json(c));
        }
        for (const auto &u : grounded.ungroundable) {
            ungroundable.push_back(ir::to_json(u));
        }
        trace["validation"] = {{"accepted", accepted}, {"rejected", rejected}};
        trace["grounding"] = {{"checks", checks}, {"ungroundable", ungroundable}};
    }
    if (grounded.checks.empty()) {
        spdlog::warn("no constraint could be grounded; the ranking is empty");
    }

    instrument::InstrumentedProgram instrumented =
        stage("instrumentation", [&] { return instrument::instrument(grounded.checks, ssa); });
    trace["instrumentation"] = {{"text", instrumented.text}};

    spectrum::Records records = stage("spectrum", [&] {
        if (options.violations_path) {
            return spectrum::parse_records(read_file(*options.violations_path));
        }
        TestRunResult run = run_tests(instrumented.text, subject.module_name, subject.tests_dir, true, options.run);
        if (options.save_violations_path) {
            std::ofstream out(*options.save_violations_path, std::ios::binary);
            if (!(out << run.violations)) {
                throw IoError("cannot write " + *options.save_violations_path);
            }
        }
        return spectrum::parse_records(run.violations);
    });
    std::vector<std::string> ids;
    for (const auto &c : validated.accepted) {
        ids.push_back(c.id);
    }
    spectrum::SpectrumMatrix matrix = stage("spectrum", [&] { return spectrum::build_matrix(records, ids); });
    auto scores = spectrum::score_all(matrix, options.scorer);
    report.pre_ranking = spectrum::attribute(grounded.checks, scores);
    {
        nlohmann::json s = nlohmann::json::array();
        for (std::size_t j = 0; j < matrix.constraints.size(); ++j) {
            spectrum::ConstraintCells c = matrix.cells(j);
            s.push_back({{"cid", matrix.constraints[j]},
                         {"ef", c.ef},
                         {"ep", c.ep},
                         {"nf", c.nf},
                         {"np", c.np},
                         {"score", scores[j].second}});
        }
        trace["spectrum"] = {{"tests", outcomes_json(matrix.tests)}, {"constraints", s}};
    }
    report.ranking = report.pre_ranking;

    if (options.mode != Mode::SpectrumOnly) {
        std::vector<counterfactual::RankedConstraint> ranked;
        std::set<std::string> failing;
        for (const std::string &t : matrix.failing_tests()) {
            failing.insert(t);
        }
        for (const ir::Constraint &c : validated.accepted) {
            auto it = std::find_if(scores.begin(), scores.end(), [&](const auto &s) { return s.first == c.id; });
            double score = it == scores.end() ? 0.0 : it->second;
            ranked.push_back({c, score, patch_line(c.id, records, failing, instrumented.check_index, grounded.checks)});
        }
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto &a, const auto &b) { return a.score > b.score; });
        counterfactual::VerifyInput input{ranked, unit.text, failing, counterfactual::over_approximate(matrix)};
        report.verdicts = stage("verification", [&] { return counterfactual::verify(input, runner, backend); });
        report.ranking = counterfactual::final_ranking(report.verdicts, report.pre_ranking);
    }

    if (subject.fault_line) {
        report.metrics = spectrum::metrics(report.ranking, *subject.fault_line, spectrum::executable_lines(unit));
    }
    return report;
}

} // namespace cbfl::harness
