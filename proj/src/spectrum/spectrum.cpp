#include "cbfl/spectrum/spectrum.hpp"

#include "cbfl/python/parser.hpp"
#include "cbfl/python/visit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

namespace cbfl::spectrum {

std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::Violated:
        return "violated";
    case Verdict::Satisfied:
        return "satisfied";
    case Verdict::EvalError:
        return "eval_error";
    }
    return "?";
}

std::string_view to_string(Scorer s) { return s == Scorer::Ochiai ? "ochiai" : "tarantula"; }

std::optional<Scorer> parse_scorer(std::string_view s) {
    if (s == "ochiai") {
        return Scorer::Ochiai;
    }
    if (s == "tarantula") {
        return Scorer::Tarantula;
    }
    return std::nullopt;
}

Records parse_records(std::string_view jsonl) {
    Records out;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < jsonl.size()) {
        std::size_t nl = jsonl.find('\n', pos);
        std::string_view line = jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error("violations log line " + std::to_string(line_no) + " is not a JSON object");
        }
        try {
            std::string kind = j.at("kind").get<std::string>();
            if (kind == "outcome") {
                out.outcomes.push_back({j.at("test_id").get<std::string>(), j.at("passed").get<bool>()});
            } else if (kind == "check") {
                CheckRecord r;
                r.test_id = j.at("test_id").get<std::string>();
                r.cid = j.at("cid").get<std::string>();
                std::string verdict = j.at("verdict").get<std::string>();
                if (verdict == "violated") {
                    r.verdict = Verdict::Violated;
                } else if (verdict == "satisfied") {
                    r.verdict = Verdict::Satisfied;
                } else if (verdict == "eval_error") {
                    r.verdict = Verdict::EvalError;
                } else {
                    throw Error("unknown verdict '" + verdict + "'");
                }
                r.line = j.value("line", 0);
                if (j.contains("err") && j["err"].is_string()) {
                    r.err = j["err"].get<std::string>();
                }
                out.checks.push_back(std::move(r));
            } else {
                throw Error("unknown record kind '" + kind + "'");
            }
        } catch (const nlohmann::json::exception &e) {
            throw Error("violations log line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error &e) {
            throw Error("violations log line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string to_jsonl(const Records &records) {
    std::string out;
    for (const CheckRecord &r : records.checks) {
        nlohmann::json j = {{"kind", "check"}, {"test_id", r.test_id}, {"cid", r.cid},
                            {"verdict", std::string(to_string(r.verdict))}, {"line", r.line}};
        j["err"] = r.err.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.err);
        out += j.dump() + "\n";
    }
    for (const OutcomeRecord &o : records.outcomes) {
        out += nlohmann::json{{"kind", "outcome"}, {"test_id", o.test_id}, {"passed", o.passed}}.dump() + "\n";
    }
    return out;
}

int SpectrumMatrix::failing_total() const {
    return static_cast<int>(std::count_if(tests.begin(), tests.end(), [](const auto &t) { return !t.second; }));
}

int SpectrumMatrix::passing_total() const { return static_cast<int>(tests.size()) - failing_total(); }

ConstraintCells SpectrumMatrix::cells(std::size_t constraint) const {
    ConstraintCells c;
    for (std::size_t i = 0; i < tests.size(); ++i) {
        bool violated = V[i][constraint];
        if (tests[i].second) {
            (violated ? c.ep : c.np) += 1;
        } else {
            (violated ? c.ef : c.nf) += 1;
        }
    }
    return c;
}

std::optional<std::size_t> SpectrumMatrix::index_of(std::string_view cid) const {
    for (std::size_t j = 0; j < constraints.size(); ++j) {
        if (constraints[j] == cid) {
            return j;
        }
    }
    return std::nullopt;
}

std::vector<std::string> SpectrumMatrix::failing_tests() const {
    std::vector<std::string> out;
    for (const auto &[id, passed] : tests) {
        if (!passed) {
            out.push_back(id);
        }
    }
    return out;
}

SpectrumMatrix build_matrix(const Records &records, const std::vector<std::string> &constraint_ids) {
    SpectrumMatrix m;
    std::unordered_map<std::string, std::size_t> test_index;
    for (const OutcomeRecord &o : records.outcomes) {
        if (!test_index.emplace(o.test_id, m.tests.size()).second) {
            throw Error("duplicate outcome record for test " + o.test_id);
        }
        m.tests.emplace_back(o.test_id, o.passed);
    }
    std::unordered_map<std::string, std::size_t> column;
    auto add_column = [&](const std::string &cid) {
        if (column.emplace(cid, m.constraints.size()).second) {
            m.constraints.push_back(cid);
        }
    };
    for (const std::string &cid : constraint_ids) {
        add_column(cid);
    }
    for (const CheckRecord &r : records.checks) {
        if (test_index.count(r.test_id) == 0) {
            throw MissingOutcome(r.test_id);
        }
        add_column(r.cid);
    }
    m.V.assign(m.tests.size(), std::vector<bool>(m.constraints.size(), false));
    for (const CheckRecord &r : records.checks) {
        if (r.verdict == Verdict::Violated) {
            m.V[test_index[r.test_id]][column[r.cid]] = true;
        }
    }
    return m;
}

double ochiai(const ConstraintCells &cells, int failing_total) {
    if (cells.ef == 0 || failing_total <= 0) {
        return 0.0;
    }
    return cells.ef / std::sqrt(static_cast<double>(failing_total) * (cells.ef + cells.ep));
}

double tarantula(const ConstraintCells &cells, int failing_total, int passing_total) {
    double f = failing_total > 0 ? static_cast<double>(cells.ef) / failing_total : 0.0;
    double p = passing_total > 0 ? static_cast<double>(cells.ep) / passing_total : 0.0;
    if (f + p == 0.0) {
        return 0.0;
    }
    return f / (f + p);
}

std::vector<std::pair<std::string, double>> score_all(const SpectrumMatrix &m, Scorer scorer) {
    std::vector<std::pair<std::string, double>> out;
    int failing = m.failing_total();
    int passing = m.passing_total();
    for (std::size_t j = 0; j < m.constraints.size(); ++j) {
        ConstraintCells c = m.cells(j);
        double s = scorer == Scorer::Ochiai ? ochiai(c, failing) : tarantula(c, failing, passing);
        out.emplace_back(m.constraints[j], s);
    }
    return out;
}

bool same_group(const RankedLine &a, const RankedLine &b) {
    return a.tier == b.tier && std::abs(a.score - b.score) <= kTieEpsilon;
}

Ranking attribute(const std::vector<ir::GroundedCheck> &checks,
                  const std::vector<std::pair<std::string, double>> &scores) {
    std::map<std::string, double, std::less<>> sigma(scores.begin(), scores.end());
    std::map<int, std::map<std::string, double>> contributions;
    for (const ir::GroundedCheck &c : checks) {
        auto it = sigma.find(c.constraint_id);
        if (it == sigma.end() || it->second <= 0.0) {
            continue;
        }
        double value = it->second * c.region_weight;
        for (int line : c.attributed_lines) {
            double &slot = contributions[line][c.constraint_id];
            slot = std::max(slot, value);
        }
    }
    Ranking out;
    for (const auto &[line, by_constraint] : contributions) {
        std::vector<std::pair<std::string, double>> parts(by_constraint.begin(), by_constraint.end());
        std::stable_sort(parts.begin(), parts.end(), [](const auto &a, const auto &b) { return a.second > b.second; });
        RankedLine r;
        r.line = line;
        r.score = parts.front().second;
        for (const auto &p : parts) {
            r.constraints.push_back(p.first);
        }
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const RankedLine &a, const RankedLine &b) {
        if (a.tier != b.tier) {
            return a.tier < b.tier;
        }
        if (std::abs(a.score - b.score) > kTieEpsilon) {
            return a.score > b.score;
        }
        return a.line < b.line;
    });
    return out;
}

Ranking order_worst_case(Ranking ranking, int truth_line) {
    auto it = std::find_if(ranking.begin(), ranking.end(), [&](const RankedLine &r) { return r.line == truth_line; });
    if (it == ranking.end()) {
        return ranking;
    }
    auto last = it;
    while (last + 1 != ranking.end() && same_group(*(last + 1), *it)) {
        ++last;
    }
    std::rotate(it, it + 1, last + 1);
    return ranking;
}

Metrics metrics(const Ranking &ranking, int ground_truth_line, int executable_lines) {
    Metrics m;
    int positive = 0;
    for (const RankedLine &r : ranking) {
        if (r.score > 0.0) {
            ++positive;
        }
    }
    m.pct_susp = executable_lines > 0 ? static_cast<double>(positive) / executable_lines : 0.0;
    Ranking ordered = order_worst_case(ranking, ground_truth_line);
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (ordered[i].line == ground_truth_line) {
            m.rank = static_cast<int>(i) + 1;
        }
    }
    if (m.rank) {
        m.acc1 = *m.rank <= 1;
        m.acc3 = *m.rank <= 3;
        m.acc5 = *m.rank <= 5;
    }
    return m;
}

namespace {

void collect_lines(const std::vector<py::Stmt> &stmts, bool top, std::set<int> &out) {
    for (std::size_t i = 0; i < stmts.size(); ++i) {
        if (top && i == 0 && py::is_docstring(stmts[i])) {
            continue;
        }
        out.insert(stmts[i].line);
        for (const py::Block &b : stmts[i].blocks) {
            collect_lines(b.stmts, false, out);
        }
    }
}

} // namespace

int executable_lines(const ssa::SourceUnit &unit) {
    py::Module module = py::parse_module(unit.text);
    const py::Stmt *fn = py::find_function(module, unit.function_name);
    if (fn == nullptr) {
        return 0;
    }
    std::set<int> lines;
    collect_lines(fn->blocks[0].stmts, true, lines);
    return static_cast<int>(lines.size());
}

Aggregate aggregate(const std::vector<Metrics> &all) {
    Aggregate a;
    a.programs = static_cast<int>(all.size());
    if (all.empty()) {
        return a;
    }
    std::vector<double> ranks;
    for (const Metrics &m : all) {
        a.acc1 += m.acc1;
        a.acc3 += m.acc3;
        a.acc5 += m.acc5;
        a.mean_pct_susp += m.pct_susp;
        ranks.push_back(m.rank ? *m.rank : std::numeric_limits<double>::infinity());
    }
    double n = static_cast<double>(all.size());
    a.acc1 /= n;
    a.acc3 /= n;
    a.acc5 /= n;
    a.mean_pct_susp /= n;
    std::sort(ranks.begin(), ranks.end());
    std::size_t mid = ranks.size() / 2;
    double median = ranks.size() % 2 == 1 ? ranks[mid] : (ranks[mid - 1] + ranks[mid]) / 2.0;
    if (std::isfinite(median)) {
        a.median_rank = median;
    }
    return a;
}

nlohmann::json to_json(const Ranking &ranking) {
    nlohmann::json out = nlohmann::json::array();
    for (const RankedLine &r : ranking) {
        out.push_back({{"line", r.line}, {"score", r.score}, {"constraints", r.constraints}, {"tier", r.tier}});
    }
    return out;
}

nlohmann::json to_json(const Metrics &m) {
    return {{"acc@1", m.acc1},
            {"acc@3", m.acc3},
            {"acc@5", m.acc5},
            {"pct_susp", m.pct_susp},
            {"rank", m.rank ? nlohmann::json(*m.rank) : nlohmann::json("inf")}};
}

} // namespace cbfl::spectrum
