#pragma once

#include "cbfl/error.hpp"
#include "cbfl/ir/ground.hpp"
#include "cbfl/ssa/ssa.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cbfl::spectrum {

enum class Verdict { Violated, Satisfied, EvalError };

std::string_view to_string(Verdict v);

struct CheckRecord {
    std::string test_id;
    std::string cid;
    Verdict verdict = Verdict::Satisfied;
    int line = 0;
    std::string err;
};

struct OutcomeRecord {
    std::string test_id;
    bool passed = false;
};

struct Records {
    std::vector<CheckRecord> checks;
    std::vector<OutcomeRecord> outcomes;
};

class MissingOutcome : public Error {
public:
    explicit MissingOutcome(const std::string &test_id)
        : Error("no outcome record for test " + test_id), test_id_(test_id) {}
    const std::string &test_id() const { return test_id_; }

private:
    std::string test_id_;
};

// Parses the JSONL wire format. Blank lines are skipped; malformed lines throw.
Records parse_records(std::string_view jsonl);
std::string to_jsonl(const Records &records);

struct ConstraintCells {
    int ef = 0;
    int ep = 0;
    int nf = 0;
    int np = 0;
};

struct SpectrumMatrix {
    std::vector<std::pair<std::string, bool>> tests; // (test_id, passed)
    std::vector<std::string> constraints;
    std::vector<std::vector<bool>> V; // V[test][constraint]

    int failing_total() const;
    int passing_total() const;
    ConstraintCells cells(std::size_t constraint) const;
    std::optional<std::size_t> index_of(std::string_view cid) const;
    std::vector<std::string> failing_tests() const;
};

// `constraint_ids` fixes the column order; ids seen only in records are
// appended in order of first appearance.
SpectrumMatrix build_matrix(const Records &records, const std::vector<std::string> &constraint_ids = {});

enum class Scorer { Ochiai, Tarantula };

std::string_view to_string(Scorer s);
std::optional<Scorer> parse_scorer(std::string_view s);

double ochiai(const ConstraintCells &cells, int failing_total);
double tarantula(const ConstraintCells &cells, int failing_total, int passing_total);

// Score per constraint id, in matrix column order.
std::vector<std::pair<std::string, double>> score_all(const SpectrumMatrix &m, Scorer scorer);

inline constexpr double kTieEpsilon = 1e-12;

struct RankedLine {
    int line = 0;
    double score = 0.0;
    std::vector<std::string> constraints;
    // 0 primary, 1 secondary, 2 spectrum; ranks order by tier before score.
    int tier = 2;
};

using Ranking = std::vector<RankedLine>;

// Statement score is the max over attributing checks of score x region weight.
// Lines with a zero score are dropped. Order: tier, score descending, line.
Ranking attribute(const std::vector<ir::GroundedCheck> &checks,
                  const std::vector<std::pair<std::string, double>> &scores);

bool same_group(const RankedLine &a, const RankedLine &b);

// Moves `truth_line` to the end of its tie group.
Ranking order_worst_case(Ranking ranking, int truth_line);

struct Metrics {
    bool acc1 = false;
    bool acc3 = false;
    bool acc5 = false;
    double pct_susp = 0.0;
    std::optional<int> rank; // nullopt when the line is not ranked
};

Metrics metrics(const Ranking &ranking, int ground_truth_line, int executable_lines);

// Lines of the function that start a statement other than the docstring.
int executable_lines(const ssa::SourceUnit &unit);

struct Aggregate {
    int programs = 0;
    double acc1 = 0.0;
    double acc3 = 0.0;
    double acc5 = 0.0;
    double mean_pct_susp = 0.0;
    std::optional<double> median_rank; // nullopt when the median is unranked
};

Aggregate aggregate(const std::vector<Metrics> &all);

nlohmann::json to_json(const Ranking &ranking);
nlohmann::json to_json(const Metrics &m);

} // namespace cbfl::spectrum
