#pragma once

#include "cbfl/ir/ground.hpp"
#include "cbfl/ssa/ssa.hpp"
#include "cbfl/text_edit.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cbfl::instrument {

inline constexpr std::string_view kShimModule = "cbfl_runtime";
inline constexpr std::string_view kShimAlias = "__cbfl";
inline constexpr std::string_view kMarker = "__cbfl";
inline constexpr std::string_view kReturnTag = "# __cbfl:return";

struct CheckSite {
    std::string constraint_id;
    int site_line = 0;
};

// An edit plus the check calls it introduces, keyed by their byte position
// inside the replacement text.
struct PlannedEdit {
    Edit edit;
    std::vector<std::pair<std::size_t, CheckSite>> checks;
};

struct InstrumentedProgram {
    std::string text;
    // Instrumented line of each check call -> constraint and attributed line.
    std::map<int, CheckSite> check_index;
};

// `__cbfl.check("<cid>", lambda: <expr>)`
std::string check_call(std::string_view cid, std::string_view expr);

// Rewrites `return E` into `result = E`, the check lines, and a tagged
// `return result`. A bare return binds None in front of the untouched return.
std::string rewrite_result_binding(std::string_view return_stmt_text, std::string_view indent,
                                   const std::vector<std::string> &check_lines);

// One edit per distinct offset, so the result never depends on list order.
// Includes the shim import line unless there are no checks.
std::vector<PlannedEdit> plan_edits(const std::vector<ir::GroundedCheck> &checks, const ssa::SsaProgram &ssa);

// Throws OverlapError when two edits collide.
InstrumentedProgram apply_edits(std::string_view ssa_text, std::vector<PlannedEdit> edits);

InstrumentedProgram instrument(const std::vector<ir::GroundedCheck> &checks, const ssa::SsaProgram &ssa);

// Removes every line carrying the marker and undoes the result binding.
std::string strip_instrumentation(std::string_view text);

} // namespace cbfl::instrument
