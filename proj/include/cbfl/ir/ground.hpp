#pragma once

#include "cbfl/ir/constraint.hpp"
#include "cbfl/ssa/ssa.hpp"
#include "cbfl/ssa/view.hpp"

#include <set>
#include <string>
#include <vector>

namespace cbfl::ir {

enum class Placement {
    Before,         // new line in front of the anchoring statement
    After,          // new line after the anchoring statement's last line
    Return,         // the return statement itself is rewritten
    ImplicitReturn, // end of a body that can fall off its end
};

std::string_view to_string(Placement p);

struct InsertionSite {
    Placement placement = Placement::Before;
    std::size_t offset = 0; // SSA text offset of the insertion point
    std::size_t end = 0;    // end of the rewritten statement (Return only)
    std::string indent;
    int ssa_line = 0;
    int origin_line = 0;
};

struct GroundedCheck {
    std::string constraint_id;
    std::size_t site_byte_offset = 0;
    int site_line = 0;
    Region region = Region::Entry;
    std::string expr;
    double region_weight = 1.0;

    Category category = Category::Precondition;
    InsertionSite site;
    // Original lines receiving this check's suspiciousness.
    std::vector<int> attributed_lines;
};

struct Ungroundable {
    std::string constraint_id;
    std::string reason;
    std::string detail;
};

struct GroundingResult {
    std::vector<GroundedCheck> checks;
    std::vector<Ungroundable> ungroundable;
};

GroundingResult ground(const std::vector<Constraint> &constraints, const ssa::SsaProgram &ssa);

InsertionSite entry_site(const ssa::SsaView &view);
std::vector<InsertionSite> return_sites(const ssa::SsaView &view);

// Original lines of every statement in the def-use closure of `names`.
std::set<int> backward_slice(const ssa::SsaView &view, const py::NameSet &names);

nlohmann::json to_json(const GroundedCheck &c);
nlohmann::json to_json(const Ungroundable &u);

} // namespace cbfl::ir
