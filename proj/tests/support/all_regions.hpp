#pragma once

#include "cbfl/ir/ground.hpp"
#include "cbfl/ssa/ssa.hpp"

#include "helpers.hpp"

#include <string>
#include <vector>

namespace cbfl::testing {

// One always-true constraint per groundable site of every region: every
// definition, every use, every loop, every line. Sites that do not resolve
// are dropped by grounding.
inline std::vector<ir::Constraint> always_true_everywhere(const ssa::SourceUnit &unit, const ssa::SsaProgram &p,
                                                          const std::string &expr = "True") {
    std::vector<ir::Constraint> out;
    int n = 0;
    auto next = [&] { return "t" + std::to_string(++n); };
    out.push_back(constraint(next(), ir::Region::Entry, expr, {}, ir::Category::Precondition));
    out.push_back(constraint(next(), ir::Region::AnyReturn, expr));
    for (const ssa::DefEntry &d : p.def_map) {
        out.push_back(constraint(next(), ir::Region::AfterDef, expr, var_anchor(d.ssa_name), ir::Category::Relation));
        out.push_back(constraint(next(), ir::Region::BeforeUse, expr, var_anchor(d.ssa_name), ir::Category::Relation));
    }
    for (const ssa::LoopInfo &l : p.loop_ids) {
        out.push_back(constraint(next(), ir::Region::LoopHead, expr, loop_anchor(l.loop_id), ir::Category::InvariantLoop));
        out.push_back(constraint(next(), ir::Region::LoopTail, expr, loop_anchor(l.loop_id), ir::Category::InvariantLoop));
    }
    LineTable lines(unit.text);
    int first = lines.line_of(unit.function_byte_range.begin);
    int last = lines.line_of(unit.function_byte_range.end == 0 ? 0 : unit.function_byte_range.end - 1);
    for (int l = first; l <= last; ++l) {
        out.push_back(constraint(next(), ir::Region::AfterBranch, expr, line_anchor(l), ir::Category::ValueRange));
        out.push_back(constraint(next(), ir::Region::Line, expr, line_anchor(l), ir::Category::ValueRange));
    }
    return out;
}

} // namespace cbfl::testing
