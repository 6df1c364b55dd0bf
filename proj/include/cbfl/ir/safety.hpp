#pragma once

#include "cbfl/ir/constraint.hpp"

#include <set>
#include <string>
#include <vector>

namespace cbfl::ir {

struct SafetyViolation {
    std::string reason; // unparseable, disallowed-call, disallowed-node, ...
    std::string detail;
};

// Names the grounding stage knows about. Without it only the context-free
// grammar rules are enforced.
struct IdentifierContext {
    std::set<std::string, std::less<>> params;
    std::set<std::string, std::less<>> ssa_names;
};

inline constexpr std::array<std::string_view, 7> kAllowedCalls = {"len", "all", "any", "sum", "abs", "max", "min"};

std::vector<SafetyViolation> check_expr_safety(std::string_view expr, Region region,
                                               const IdentifierContext *context = nullptr);

// Free identifiers of an accepted expression, excluding allowed builtins.
std::vector<std::string> free_identifiers(std::string_view expr);

} // namespace cbfl::ir
