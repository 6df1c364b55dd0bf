#pragma once

#include "cbfl/python/ast.hpp"
#include "cbfl/source_text.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cbfl::ssa {

struct SourceUnit {
    std::string path;
    std::string text;
    std::string function_name;
    SourceRange function_byte_range;
};

// Parses `text` and locates the top-level function `function_name`.
SourceUnit make_source_unit(std::string text, std::string function_name, std::string path = {});
SourceUnit load_source_unit(const std::string &path, std::string function_name);

enum class AnchorFamily { FunctionEntry, ReturnSite, LoopHead, LoopTail, Definition, Use };

const char *to_string(AnchorFamily family);

struct AnchorSite {
    AnchorFamily family = AnchorFamily::FunctionEntry;
    std::size_t byte_offset = 0;
    int line = 0;
    std::optional<std::string> variable;
    std::optional<int> loop_id;
};

struct DefEntry {
    std::string ssa_name;
    std::string base_name;
    int version = 0;
    std::size_t original_byte_offset = 0;
    int original_line = 0;
    // Join assignments reconciling branch versions have no source statement.
    bool synthetic = false;
};

struct LoopInfo {
    int loop_id = 0;
    std::size_t head_byte_offset = 0;
    std::size_t tail_byte_offset = 0;
    friend bool operator==(const LoopInfo &, const LoopInfo &) = default;
};

struct SsaProgram {
    std::string ssa_text;
    std::vector<DefEntry> def_map;
    std::vector<LoopInfo> loop_ids;

    std::string function_name;
    std::vector<std::string> params;
    // line_origin[l] is the original line of SSA line l, 0 for inserted lines.
    // Index 0 is unused.
    std::vector<int> line_origin;

    const DefEntry *find_def(std::string_view ssa_name) const;
    int origin_of(int ssa_line) const;
};

std::vector<AnchorSite> extract_anchors(const SourceUnit &unit);

SsaProgram to_ssa(const SourceUnit &unit);

std::string render_def_map(const SsaProgram &ssa);

// Reads `# loop__id: N` annotations back from SSA text.
std::vector<LoopInfo> recover_loop_ids(std::string_view ssa_text, std::string_view function_name);

// `x__3` -> ("x", 3); nullopt when the name is not SSA-versioned.
std::optional<std::pair<std::string, int>> split_versioned(std::string_view name);

} // namespace cbfl::ssa
