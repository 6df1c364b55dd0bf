#pragma once

#include "cbfl/python/ast.hpp"
#include "cbfl/python/visit.hpp"
#include "cbfl/source_text.hpp"
#include "cbfl/ssa/ssa.hpp"

#include <string>
#include <vector>

namespace cbfl::ssa {

struct StmtRef {
    const py::Stmt *stmt = nullptr;
    const py::Block *block = nullptr; // block holding the statement
    const py::Stmt *parent = nullptr; // enclosing compound statement, null at body level
    std::size_t index = 0;            // position inside `block`
    int depth = 0;
    std::string indent;
    int ssa_line = 0;
    int origin = 0;
    bool synthetic = false;
};

// Parsed view over the function inside an SsaProgram's text. The program
// must outlive the view.
class SsaView {
public:
    explicit SsaView(const SsaProgram &ssa);

    SsaView(const SsaView &) = delete;
    SsaView &operator=(const SsaView &) = delete;

    const SsaProgram &program() const { return ssa_; }
    std::string_view text() const { return ssa_.ssa_text; }
    const LineTable &lines() const { return lines_; }
    const py::Stmt &function() const { return *function_; }
    const py::Block &body() const { return function_->blocks[0]; }

    // Every statement of the function body in pre-order.
    const std::vector<StmtRef> &statements() const { return stmts_; }
    const StmtRef *find(const py::Stmt *stmt) const;

    // Names read by the statement's own expressions (headers for compound
    // statements, including every elif test of an if chain).
    py::NameSet reads_of(const py::Stmt &stmt) const;
    // Names bound by the statement itself (targets, for-loop target).
    py::NameSet defs_of(const py::Stmt &stmt) const;

    // Indentation used by the statements of `block`.
    std::string indent_of(const py::Block &block) const;

    // Statements directly inside loop/if blocks, recursively.
    std::vector<const StmtRef *> nested(const py::Stmt &compound) const;

private:
    void index(const py::Block &block, const py::Stmt *parent, int depth);

    const SsaProgram &ssa_;
    py::Module module_;
    LineTable lines_;
    const py::Stmt *function_ = nullptr;
    std::vector<StmtRef> stmts_;
};

} // namespace cbfl::ssa
