#include "cbfl/ssa/view.hpp"

#include "cbfl/error.hpp"
#include "cbfl/python/parser.hpp"

namespace cbfl::ssa {

using namespace cbfl::py;

SsaView::SsaView(const SsaProgram &ssa)
    : ssa_(ssa), module_(parse_module(ssa.ssa_text)), lines_(ssa.ssa_text) {
    function_ = find_function(module_, ssa.function_name);
    if (function_ == nullptr) {
        throw Error("SSA text lost function '" + ssa.function_name + "'");
    }
    index(function_->blocks[0], nullptr, 0);
}

void SsaView::index(const Block &block, const Stmt *parent, int depth) {
    for (std::size_t i = 0; i < block.stmts.size(); ++i) {
        const Stmt &s = block.stmts[i];
        StmtRef ref;
        ref.stmt = &s;
        ref.block = &block;
        ref.parent = parent;
        ref.index = i;
        ref.depth = depth;
        ref.indent = std::string(lines_.indentation(s.line));
        ref.ssa_line = s.line;
        ref.origin = ssa_.origin_of(s.line);
        ref.synthetic = ref.origin == 0;
        stmts_.push_back(std::move(ref));
        for (const Block &b : s.blocks) {
            index(b, &s, depth + 1);
        }
    }
}

const StmtRef *SsaView::find(const Stmt *stmt) const {
    for (const StmtRef &r : stmts_) {
        if (r.stmt == stmt) {
            return &r;
        }
    }
    return nullptr;
}

NameSet SsaView::reads_of(const Stmt &s) const {
    NameSet out;
    auto add = [&](const Expr &e) { for_each_read(e, {}, [&](const Expr &n) { out.insert(n.text); }); };
    switch (s.kind) {
    case StmtKind::Assign:
    case StmtKind::AugAssign:
    case StmtKind::AnnAssign:
    case StmtKind::For:
        if (s.value) {
            add(*s.value);
        }
        for (const Expr &t : s.targets) {
            for_each_target(t, {}, [](const Expr &) {}, [&](const Expr &n) { out.insert(n.text); });
        }
        if (s.kind == StmtKind::AugAssign && s.targets[0].kind == ExprKind::Name) {
            out.insert(s.targets[0].text);
        }
        break;
    default:
        for_each_own_expr(s, add);
        break;
    }
    return out;
}

NameSet SsaView::defs_of(const Stmt &s) const {
    NameSet out;
    switch (s.kind) {
    case StmtKind::Assign:
    case StmtKind::AugAssign:
    case StmtKind::AnnAssign:
    case StmtKind::For:
        for (const Expr &t : s.targets) {
            bound_names(t, out);
        }
        break;
    default:
        break;
    }
    return out;
}

std::string SsaView::indent_of(const Block &block) const {
    if (block.stmts.empty()) {
        return {};
    }
    return std::string(lines_.indentation(block.stmts.front().line));
}

std::vector<const StmtRef *> SsaView::nested(const Stmt &compound) const {
    std::vector<const StmtRef *> out;
    const StmtRef *self = find(&compound);
    if (self == nullptr) {
        return out;
    }
    bool inside = false;
    for (const StmtRef &r : stmts_) {
        if (&r == self) {
            inside = true;
            continue;
        }
        if (!inside) {
            continue;
        }
        if (r.depth <= self->depth) {
            break;
        }
        out.push_back(&r);
    }
    return out;
}

} // namespace cbfl::ssa
