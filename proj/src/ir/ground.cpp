#include "cbfl/ir/ground.hpp"

#include "cbfl/ir/safety.hpp"
#include "cbfl/python/visit.hpp"

#include <algorithm>
#include <variant>

namespace cbfl::ir {

using namespace cbfl::py;
using ssa::SsaView;
using ssa::StmtRef;

std::string_view to_string(Placement p) {
    switch (p) {
    case Placement::Before:
        return "before";
    case Placement::After:
        return "after";
    case Placement::Return:
        return "return";
    case Placement::ImplicitReturn:
        return "implicit-return";
    }
    return "?";
}

namespace {

struct Resolved {
    InsertionSite site;
    int site_line = 0;
    std::vector<int> lines;
};

struct Failure {
    std::string reason;
    std::string detail;
};

using Resolution = std::variant<std::vector<Resolved>, Failure>;

InsertionSite before(const SsaView &view, const Stmt &s, const std::string &indent) {
    InsertionSite site;
    site.placement = Placement::Before;
    site.offset = s.range.begin;
    site.indent = indent;
    site.ssa_line = s.line;
    site.origin_line = view.program().origin_of(s.line);
    return site;
}

InsertionSite after(const SsaView &view, const Stmt &s, const std::string &indent) {
    InsertionSite site;
    site.placement = Placement::After;
    site.offset = view.lines().line_end(s.end_line);
    site.indent = indent;
    site.ssa_line = s.line;
    site.origin_line = view.program().origin_of(s.line);
    return site;
}

bool is_jump(const Stmt &s) {
    return s.kind == StmtKind::Return || s.kind == StmtKind::Raise || s.kind == StmtKind::Break ||
           s.kind == StmtKind::Continue;
}

int first_body_line(const SsaView &view) {
    const Block &body = view.body();
    std::size_t i = is_docstring(body.stmts.front()) && body.stmts.size() > 1 ? 1 : 0;
    for (; i < body.stmts.size(); ++i) {
        int origin = view.program().origin_of(body.stmts[i].line);
        if (origin != 0) {
            return origin;
        }
    }
    return view.program().origin_of(body.stmts.front().line);
}

class Grounder {
public:
    explicit Grounder(const SsaView &view) : view_(view) {}

    Resolution resolve(const Constraint &c) const {
        switch (c.region) {
        case Region::Entry:
            return entry();
        case Region::AnyReturn:
            return any_return();
        case Region::AfterDef:
            return after_def(*c.anchor.var);
        case Region::BeforeUse:
            return before_use(*c.anchor.var);
        case Region::LoopHead:
        case Region::LoopTail:
            return loop(*c.anchor.loop_id, c.region == Region::LoopHead);
        case Region::AfterBranch:
            return after_branch(*c.anchor.line);
        case Region::Line:
            return line(*c.anchor.line);
        }
        return Failure{"unknown-region", ""};
    }

private:
    Resolution entry() const {
        Resolved r;
        r.site = entry_site(view_);
        r.site_line = first_body_line(view_);
        r.lines = {r.site_line};
        return std::vector<Resolved>{r};
    }

    Resolution any_return() const {
        std::vector<Resolved> out;
        for (const InsertionSite &site : return_sites(view_)) {
            Resolved r;
            r.site = site;
            r.site_line = site.origin_line;
            std::set<int> lines;
            if (site.origin_line != 0) {
                lines.insert(site.origin_line);
            }
            if (site.placement == Placement::Return) {
                const StmtRef *ret = statement_at(site.offset);
                if (ret != nullptr) {
                    std::set<int> slice = backward_slice(view_, view_.reads_of(*ret->stmt));
                    lines.insert(slice.begin(), slice.end());
                }
            }
            r.lines.assign(lines.begin(), lines.end());
            out.push_back(std::move(r));
        }
        if (out.empty()) {
            return Failure{"no-return-site", ""};
        }
        return out;
    }

    Resolution after_def(const std::string &var) const {
        const ssa::DefEntry *def = view_.program().find_def(var);
        if (def == nullptr) {
            return Failure{"unknown-ssa-name", var};
        }
        const StmtRef *chosen = nullptr;
        for (const StmtRef &r : view_.statements()) {
            if (view_.defs_of(*r.stmt).count(var) == 0 || r.synthetic != def->synthetic) {
                continue;
            }
            if (def->synthetic || r.origin == def->original_line) {
                chosen = &r;
                break;
            }
            if (chosen == nullptr) {
                chosen = &r;
            }
        }
        if (chosen == nullptr) {
            return Failure{"definition-site-missing", var};
        }
        Resolved r;
        if (chosen->stmt->kind == StmtKind::For) {
            const Block &body = chosen->stmt->blocks[0];
            r.site = before(view_, body.stmts.front(), view_.indent_of(body));
        } else {
            r.site = after(view_, *chosen->stmt, chosen->indent);
        }
        r.site_line = def->original_line;
        r.lines = {def->original_line};
        return std::vector<Resolved>{r};
    }

    Resolution before_use(const std::string &var) const {
        if (view_.program().find_def(var) == nullptr) {
            return Failure{"unknown-ssa-name", var};
        }
        std::vector<Resolved> out;
        std::set<std::size_t> offsets;
        for (const StmtRef &r : view_.statements()) {
            if (r.synthetic || view_.reads_of(*r.stmt).count(var) == 0) {
                continue;
            }
            if (!offsets.insert(r.stmt->range.begin).second) {
                continue;
            }
            Resolved res;
            res.site = before(view_, *r.stmt, r.indent);
            res.site_line = r.origin;
            res.lines = {r.origin};
            out.push_back(std::move(res));
        }
        if (out.empty()) {
            return Failure{"no-use-site", var};
        }
        return out;
    }

    Resolution loop(int loop_id, bool head) const {
        const ssa::LoopInfo *info = nullptr;
        for (const ssa::LoopInfo &l : view_.program().loop_ids) {
            if (l.loop_id == loop_id) {
                info = &l;
            }
        }
        if (info == nullptr) {
            return Failure{"unknown-loop-id", std::to_string(loop_id)};
        }
        const StmtRef *loop_ref = statement_at(info->head_byte_offset);
        if (loop_ref == nullptr ||
            (loop_ref->stmt->kind != StmtKind::For && loop_ref->stmt->kind != StmtKind::While)) {
            return Failure{"unknown-loop-id", std::to_string(loop_id)};
        }
        const Block &body = loop_ref->stmt->blocks[0];
        std::string indent = view_.indent_of(body);
        Resolved r;
        if (head) {
            r.site = before(view_, body.stmts.front(), indent);
        } else if (is_jump(body.stmts.back())) {
            r.site = before(view_, body.stmts.back(), indent);
        } else {
            r.site = after(view_, body.stmts.back(), indent);
        }
        r.site_line = loop_ref->origin;
        std::set<int> lines;
        std::size_t lo = body.stmts.front().range.begin;
        std::size_t hi = body.stmts.back().range.end;
        for (const StmtRef *inner : view_.nested(*loop_ref->stmt)) {
            if (!inner->synthetic && inner->stmt->range.begin >= lo && inner->stmt->range.begin < hi) {
                lines.insert(inner->origin);
            }
        }
        r.lines.assign(lines.begin(), lines.end());
        return std::vector<Resolved>{r};
    }

    Resolution after_branch(int line) const {
        const StmtRef *best = nullptr;
        for (const StmtRef &r : view_.statements()) {
            if (r.synthetic || r.stmt->kind != StmtKind::If) {
                continue;
            }
            int last = view_.program().origin_of(r.stmt->end_line);
            if (r.origin != line && last != line) {
                continue;
            }
            if (best == nullptr || r.depth > best->depth) {
                best = &r;
            }
        }
        if (best == nullptr) {
            return Failure{"no-conditional-at-line", std::to_string(line)};
        }
        const Stmt *anchor = best->stmt;
        const Block &block = *best->block;
        for (std::size_t i = best->index + 1; i < block.stmts.size(); ++i) {
            if (view_.program().origin_of(block.stmts[i].line) != 0) {
                break;
            }
            anchor = &block.stmts[i];
        }
        Resolved r;
        r.site = after(view_, *anchor, best->indent);
        r.site_line = line;
        r.lines = {line};
        return std::vector<Resolved>{r};
    }

    Resolution line(int line) const {
        const StmtRef *best = nullptr;
        for (const StmtRef &r : view_.statements()) {
            if (r.synthetic) {
                continue;
            }
            int first = r.origin;
            int last = view_.program().origin_of(r.stmt->end_line);
            if (last == 0) {
                last = first;
            }
            if (line < first || line > last) {
                continue;
            }
            if (best == nullptr || r.depth > best->depth) {
                best = &r;
            }
        }
        if (best == nullptr) {
            return Failure{"no-statement-at-line", std::to_string(line)};
        }
        Resolved res;
        res.site_line = line;
        res.lines = {line};
        const Stmt &s = *best->stmt;
        if (!s.blocks.empty()) {
            for (const Block &b : s.blocks) {
                int header_first = view_.program().origin_of(view_.lines().line_of(b.header.begin));
                int header_last = view_.program().origin_of(view_.lines().line_of(b.header.end - 1));
                if (header_first != 0 && line >= header_first && line <= std::max(header_first, header_last)) {
                    res.site = before(view_, b.stmts.front(), view_.indent_of(b));
                    return std::vector<Resolved>{res};
                }
            }
            return Failure{"no-statement-at-line", std::to_string(line)};
        }
        res.site = is_jump(s) ? before(view_, s, best->indent) : after(view_, s, best->indent);
        return std::vector<Resolved>{res};
    }

    const StmtRef *statement_at(std::size_t begin) const {
        for (const StmtRef &r : view_.statements()) {
            if (r.stmt->range.begin == begin) {
                return &r;
            }
        }
        return nullptr;
    }

    const SsaView &view_;
};

} // namespace

InsertionSite entry_site(const SsaView &view) {
    const Block &body = view.body();
    std::string indent = view.indent_of(body);
    if (is_docstring(body.stmts.front())) {
        if (body.stmts.size() == 1) {
            return after(view, body.stmts.front(), indent);
        }
        return before(view, body.stmts[1], indent);
    }
    return before(view, body.stmts.front(), indent);
}

std::vector<InsertionSite> return_sites(const SsaView &view) {
    std::vector<InsertionSite> out;
    for (const StmtRef &r : view.statements()) {
        if (r.stmt->kind != StmtKind::Return) {
            continue;
        }
        InsertionSite site;
        site.placement = Placement::Return;
        site.offset = r.stmt->range.begin;
        site.end = r.stmt->range.end;
        site.indent = r.indent;
        site.ssa_line = r.ssa_line;
        site.origin_line = r.origin;
        out.push_back(std::move(site));
    }
    const Block &body = view.body();
    if (falls_through(body.stmts)) {
        const Stmt &last = body.stmts.back();
        InsertionSite site;
        site.placement = Placement::ImplicitReturn;
        site.offset = view.lines().line_end(last.end_line);
        site.indent = view.indent_of(body);
        site.ssa_line = last.end_line;
        for (int l = last.end_line; l >= last.line && site.origin_line == 0; --l) {
            site.origin_line = view.program().origin_of(l);
        }
        out.push_back(std::move(site));
    }
    return out;
}

std::set<int> backward_slice(const SsaView &view, const NameSet &names) {
    std::set<int> lines;
    NameSet visited;
    std::vector<std::string> work(names.begin(), names.end());
    while (!work.empty()) {
        std::string name = std::move(work.back());
        work.pop_back();
        if (!visited.insert(name).second) {
            continue;
        }
        for (const StmtRef &r : view.statements()) {
            if (view.defs_of(*r.stmt).count(name) == 0) {
                continue;
            }
            if (!r.synthetic) {
                lines.insert(r.origin);
            }
            for (const std::string &read : view.reads_of(*r.stmt)) {
                if (visited.count(read) == 0) {
                    work.push_back(read);
                }
            }
        }
    }
    return lines;
}

GroundingResult ground(const std::vector<Constraint> &constraints, const ssa::SsaProgram &ssa) {
    SsaView view(ssa);
    IdentifierContext context;
    context.params.insert(ssa.params.begin(), ssa.params.end());
    for (const ssa::DefEntry &d : ssa.def_map) {
        context.ssa_names.insert(d.ssa_name);
    }
    Grounder grounder(view);
    GroundingResult result;
    for (const Constraint &c : constraints) {
        std::vector<SafetyViolation> unsafe = check_expr_safety(c.expr, c.region, &context);
        if (!unsafe.empty()) {
            result.ungroundable.push_back({c.id, unsafe.front().reason, unsafe.front().detail});
            continue;
        }
        Resolution res = grounder.resolve(c);
        if (const Failure *f = std::get_if<Failure>(&res)) {
            result.ungroundable.push_back({c.id, f->reason, f->detail});
            continue;
        }
        for (Resolved &r : std::get<std::vector<Resolved>>(res)) {
            GroundedCheck g;
            g.constraint_id = c.id;
            g.site_byte_offset = r.site.offset;
            g.site_line = r.site_line;
            g.region = c.region;
            g.expr = c.expr;
            g.region_weight = region_weight(c.region);
            g.category = c.category;
            g.site = std::move(r.site);
            g.attributed_lines = std::move(r.lines);
            result.checks.push_back(std::move(g));
        }
    }
    return result;
}

nlohmann::json to_json(const GroundedCheck &c) {
    return {
        {"constraint_id", c.constraint_id},
        {"site_byte_offset", c.site_byte_offset},
        {"site_line", c.site_line},
        {"region", std::string(to_string(c.region))},
        {"category", std::string(to_string(c.category))},
        {"expr", c.expr},
        {"region_weight", c.region_weight},
        {"placement", std::string(to_string(c.site.placement))},
        {"attributed_lines", c.attributed_lines},
    };
}

nlohmann::json to_json(const Ungroundable &u) {
    return {{"constraint_id", u.constraint_id}, {"reason", u.reason}, {"detail", u.detail}};
}

} // namespace cbfl::ir
