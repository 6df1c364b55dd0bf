#include "cbfl/ssa/ssa.hpp"

#include "cbfl/error.hpp"
#include "cbfl/python/parser.hpp"
#include "cbfl/python/token.hpp"
#include "cbfl/python/visit.hpp"
#include "cbfl/text_edit.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace cbfl::ssa {

using namespace cbfl::py;

SourceUnit make_source_unit(std::string text, std::string function_name, std::string path) {
    SourceUnit unit;
    unit.path = std::move(path);
    unit.text = std::move(text);
    unit.function_name = std::move(function_name);
    Module m = parse_module(unit.text);
    const Stmt *fn = find_function(m, unit.function_name);
    if (fn == nullptr) {
        throw Error("function '" + unit.function_name + "' not found" +
                    (unit.path.empty() ? std::string() : " in " + unit.path));
    }
    unit.function_byte_range = fn->range;
    return unit;
}

SourceUnit load_source_unit(const std::string &path, std::string function_name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return make_source_unit(ss.str(), std::move(function_name), path);
}

const char *to_string(AnchorFamily family) {
    switch (family) {
    case AnchorFamily::FunctionEntry:
        return "FunctionEntry";
    case AnchorFamily::ReturnSite:
        return "ReturnSite";
    case AnchorFamily::LoopHead:
        return "LoopHead";
    case AnchorFamily::LoopTail:
        return "LoopTail";
    case AnchorFamily::Definition:
        return "Definition";
    case AnchorFamily::Use:
        return "Use";
    }
    return "?";
}

const DefEntry *SsaProgram::find_def(std::string_view ssa_name) const {
    for (const DefEntry &d : def_map) {
        if (d.ssa_name == ssa_name) {
            return &d;
        }
    }
    return nullptr;
}

int SsaProgram::origin_of(int ssa_line) const {
    if (ssa_line <= 0 || static_cast<std::size_t>(ssa_line) >= line_origin.size()) {
        return 0;
    }
    return line_origin[static_cast<std::size_t>(ssa_line)];
}

std::optional<std::pair<std::string, int>> split_versioned(std::string_view name) {
    std::size_t sep = name.rfind("__");
    if (sep == std::string_view::npos || sep == 0 || sep + 2 >= name.size()) {
        return std::nullopt;
    }
    std::string_view digits = name.substr(sep + 2);
    if (digits[0] == '0' || digits.size() > 9) {
        return std::nullopt;
    }
    for (char c : digits) {
        if (c < '0' || c > '9') {
            return std::nullopt;
        }
    }
    return std::make_pair(std::string(name.substr(0, sep)), std::stoi(std::string(digits)));
}

namespace {

const Stmt &require_function(const Module &m, const SourceUnit &unit) {
    const Stmt *fn = find_function(m, unit.function_name);
    if (fn == nullptr) {
        throw Error("function '" + unit.function_name + "' not found");
    }
    return *fn;
}

std::vector<std::string> param_names(const Stmt &fn) {
    std::vector<std::string> out;
    for (const Param &p : fn.params) {
        out.push_back(p.name);
    }
    return out;
}

void collect_locals(const std::vector<Stmt> &stmts, NameSet &out) {
    for (const Stmt &s : stmts) {
        switch (s.kind) {
        case StmtKind::Assign:
        case StmtKind::AugAssign:
        case StmtKind::AnnAssign:
        case StmtKind::For:
        case StmtKind::Del:
            for (const Expr &t : s.targets) {
                bound_names(t, out);
            }
            break;
        case StmtKind::With:
            for (const Expr &t : s.targets) {
                bound_names(t, out);
            }
            break;
        case StmtKind::Import:
        case StmtKind::ImportFrom:
            out.insert(s.names.begin(), s.names.end());
            break;
        case StmtKind::FunctionDef:
        case StmtKind::ClassDef:
            out.insert(s.names[0]);
            continue;
        default:
            break;
        }
        for (const Block &b : s.blocks) {
            if (!b.name.empty()) {
                out.insert(b.name);
            }
            collect_locals(b.stmts, out);
        }
    }
}

// Names assigned anywhere inside `s`, in textual order of first definition.
void defined_in_order(const Stmt &s, std::vector<std::string> &out) {
    auto add = [&](const Expr &target) {
        NameSet names;
        std::vector<std::string> ordered;
        for_each_target(target, {}, [&](const Expr &n) { ordered.push_back(n.text); }, [](const Expr &) {});
        for (const std::string &n : ordered) {
            if (std::find(out.begin(), out.end(), n) == out.end()) {
                out.push_back(n);
            }
        }
    };
    switch (s.kind) {
    case StmtKind::Assign:
    case StmtKind::AugAssign:
    case StmtKind::For:
        for (const Expr &t : s.targets) {
            add(t);
        }
        break;
    case StmtKind::AnnAssign:
        if (s.value) {
            add(s.targets[0]);
        }
        break;
    default:
        break;
    }
    for (const Block &b : s.blocks) {
        for (const Stmt &inner : b.stmts) {
            defined_in_order(inner, out);
        }
    }
}

std::optional<NameSet> must_define(const std::vector<Stmt> &stmts);

// Intersection over the branches of an if chain that fall through; a missing
// else contributes the empty set.
std::optional<NameSet> must_define_if(const Stmt &s) {
    std::optional<NameSet> meet;
    bool has_else = false;
    for (const Block &b : s.blocks) {
        has_else = has_else || b.kind == BlockKind::Else;
        std::optional<NameSet> m = must_define(b.stmts);
        if (!m) {
            continue;
        }
        if (!meet) {
            meet = std::move(m);
        } else {
            NameSet inter;
            std::set_intersection(meet->begin(), meet->end(), m->begin(), m->end(),
                                  std::inserter(inter, inter.begin()));
            meet = std::move(inter);
        }
    }
    if (!has_else) {
        return NameSet{};
    }
    return meet;
}

// Names definitely assigned on every path through `stmts` that falls
// through; nullopt when no path falls through.
std::optional<NameSet> must_define(const std::vector<Stmt> &stmts) {
    NameSet acc;
    for (const Stmt &s : stmts) {
        switch (s.kind) {
        case StmtKind::Return:
        case StmtKind::Raise:
        case StmtKind::Break:
        case StmtKind::Continue:
            return std::nullopt;
        case StmtKind::Assign:
        case StmtKind::AugAssign:
            for (const Expr &t : s.targets) {
                bound_names(t, acc);
            }
            break;
        case StmtKind::AnnAssign:
            if (s.value) {
                bound_names(s.targets[0], acc);
            }
            break;
        case StmtKind::If: {
            std::optional<NameSet> meet = must_define_if(s);
            if (!meet) {
                return std::nullopt;
            }
            acc.insert(meet->begin(), meet->end());
            break;
        }
        default:
            break;
        }
    }
    return acc;
}

bool is_atomic(const Expr &e) {
    if (e.parenthesized) {
        return true;
    }
    switch (e.kind) {
    case ExprKind::Name:
    case ExprKind::Number:
    case ExprKind::String:
    case ExprKind::Constant:
    case ExprKind::Attribute:
    case ExprKind::Subscript:
    case ExprKind::Call:
    case ExprKind::List:
    case ExprKind::Dict:
    case ExprKind::Set:
    case ExprKind::ListComp:
    case ExprKind::SetComp:
    case ExprKind::DictComp:
        return true;
    default:
        return false;
    }
}

const char *stmt_kind_name(StmtKind k) {
    switch (k) {
    case StmtKind::Global:
        return "global";
    case StmtKind::Nonlocal:
        return "nonlocal";
    case StmtKind::Try:
        return "try";
    case StmtKind::With:
        return "with";
    case StmtKind::FunctionDef:
        return "nested def";
    case StmtKind::ClassDef:
        return "nested class";
    default:
        return "statement";
    }
}

void reject_expr(const Expr &root, const LineTable &lines) {
    walk(root, [&](const Expr &e) {
        const char *what = nullptr;
        switch (e.kind) {
        case ExprKind::NamedExpr:
            what = "assignment expression";
            break;
        case ExprKind::Yield:
        case ExprKind::YieldFrom:
            what = "yield";
            break;
        case ExprKind::Await:
            what = "await";
            break;
        default:
            break;
        }
        if (what != nullptr) {
            throw UnsupportedConstruct(what, lines.line_of(e.range.begin));
        }
    });
}

void check_supported(const std::vector<Stmt> &stmts, const NameSet &assigned,
                     const LineTable &lines) {
    for (const Stmt &s : stmts) {
        switch (s.kind) {
        case StmtKind::Global:
        case StmtKind::Nonlocal:
        case StmtKind::Try:
        case StmtKind::With:
        case StmtKind::FunctionDef:
        case StmtKind::ClassDef:
            throw UnsupportedConstruct(stmt_kind_name(s.kind), s.line);
        case StmtKind::Del:
            for (const Expr &t : s.targets) {
                NameSet names;
                bound_names(t, names);
                if (!names.empty()) {
                    throw UnsupportedConstruct("del of a local name", s.line);
                }
            }
            break;
        case StmtKind::AnnAssign:
            if (!s.value) {
                throw UnsupportedConstruct("annotation without value", s.line);
            }
            break;
        case StmtKind::Import:
        case StmtKind::ImportFrom:
            for (const std::string &n : s.names) {
                if (assigned.count(n) != 0) {
                    throw UnsupportedConstruct("import rebinding an assigned local", s.line);
                }
            }
            break;
        default:
            break;
        }
        if (s.is_async) {
            throw UnsupportedConstruct("async", s.line);
        }
        for_each_own_expr(s, [&](const Expr &e) { reject_expr(e, lines); });
        for (const Block &b : s.blocks) {
            check_supported(b.stmts, assigned, lines);
        }
    }
}

// ------------------------------------------------------------------ anchors

class AnchorCollector {
public:
    AnchorCollector(const SourceUnit &unit, const Stmt &fn) : lines_(unit.text) {
        for (const Param &p : fn.params) {
            known_.insert(p.name);
        }
        collect_locals(fn.blocks[0].stmts, known_);
    }

    std::vector<AnchorSite> run(const Stmt &fn) {
        const std::vector<Stmt> &body = fn.blocks[0].stmts;
        const Stmt *entry = &body.front();
        if (is_docstring(body.front()) && body.size() > 1) {
            entry = &body[1];
        }
        add(AnchorFamily::FunctionEntry, entry->range.begin);
        block(body);
        std::stable_sort(out_.begin(), out_.end(), [](const AnchorSite &a, const AnchorSite &b) {
            if (a.byte_offset != b.byte_offset) {
                return a.byte_offset < b.byte_offset;
            }
            return static_cast<int>(a.family) < static_cast<int>(b.family);
        });
        return out_;
    }

private:
    void add(AnchorFamily family, std::size_t offset, std::optional<std::string> var = std::nullopt,
             std::optional<int> loop = std::nullopt) {
        AnchorSite a;
        a.family = family;
        a.byte_offset = offset;
        a.line = lines_.line_of(offset);
        a.variable = std::move(var);
        a.loop_id = loop;
        out_.push_back(std::move(a));
    }

    void reads(const Expr &e) {
        for_each_read(e, {}, [&](const Expr &n) {
            if (known_.count(n.text) != 0) {
                add(AnchorFamily::Use, n.range.begin, n.text);
            }
        });
    }

    void target(const Expr &t) {
        for_each_target(
            t, {}, [&](const Expr &n) { add(AnchorFamily::Definition, n.range.begin, n.text); },
            [&](const Expr &n) {
                if (known_.count(n.text) != 0) {
                    add(AnchorFamily::Use, n.range.begin, n.text);
                }
            });
    }

    void block(const std::vector<Stmt> &stmts) {
        for (const Stmt &s : stmts) {
            stmt(s);
        }
    }

    void stmt(const Stmt &s) {
        switch (s.kind) {
        case StmtKind::Return:
            add(AnchorFamily::ReturnSite, s.range.begin);
            if (s.value) {
                reads(*s.value);
            }
            return;
        case StmtKind::Assign:
            reads(*s.value);
            for (const Expr &t : s.targets) {
                target(t);
            }
            return;
        case StmtKind::AugAssign:
        case StmtKind::AnnAssign:
            if (s.value) {
                reads(*s.value);
                target(s.targets[0]);
            }
            return;
        case StmtKind::For:
        case StmtKind::While: {
            int id = ++loop_counter_;
            add(AnchorFamily::LoopHead, s.range.begin, std::nullopt, id);
            if (s.kind == StmtKind::For) {
                reads(*s.value);
                target(s.targets[0]);
            } else {
                reads(*s.blocks[0].test);
            }
            block(s.blocks[0].stmts);
            add(AnchorFamily::LoopTail, s.blocks[0].stmts.back().range.begin, std::nullopt, id);
            for (std::size_t i = 1; i < s.blocks.size(); ++i) {
                block(s.blocks[i].stmts);
            }
            return;
        }
        case StmtKind::If:
            for (const Block &b : s.blocks) {
                if (b.test) {
                    reads(*b.test);
                }
                block(b.stmts);
            }
            return;
        case StmtKind::FunctionDef:
        case StmtKind::ClassDef:
            return;
        default:
            for (const Expr &t : s.targets) {
                reads(t);
            }
            if (s.value) {
                reads(*s.value);
            }
            for (const Expr &x : s.exprs) {
                reads(x);
            }
            for (const Block &b : s.blocks) {
                if (b.test) {
                    reads(*b.test);
                }
                block(b.stmts);
            }
            return;
        }
    }

    LineTable lines_;
    NameSet known_;
    int loop_counter_ = 0;
    std::vector<AnchorSite> out_;
};

// ---------------------------------------------------------------------- SSA

using Env = std::map<std::string, std::string, std::less<>>;

class SsaBuilder {
public:
    SsaBuilder(const SourceUnit &unit, const Stmt &fn) : unit_(unit), fn_(fn), lines_(unit.text) {}

    SsaProgram run() {
        for (const Param &p : fn_.params) {
            params_.insert(p.name);
        }
        collect_locals(fn_.blocks[0].stmts, locals_);
        NameSet assigned;
        collect_assigned(fn_.blocks[0].stmts, assigned);
        if (fn_.is_async) {
            throw UnsupportedConstruct("async", fn_.line);
        }
        check_supported(fn_.blocks[0].stmts, assigned, lines_);
        for (const std::string &name : locals_) {
            if (split_versioned(name)) {
                throw UnsupportedConstruct("local named like an SSA version: " + name, fn_.line);
            }
        }
        // Only assigned names are versioned; import-bound names stay as is.
        versioned_ = assigned;
        versioned_.insert(params_.begin(), params_.end());

        Env env;
        for (const std::string &p : params_) {
            env[p] = p;
        }
        std::string def_indent(lines_.indentation(fn_.line));
        process_block(fn_.blocks[0], def_indent, env);

        EditedText edited = apply_edits_tracked(unit_.text, edits_);
        SsaProgram out;
        out.ssa_text = std::move(edited.text);
        out.def_map = defs_;
        out.function_name = unit_.function_name;
        out.params = param_names(fn_);
        LineTable ssa_lines(out.ssa_text);
        out.line_origin.assign(static_cast<std::size_t>(ssa_lines.line_count()) + 1, 0);
        for (int l = 1; l <= ssa_lines.line_count(); ++l) {
            std::size_t p = ssa_lines.line_start(l);
            std::size_t e = ssa_lines.line_end(l);
            while (p < e && (out.ssa_text[p] == ' ' || out.ssa_text[p] == '\t')) {
                ++p;
            }
            if (p < e && edited.origin[p] != kNoOrigin) {
                out.line_origin[static_cast<std::size_t>(l)] = lines_.line_of(edited.origin[p]);
            }
        }
        out.loop_ids = recover_loop_ids(out.ssa_text, unit_.function_name);
        return out;
    }

private:
    struct Pin {
        std::string name;
        std::size_t def_index = 0;
        bool sited = false;
    };

    static void collect_assigned(const std::vector<Stmt> &stmts, NameSet &out) {
        for (const Stmt &s : stmts) {
            std::vector<std::string> names;
            defined_in_order(s, names);
            out.insert(names.begin(), names.end());
        }
    }

    std::size_t def_offset(const Stmt &s) const {
        if (s.kind == StmtKind::For) {
            return lines_.line_end(lines_.line_of(s.blocks[0].header.end - 1));
        }
        return lines_.line_end(s.end_line);
    }

    std::string fresh(const std::string &base, std::size_t offset, int line, bool synthetic) {
        int k = ++counter_[base];
        std::string name = base + "__" + std::to_string(k);
        defs_.push_back({name, base, k, offset, line, synthetic});
        return name;
    }

    std::string define(const std::string &base, const Stmt &s, Env &env) {
        std::string name;
        auto pin = pins_.find(base);
        if (pin != pins_.end()) {
            name = pin->second.name;
            if (!pin->second.sited) {
                defs_[pin->second.def_index].original_byte_offset = def_offset(s);
                defs_[pin->second.def_index].original_line = s.line;
                pin->second.sited = true;
            }
        } else {
            name = fresh(base, def_offset(s), s.line, false);
        }
        env[base] = name;
        return name;
    }

    void rename(const Expr &e, const Env &env) {
        for_each_read(e, {}, [&](const Expr &n) { rename_name(n, env); });
    }

    void rename_name(const Expr &n, const Env &env) {
        if (versioned_.count(n.text) == 0) {
            return;
        }
        auto it = env.find(n.text);
        if (it != env.end() && it->second != n.text) {
            edits_.push_back({n.range, it->second});
        }
    }

    void def_target(const Expr &t, const Stmt &s, Env &env) {
        for_each_target(
            t, {},
            [&](const Expr &n) {
                std::string name = define(n.text, s, env);
                edits_.push_back({n.range, name});
            },
            [&](const Expr &n) { rename_name(n, env); });
    }

    void insert_before(const Stmt &s, const std::string &indent, const std::string &line) {
        edits_.push_back({{s.range.begin, s.range.begin}, line + "\n" + indent});
    }

    std::string process_block(const Block &b, const std::string &header_indent, Env &env) {
        std::string indent = b.inline_body ? header_indent + "    "
                                           : std::string(lines_.indentation(b.stmts.front().line));
        for (std::size_t i = 0; i < b.stmts.size(); ++i) {
            const Stmt &s = b.stmts[i];
            if (i == 0 && b.inline_body) {
                edits_.push_back({{b.header.end, s.range.begin}, "\n" + indent});
            } else if (i > 0 && s.line == b.stmts[i - 1].end_line) {
                edits_.push_back({{b.stmts[i - 1].range.end, s.range.begin}, "\n" + indent});
            }
            process_stmt(s, indent, env);
        }
        return indent;
    }

    void process_stmt(const Stmt &s, const std::string &indent, Env &env) {
        switch (s.kind) {
        case StmtKind::Assign:
            rename(*s.value, env);
            for (const Expr &t : s.targets) {
                def_target(t, s, env);
            }
            return;
        case StmtKind::AnnAssign:
            rename(*s.value, env);
            def_target(s.targets[0], s, env);
            return;
        case StmtKind::AugAssign:
            lower_augmented(s, env);
            return;
        case StmtKind::If:
            process_if(s, indent, env);
            return;
        case StmtKind::For:
        case StmtKind::While:
            process_loop(s, indent, env);
            return;
        default:
            for_each_own_expr(s, [&](const Expr &e) { rename(e, env); });
            return;
        }
    }

    void lower_augmented(const Stmt &s, Env &env) {
        const Expr &target = s.targets[0];
        const Expr &value = *s.value;
        if (target.kind != ExprKind::Name) {
            rename(target, env);
            rename(value, env);
            return;
        }
        auto it = env.find(target.text);
        std::string old = it == env.end() ? target.text : it->second;
        rename(value, env);
        std::string name = define(target.text, s, env);
        edits_.push_back({target.range, name});
        edits_.push_back({{target.range.end, value.range.begin}, " = " + old + " " + s.op + " "});
        if (!is_atomic(value)) {
            edits_.push_back({{value.range.begin, value.range.begin}, "("});
            edits_.push_back({{value.range.end, value.range.end}, ")"});
        }
    }

    void process_loop(const Stmt &s, const std::string &indent, Env &env) {
        std::vector<std::string> new_pins;
        if (loop_depth_ == 0) {
            std::vector<std::string> defined;
            defined_in_order(s, defined);
            for (const std::string &base : defined) {
                if (pins_.count(base) != 0) {
                    continue;
                }
                std::string name = fresh(base, 0, 0, false);
                pins_[base] = Pin{name, defs_.size() - 1, false};
                new_pins.push_back(base);
                auto prior = env.find(base);
                if (prior != env.end()) {
                    insert_before(s, indent, name + " = " + prior->second);
                }
                env[base] = name;
            }
        }
        int id = ++loop_counter_;
        edits_.push_back({{s.blocks[0].header.end, s.blocks[0].header.end}, "  # loop__id: " + std::to_string(id)});
        ++loop_depth_;
        if (s.kind == StmtKind::For) {
            rename(*s.value, env);
            def_target(s.targets[0], s, env);
        } else {
            rename(*s.blocks[0].test, env);
        }
        for (const Block &b : s.blocks) {
            process_block(b, indent, env);
        }
        --loop_depth_;
        for (const std::string &base : new_pins) {
            pins_.erase(base);
        }
    }

    struct Path {
        Env env;
        std::size_t block_index = 0;
        bool implicit_else = false;
        const Block *block = nullptr;
        std::string indent;
    };

    void process_if(const Stmt &s, const std::string &indent, Env &env) {
        int if_id = ++if_counter_;
        std::vector<std::string> new_pins;
        if (loop_depth_ == 0) {
            std::optional<NameSet> must = must_define_if(s);
            if (must) {
                std::vector<std::string> defined;
                defined_in_order(s, defined);
                for (const std::string &base : defined) {
                    if (env.count(base) != 0 || pins_.count(base) != 0 || must->count(base) != 0) {
                        continue;
                    }
                    std::string name = fresh(base, 0, 0, false);
                    pins_[base] = Pin{name, defs_.size() - 1, false};
                    new_pins.push_back(base);
                    env[base] = name;
                }
            }
        }
        const Env before = env;
        for (const Block &b : s.blocks) {
            if (b.test) {
                rename(*b.test, before);
            }
        }
        std::vector<Path> reaching;
        bool has_else = false;
        for (std::size_t i = 0; i < s.blocks.size(); ++i) {
            const Block &b = s.blocks[i];
            has_else = has_else || b.kind == BlockKind::Else;
            Path p;
            p.env = before;
            p.block_index = i;
            p.block = &b;
            p.indent = process_block(b, indent, p.env);
            if (must_define(b.stmts)) {
                reaching.push_back(std::move(p));
            }
        }
        if (!has_else) {
            Path p;
            p.env = before;
            p.implicit_else = true;
            reaching.push_back(std::move(p));
        }
        for (const std::string &base : new_pins) {
            pins_.erase(base);
        }
        if (reaching.empty()) {
            env = before;
            return;
        }

        NameSet bases;
        for (const Path &p : reaching) {
            for (const auto &[k, v] : p.env) {
                bases.insert(k);
            }
        }
        std::vector<std::string> joins;
        std::set<std::size_t> flagged;
        Env merged;
        for (const std::string &base : bases) {
            bool all_present = true;
            bool all_equal = true;
            const std::string *first = nullptr;
            for (const Path &p : reaching) {
                auto it = p.env.find(base);
                if (it == p.env.end()) {
                    all_present = false;
                    continue;
                }
                if (first == nullptr) {
                    first = &it->second;
                } else if (*first != it->second) {
                    all_equal = false;
                }
            }
            if (all_equal || !all_present) {
                merged[base] = *first;
                continue;
            }
            std::string name = fresh(base, lines_.line_end(s.end_line), s.end_line, true);
            std::string expr;
            for (std::size_t i = 0; i < reaching.size(); ++i) {
                const std::string &v = reaching[i].env.at(base);
                if (i + 1 == reaching.size()) {
                    expr += v;
                } else {
                    expr += v + " if " + flag(if_id, reaching[i].block_index) + " else ";
                    flagged.insert(i);
                }
            }
            joins.push_back(name + " = " + expr);
            merged[base] = name;
        }
        env = std::move(merged);
        if (joins.empty()) {
            return;
        }
        std::string init;
        for (std::size_t i : flagged) {
            init += flag(if_id, reaching[i].block_index) + " = ";
        }
        insert_before(s, indent, init + "False");
        for (std::size_t i : flagged) {
            const Path &p = reaching[i];
            insert_before(p.block->stmts.front(), p.indent, flag(if_id, p.block_index) + " = True");
        }
        std::string text;
        for (const std::string &j : joins) {
            text += "\n" + indent + j;
        }
        std::size_t at = lines_.line_end(s.end_line);
        edits_.push_back({{at, at}, text});
    }

    static std::string flag(int if_id, std::size_t block_index) {
        return "__br" + std::to_string(if_id) + "_" + std::to_string(block_index);
    }

    const SourceUnit &unit_;
    const Stmt &fn_;
    LineTable lines_;
    NameSet params_;
    NameSet locals_;
    NameSet versioned_;
    std::map<std::string, int, std::less<>> counter_;
    std::map<std::string, Pin, std::less<>> pins_;
    std::vector<DefEntry> defs_;
    std::vector<Edit> edits_;
    int loop_depth_ = 0;
    int loop_counter_ = 0;
    int if_counter_ = 0;
};

void collect_loops(const std::vector<Stmt> &stmts, std::vector<const Stmt *> &out) {
    for (const Stmt &s : stmts) {
        if (s.kind == StmtKind::For || s.kind == StmtKind::While) {
            out.push_back(&s);
        }
        for (const Block &b : s.blocks) {
            collect_loops(b.stmts, out);
        }
    }
}

} // namespace

std::vector<AnchorSite> extract_anchors(const SourceUnit &unit) {
    Module m = parse_module(unit.text);
    const Stmt &fn = require_function(m, unit);
    AnchorCollector collector(unit, fn);
    return collector.run(fn);
}

SsaProgram to_ssa(const SourceUnit &unit) {
    Module m = parse_module(unit.text);
    const Stmt &fn = require_function(m, unit);
    SsaBuilder builder(unit, fn);
    return builder.run();
}

std::string render_def_map(const SsaProgram &ssa) {
    std::vector<const DefEntry *> entries;
    for (const DefEntry &d : ssa.def_map) {
        entries.push_back(&d);
    }
    std::stable_sort(entries.begin(), entries.end(), [](const DefEntry *a, const DefEntry *b) {
        return a->original_byte_offset < b->original_byte_offset;
    });
    std::string out;
    for (const DefEntry *d : entries) {
        out += "# " + d->ssa_name + " -> '" + d->base_name + "' (byte " + std::to_string(d->original_byte_offset) +
               ")\n";
    }
    return out;
}

std::vector<LoopInfo> recover_loop_ids(std::string_view ssa_text, std::string_view function_name) {
    TokenStream tokens = tokenize(ssa_text);
    Module m = parse_module(ssa_text);
    const Stmt *fn = find_function(m, function_name);
    if (fn == nullptr) {
        return {};
    }
    std::vector<const Stmt *> loops;
    collect_loops(fn->blocks[0].stmts, loops);
    LineTable lines(ssa_text);
    static const std::regex pattern(R"(# loop__id: (\d+))");
    std::vector<LoopInfo> out;
    for (const Stmt *loop : loops) {
        int header_line = lines.line_of(loop->blocks[0].header.end - 1);
        for (const Comment &c : tokens.comments) {
            if (c.line != header_line) {
                continue;
            }
            std::string text(ssa_text.substr(c.range.begin, c.range.size()));
            std::smatch match;
            if (std::regex_search(text, match, pattern)) {
                out.push_back({std::stoi(match[1].str()), loop->range.begin, loop->range.end});
                break;
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const LoopInfo &a, const LoopInfo &b) { return a.loop_id < b.loop_id; });
    return out;
}

} // namespace cbfl::ssa
