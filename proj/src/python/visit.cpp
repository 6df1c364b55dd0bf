#include "cbfl/python/visit.hpp"

namespace cbfl::py {

namespace {

bool is_comprehension(ExprKind k) {
    return k == ExprKind::ListComp || k == ExprKind::SetComp || k == ExprKind::GeneratorExp ||
           k == ExprKind::DictComp;
}

} // namespace

void bound_names(const Expr &target, NameSet &out) {
    switch (target.kind) {
    case ExprKind::Name:
        out.insert(target.text);
        break;
    case ExprKind::Tuple:
    case ExprKind::List:
    case ExprKind::Starred:
        for (const Expr &c : target.children) {
            bound_names(c, out);
        }
        break;
    default:
        break;
    }
}

void for_each_target(const Expr &target, const NameSet &shadow, const ExprFn &on_def, const ExprFn &on_read) {
    switch (target.kind) {
    case ExprKind::Name:
        on_def(target);
        break;
    case ExprKind::Tuple:
    case ExprKind::List:
    case ExprKind::Starred:
        for (const Expr &c : target.children) {
            for_each_target(c, shadow, on_def, on_read);
        }
        break;
    default:
        for_each_read(target, shadow, on_read);
        break;
    }
}

void for_each_read(const Expr &e, const NameSet &shadow, const ExprFn &fn) {
    switch (e.kind) {
    case ExprKind::Name:
        if (shadow.find(e.text) == shadow.end()) {
            fn(e);
        }
        return;
    case ExprKind::Lambda: {
        for (std::size_t i = 1; i < e.children.size(); ++i) {
            for_each_read(e.children[i], shadow, fn);
        }
        NameSet inner = shadow;
        inner.insert(e.params.begin(), e.params.end());
        for_each_read(e.children[0], inner, fn);
        return;
    }
    default:
        break;
    }
    if (is_comprehension(e.kind)) {
        NameSet inner = shadow;
        for (std::size_t i = 0; i < e.generators.size(); ++i) {
            const Comprehension &g = e.generators[i];
            for_each_read(g.iter, i == 0 ? shadow : inner, fn);
            bound_names(g.target, inner);
            for_each_target(g.target, inner, [](const Expr &) {}, fn);
            for (const Expr &cond : g.ifs) {
                for_each_read(cond, inner, fn);
            }
        }
        for (const Expr &c : e.children) {
            for_each_read(c, inner, fn);
        }
        return;
    }
    for (const Expr &c : e.children) {
        for_each_read(c, shadow, fn);
    }
}

void walk(const Expr &e, const ExprFn &fn) {
    fn(e);
    for (const Expr &c : e.children) {
        walk(c, fn);
    }
    for (const Comprehension &g : e.generators) {
        walk(g.target, fn);
        walk(g.iter, fn);
        for (const Expr &cond : g.ifs) {
            walk(cond, fn);
        }
    }
}

void for_each_own_expr(const Stmt &s, const ExprFn &fn) {
    for (const Expr &t : s.targets) {
        fn(t);
    }
    if (s.value) {
        fn(*s.value);
    }
    for (const Expr &x : s.exprs) {
        fn(x);
    }
    for (const Param &p : s.params) {
        if (p.default_value) {
            fn(*p.default_value);
        }
        if (p.annotation) {
            fn(*p.annotation);
        }
    }
    for (const Block &b : s.blocks) {
        if (b.test) {
            fn(*b.test);
        }
    }
}

bool is_docstring(const Stmt &s) {
    return s.kind == StmtKind::Expr && s.value && s.value->kind == ExprKind::String &&
           s.value->children.empty();
}

} // namespace cbfl::py

namespace cbfl::py {

namespace {

bool contains_break(const std::vector<Stmt> &stmts) {
    for (const Stmt &s : stmts) {
        if (s.kind == StmtKind::Break) {
            return true;
        }
        if (s.kind == StmtKind::For || s.kind == StmtKind::While || s.kind == StmtKind::FunctionDef ||
            s.kind == StmtKind::ClassDef) {
            continue;
        }
        for (const Block &b : s.blocks) {
            if (contains_break(b.stmts)) {
                return true;
            }
        }
    }
    return false;
}

} // namespace

bool falls_through(const std::vector<Stmt> &stmts) {
    for (const Stmt &s : stmts) {
        switch (s.kind) {
        case StmtKind::Return:
        case StmtKind::Raise:
        case StmtKind::Break:
        case StmtKind::Continue:
            return false;
        case StmtKind::If: {
            bool has_else = false;
            bool any = false;
            for (const Block &b : s.blocks) {
                has_else = has_else || b.kind == BlockKind::Else;
                any = any || falls_through(b.stmts);
            }
            if (has_else && !any) {
                return false;
            }
            break;
        }
        case StmtKind::While: {
            const Expr &test = *s.blocks[0].test;
            bool forever = test.kind == ExprKind::Constant && test.text == "True";
            if (forever && !contains_break(s.blocks[0].stmts)) {
                return false;
            }
            break;
        }
        default:
            break;
        }
    }
    return true;
}

} // namespace cbfl::py
