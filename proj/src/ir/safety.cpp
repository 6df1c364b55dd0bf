#include "cbfl/ir/safety.hpp"

#include "cbfl/python/parser.hpp"
#include "cbfl/python/token.hpp"
#include "cbfl/python/visit.hpp"
#include "cbfl/ssa/ssa.hpp"

#include <algorithm>

namespace cbfl::ir {

using namespace cbfl::py;

namespace {

bool allowed_call(std::string_view name) {
    return std::find(kAllowedCalls.begin(), kAllowedCalls.end(), name) != kAllowedCalls.end();
}

bool is_dunder(std::string_view name) { return name.size() >= 2 && name.substr(0, 2) == "__"; }

class SafetyWalker {
public:
    explicit SafetyWalker(std::string_view src) : src_(src) {}

    void visit(const Expr &e) {
        switch (e.kind) {
        case ExprKind::Name:
            if (is_dunder(e.text)) {
                flag("dunder-name", e.text);
            }
            return;
        case ExprKind::Call: {
            const Expr &callee = e.children[0];
            if (callee.kind != ExprKind::Name || !allowed_call(callee.text)) {
                flag("disallowed-call", std::string(text_of(callee)));
            }
            for (std::size_t i = 1; i < e.children.size(); ++i) {
                visit(e.children[i]);
            }
            return;
        }
        case ExprKind::Attribute:
            flag("disallowed-attribute", std::string(text_of(e)));
            return;
        case ExprKind::Lambda:
            flag("lambda", std::string(text_of(e)));
            return;
        case ExprKind::NamedExpr:
            flag("assignment", std::string(text_of(e)));
            return;
        case ExprKind::Yield:
        case ExprKind::YieldFrom:
        case ExprKind::Await:
            flag("disallowed-node", std::string(text_of(e)));
            return;
        case ExprKind::String: {
            std::string_view t = text_of(e);
            std::size_t quote = t.find_first_of("'\"");
            if (t.substr(0, quote).find_first_of("fF") != std::string_view::npos || !e.children.empty()) {
                flag("disallowed-node", "f-string");
            }
            return;
        }
        case ExprKind::ListComp:
        case ExprKind::SetComp:
        case ExprKind::DictComp:
        case ExprKind::GeneratorExp:
            for (const Comprehension &g : e.generators) {
                check_comp_target(g.target);
                visit(g.iter);
                for (const Expr &cond : g.ifs) {
                    visit(cond);
                }
            }
            break;
        default:
            break;
        }
        for (const Expr &c : e.children) {
            visit(c);
        }
    }

    std::vector<SafetyViolation> violations;

private:
    std::string_view text_of(const Expr &e) const { return src_.substr(e.range.begin, e.range.size()); }

    void check_comp_target(const Expr &t) {
        if (t.kind == ExprKind::Name) {
            if (is_dunder(t.text)) {
                flag("dunder-name", t.text);
            }
            return;
        }
        if (t.kind == ExprKind::Tuple || t.kind == ExprKind::List) {
            for (const Expr &c : t.children) {
                check_comp_target(c);
            }
            return;
        }
        flag("assignment", std::string(text_of(t)));
    }

    void flag(std::string reason, std::string detail) {
        violations.push_back({std::move(reason), std::move(detail)});
    }

    std::string_view src_;
};

} // namespace

std::vector<SafetyViolation> check_expr_safety(std::string_view expr, Region region, const IdentifierContext *context) {
    if (expr.find_first_of("\r\n") != std::string_view::npos) {
        return {{"multiline", "expression spans lines"}};
    }
    Expr tree;
    try {
        TokenStream tokens = tokenize(expr, {0, expr.size()}, true);
        if (!tokens.comments.empty()) {
            return {{"comment", "expression contains a comment"}};
        }
        tree = parse_expression(expr);
    } catch (const ParseError &e) {
        return {{"unparseable", e.what()}};
    }
    SafetyWalker walker(expr);
    walker.visit(tree);
    if (!walker.violations.empty() || context == nullptr) {
        return walker.violations;
    }
    std::vector<SafetyViolation> out;
    for (const std::string &name : free_identifiers(expr)) {
        if (region == Region::AnyReturn && name == "result") {
            continue;
        }
        if (region == Region::Entry) {
            if (context->params.count(name) == 0) {
                out.push_back({"entry-non-parameter", name});
            }
            continue;
        }
        if (context->params.count(name) != 0) {
            continue;
        }
        if (ssa::split_versioned(name)) {
            if (context->ssa_names.count(name) == 0) {
                out.push_back({"unknown-ssa-name", name});
            }
            continue;
        }
        out.push_back({"unversioned-identifier", name});
    }
    return out;
}

std::vector<std::string> free_identifiers(std::string_view expr) {
    Expr tree = parse_expression(expr);
    NameSet names;
    for_each_read(tree, {}, [&](const Expr &n) {
        if (!allowed_call(n.text)) {
            names.insert(n.text);
        }
    });
    return {names.begin(), names.end()};
}

} // namespace cbfl::ir
