#include "cbfl/python/parser.hpp"

#include "cbfl/error.hpp"
#include "cbfl/python/token.hpp"

#include <array>
#include <utility>

namespace cbfl::py {

namespace {

constexpr std::array<std::string_view, 13> kAugOps = {
    "+=", "-=", "*=", "/=", "//=", "%=", "@=", "&=", "|=", "^=", ">>=", "<<=", "**=",
};

bool is_aug_op(const Token &t) {
    if (t.kind != TokenKind::Op) {
        return false;
    }
    for (std::string_view op : kAugOps) {
        if (t.text == op) {
            return true;
        }
    }
    return false;
}

Expr make(ExprKind kind, SourceRange range, std::string text = {}) {
    Expr e;
    e.kind = kind;
    e.range = range;
    e.text = std::move(text);
    return e;
}

class Parser {
public:
    Parser(std::string_view source, TokenStream stream)
        : src_(source), stream_(std::move(stream)), lines_(source) {}

    std::vector<Stmt> parse_file() {
        std::vector<Stmt> body;
        while (!at(TokenKind::EndMarker)) {
            if (at(TokenKind::Newline)) {
                advance();
                continue;
            }
            parse_statement(body);
        }
        return body;
    }

    Expr parse_standalone_expression() {
        Expr e = parse_star_expressions();
        if (!at(TokenKind::EndMarker)) {
            fail("unexpected token '" + std::string(peek().text) + "' after expression");
        }
        return e;
    }

private:
    // ---------------------------------------------------------------- tokens

    const Token &peek(std::size_t ahead = 0) const {
        std::size_t i = std::min(index_ + ahead, stream_.tokens.size() - 1);
        return stream_.tokens[i];
    }
    bool at(TokenKind kind) const { return peek().kind == kind; }
    bool at_op(std::string_view op) const { return peek().is_op(op); }
    bool at_kw(std::string_view kw) const { return peek().is_name(kw); }

    const Token &advance() {
        const Token &t = stream_.tokens[index_];
        if (t.kind != TokenKind::EndMarker) {
            ++index_;
        }
        if (t.kind != TokenKind::Newline && t.kind != TokenKind::Indent && t.kind != TokenKind::Dedent &&
            t.kind != TokenKind::EndMarker) {
            last_end_ = t.range.end;
        }
        return t;
    }

    bool accept_op(std::string_view op) {
        if (at_op(op)) {
            advance();
            return true;
        }
        return false;
    }
    bool accept_kw(std::string_view kw) {
        if (at_kw(kw)) {
            advance();
            return true;
        }
        return false;
    }
    const Token &expect_op(std::string_view op) {
        if (!at_op(op)) {
            fail("expected '" + std::string(op) + "'");
        }
        return advance();
    }
    const Token &expect_kw(std::string_view kw) {
        if (!at_kw(kw)) {
            fail("expected '" + std::string(kw) + "'");
        }
        return advance();
    }
    const Token &expect_name() {
        if (!at(TokenKind::Name) || is_keyword(peek().text)) {
            fail("expected identifier");
        }
        return advance();
    }

    [[noreturn]] void fail(const std::string &message) const {
        const Token &t = peek();
        std::string got = t.kind == TokenKind::Newline ? "newline"
                          : t.kind == TokenKind::EndMarker ? "end of input"
                          : t.kind == TokenKind::Indent ? "indent"
                          : t.kind == TokenKind::Dedent ? "dedent"
                                                        : "'" + std::string(t.text) + "'";
        throw ParseError(message + " (got " + got + ")", t.line, t.column + 1);
    }

    void finish(Stmt &s, std::size_t begin) {
        s.range = {begin, last_end_};
        s.line = lines_.line_of(begin);
        s.end_line = lines_.line_of(last_end_ == 0 ? 0 : last_end_ - 1);
    }

    // ------------------------------------------------------------ statements

    void parse_statement(std::vector<Stmt> &out) {
        const Token &t = peek();
        if (t.kind == TokenKind::Indent) {
            fail("unexpected indent");
        }
        if (t.is_op("@") || t.is_name("def") || t.is_name("class") || t.is_name("if") ||
            t.is_name("while") || t.is_name("for") || t.is_name("try") || t.is_name("with") ||
            (t.is_name("async") && (peek(1).is_name("def") || peek(1).is_name("for") || peek(1).is_name("with")))) {
            out.push_back(parse_compound());
            return;
        }
        parse_simple_statements(out);
    }

    void parse_simple_statements(std::vector<Stmt> &out) {
        while (true) {
            out.push_back(parse_small_statement());
            if (!accept_op(";")) {
                break;
            }
            if (at(TokenKind::Newline) || at(TokenKind::EndMarker)) {
                break;
            }
        }
        if (at(TokenKind::Newline)) {
            advance();
        } else if (!at(TokenKind::EndMarker)) {
            fail("expected end of statement");
        }
    }

    Stmt parse_small_statement() {
        Stmt s;
        std::size_t begin = peek().range.begin;
        const Token &t = peek();
        if (t.is_name("pass") || t.is_name("break") || t.is_name("continue")) {
            s.kind = t.text == "pass" ? StmtKind::Pass : t.text == "break" ? StmtKind::Break : StmtKind::Continue;
            advance();
        } else if (t.is_name("return")) {
            advance();
            s.kind = StmtKind::Return;
            if (!at_statement_end()) {
                s.value = parse_star_expressions();
            }
        } else if (t.is_name("raise")) {
            advance();
            s.kind = StmtKind::Raise;
            if (!at_statement_end()) {
                s.exprs.push_back(parse_expression());
                if (accept_kw("from")) {
                    s.exprs.push_back(parse_expression());
                }
            }
        } else if (t.is_name("assert")) {
            advance();
            s.kind = StmtKind::Assert;
            s.exprs.push_back(parse_expression());
            if (accept_op(",")) {
                s.exprs.push_back(parse_expression());
            }
        } else if (t.is_name("del")) {
            advance();
            s.kind = StmtKind::Del;
            Expr targets = parse_target_list();
            if (targets.kind == ExprKind::Tuple && !targets.parenthesized) {
                s.targets = std::move(targets.children);
            } else {
                s.targets.push_back(std::move(targets));
            }
        } else if (t.is_name("global") || t.is_name("nonlocal")) {
            s.kind = t.text == "global" ? StmtKind::Global : StmtKind::Nonlocal;
            advance();
            do {
                s.names.emplace_back(expect_name().text);
            } while (accept_op(","));
        } else if (t.is_name("import")) {
            advance();
            s.kind = StmtKind::Import;
            do {
                std::string first(expect_name().text);
                while (accept_op(".")) {
                    expect_name();
                }
                if (accept_kw("as")) {
                    s.names.emplace_back(expect_name().text);
                } else {
                    s.names.push_back(first);
                }
            } while (accept_op(","));
        } else if (t.is_name("from")) {
            advance();
            s.kind = StmtKind::ImportFrom;
            while (at_op(".") || at_op("...")) {
                advance();
            }
            if (!at_kw("import")) {
                expect_name();
                while (accept_op(".")) {
                    expect_name();
                }
            }
            expect_kw("import");
            if (accept_op("*")) {
                // binds nothing we can name
            } else {
                bool paren = accept_op("(");
                do {
                    if (paren && at_op(")")) {
                        break;
                    }
                    std::string name(expect_name().text);
                    if (accept_kw("as")) {
                        name = std::string(expect_name().text);
                    }
                    s.names.push_back(name);
                } while (accept_op(","));
                if (paren) {
                    expect_op(")");
                }
            }
        } else {
            parse_expression_statement(s);
        }
        finish(s, begin);
        return s;
    }

    bool at_statement_end() const {
        return at(TokenKind::Newline) || at(TokenKind::EndMarker) || at_op(";");
    }

    void parse_expression_statement(Stmt &s) {
        Expr first = at_kw("yield") ? parse_yield() : parse_star_expressions();
        if (at_op("=")) {
            s.kind = StmtKind::Assign;
            s.targets.push_back(std::move(first));
            while (accept_op("=")) {
                Expr rhs = at_kw("yield") ? parse_yield() : parse_star_expressions();
                s.targets.push_back(std::move(rhs));
            }
            s.value = std::move(s.targets.back());
            s.targets.pop_back();
            return;
        }
        if (is_aug_op(peek())) {
            s.kind = StmtKind::AugAssign;
            std::string_view op = advance().text;
            s.op = std::string(op.substr(0, op.size() - 1));
            s.targets.push_back(std::move(first));
            s.value = at_kw("yield") ? parse_yield() : parse_star_expressions();
            return;
        }
        if (at_op(":")) {
            advance();
            s.kind = StmtKind::AnnAssign;
            s.targets.push_back(std::move(first));
            s.exprs.push_back(parse_expression());
            if (accept_op("=")) {
                s.value = at_kw("yield") ? parse_yield() : parse_star_expressions();
            }
            return;
        }
        s.kind = StmtKind::Expr;
        s.value = std::move(first);
    }

    Block parse_block(BlockKind kind, std::size_t header_begin) {
        Block b;
        b.kind = kind;
        const Token &colon = expect_op(":");
        b.header = {header_begin, colon.range.end};
        b.line = lines_.line_of(header_begin);
        if (at(TokenKind::Newline)) {
            advance();
            if (!at(TokenKind::Indent)) {
                fail("expected an indented block");
            }
            advance();
            while (!at(TokenKind::Dedent) && !at(TokenKind::EndMarker)) {
                if (at(TokenKind::Newline)) {
                    advance();
                    continue;
                }
                parse_statement(b.stmts);
            }
            if (at(TokenKind::Dedent)) {
                advance();
            }
        } else {
            b.inline_body = true;
            parse_simple_statements(b.stmts);
        }
        return b;
    }

    Stmt parse_compound() {
        Stmt s;
        std::size_t begin = peek().range.begin;
        while (at_op("@")) {
            advance();
            s.exprs.push_back(parse_named_expression());
            if (!at(TokenKind::Newline)) {
                fail("expected newline after decorator");
            }
            advance();
        }
        if (accept_kw("async")) {
            s.is_async = true;
        }
        const Token &kw = peek();
        std::size_t kw_begin = kw.range.begin;
        if (kw.is_name("def")) {
            advance();
            s.kind = StmtKind::FunctionDef;
            s.names.emplace_back(expect_name().text);
            expect_op("(");
            s.params = parse_params(")", true);
            expect_op(")");
            if (accept_op("->")) {
                s.exprs.push_back(parse_expression());
            }
            s.blocks.push_back(parse_block(BlockKind::Body, kw_begin));
        } else if (kw.is_name("class")) {
            advance();
            s.kind = StmtKind::ClassDef;
            s.names.emplace_back(expect_name().text);
            if (accept_op("(")) {
                while (!at_op(")")) {
                    s.exprs.push_back(parse_argument());
                    if (!accept_op(",")) {
                        break;
                    }
                }
                expect_op(")");
            }
            s.blocks.push_back(parse_block(BlockKind::Body, kw_begin));
        } else if (kw.is_name("if")) {
            advance();
            s.kind = StmtKind::If;
            Expr test = parse_named_expression();
            s.blocks.push_back(parse_block(BlockKind::Body, kw_begin));
            s.blocks.back().test = std::move(test);
            while (at_kw("elif")) {
                std::size_t b = advance().range.begin;
                Expr t = parse_named_expression();
                s.blocks.push_back(parse_block(BlockKind::Elif, b));
                s.blocks.back().test = std::move(t);
            }
            parse_else(s);
        } else if (kw.is_name("while")) {
            advance();
            s.kind = StmtKind::While;
            Expr test = parse_named_expression();
            s.blocks.push_back(parse_block(BlockKind::Body, kw_begin));
            s.blocks.back().test = std::move(test);
            parse_else(s);
        } else if (kw.is_name("for")) {
            advance();
            s.kind = StmtKind::For;
            s.targets.push_back(parse_target_list());
            expect_kw("in");
            s.value = parse_star_expressions();
            s.blocks.push_back(parse_block(BlockKind::Body, kw_begin));
            parse_else(s);
        } else if (kw.is_name("try")) {
            advance();
            s.kind = StmtKind::Try;
            s.blocks.push_back(parse_block(BlockKind::Body, kw_begin));
            while (at_kw("except")) {
                std::size_t b = advance().range.begin;
                accept_op("*");
                std::optional<Expr> type;
                std::string name;
                if (!at_op(":")) {
                    type = parse_expression();
                    if (accept_kw("as")) {
                        name = std::string(expect_name().text);
                    }
                }
                s.blocks.push_back(parse_block(BlockKind::Except, b));
                s.blocks.back().test = std::move(type);
                s.blocks.back().name = name;
            }
            parse_else(s);
            if (at_kw("finally")) {
                std::size_t b = advance().range.begin;
                s.blocks.push_back(parse_block(BlockKind::Finally, b));
            }
            if (s.blocks.size() == 1) {
                fail("expected 'except' or 'finally' block");
            }
        } else if (kw.is_name("with")) {
            advance();
            s.kind = StmtKind::With;
            do {
                s.exprs.push_back(parse_expression());
                if (accept_kw("as")) {
                    s.targets.push_back(parse_target());
                }
            } while (accept_op(","));
            s.blocks.push_back(parse_block(BlockKind::Body, kw_begin));
        } else {
            fail("expected compound statement");
        }
        finish(s, begin);
        return s;
    }

    void parse_else(Stmt &s) {
        if (at_kw("else")) {
            std::size_t b = advance().range.begin;
            s.blocks.push_back(parse_block(BlockKind::Else, b));
        }
    }

    // Parameter lists for `def` (closer ")", annotations allowed) and
    // `lambda` (closer ":").
    std::vector<Param> parse_params(std::string_view closer, bool annotations) {
        std::vector<Param> params;
        while (!at_op(closer)) {
            if (accept_op("/")) {
                if (!accept_op(",")) {
                    break;
                }
                continue;
            }
            Param p;
            if (at_op("*") || at_op("**")) {
                p.stars = advance().text.size() == 1 ? 1 : 2;
                if (p.stars == 1 && (at_op(",") || at_op(closer))) {
                    accept_op(",");
                    continue;
                }
            }
            const Token &name = expect_name();
            p.name = std::string(name.text);
            p.range = name.range;
            if (annotations && accept_op(":")) {
                p.annotation = parse_expression();
            }
            if (accept_op("=")) {
                p.default_value = parse_expression();
            }
            params.push_back(std::move(p));
            if (!accept_op(",")) {
                break;
            }
        }
        return params;
    }

    // ----------------------------------------------------------- expressions

    Expr parse_yield() {
        const Token &kw = expect_kw("yield");
        if (accept_kw("from")) {
            Expr value = parse_expression();
            Expr e = make(ExprKind::YieldFrom, {kw.range.begin, value.range.end});
            e.children.push_back(std::move(value));
            return e;
        }
        Expr e = make(ExprKind::Yield, kw.range);
        if (!at_statement_end() && !at_op(")") && !at_op("=")) {
            Expr value = parse_star_expressions();
            e.range.end = value.range.end;
            e.children.push_back(std::move(value));
        }
        return e;
    }

    Expr parse_star_expressions() {
        Expr first = parse_star_expression();
        if (!at_op(",")) {
            return first;
        }
        Expr tuple = make(ExprKind::Tuple, first.range);
        tuple.children.push_back(std::move(first));
        while (accept_op(",")) {
            tuple.range.end = last_end_;
            if (!starts_expression()) {
                break;
            }
            tuple.children.push_back(parse_star_expression());
            tuple.range.end = tuple.children.back().range.end;
        }
        return tuple;
    }

    bool starts_expression() const {
        const Token &t = peek();
        switch (t.kind) {
        case TokenKind::Name:
            return !is_keyword(t.text) || t.text == "not" || t.text == "lambda" || t.text == "await" ||
                   t.text == "None" || t.text == "True" || t.text == "False" || t.text == "yield";
        case TokenKind::Number:
        case TokenKind::String:
            return true;
        case TokenKind::Op:
            return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
                   t.text == "~" || t.text == "*" || t.text == "..." || t.text == "**";
        default:
            return false;
        }
    }

    Expr parse_star_expression() {
        if (at_op("*")) {
            std::size_t b = advance().range.begin;
            Expr inner = parse_bitwise_or();
            Expr e = make(ExprKind::Starred, {b, inner.range.end});
            e.children.push_back(std::move(inner));
            return e;
        }
        return parse_expression();
    }

    Expr parse_named_expression() {
        if (at(TokenKind::Name) && !is_keyword(peek().text) && peek(1).is_op(":=")) {
            const Token &name = advance();
            advance();
            Expr target = make(ExprKind::Name, name.range, std::string(name.text));
            Expr value = parse_expression();
            Expr e = make(ExprKind::NamedExpr, {name.range.begin, value.range.end});
            e.children.push_back(std::move(target));
            e.children.push_back(std::move(value));
            return e;
        }
        return parse_expression();
    }

    Expr parse_expression() {
        if (at_kw("lambda")) {
            return parse_lambda();
        }
        Expr body = parse_disjunction();
        if (at_kw("if")) {
            advance();
            Expr test = parse_disjunction();
            expect_kw("else");
            Expr orelse = parse_expression();
            Expr e = make(ExprKind::IfExp, {body.range.begin, orelse.range.end});
            e.children.push_back(std::move(body));
            e.children.push_back(std::move(test));
            e.children.push_back(std::move(orelse));
            return e;
        }
        return body;
    }

    Expr parse_lambda() {
        std::size_t b = expect_kw("lambda").range.begin;
        std::vector<Param> params = parse_params(":", false);
        expect_op(":");
        Expr body = parse_expression();
        Expr e = make(ExprKind::Lambda, {b, body.range.end});
        e.children.push_back(std::move(body));
        for (Param &p : params) {
            e.params.push_back(p.name);
            if (p.default_value) {
                e.children.push_back(std::move(*p.default_value));
            }
        }
        return e;
    }

    Expr parse_disjunction() {
        Expr first = parse_conjunction();
        if (!at_kw("or")) {
            return first;
        }
        Expr e = make(ExprKind::BoolOp, first.range, "or");
        e.children.push_back(std::move(first));
        while (accept_kw("or")) {
            e.children.push_back(parse_conjunction());
        }
        e.range.end = e.children.back().range.end;
        return e;
    }

    Expr parse_conjunction() {
        Expr first = parse_inversion();
        if (!at_kw("and")) {
            return first;
        }
        Expr e = make(ExprKind::BoolOp, first.range, "and");
        e.children.push_back(std::move(first));
        while (accept_kw("and")) {
            e.children.push_back(parse_inversion());
        }
        e.range.end = e.children.back().range.end;
        return e;
    }

    Expr parse_inversion() {
        if (at_kw("not")) {
            std::size_t b = advance().range.begin;
            Expr operand = parse_inversion();
            Expr e = make(ExprKind::UnaryOp, {b, operand.range.end}, "not");
            e.children.push_back(std::move(operand));
            return e;
        }
        return parse_comparison();
    }

    std::optional<std::string> comparison_operator() {
        const Token &t = peek();
        if (t.kind == TokenKind::Op &&
            (t.text == "==" || t.text == "!=" || t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">=")) {
            advance();
            return std::string(t.text);
        }
        if (t.is_name("in")) {
            advance();
            return "in";
        }
        if (t.is_name("not") && peek(1).is_name("in")) {
            advance();
            advance();
            return "not in";
        }
        if (t.is_name("is")) {
            advance();
            if (accept_kw("not")) {
                return "is not";
            }
            return "is";
        }
        return std::nullopt;
    }

    Expr parse_comparison() {
        Expr first = parse_bitwise_or();
        std::optional<std::string> op = comparison_operator();
        if (!op) {
            return first;
        }
        Expr e = make(ExprKind::Compare, first.range);
        e.children.push_back(std::move(first));
        while (op) {
            e.ops.push_back(*op);
            e.children.push_back(parse_bitwise_or());
            op = comparison_operator();
        }
        e.range.end = e.children.back().range.end;
        return e;
    }

    template <typename Next>
    Expr parse_binary(std::initializer_list<std::string_view> ops, Next next) {
        Expr left = (this->*next)();
        while (true) {
            const Token &t = peek();
            bool matched = false;
            for (std::string_view op : ops) {
                if (t.is_op(op)) {
                    matched = true;
                    break;
                }
            }
            if (!matched) {
                return left;
            }
            std::string op(advance().text);
            Expr right = (this->*next)();
            Expr e = make(ExprKind::BinOp, {left.range.begin, right.range.end}, op);
            e.children.push_back(std::move(left));
            e.children.push_back(std::move(right));
            left = std::move(e);
        }
    }

    Expr parse_bitwise_or() { return parse_binary({"|"}, &Parser::parse_bitwise_xor); }
    Expr parse_bitwise_xor() { return parse_binary({"^"}, &Parser::parse_bitwise_and); }
    Expr parse_bitwise_and() { return parse_binary({"&"}, &Parser::parse_shift); }
    Expr parse_shift() { return parse_binary({"<<", ">>"}, &Parser::parse_sum); }
    Expr parse_sum() { return parse_binary({"+", "-"}, &Parser::parse_term); }
    Expr parse_term() { return parse_binary({"*", "/", "//", "%", "@"}, &Parser::parse_factor); }

    Expr parse_factor() {
        if (at_op("+") || at_op("-") || at_op("~")) {
            const Token &t = advance();
            Expr operand = parse_factor();
            Expr e = make(ExprKind::UnaryOp, {t.range.begin, operand.range.end}, std::string(t.text));
            e.children.push_back(std::move(operand));
            return e;
        }
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_await_primary();
        if (at_op("**")) {
            advance();
            Expr exponent = parse_factor();
            Expr e = make(ExprKind::BinOp, {base.range.begin, exponent.range.end}, "**");
            e.children.push_back(std::move(base));
            e.children.push_back(std::move(exponent));
            return e;
        }
        return base;
    }

    Expr parse_await_primary() {
        if (at_kw("await")) {
            std::size_t b = advance().range.begin;
            Expr inner = parse_primary();
            Expr e = make(ExprKind::Await, {b, inner.range.end});
            e.children.push_back(std::move(inner));
            return e;
        }
        return parse_primary();
    }

    Expr parse_primary() {
        Expr e = parse_atom();
        while (true) {
            if (at_op(".")) {
                advance();
                const Token &name = expect_name();
                Expr a = make(ExprKind::Attribute, {e.range.begin, name.range.end}, std::string(name.text));
                a.children.push_back(std::move(e));
                e = std::move(a);
            } else if (at_op("(")) {
                advance();
                Expr call = make(ExprKind::Call, e.range);
                call.children.push_back(std::move(e));
                parse_call_arguments(call);
                call.range.end = expect_op(")").range.end;
                e = std::move(call);
            } else if (at_op("[")) {
                advance();
                Expr sub = make(ExprKind::Subscript, e.range);
                sub.children.push_back(std::move(e));
                sub.children.push_back(parse_slices());
                sub.range.end = expect_op("]").range.end;
                e = std::move(sub);
            } else {
                return e;
            }
        }
    }

    Expr parse_argument() {
        if (at_op("*") || at_op("**")) {
            const Token &t = advance();
            Expr value = parse_expression();
            Expr e = make(t.text == "*" ? ExprKind::Starred : ExprKind::DoubleStarred, {t.range.begin, value.range.end});
            e.children.push_back(std::move(value));
            return e;
        }
        if (at(TokenKind::Name) && !is_keyword(peek().text) && peek(1).is_op("=")) {
            const Token &name = advance();
            advance();
            Expr value = parse_expression();
            Expr e = make(ExprKind::Keyword, {name.range.begin, value.range.end}, std::string(name.text));
            e.children.push_back(std::move(value));
            return e;
        }
        return parse_named_expression();
    }

    void parse_call_arguments(Expr &call) {
        while (!at_op(")")) {
            Expr arg = parse_argument();
            if (at_kw("for") || (at_kw("async") && peek(1).is_name("for"))) {
                Expr gen = make(ExprKind::GeneratorExp, arg.range);
                gen.children.push_back(std::move(arg));
                parse_comprehension_clauses(gen);
                call.children.push_back(std::move(gen));
                continue;
            }
            call.children.push_back(std::move(arg));
            if (!accept_op(",")) {
                break;
            }
        }
    }

    Expr parse_slices() {
        Expr first = parse_slice();
        if (!at_op(",")) {
            return first;
        }
        Expr tuple = make(ExprKind::Tuple, first.range);
        tuple.children.push_back(std::move(first));
        while (accept_op(",")) {
            if (at_op("]")) {
                break;
            }
            tuple.children.push_back(parse_slice());
        }
        tuple.range.end = tuple.children.back().range.end;
        return tuple;
    }

    Expr parse_slice() {
        std::size_t begin = peek().range.begin;
        Expr lower = make(ExprKind::Omitted, {begin, begin});
        if (!at_op(":")) {
            lower = at_op("*") ? parse_star_expression() : parse_named_expression();
            if (!at_op(":")) {
                return lower;
            }
        }
        Expr slice = make(ExprKind::Slice, {begin, begin});
        slice.children.push_back(std::move(lower));
        for (int part = 0; part < 2 && accept_op(":"); ++part) {
            if (at_op(":") || at_op("]") || at_op(",")) {
                slice.children.push_back(make(ExprKind::Omitted, {last_end_, last_end_}));
            } else {
                slice.children.push_back(parse_expression());
            }
        }
        while (slice.children.size() < 3) {
            slice.children.push_back(make(ExprKind::Omitted, {last_end_, last_end_}));
        }
        slice.range.end = last_end_;
        return slice;
    }

    void parse_comprehension_clauses(Expr &comp) {
        while (at_kw("for") || (at_kw("async") && peek(1).is_name("for"))) {
            accept_kw("async");
            advance();
            Comprehension c;
            c.target = parse_target_list();
            expect_kw("in");
            c.iter = parse_disjunction();
            while (at_kw("if")) {
                advance();
                c.ifs.push_back(parse_disjunction());
            }
            comp.generators.push_back(std::move(c));
        }
        comp.range.end = last_end_;
    }

    Expr parse_target() {
        if (at_op("*")) {
            std::size_t b = advance().range.begin;
            Expr inner = parse_target();
            Expr e = make(ExprKind::Starred, {b, inner.range.end});
            e.children.push_back(std::move(inner));
            return e;
        }
        return parse_bitwise_or();
    }

    Expr parse_target_list() {
        Expr first = parse_target();
        if (!at_op(",")) {
            return first;
        }
        Expr tuple = make(ExprKind::Tuple, first.range);
        tuple.children.push_back(std::move(first));
        while (accept_op(",")) {
            if (at_kw("in") || at_op("=") || at(TokenKind::Newline) || at_op(";")) {
                break;
            }
            tuple.children.push_back(parse_target());
        }
        tuple.range.end = tuple.children.back().range.end;
        return tuple;
    }

    Expr parse_atom() {
        const Token &t = peek();
        switch (t.kind) {
        case TokenKind::Name: {
            if (t.text == "True" || t.text == "False" || t.text == "None") {
                advance();
                return make(ExprKind::Constant, t.range, std::string(t.text));
            }
            if (is_keyword(t.text)) {
                fail("unexpected keyword");
            }
            advance();
            return make(ExprKind::Name, t.range, std::string(t.text));
        }
        case TokenKind::Number:
            advance();
            return make(ExprKind::Number, t.range, std::string(t.text));
        case TokenKind::String:
            return parse_strings();
        case TokenKind::Op:
            if (t.text == "...") {
                advance();
                return make(ExprKind::Constant, t.range, "...");
            }
            if (t.text == "(") {
                return parse_paren();
            }
            if (t.text == "[") {
                return parse_list();
            }
            if (t.text == "{") {
                return parse_brace();
            }
            break;
        default:
            break;
        }
        fail("expected expression");
    }

    Expr parse_strings() {
        const Token &first = peek();
        Expr e = make(ExprKind::String, first.range);
        while (at(TokenKind::String)) {
            const Token &t = advance();
            e.range.end = t.range.end;
            std::size_t quote = t.text.find_first_of("'\"");
            std::string_view prefix = t.text.substr(0, quote);
            if (prefix.find_first_of("fF") != std::string_view::npos) {
                bool triple = t.text.size() >= quote + 6 && t.text[quote + 1] == t.text[quote] &&
                              t.text[quote + 2] == t.text[quote];
                std::size_t open = quote + (triple ? 3 : 1);
                std::size_t body_begin = t.range.begin + open;
                std::size_t body_end = t.range.end - (triple ? 3 : 1);
                parse_fstring_fields(body_begin, body_end, e.children);
            }
        }
        e.text = std::string(src_.substr(e.range.begin, e.range.size()));
        return e;
    }

    // Extracts `{expr!conv:spec}` replacement fields from an f-string body.
    void parse_fstring_fields(std::size_t begin, std::size_t end, std::vector<Expr> &out) {
        std::size_t i = begin;
        while (i < end) {
            char c = src_[i];
            if (c == '{') {
                if (i + 1 < end && src_[i + 1] == '{') {
                    i += 2;
                    continue;
                }
                i = parse_fstring_field(i + 1, end, out);
                continue;
            }
            ++i;
        }
    }

    std::size_t parse_fstring_field(std::size_t begin, std::size_t end, std::vector<Expr> &out) {
        int depth = 0;
        std::size_t i = begin;
        char in_quote = 0;
        std::size_t expr_end = std::string_view::npos;
        for (; i < end; ++i) {
            char c = src_[i];
            if (in_quote != 0) {
                if (c == in_quote) {
                    in_quote = 0;
                }
                continue;
            }
            if (c == '\'' || c == '"') {
                in_quote = c;
            } else if (c == '(' || c == '[' || c == '{') {
                ++depth;
            } else if (c == ')' || c == ']' || c == '}') {
                if (depth == 0) {
                    break;
                }
                --depth;
            } else if (depth == 0 && c == '!' && i + 1 < end && src_[i + 1] != '=') {
                break;
            } else if (depth == 0 && c == ':') {
                break;
            } else if (depth == 0 && c == '=' && i + 1 < end && (src_[i + 1] == '}' || src_[i + 1] == '!' || src_[i + 1] == ':') &&
                       i > begin && std::string_view("=!<>").find(src_[i - 1]) == std::string_view::npos) {
                expr_end = i;
                ++i;
                break;
            }
        }
        if (expr_end == std::string_view::npos) {
            expr_end = i;
        }
        TokenStream sub = tokenize(src_, {begin, expr_end}, true);
        Parser inner(src_, std::move(sub));
        out.push_back(inner.parse_standalone_expression());
        if (i < end && src_[i] == '!') {
            i += 2;
        }
        if (i < end && src_[i] == ':') {
            ++i;
            // Format spec: may contain nested fields, ends at the matching '}'.
            while (i < end && src_[i] != '}') {
                if (src_[i] == '{') {
                    i = parse_fstring_field(i + 1, end, out);
                    continue;
                }
                ++i;
            }
        }
        if (i >= end || src_[i] != '}') {
            throw ParseError("unterminated f-string replacement field", lines_.line_of(begin), 1);
        }
        return i + 1;
    }

    Expr parse_paren() {
        std::size_t b = expect_op("(").range.begin;
        if (at_op(")")) {
            Expr e = make(ExprKind::Tuple, {b, advance().range.end});
            e.parenthesized = true;
            return e;
        }
        if (at_kw("yield")) {
            Expr y = parse_yield();
            y.range = {b, expect_op(")").range.end};
            y.parenthesized = true;
            return y;
        }
        Expr first = at_op("*") ? parse_star_expression() : parse_named_expression();
        if (at_kw("for") || (at_kw("async") && peek(1).is_name("for"))) {
            Expr gen = make(ExprKind::GeneratorExp, first.range);
            gen.children.push_back(std::move(first));
            parse_comprehension_clauses(gen);
            gen.range = {b, expect_op(")").range.end};
            gen.parenthesized = true;
            return gen;
        }
        if (at_op(",")) {
            Expr tuple = make(ExprKind::Tuple, {b, b});
            tuple.children.push_back(std::move(first));
            while (accept_op(",")) {
                if (at_op(")")) {
                    break;
                }
                tuple.children.push_back(at_op("*") ? parse_star_expression() : parse_named_expression());
            }
            tuple.range.end = expect_op(")").range.end;
            tuple.parenthesized = true;
            return tuple;
        }
        first.range = {b, expect_op(")").range.end};
        first.parenthesized = true;
        return first;
    }

    Expr parse_list() {
        std::size_t b = expect_op("[").range.begin;
        Expr e = make(ExprKind::List, {b, b});
        if (!at_op("]")) {
            Expr first = at_op("*") ? parse_star_expression() : parse_named_expression();
            if (at_kw("for") || (at_kw("async") && peek(1).is_name("for"))) {
                e.kind = ExprKind::ListComp;
                e.children.push_back(std::move(first));
                parse_comprehension_clauses(e);
            } else {
                e.children.push_back(std::move(first));
                while (accept_op(",")) {
                    if (at_op("]")) {
                        break;
                    }
                    e.children.push_back(at_op("*") ? parse_star_expression() : parse_named_expression());
                }
            }
        }
        e.range.end = expect_op("]").range.end;
        return e;
    }

    Expr parse_dict_entry() {
        if (at_op("**")) {
            std::size_t b = advance().range.begin;
            Expr value = parse_bitwise_or();
            Expr e = make(ExprKind::DoubleStarred, {b, value.range.end});
            e.children.push_back(std::move(value));
            return e;
        }
        Expr key = parse_expression();
        expect_op(":");
        Expr value = parse_expression();
        Expr e = make(ExprKind::DictEntry, {key.range.begin, value.range.end});
        e.children.push_back(std::move(key));
        e.children.push_back(std::move(value));
        return e;
    }

    Expr parse_brace() {
        std::size_t b = expect_op("{").range.begin;
        Expr e = make(ExprKind::Dict, {b, b});
        if (at_op("}")) {
            e.range.end = advance().range.end;
            return e;
        }
        bool is_dict = at_op("**");
        Expr first = make(ExprKind::Omitted, {b, b});
        if (!is_dict) {
            first = at_op("*") ? parse_star_expression() : parse_named_expression();
            is_dict = at_op(":");
        }
        if (is_dict) {
            if (first.kind != ExprKind::Omitted) {
                expect_op(":");
                Expr value = parse_expression();
                if (at_kw("for") || (at_kw("async") && peek(1).is_name("for"))) {
                    e.kind = ExprKind::DictComp;
                    e.children.push_back(std::move(first));
                    e.children.push_back(std::move(value));
                    parse_comprehension_clauses(e);
                    e.range.end = expect_op("}").range.end;
                    return e;
                }
                Expr entry = make(ExprKind::DictEntry, {first.range.begin, value.range.end});
                entry.children.push_back(std::move(first));
                entry.children.push_back(std::move(value));
                e.children.push_back(std::move(entry));
            } else {
                e.children.push_back(parse_dict_entry());
            }
            while (accept_op(",")) {
                if (at_op("}")) {
                    break;
                }
                e.children.push_back(parse_dict_entry());
            }
            e.range.end = expect_op("}").range.end;
            return e;
        }
        e.kind = ExprKind::Set;
        if (at_kw("for") || (at_kw("async") && peek(1).is_name("for"))) {
            e.kind = ExprKind::SetComp;
            e.children.push_back(std::move(first));
            parse_comprehension_clauses(e);
            e.range.end = expect_op("}").range.end;
            return e;
        }
        e.children.push_back(std::move(first));
        while (accept_op(",")) {
            if (at_op("}")) {
                break;
            }
            e.children.push_back(at_op("*") ? parse_star_expression() : parse_named_expression());
        }
        e.range.end = expect_op("}").range.end;
        return e;
    }

    std::string_view src_;
    TokenStream stream_;
    LineTable lines_;
    std::size_t index_ = 0;
    std::size_t last_end_ = 0;
};

} // namespace

Module parse_module(std::string_view source) {
    Parser parser(source, tokenize(source));
    Module m;
    m.source = source;
    m.body = parser.parse_file();
    return m;
}

Expr parse_expression(std::string_view source) {
    Parser parser(source, tokenize(source, {0, source.size()}, true));
    return parser.parse_standalone_expression();
}

const Stmt *find_function(const Module &module, std::string_view name) {
    for (const Stmt &s : module.body) {
        if (s.kind == StmtKind::FunctionDef && !s.names.empty() && s.names[0] == name) {
            return &s;
        }
    }
    return nullptr;
}

} // namespace cbfl::py
