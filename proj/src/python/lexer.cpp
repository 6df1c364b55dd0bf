#include "cbfl/error.hpp"
#include "cbfl/python/token.hpp"

#include <array>
#include <cctype>
#include <cstring>

namespace cbfl::py {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False",  "None",   "True",    "and",      "as",       "assert", "async",
    "await",  "break",  "class",   "continue", "def",      "del",    "elif",
    "else",   "except", "finally", "for",      "from",     "global", "if",
    "import", "in",     "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",   "raise",  "return",  "try",      "while",    "with",   "yield",
};

// Longest operators first so that greedy matching picks them.
constexpr std::array<std::string_view, 49> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=",
    "==",  "!=",  "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", "@=", "+",  "-",
    "*",   "/",   "%",   "@",   "&",   "|",  "^",  "~",  "<",  ">",  "(",  ")",  "[",
    "]",   "{",   "}",   ",",   ":",   ".",  ";",  "=",  "!",  "`",
};

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

class Lexer {
public:
    Lexer(std::string_view source, SourceRange range, bool expression_mode)
        : src_(source), pos_(range.begin), end_(range.end), expression_mode_(expression_mode) {
        line_ = 1;
        for (std::size_t i = 0; i < range.begin; ++i) {
            if (src_[i] == '\n') {
                ++line_;
                line_start_ = i + 1;
            }
        }
    }

    TokenStream run() {
        at_line_start_ = !expression_mode_;
        while (pos_ < end_) {
            if (at_line_start_ && depth_ == 0) {
                if (!handle_indentation()) {
                    continue;
                }
            }
            char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
                ++pos_;
                continue;
            }
            if (c == '#') {
                std::size_t start = pos_;
                while (pos_ < end_ && src_[pos_] != '\n') {
                    ++pos_;
                }
                out_.comments.push_back({{start, pos_}, line_});
                continue;
            }
            if (c == '\\') {
                std::size_t next = pos_ + 1;
                if (next < end_ && src_[next] == '\r') {
                    ++next;
                }
                if (next < end_ && src_[next] == '\n') {
                    pos_ = next + 1;
                    newline_seen(next);
                    continue;
                }
                fail("unexpected character after line continuation");
            }
            if (c == '\n') {
                if (depth_ == 0 && !expression_mode_ && last_significant_) {
                    push(TokenKind::Newline, pos_, pos_ + 1);
                    last_significant_ = false;
                }
                newline_seen(pos_);
                ++pos_;
                at_line_start_ = !expression_mode_ && depth_ == 0;
                continue;
            }
            lex_token();
        }
        if (!expression_mode_) {
            if (last_significant_) {
                push(TokenKind::Newline, end_, end_);
            }
            while (indents_.size() > 1) {
                indents_.pop_back();
                push(TokenKind::Dedent, end_, end_);
            }
        }
        push(TokenKind::EndMarker, end_, end_);
        return std::move(out_);
    }

private:
    [[noreturn]] void fail(const std::string &message) const {
        throw ParseError(message, line_, static_cast<int>(pos_ - line_start_) + 1);
    }

    void newline_seen(std::size_t nl_offset) {
        ++line_;
        line_start_ = nl_offset + 1;
    }

    void push(TokenKind kind, std::size_t begin, std::size_t end) {
        Token t;
        t.kind = kind;
        t.text = src_.substr(begin, end - begin);
        t.range = {begin, end};
        t.line = line_;
        t.column = static_cast<int>(begin - line_start_);
        out_.tokens.push_back(t);
        if (kind != TokenKind::Newline && kind != TokenKind::Indent && kind != TokenKind::Dedent) {
            last_significant_ = true;
        }
    }

    // Returns false when the line was blank or comment-only and was skipped.
    bool handle_indentation() {
        std::size_t p = pos_;
        int width = 0;
        while (p < end_ && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
            width = src_[p] == '\t' ? (width / 8 + 1) * 8 : width + 1;
            ++p;
        }
        if (p >= end_) {
            pos_ = p;
            at_line_start_ = false;
            return false;
        }
        char c = src_[p];
        if (c == '\n' || c == '#' || (c == '\r' && p + 1 < end_ && src_[p + 1] == '\n')) {
            pos_ = p;
            at_line_start_ = false;
            return true;
        }
        if (c == '\\') {
            pos_ = p;
            at_line_start_ = false;
            return true;
        }
        at_line_start_ = false;
        pos_ = p;
        if (width > indents_.back()) {
            indents_.push_back(width);
            push(TokenKind::Indent, line_start_, p);
        } else {
            while (width < indents_.back()) {
                indents_.pop_back();
                push(TokenKind::Dedent, p, p);
            }
            if (width != indents_.back()) {
                fail("unindent does not match any outer indentation level");
            }
        }
        return true;
    }

    void lex_token() {
        std::size_t start = pos_;
        unsigned char c = static_cast<unsigned char>(src_[pos_]);
        if (is_ident_start(c)) {
            while (pos_ < end_ && is_ident_char(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
            }
            if (pos_ < end_ && (src_[pos_] == '\'' || src_[pos_] == '"') && is_string_prefix(start, pos_)) {
                lex_string(start);
                return;
            }
            push(TokenKind::Name, start, pos_);
            return;
        }
        if (std::isdigit(c) || (c == '.' && pos_ + 1 < end_ && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            lex_number();
            push(TokenKind::Number, start, pos_);
            return;
        }
        if (c == '\'' || c == '"') {
            lex_string(start);
            return;
        }
        for (std::string_view op : kOperators) {
            if (src_.substr(pos_, op.size()) == op && pos_ + op.size() <= end_) {
                pos_ += op.size();
                if (op == "(" || op == "[" || op == "{") {
                    ++depth_;
                } else if ((op == ")" || op == "]" || op == "}") && depth_ > 0) {
                    --depth_;
                }
                push(TokenKind::Op, start, pos_);
                return;
            }
        }
        fail(std::string("unexpected character '") + static_cast<char>(c) + "'");
    }

    bool is_string_prefix(std::size_t begin, std::size_t end) const {
        std::size_t n = end - begin;
        if (n > 2) {
            return false;
        }
        for (std::size_t i = begin; i < end; ++i) {
            char ch = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[i])));
            if (ch != 'r' && ch != 'b' && ch != 'u' && ch != 'f') {
                return false;
            }
        }
        return true;
    }

    void lex_number() {
        auto digits = [&](auto pred) {
            while (pos_ < end_ && (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                ++pos_;
            }
        };
        if (src_[pos_] == '0' && pos_ + 1 < end_ && std::strchr("xXoObB", src_[pos_ + 1]) != nullptr) {
            pos_ += 2;
            digits([](unsigned char ch) { return std::isxdigit(ch) != 0; });
            return;
        }
        digits([](unsigned char ch) { return std::isdigit(ch) != 0; });
        if (pos_ < end_ && src_[pos_] == '.') {
            ++pos_;
            digits([](unsigned char ch) { return std::isdigit(ch) != 0; });
        }
        if (pos_ < end_ && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < end_ && (src_[pos_] == '+' || src_[pos_] == '-')) {
                ++pos_;
            }
            if (pos_ < end_ && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                digits([](unsigned char ch) { return std::isdigit(ch) != 0; });
            } else {
                pos_ = save;
            }
        }
        if (pos_ < end_ && (src_[pos_] == 'j' || src_[pos_] == 'J')) {
            ++pos_;
        }
    }

    void lex_string(std::size_t start) {
        char quote = src_[pos_];
        bool triple = pos_ + 2 < end_ && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
        pos_ += triple ? 3 : 1;
        int start_line = line_;
        std::size_t start_line_start = line_start_;
        while (true) {
            if (pos_ >= end_) {
                line_ = start_line;
                line_start_ = start_line_start;
                fail("unterminated string literal");
            }
            char ch = src_[pos_];
            if (ch == '\\') {
                if (pos_ + 1 < end_ && src_[pos_ + 1] == '\n') {
                    newline_seen(pos_ + 1);
                }
                pos_ += 2;
                continue;
            }
            if (ch == '\n') {
                if (!triple) {
                    fail("unterminated string literal");
                }
                newline_seen(pos_);
                ++pos_;
                continue;
            }
            if (ch == quote) {
                if (!triple) {
                    ++pos_;
                    break;
                }
                if (pos_ + 2 < end_ && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
                    pos_ += 3;
                    break;
                }
            }
            ++pos_;
        }
        // Multi-line strings report the line they start on.
        Token t;
        t.kind = TokenKind::String;
        t.text = src_.substr(start, pos_ - start);
        t.range = {start, pos_};
        t.line = start_line;
        t.column = static_cast<int>(start - start_line_start);
        out_.tokens.push_back(t);
        last_significant_ = true;
    }

    std::string_view src_;
    std::size_t pos_;
    std::size_t end_;
    bool expression_mode_;
    int line_ = 1;
    std::size_t line_start_ = 0;
    int depth_ = 0;
    bool at_line_start_ = true;
    bool last_significant_ = false;
    std::vector<int> indents_{0};
    TokenStream out_;
};

} // namespace

bool is_keyword(std::string_view word) {
    for (std::string_view kw : kKeywords) {
        if (kw == word) {
            return true;
        }
    }
    return false;
}

TokenStream tokenize(std::string_view source, SourceRange range, bool expression_mode) {
    return Lexer(source, range, expression_mode).run();
}

TokenStream tokenize(std::string_view source) {
    return tokenize(source, {0, source.size()}, false);
}

} // namespace cbfl::py
