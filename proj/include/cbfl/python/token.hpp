#pragma once

#include "cbfl/source_text.hpp"

#include <string_view>
#include <vector>

namespace cbfl::py {

enum class TokenKind {
    Name,
    Number,
    String,
    Op,
    Newline,
    Indent,
    Dedent,
    EndMarker,
};

struct Token {
    TokenKind kind = TokenKind::EndMarker;
    std::string_view text;
    SourceRange range;
    int line = 0;
    int column = 0;

    bool is_op(std::string_view op) const { return kind == TokenKind::Op && text == op; }
    bool is_name(std::string_view name) const { return kind == TokenKind::Name && text == name; }
};

struct Comment {
    SourceRange range;
    int line = 0;
};

struct TokenStream {
    std::vector<Token> tokens;
    std::vector<Comment> comments;
};

// Tokenizes `source[range]` as Python. Offsets in the result are absolute
// offsets into `source`. When `expression_mode` is set no NEWLINE/INDENT
// tokens are produced (used for f-string fields and spec expressions).
TokenStream tokenize(std::string_view source, SourceRange range, bool expression_mode = false);
TokenStream tokenize(std::string_view source);

bool is_keyword(std::string_view word);

} // namespace cbfl::py
