#pragma once

#include "cbfl/source_text.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cbfl::py {

enum class ExprKind {
    Name,
    Number,
    String,    // adjacent literals merged; f-string fields are `children`
    Constant,  // True / False / None / ...
    Attribute, // children[0] . text
    Subscript, // children[0] [ children[1] ]
    Slice,     // children: lower, upper, step (Omitted when absent)
    Omitted,
    Call,      // children[0] ( children[1..] )
    Keyword,   // text = children[0]
    Starred,
    DoubleStarred,
    BinOp,     // text = operator
    UnaryOp,   // text = operator
    BoolOp,    // text = and/or
    Compare,   // children[0] ops[i] children[i+1]
    IfExp,     // children: body, test, orelse
    Lambda,    // params; children[0] body, children[1..] defaults
    ListComp,  // children[0] element, generators
    SetComp,
    DictComp,  // children[0] key, children[1] value, generators
    GeneratorExp,
    List,
    Tuple,
    Set,
    Dict,      // children are DictEntry or DoubleStarred
    DictEntry, // children[0] key, children[1] value
    NamedExpr, // children[0] := children[1]
    Yield,
    YieldFrom,
    Await,
};

struct Comprehension;

struct Expr {
    ExprKind kind = ExprKind::Omitted;
    SourceRange range;
    std::string text;
    std::vector<Expr> children;
    std::vector<std::string> ops;
    std::vector<Comprehension> generators;
    std::vector<std::string> params;
    bool parenthesized = false;
};

struct Comprehension {
    Expr target;
    Expr iter;
    std::vector<Expr> ifs;
};

enum class StmtKind {
    Expr,
    Assign,
    AugAssign,
    AnnAssign,
    Return,
    Pass,
    Break,
    Continue,
    Raise,
    Assert,
    Del,
    Global,
    Nonlocal,
    Import,
    ImportFrom,
    If,
    While,
    For,
    Try,
    With,
    FunctionDef,
    ClassDef,
};

struct Stmt;

enum class BlockKind { Body, Elif, Else, Except, Finally };

struct Block {
    BlockKind kind = BlockKind::Body;
    std::optional<Expr> test;   // if/elif condition, except type
    std::string name;           // except ... as name
    SourceRange header;         // keyword .. ':' inclusive
    int line = 0;
    std::vector<Stmt> stmts;
    bool inline_body = false;   // statements follow ':' on the header line
};

struct Param {
    std::string name;
    SourceRange range;
    std::optional<Expr> default_value;
    std::optional<Expr> annotation;
    int stars = 0; // 1 for *args, 2 for **kwargs
};

struct Stmt {
    StmtKind kind = StmtKind::Pass;
    SourceRange range;
    int line = 0;
    int end_line = 0;
    bool is_async = false;
    std::vector<Expr> targets;      // Assign targets, AugAssign/AnnAssign/For target, Del targets
    std::optional<Expr> value;      // Assign/AugAssign/AnnAssign/Return/Expr value; For iterable
    std::string op;                 // AugAssign operator without '='
    std::vector<Expr> exprs;        // Raise, Assert, With items, decorators, class bases
    std::vector<std::string> names; // Global/Nonlocal names, Import bound names, def/class name at [0]
    std::vector<Param> params;
    std::vector<Block> blocks;      // compound statement bodies in source order
};

struct Module {
    std::string_view source;
    std::vector<Stmt> body;
};

} // namespace cbfl::py
