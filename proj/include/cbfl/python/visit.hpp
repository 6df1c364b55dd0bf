#pragma once

#include "cbfl/python/ast.hpp"

#include <functional>
#include <set>
#include <string>

namespace cbfl::py {

using NameSet = std::set<std::string, std::less<>>;
using ExprFn = std::function<void(const Expr &)>;

// Visits every Name read inside `e`. Names bound by an enclosing
// comprehension or lambda (and those in `shadow`) are skipped.
void for_each_read(const Expr &e, const NameSet &shadow, const ExprFn &fn);

// Visits the Names bound by an assignment target and the reads performed
// while storing into it (subscript/attribute bases and indices).
void for_each_target(const Expr &target, const NameSet &shadow, const ExprFn &on_def, const ExprFn &on_read);

void bound_names(const Expr &target, NameSet &out);

// Pre-order walk over every sub-expression, including nested scopes.
void walk(const Expr &e, const ExprFn &fn);

// Every expression directly owned by a statement (not by nested blocks).
void for_each_own_expr(const Stmt &s, const ExprFn &fn);

bool is_docstring(const Stmt &s);

// False when every path through `stmts` ends in return/raise/break/continue
// or an endless `while True` without break.
bool falls_through(const std::vector<Stmt> &stmts);

} // namespace cbfl::py
