#pragma once

#include "cbfl/python/ast.hpp"

#include <string_view>

namespace cbfl::py {

// Parses a whole module. The returned AST references offsets into `source`,
// which must outlive any use of the ranges.
Module parse_module(std::string_view source);

// Parses a standalone expression occupying all of `source`.
Expr parse_expression(std::string_view source);

// Finds a top-level `def name(...)`; returns nullptr when absent.
const Stmt *find_function(const Module &module, std::string_view name);

} // namespace cbfl::py
