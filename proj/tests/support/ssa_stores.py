"""List assignment targets of a function in textual order.

usage: ssa_stores.py FILE FUNCTION

Prints `name line col` per stored name, skipping comprehension scopes.
"""

import ast
import sys


class Stores(ast.NodeVisitor):
    def __init__(self):
        self.out = []

    def visit_Name(self, node):
        if isinstance(node.ctx, ast.Store):
            self.out.append((node.lineno, node.col_offset, node.id))

    def skip(self, node):
        pass

    visit_ListComp = visit_SetComp = visit_DictComp = visit_GeneratorExp = visit_Lambda = skip


def main():
    path, function = sys.argv[1:3]
    with open(path, encoding="utf-8") as f:
        tree = ast.parse(f.read())
    for node in tree.body:
        if isinstance(node, ast.FunctionDef) and node.name == function:
            v = Stores()
            for stmt in node.body:
                v.visit(stmt)
            for line, col, name in sorted(v.out):
                print(name, line, col)
            return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
