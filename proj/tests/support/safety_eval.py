"""Evaluate expressions against an environment that records writes.

usage: safety_eval.py FILE

FILE holds one expression per line. Prints `write <expr>` for every
expression that mutated the environment and exits 1 if any did.
"""

import copy
import sys

WRITES = []


class TrackedList(list):
    def _w(self, *a, **k):
        WRITES.append("list")

    append = extend = insert = pop = remove = clear = sort = reverse = _w
    __setitem__ = __delitem__ = __iadd__ = __imul__ = _w


class TrackedDict(dict):
    def _w(self, *a, **k):
        WRITES.append("dict")

    update = pop = popitem = clear = setdefault = _w
    __setitem__ = __delitem__ = _w


class Box:
    def __setattr__(self, name, value):
        WRITES.append("attr")


def env():
    return {
        "xs": TrackedList([3, 1, 2]),
        "d": TrackedDict({"k": 1}),
        "n": 4,
        "s": "abc",
        "o": Box(),
    }


def snapshot(e):
    return {k: copy.deepcopy(list(v) if isinstance(v, list) else dict(v) if isinstance(v, dict) else v)
            for k, v in e.items() if k != "o"}


def main():
    bad = 0
    with open(sys.argv[1], encoding="utf-8") as f:
        exprs = [line.rstrip("\n") for line in f if line.strip()]
    for expr in exprs:
        del WRITES[:]
        e = env()
        before = snapshot(e)
        g = dict(e)
        try:
            eval(expr, g)
        except Exception:
            pass
        extra = set(g) - set(e) - {"__builtins__"}
        if WRITES or snapshot(e) != before or extra:
            bad += 1
            print("write", expr)
    print("evaluated", len(exprs))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
