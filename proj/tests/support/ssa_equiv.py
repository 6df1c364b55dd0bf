"""Compare a function with its SSA form on every input in CASES.

usage: ssa_equiv.py ORIGINAL SSA FUNCTION

Prints one line per case and exits 1 on any mismatch.
"""

import copy
import sys


def load(path, name):
    ns = {"__name__": name}
    with open(path, encoding="utf-8") as f:
        exec(compile(f.read(), path, "exec"), ns)
    return ns


def observe(fn, args):
    try:
        return ("value", repr(fn(*copy.deepcopy(args))))
    except Exception as exc:
        return ("raise", type(exc).__name__)


def main():
    original, ssa, function = sys.argv[1:4]
    a = load(original, "original")
    b = load(ssa, "ssa")
    cases = a.get("CASES", [])
    if not cases:
        print("no CASES")
        return 1
    bad = 0
    for i, args in enumerate(cases):
        want = observe(a[function], args)
        got = observe(b[function], args)
        ok = want == got
        bad += not ok
        print(f"case {i}: {'ok' if ok else 'MISMATCH'} {want} {got}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
