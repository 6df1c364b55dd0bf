def target(pairs):
    lo, hi = 0, 0
    for a, b in pairs:
        lo, hi = min(lo, a), max(hi, b)
    return lo, hi


CASES = [([],), ([(1, 2), (-3, 4)],), ([(0, 0)],)]
