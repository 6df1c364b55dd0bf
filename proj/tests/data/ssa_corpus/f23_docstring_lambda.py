def target(xs, k):
    """Sorted by distance from k."""
    key = lambda v: abs(v - k)
    ordered = sorted(xs, key=key)
    if ordered:
        head = ordered[0]
    else:
        head = None
    return ordered, head


CASES = [([5, 1, 9], 4), ([], 0)]
