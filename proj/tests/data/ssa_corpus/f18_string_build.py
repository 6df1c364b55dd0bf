def target(words, sep):
    out = ""
    first = True
    for w in words:
        if not first:
            out += sep
        out += w.upper()
        first = False
    return out


CASES = [([], ","), (["a", "b"], "-"), (["x"], "")]
