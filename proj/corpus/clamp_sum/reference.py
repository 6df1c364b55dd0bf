def clamp_sum(xs, lo, hi):
    total = 0
    for x in xs:
        if x < lo:
            x = lo
        if x > hi:
            x = hi
        total += x
    return total
