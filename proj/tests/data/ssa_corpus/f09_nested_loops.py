def target(rows):
    best = 0
    for row in rows:
        subtotal = 0
        for v in row:
            subtotal += v
        if subtotal > best:
            best = subtotal
    return best


CASES = [([],), ([[1, 2], [3, 4]],), ([[-1], [-5, 2]],)]
