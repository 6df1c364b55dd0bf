def target(a, b):
    if b == 0:
        raise ZeroDivisionError("b is zero")
    q = a / b
    q = round(q, 3)
    return q


CASES = [(1, 0), (1, 3), (-9, 2)]
