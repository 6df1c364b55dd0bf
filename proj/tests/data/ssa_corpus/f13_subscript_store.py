def target(n):
    table = [0] * n
    for i in range(n):
        table[i] = i * i
    table[0] += 7 if n else 0
    return table


CASES = [(0,), (1,), (4,)]
