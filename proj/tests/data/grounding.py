def g(xs, k):
    total = 0
    for x in xs:
        total += x
    if total > k:
        total = k
    else:
        total = total + 1
    return total


def h(a, flag):
    b = a * 2
    if flag:
        c = b + 1
    else:
        c = b - 1
    return c
