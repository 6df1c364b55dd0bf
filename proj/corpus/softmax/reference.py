def softmax(xs):
    if not xs:
        return []
    m = max(xs)
    shifted = [x - m for x in xs]
    exps = [exp(y) for y in shifted]
    s = sum(exps)
    return [e / s for e in exps]


import math


def exp(y):
    try:
        return math.exp(y)
    except OverflowError:
        return math.inf
