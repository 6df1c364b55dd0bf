def target(xs):
    acc = 0
    for x in xs:
        acc += x * x
    return acc


CASES = [([],), ([1, 2, 3],), ([4],)]
