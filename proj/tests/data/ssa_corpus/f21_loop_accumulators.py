def target(xs):
    evens = []
    odds = 0
    for i, x in enumerate(xs):
        if x % 2:
            odds += i
        else:
            evens.append(x)
    mean = sum(evens) / len(evens)
    return mean, odds


CASES = [([1, 2, 3, 4],), ([1, 3],), ([2],)]
