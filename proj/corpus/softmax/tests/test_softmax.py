import math

from softmax import softmax


def close(actual, expected):
    return len(actual) == len(expected) and all(abs(a - b) < 1e-6 for a, b in zip(actual, expected))


def test_t1():
    assert close(softmax([0.0, 1.0]), [0.2689414, 0.7310586])


def test_t2():
    assert close(softmax([-1.0, 0.0, 1.0]), [0.0900306, 0.2447285, 0.6652410])


def test_t3():
    out = softmax([1000.0, 1001.0])
    assert abs(sum(out) - 1.0) < 1e-6
    assert all(0.0 <= v <= 1.0 for v in out)


def test_t4():
    assert close(softmax([10000.0, 10001.0]), [0.2689414, 0.7310586])
