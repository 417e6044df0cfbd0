from math import factorial

import numpy as np
import pytest

from cutplate.quadrature import MAX_DEGREE, segment_rule, triangle_rule


def _exact_triangle(a, b):
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", list(range(0, 13)) + [20, MAX_DEGREE])
def test_triangle_rule_exact_up_to_degree(degree):
    rule = triangle_rule(degree)
    x, y = rule.points.T
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = np.sum(rule.weights * x**a * y**b)
            assert got == pytest.approx(_exact_triangle(a, b), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("degree", [1, 2, 5, 8, 12])
def test_triangle_points_inside_and_weights_positive(degree):
    rule = triangle_rule(degree)
    x, y = rule.points.T
    assert np.all(x >= 0) and np.all(y >= 0) and np.all(x + y <= 1)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(0.5, rel=1e-14)


def test_symmetric_rules_point_counts():
    assert [len(triangle_rule(d)) for d in (1, 2, 5)] == [1, 3, 7]


@pytest.mark.parametrize("degree", [0, 1, 3, 7, 12, MAX_DEGREE])
def test_segment_rule_exact(degree):
    rule = segment_rule(degree)
    s = rule.points[:, 0]
    for p in range(degree + 1):
        assert np.sum(rule.weights * s**p) == pytest.approx(1 / (p + 1), rel=1e-13)


@pytest.mark.parametrize("fn", [triangle_rule, segment_rule])
@pytest.mark.parametrize("degree", [-1, MAX_DEGREE + 1])
def test_unsupported_degree(fn, degree):
    with pytest.raises(ValueError):
        fn(degree)
