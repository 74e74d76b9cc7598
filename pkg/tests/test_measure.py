from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohesive.errors import DimensionError, ValidationError
from cohesive.measure import (
    ProbSpace,
    comonotone_check,
    expectation,
    pos_neg_split,
    positive_part,
    safe_ratio,
    to_fraction,
)


def test_decimal_reading():
    assert to_fraction(0.4) == Fraction(2, 5)
    assert to_fraction("1/3") == Fraction(1, 3)
    assert to_fraction("0.125") == Fraction(1, 8)
    with pytest.raises(ValidationError):
        to_fraction("abc")
    with pytest.raises(TypeError):
        to_fraction(True)


def test_space_defaults_to_exact():
    s = ProbSpace.uniform(3)
    assert s.exact and s.tol == 0
    assert s.weights.dtype == object
    assert ProbSpace.uniform(100).exact is False


@pytest.mark.parametrize("weights, msg", [
    ([0.5, 0.6], "sum to one"),
    ([1, 0], "strictly positive"),
    ([], "at least one atom"),
])
def test_space_rejects_bad_weights(weights, msg):
    with pytest.raises(ValidationError, match=msg):
        ProbSpace(weights)


def test_weights_are_read_only():
    s = ProbSpace.uniform(2)
    with pytest.raises(ValueError):
        s.weights[0] = Fraction(1)


def test_expectation_examples():
    s = ProbSpace.uniform(4)
    assert expectation(s, s.ones(), [1, 2, 3, 4]) == Fraction(5, 2)
    assert expectation(s, [2, 2, 0, 0], [1, 2, 3, 4]) == Fraction(3, 2)
    with pytest.raises(DimensionError):
        expectation(s, s.ones(), [1, 2, 3])


def test_density_validation():
    s = ProbSpace.uniform(2)
    assert list(s.density([2, 0])) == [2, 0]
    with pytest.raises(ValidationError, match="unit mean"):
        s.density([1, 2])
    with pytest.raises(ValidationError, match="nonnegative"):
        s.density([3, -1])


def test_float_mode_tolerance():
    s = ProbSpace([0.1, 0.2, 0.7], exact=False)
    assert s.eq(0.1 + 0.2, 0.3)
    assert not s.eq(1.0, 1.001)


def test_comonotone_examples():
    assert comonotone_check([1, 2, 3], [0, 5, 5])
    assert not comonotone_check([1, 2, 3], [3, 2, 1])
    # ties in xi allow any order of eta
    assert comonotone_check([1, 1, 2], [5, 0, 6])
    assert not comonotone_check([1, 1, 2], [5, 7, 6])


def test_split_and_ratio():
    x = ProbSpace.uniform(3).var([-2, 0, 3])
    pos, neg = pos_neg_split(x)
    assert list(pos) == [0, 0, 3] and list(neg) == [2, 0, 0]
    assert list(positive_part(x)) == [0, 0, 3]
    r = safe_ratio(np.array([Fraction(1), Fraction(2)], dtype=object),
                   np.array([Fraction(0), Fraction(4)], dtype=object))
    assert list(r) == [0, Fraction(1, 2)]
    assert list(safe_ratio(np.array([1.0, 2.0]), np.array([0.0, 4.0]))) == [0.0, 0.5]


ints = st.lists(st.integers(-20, 20), min_size=1, max_size=8)


@settings(max_examples=60, deadline=None)
@given(ints)
def test_split_recombines(values):
    x = ProbSpace.uniform(len(values)).var(values)
    pos, neg = pos_neg_split(x)
    assert all(pos - neg == x)
    assert all(v >= 0 for v in pos) and all(v >= 0 for v in neg)


@settings(max_examples=60, deadline=None)
@given(ints)
def test_comonotone_with_monotone_transform(values):
    x = np.array(values)
    assert comonotone_check(x, 2 * x + 1)
    assert comonotone_check(x, np.maximum(x, 0))
