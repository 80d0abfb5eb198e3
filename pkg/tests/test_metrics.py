import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tempord.errors import DegenerateX, DegenerateY, LengthMismatch
from tempord.metrics import adjusted_r_squared, fourier_distance, manhattan_distance


# --- independent oracles -----------------------------------------------------

def lstsq_adjusted_r2(x, y):
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    r2 = 1 - resid @ resid / np.sum((y - y.mean()) ** 2)
    n = len(x)
    return 1 - (1 - r2) * (n - 1) / (n - 2)


def loop_manhattan(x, y):
    total = 0.0
    for a, b in zip(x, y):
        total += abs(a - b)
    return total


def naive_dft(x):
    n = len(x)
    return [sum(x[t] * cmath.exp(-2j * math.pi * k * t / n) for t in range(n)) for k in range(n)]


def naive_fourier_distance(x, y):
    n = len(x)
    fx, fy = naive_dft(list(x)), naive_dft(list(y))
    return math.sqrt(sum(abs(fx[k] - fy[k]) ** 2 for k in range(n // 2 + 1)))


finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


# --- adjusted R-squared --------------------------------------------------------

def test_adjusted_r2_perfect_fit():
    x = np.array([0.0, 1, 2, 3])
    assert adjusted_r_squared(x, 2 * x + 1) == pytest.approx(1.0, abs=1e-15)


def test_adjusted_r2_hand_example():
    # slope 1/2, R^2 = 0.75, adjusted = 1 - 0.25 * 2 / 1
    assert adjusted_r_squared([1, 2, 3], [1, 2, 2]) == pytest.approx(0.5, abs=1e-15)


def test_adjusted_r2_degenerate():
    with pytest.raises(DegenerateX):
        adjusted_r_squared([1, 1, 1], [1, 2, 3])
    with pytest.raises(DegenerateY):
        adjusted_r_squared([1, 2, 3], [4, 4, 4])
    with pytest.raises(LengthMismatch):
        adjusted_r_squared([1, 2], [1, 2])


def test_adjusted_r2_matches_lstsq():
    rng = np.random.default_rng(3)
    for _ in range(50):
        x = rng.normal(size=40)
        y = 0.3 * x + rng.normal(size=40)
        assert adjusted_r_squared(x, y) == pytest.approx(lstsq_adjusted_r2(x, y), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    alpha=st.floats(0.01, 50).flatmap(lambda a: st.sampled_from([a, -a])),
    beta=st.floats(-100, 100),
)
def test_adjusted_r2_affine_invariant(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=30), rng.normal(size=30)
    assert adjusted_r_squared(x, alpha * y + beta) == pytest.approx(adjusted_r_squared(x, y), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(arrays(float, 12, elements=finite), arrays(float, 12, elements=finite))
def test_adjusted_r2_upper_bound(x, y):
    try:
        score = adjusted_r_squared(x, y)
    except (DegenerateX, DegenerateY):
        return
    assert score <= 1.0


# --- distances ---------------------------------------------------------------

def test_manhattan_examples():
    assert manhattan_distance([1, 2], [2, 4]) == 3
    x = np.random.default_rng(0).normal(size=100)
    assert manhattan_distance(x, x) == 0
    y = np.random.default_rng(1).normal(size=100)
    assert manhattan_distance(x, y) == pytest.approx(loop_manhattan(x, y), abs=1e-12)


def test_fourier_examples():
    assert fourier_distance([1, 0, 0, 0], [0, 0, 0, 0]) == pytest.approx(math.sqrt(3), abs=1e-15)
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=64), rng.normal(size=64)
    assert fourier_distance(x, x) == 0
    assert fourier_distance(x, y) == pytest.approx(naive_fourier_distance(x, y), abs=1e-9)


@pytest.mark.parametrize("n", [2, 3, 7, 10])
def test_fourier_odd_and_even_lengths(n):
    rng = np.random.default_rng(n)
    x, y = rng.normal(size=n), rng.normal(size=n)
    assert fourier_distance(x, y) == pytest.approx(naive_fourier_distance(x, y), abs=1e-12)


def test_distance_length_mismatch():
    with pytest.raises(LengthMismatch):
        manhattan_distance([1, 2], [1])
    with pytest.raises(LengthMismatch):
        fourier_distance([1], [1])


@settings(max_examples=80, deadline=None)
@given(
    arrays(float, 9, elements=finite),
    arrays(float, 9, elements=finite),
    arrays(float, 9, elements=finite),
)
def test_distance_axioms(x, y, z):
    for d in (manhattan_distance, fourier_distance):
        assert d(x, y) == pytest.approx(d(y, x), rel=1e-12, abs=1e-9)
        assert d(x, x) == 0
    assert manhattan_distance(x, z) <= manhattan_distance(x, y) + manhattan_distance(y, z) + 1e-9
