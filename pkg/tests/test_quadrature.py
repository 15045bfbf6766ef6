import math

import pytest
from hypothesis import given, settings, strategies as st

from netflow_waves.quadrature import QuadratureError, adaptive_simpson


def test_polynomial_exact():
    assert adaptive_simpson(lambda x: x ** 3 - x, 0.0, 2.0) == pytest.approx(2.0, abs=1e-13)


def test_smooth_integrand():
    assert adaptive_simpson(math.exp, 0.0, 1.0) == pytest.approx(math.e - 1.0, rel=1e-11)


def test_reversed_limits_negate():
    fwd = adaptive_simpson(math.sin, 0.0, 2.0)
    assert adaptive_simpson(math.sin, 2.0, 0.0) == pytest.approx(-fwd, rel=1e-14)


def test_empty_interval():
    assert adaptive_simpson(math.cos, 1.5, 1.5) == 0.0


def test_depth_exhaustion_raises():
    with pytest.raises(QuadratureError) as info:
        adaptive_simpson(lambda x: math.sin(1.0 / x) / x if x else 0.0, 0.0, 1.0, max_depth=4)
    assert math.isfinite(info.value.estimate)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2))
def test_additivity(a, b, c):
    f = lambda x: math.cos(x) * x ** 2
    whole = adaptive_simpson(f, a, b)
    split = adaptive_simpson(f, a, c) + adaptive_simpson(f, c, b)
    assert whole == pytest.approx(split, abs=1e-9)
