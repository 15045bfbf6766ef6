"""Adaptive Simpson quadrature for scalar integrands."""

import math

ATOL = 1e-12
RTOL = 1e-10
MAX_DEPTH = 48


class QuadratureError(ArithmeticError):
    """Raised when adaptive refinement stops before reaching tolerance.

    ``estimate`` is the integral value reached and ``error`` the last
    local error estimate that failed the test.
    """

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def adaptive_simpson(func, a, b, atol=ATOL, rtol=RTOL, max_depth=MAX_DEPTH):
    """Integrate ``func`` over [a, b]; b < a gives the negated integral."""
    if a == b:
        return 0.0
    fa, fb = func(a), func(b)
    c = 0.5 * (a + b)
    fc = func(c)
    whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb)
    # a coarse global estimate fixes the relative part of the tolerance
    tol = max(atol, rtol * abs(whole))
    return _refine(func, a, b, fa, fb, fc, whole, tol, max_depth)


def _refine(func, a, b, fa, fb, fc, whole, tol, depth):
    c = 0.5 * (a + b)
    d = 0.5 * (a + c)
    e = 0.5 * (c + b)
    fd, fe = func(d), func(e)
    left = (c - a) / 6.0 * (fa + 4.0 * fd + fc)
    right = (b - c) / 6.0 * (fc + 4.0 * fe + fb)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    if depth <= 0 or not math.isfinite(delta):
        raise QuadratureError(
            f"adaptive Simpson did not converge on [{a}, {b}]",
            estimate=left + right, error=abs(delta) / 15.0)
    return (_refine(func, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
            + _refine(func, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1))
