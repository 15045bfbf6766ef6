"""Dirichlet sine eigenbasis of -d^2/dx^2 on (0, l_dom).

Modal vectors are plain numpy arrays of length ``m`` holding the
coefficients a_j = <u, w_j> with

    w_j(x) = sqrt(2 / l_dom) sin(j pi x / l_dom),   lambda_j = (j pi / l_dom)^2.

Fields live on the ``n_quad - 1`` interior nodes x_i = i l_dom / n_quad.
With uniform weights h = l_dom / n_quad the discrete inner product is
exact for products of sine modes below the Nyquist index, so the discrete
Gram matrix of the first ``m <= n_quad / 2`` modes is the identity.
"""

import warnings
from dataclasses import dataclass

import numpy as np


class BasisError(ValueError):
    pass


class AliasingWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    l_dom: float
    m: int
    n_quad: int
    lam: np.ndarray       # eigenvalues, shape (m,)
    x: np.ndarray         # interior nodes, shape (n_quad - 1,)
    h: float              # quadrature weight
    synth: np.ndarray     # w_j(x_i), shape (m, n_quad - 1)
    x_full: np.ndarray    # nodes including both endpoints, shape (n_quad + 1,)
    dsynth: np.ndarray    # w_j'(x_i) on x_full, shape (m, n_quad + 1)

    @property
    def wavenumbers(self):
        return np.sqrt(self.lam)

    def safe_degree(self):
        """Largest polynomial degree the grid projects without aliasing."""
        return 2.0 * self.n_quad / self.m - 1.0

    def evaluate(self, a, x):
        """Evaluate sum_j a_j w_j at arbitrary points ``x``."""
        a = _check(self, a)
        x = np.asarray(x, dtype=float)
        j = np.arange(1, self.m + 1)
        w = np.sqrt(2.0 / self.l_dom) * np.sin(np.outer(x, j) * np.pi / self.l_dom)
        return w @ a

    def gram(self):
        return self.h * self.synth @ self.synth.T


def build_basis(l_dom=1.0, m=32, n_quad=None):
    """Build the basis; ``n_quad`` defaults to 4 m."""
    if n_quad is None:
        n_quad = 4 * int(m)
    l_dom, m, n_quad = float(l_dom), int(m), int(n_quad)
    if not l_dom > 0:
        raise BasisError(f"l_dom must be positive, got {l_dom}")
    if m < 1:
        raise BasisError(f"need at least one mode, got m={m}")
    if n_quad < 2 * m:
        raise BasisError(f"n_quad={n_quad} < 2 m = {2 * m}")
    j = np.arange(1, m + 1)
    k = j * np.pi / l_dom
    h = l_dom / n_quad
    x = h * np.arange(1, n_quad)
    x_full = h * np.arange(0, n_quad + 1)
    scale = np.sqrt(2.0 / l_dom)
    synth = scale * np.sin(np.outer(k, x))
    dsynth = scale * k[:, None] * np.cos(np.outer(k, x_full))
    return SpectralBasis(l_dom, m, n_quad, k ** 2, x, h, synth, x_full, dsynth)


def _check(basis, a):
    a = np.asarray(a, dtype=float)
    if a.shape[-1] != basis.m:
        raise BasisError(f"modal vector has {a.shape[-1]} entries, basis has m={basis.m}")
    return a


def project(basis, values):
    """Modal coefficients of a field given on the interior nodes."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != basis.n_quad - 1:
        raise BasisError(
            f"field has {values.shape[-1]} nodal values, expected {basis.n_quad - 1}")
    return basis.h * values @ basis.synth.T


def synthesize(basis, a):
    """Nodal values sum_j a_j w_j(x_i) on the interior nodes."""
    return _check(basis, a) @ basis.synth


def inverse_laplacian(basis, a):
    """Modal coefficients of v solving -v'' = u, v = 0 at both ends."""
    return _check(basis, a) / basis.lam


def laplacian(basis, a):
    """Modal coefficients of -u''; the inverse of :func:`inverse_laplacian`."""
    return _check(basis, a) * basis.lam


def l2_norm(basis, a):
    a = _check(basis, a)
    return float(np.sqrt(np.sum(a * a)))


def grad_inv_norm_sq(basis, a):
    """||grad v||^2 for v = (-Laplacian)^{-1} u, i.e. sum a_j^2 / lambda_j."""
    a = _check(basis, a)
    return float(np.sum(a * a / basis.lam))


def lp_norm(basis, a, p):
    if p < 1:
        raise ValueError("Lp norm needs p >= 1")
    u = synthesize(basis, a)
    return float((basis.h * np.sum(np.abs(u) ** p)) ** (1.0 / p))


def norms(basis, a, p=None):
    out = {"l2": l2_norm(basis, a), "grad_v": np.sqrt(grad_inv_norm_sq(basis, a))}
    if p is not None:
        out["lp"] = lp_norm(basis, a, p)
    return out


def derivative_lp_norm(basis, a, p):
    """||d/dx sum a_j w_j||_{L^p} by trapezoid quadrature on the full grid."""
    d = _check(basis, a) @ basis.dsynth
    wts = np.full(basis.n_quad + 1, basis.h)
    wts[[0, -1]] *= 0.5
    return float(np.sum(wts * np.abs(d) ** p) ** (1.0 / p))


def apply_nonlinearity(basis, a, func):
    """Pseudo-spectral <func(u), w_j> for u = sum a_j w_j.

    Overflow or non-finite values are raised as FloatingPointError so the
    time stepper can report blow-up.
    """
    u = synthesize(basis, a)
    with np.errstate(over="raise", invalid="raise"):
        vals = np.asarray(func(u), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite value in pointwise nonlinearity")
    return basis.h * np.broadcast_to(vals, u.shape) @ basis.synth.T


def warn_if_aliased(basis, degree):
    if degree > basis.safe_degree():
        warnings.warn(
            f"nonlinearity degree ~{degree:g} exceeds the alias-free bound "
            f"{basis.safe_degree():g} for m={basis.m}, n_quad={basis.n_quad}",
            AliasingWarning, stacklevel=2)
