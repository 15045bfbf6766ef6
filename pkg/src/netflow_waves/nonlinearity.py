"""Flux and source functions of u_tt - (f(u) u_x)_x = g(u).

A :class:`NonlinearModel` carries the flux coefficient ``f`` and the source
``g`` together with the antiderivatives

    F(r) = int_0^r f(s) ds,        G(r) = int_0^r F(s) ds,

and the ``check_*`` functions test the structural hypotheses on sampled
probe sets.  Sampled checks only certify the probe range they were run on;
every :class:`ConditionReport` records that range.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .quadrature import adaptive_simpson

TOL_MONO = 1e-12
PROBE_RADIUS = 10.0
PROBE_COUNT = 4096
# ratio of a fitted constant between a probe set and its widened/refined
# copy above which the constant is considered unbounded
GROWTH_LIMIT = 1.2
POSITIVE_FLOOR = 1e-12


class ModelError(ValueError):
    pass


def _evaluate(func, r):
    r = np.asarray(r, dtype=float)
    out = func(r)
    if isinstance(out, np.ndarray) and out.shape == r.shape and out.dtype == float:
        return out
    return np.broadcast_to(np.asarray(out, dtype=float), r.shape).copy()


def _zero_source(r):
    return np.zeros_like(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class NonlinearModel:
    """The pair (f, g) and everything derived from it.

    ``F_closed``/``G_closed`` are optional closed-form antiderivatives; when
    absent, ``F`` and ``G`` fall back to adaptive quadrature, which is
    correct but far too slow for time stepping.  ``g=None`` means g == 0.
    """

    f: Callable
    g: Optional[Callable] = None
    p: float = 4.0
    name: str = "custom"
    params: Optional[dict] = None
    F_closed: Optional[Callable] = None
    G_closed: Optional[Callable] = None
    source: dict = field(default_factory=lambda: {"name": "none"})

    @property
    def kind(self):
        return "builtin-family" if self.params is not None else "custom-closure"

    @property
    def source_free(self):
        return self.g is None

    def flux(self, r):
        return _evaluate(self.f, r)

    def rhs(self, r):
        """Source term g(r); zeros when the model has no source."""
        if self.g is None:
            return _zero_source(r)
        return _evaluate(self.g, r)

    def F(self, r):
        if self.F_closed is not None:
            return _evaluate(self.F_closed, r)
        return np.vectorize(lambda x: antiderivative_F(self, x), otypes=[float])(r)

    def G(self, r):
        if self.G_closed is not None:
            return _evaluate(self.G_closed, r)
        return np.vectorize(lambda x: antiderivative_G(self, x), otypes=[float])(r)

    def polynomial_degree(self):
        """Rough degree of F as a polynomial, used for the aliasing warning."""
        if self.params is not None:
            k0, k1, p1 = self.params["k0"], self.params["k1"], self.params["p1"]
            deg = 1.0
            if k0 > 0:
                deg = max(deg, self.p - 1)
            if k1 > 0:
                deg = max(deg, p1 + 1)
            return deg
        return self.p - 1

    def describe(self):
        out = {"name": self.name, "kind": self.kind, "p": self.p,
               "source": dict(self.source)}
        if self.params is not None:
            out["family"] = "power-family"
            out.update(self.params)
        return out


def antiderivative_F(model, r):
    """F(r) = int_0^r f(s) ds for scalar ``r``."""
    r = float(r)
    if r == 0.0:
        return 0.0
    if model.F_closed is not None:
        return float(model.F_closed(np.asarray(r)))
    return adaptive_simpson(lambda s: float(model.f(s)), 0.0, r)


def antiderivative_G(model, r):
    """G(r) = int_0^r F(s) ds for scalar ``r``.

    Without a closed form this uses the repeated-integral identity
    G(r) = int_0^r (r - s) f(s) ds, so only one quadrature is needed.
    """
    r = float(r)
    if r == 0.0:
        return 0.0
    if model.G_closed is not None:
        return float(model.G_closed(np.asarray(r)))
    return adaptive_simpson(lambda s: (r - s) * float(model.f(s)), 0.0, r)


# ---------------------------------------------------------------------------
# builtin family and sources

def make_source(name="none", d=1.0, p0=1.0):
    """Named source terms usable from scenario files.

    Returns ``(g, description)``; ``g`` is None for ``"none"``.
    """
    d = float(d)
    if name == "none":
        return None, {"name": "none"}
    if name == "power":
        p0 = float(p0)
        return (lambda r: d * np.abs(r) ** p0), {"name": name, "d": d, "p0": p0}
    if name == "one-minus-cos":
        # 2 sin^2(r/2) is 1 - cos r without cancellation near r = 0
        return (lambda r: 2.0 * d * np.sin(0.5 * r) ** 2), {"name": name, "d": d}
    if name == "sine":
        return (lambda r: d * np.sin(r)), {"name": name, "d": d}
    if name == "linear":
        return (lambda r: d * r), {"name": name, "d": d}
    raise ModelError(f"unknown source {name!r}")


def _abs_series(terms, r):
    """sum c |r|^e over the nonzero terms, with integer powers multiplied out."""
    a = np.abs(r)
    out = np.zeros_like(a)
    for c, e in terms:
        if c == 0:
            continue
        if e == 0:
            out += c
        elif e == int(e) and e <= 4:
            term = a
            for _ in range(int(e) - 1):
                term = term * a
            out += c * term
        else:
            out += c * a ** e
    return out


SOURCE_NAMES = ("none", "power", "one-minus-cos", "sine", "linear")


def power_family(k0=1.0, k1=0.0, k2=0.0, p=4.0, p1=0.0, source="none",
                 d=1.0, p0=1.0, force=False, radius=PROBE_RADIUS,
                 count=PROBE_COUNT, name="power-family"):
    """f(r) = k0 |r|^(p-2) - k1 |r|^p1 + k2 with closed-form F and G.

    Parameter sets where f goes negative on the probe range are rejected
    unless ``force`` is set.
    """
    k0, k1, k2, p, p1 = (float(v) for v in (k0, k1, k2, p, p1))
    if min(k0, k1, k2) < 0:
        raise ModelError("power-family needs k0, k1, k2 >= 0")
    if not p > 2:
        raise ModelError(f"power-family needs p > 2, got {p}")
    if k1 > 0 and not 0 <= p1 < p - 2:
        raise ModelError(f"power-family needs 0 <= p1 < p - 2, got p1={p1}")

    # (coefficient, exponent) pairs in |r|; zero terms dropped for speed
    f_terms = [(k0, p - 2), (-k1, p1), (k2, 0.0)]
    F_terms = [(k0 / (p - 1), p - 1), (-k1 / (p1 + 1), p1 + 1), (k2, 1.0)]
    G_terms = [(k0 / (p * (p - 1)), p), (-k1 / ((p1 + 1) * (p1 + 2)), p1 + 2),
               (0.5 * k2, 2.0)]

    def f(r):
        return _abs_series(f_terms, r)

    def F(r):
        return np.sign(r) * _abs_series(F_terms, r)

    def G(r):
        return _abs_series(G_terms, r)

    g, src = make_source(source, d=d, p0=p0)
    model = NonlinearModel(
        f=f, g=g, p=p, name=name,
        params={"k0": k0, "k1": k1, "k2": k2, "p1": p1},
        F_closed=F, G_closed=G, source=src)
    if not force:
        r = probe_points(radius, count)
        fr = model.flux(r)
        if fr.min() < -TOL_MONO:
            i = int(np.argmin(fr))
            raise ModelError(
                f"f is negative on the probe range (f({r[i]:.6g}) = {fr[i]:.6g});"
                " F would not be monotone")
    return model


def custom_model(f, g=None, p=4.0, F=None, G=None, name="custom"):
    return NonlinearModel(f=f, g=g, p=float(p), name=name, F_closed=F, G_closed=G,
                          source={"name": "custom" if g is not None else "none"})


# ---------------------------------------------------------------------------
# probing

def probe_points(radius=PROBE_RADIUS, count=PROBE_COUNT, floor=1e-6):
    """Symmetric probe set on [-radius, radius].

    Mixes a log-uniform part reaching down to ``floor * radius``, a uniform
    part, and dyadic points clustering at the range ends.  Contains 0.
    """
    half = max((count - 1) // 2, 64)
    n_log = half // 2
    n_dyad = 20
    n_lin = half - n_log - n_dyad
    pos = np.concatenate([
        np.logspace(np.log10(floor * radius), np.log10(radius), n_log),
        np.linspace(radius / n_lin, radius, n_lin),
        radius * (1.0 - 2.0 ** -np.arange(1, n_dyad + 1)),
    ])
    pos = np.unique(pos)
    return np.concatenate([-pos[::-1], [0.0], pos])


def probe_pairs(points, seed=0):
    """Pairs (r, s) with r != s: neighbours, near-coincident offsets, random."""
    rng = np.random.default_rng(seed)
    n = len(points)
    r1, s1 = points[1:], points[:-1]
    off = 1e-6 * np.maximum(1.0, np.abs(points))
    r2, s2 = points + off, points
    i = rng.integers(0, n, size=2 * n)
    j = rng.integers(0, n, size=2 * n)
    keep = i != j
    r3, s3 = points[i[keep]], points[j[keep]]
    return np.concatenate([r1, r2, r3]), np.concatenate([s1, s2, s3])


@dataclass
class ConditionReport:
    hypothesis: str
    satisfied: bool
    constants: dict
    probe_radius: float
    probe_count: int
    witness: Optional[object] = None
    margin: float = 0.0
    note: str = ""

    def to_dict(self):
        w = self.witness
        if isinstance(w, tuple):
            w = [float(v) for v in w]
        elif w is not None:
            w = float(w)
        return {
            "hypothesis": self.hypothesis,
            "satisfied": bool(self.satisfied),
            "constants": {k: float(v) for k, v in self.constants.items()},
            "probe_range": [-self.probe_radius, self.probe_radius],
            "probe_count": self.probe_count,
            "witness": w,
            "margin": float(self.margin),
            "note": self.note,
        }


def _grows(base, other):
    return other > GROWTH_LIMIT * base + 1e-300


def _upper_fit(absF, r, p, a1):
    a = np.abs(r)
    return float(np.max((absF - a1 * a) / a ** (p - 1)))


def check_growth(model, p=None, radius=PROBE_RADIUS, count=PROBE_COUNT):
    """|F(r)| <= a0 |r|^(p-1) + a1 |r|  and  F(r) r >= b0 |r|^p + b1 r^2.

    The upper pair minimises a0 + a1 over a candidate grid for a1; the lower
    pair takes the largest b0 (reached at b1 = 0) and then the largest b1
    compatible with it.  A constant that drifts when the probe range is
    widened or refined towards 0 is reported as unbounded.
    """
    p = float(model.p if p is None else p)
    if not p > 2:
        raise ValueError("growth check needs p > 2")
    pts = probe_points(radius, count)
    r = pts[pts != 0.0]
    a = np.abs(r)
    Fr = model.F(r)
    absF = np.abs(Fr)

    ratios = np.sort(absF / a)
    sub = ratios[np.linspace(0, len(ratios) - 1, 400).astype(int)]
    cand = np.unique(np.concatenate([[0.0], sub, np.logspace(-8, 4, 97)]))
    fits = np.max((absF[None, :] - cand[:, None] * a[None, :]) / a[None, :] ** (p - 1),
                  axis=1)
    fits = np.maximum(fits, 0.0)
    k = int(np.argmin(fits + cand))
    a1 = float(cand[k])
    a0 = max(float(fits[k]), POSITIVE_FLOOR)

    b0 = float(np.min(Fr * r / a ** p))
    b1 = max(float(np.min((Fr * r - b0 * a ** p) / r ** 2)), 0.0) if b0 > 0 else 0.0

    notes = []
    witness = None
    satisfied = True
    wide = probe_points(2 * radius, count, floor=0.5e-6)
    fine = probe_points(radius, count, floor=0.5e-6)
    for name, q in (("widened", wide), ("refined", fine)):
        q = q[q != 0.0]
        Fq = model.F(q)
        if _grows(max(a0, POSITIVE_FLOOR), _upper_fit(np.abs(Fq), q, p, a1)):
            satisfied = False
            ratio = (np.abs(Fq) - a1 * np.abs(q)) / np.abs(q) ** (p - 1)
            witness = float(q[np.argmax(ratio)])
            notes.append(f"upper bound constant unbounded on {name} range")
        bq = Fq * q / np.abs(q) ** p
        if b0 > 0 and bq.min() * GROWTH_LIMIT < b0:
            satisfied = False
            witness = float(q[np.argmin(bq)])
            notes.append(f"lower bound constant vanishes on {name} range")
    if b0 <= 0:
        satisfied = False
        witness = float(r[np.argmin(Fr * r / a ** p)])
        notes.append("F(r) r is not bounded below by a positive multiple of |r|^p")

    upper = a0 * a ** (p - 1) + a1 * a - absF
    lower = Fr * r - b0 * a ** p - b1 * r ** 2
    margin = float(min(upper.min(), lower.min()))
    return ConditionReport("growth", satisfied,
                           {"a0": a0, "a1": a1, "b0": b0, "b1": b1, "p": p},
                           radius, len(pts), witness, margin, "; ".join(notes))


def _slope_max(g, r, s):
    q = np.abs(g(r) - g(s)) / np.abs(r - s)
    i = int(np.argmax(q))
    return float(q[i]), (float(r[i]), float(s[i]))


def check_lipschitz(model, radius=PROBE_RADIUS, count=PROBE_COUNT):
    """Estimate d0 = sup |g(r) - g(s)| / |r - s| over probe pairs."""
    pts = probe_points(radius, count)
    if model.g is None:
        return ConditionReport("lipschitz", True, {"d0": POSITIVE_FLOOR}, radius,
                               len(pts), None, 0.0, "g == 0")
    r, s = probe_pairs(pts)
    d0, witness = _slope_max(model.rhs, r, s)
    satisfied = bool(np.isfinite(d0))
    notes = []
    for name, q in (("widened", probe_points(2 * radius, count, floor=0.5e-6)),
                    ("refined", probe_points(radius, count, floor=0.5e-6))):
        dq, wq = _slope_max(model.rhs, *probe_pairs(q))
        if _grows(d0, dq):
            satisfied = False
            witness = wq
            notes.append(f"slope grows on {name} range ({d0:.6g} -> {dq:.6g})")
    return ConditionReport("lipschitz", satisfied, {"d0": max(d0, POSITIVE_FLOOR)},
                           radius, len(pts), witness, 0.0, "; ".join(notes))


def check_monotone_F(model, radius=PROBE_RADIUS, count=PROBE_COUNT, tol=TOL_MONO):
    """Monotonicity of F on probe pairs, cross-checked against min f.

    Pairs are tested through the difference quotient (F(r)-F(s))/(r-s),
    which has the sign of (F(r)-F(s))(r-s) and the scale of f, so the same
    tolerance serves both detection paths.
    """
    pts = probe_points(radius, count)
    r, s = probe_pairs(pts)
    quot = (model.F(r) - model.F(s)) / (r - s)
    i = int(np.argmin(quot))
    fr = model.flux(pts)
    j = int(np.argmin(fr))
    satisfied = bool(quot[i] >= -tol)
    witness = None
    if not satisfied:
        witness = (float(r[i]), float(s[i]))
    note = f"min f = {fr[j]:.6g} at r = {pts[j]:.6g}"
    if (fr[j] >= -tol) != satisfied:
        note += "; pair test and pointwise f test disagree"
    return ConditionReport("monotone", satisfied,
                           {"min_quotient": float(quot[i]), "min_f": float(fr[j])},
                           radius, len(pts), witness, float(quot[i]), note)


def _domination_ratio(model, q):
    q = q[q != 0.0]
    gq = model.rhs(q)
    Gq = model.G(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(Gq > 0, gq ** 2 / Gq, np.where(gq == 0, 0.0, np.inf))
    i = int(np.argmax(ratio))
    return float(ratio[i]), float(q[i])


def check_energy_domination(model, radius=PROBE_RADIUS, count=PROBE_COUNT, tol=TOL_MONO):
    """|g(r)|^2 <= d1 G(r) pointwise, which integrates to ||g(u)||^2 <= d1 Phi(u)."""
    pts = probe_points(radius, count)
    if model.g is None:
        return ConditionReport("domination", True, {"d1": 0.0}, radius, len(pts),
                               None, 0.0, "g == 0")
    g0 = float(model.rhs(np.array([0.0]))[0])
    if abs(g0) > tol:
        return ConditionReport("domination", False, {"d1": float("inf")}, radius,
                               len(pts), 0.0, -abs(g0),
                               f"g(0) = {g0:.6g} != 0, ratio diverges at r = 0")
    d1, witness = _domination_ratio(model, pts)
    satisfied = bool(np.isfinite(d1))
    notes = []
    if satisfied:
        for name, q in (("widened", probe_points(2 * radius, count, floor=0.5e-6)),
                        ("refined", probe_points(radius, count, floor=0.5e-6))):
            dq, wq = _domination_ratio(model, q)
            if _grows(d1, dq):
                satisfied = False
                witness = wq
                notes.append(f"|g|^2/G grows on {name} range ({d1:.6g} -> {dq:.6g})")
    else:
        notes.append("G(r) <= 0 where g(r) != 0")
    q = pts[pts != 0.0]
    margin = float(np.min(d1 * model.G(q) - model.rhs(q) ** 2)) if satisfied else -np.inf
    return ConditionReport("domination", satisfied, {"d1": d1}, radius, len(pts),
                           witness, margin, "; ".join(notes))


def check_source_bound(model, p0, radius=PROBE_RADIUS, count=PROBE_COUNT):
    """|g(r)| <= d |r|^p0 with 0 <= 2 p0 <= p (the weaker source hypothesis)."""
    p0 = float(p0)
    pts = probe_points(radius, count)
    if not 0 <= 2 * p0 <= model.p:
        raise ValueError(f"need 0 <= 2 p0 <= p, got p0={p0}, p={model.p}")
    if model.g is None:
        return ConditionReport("source-bound", True, {"d": POSITIVE_FLOOR, "p0": p0},
                               radius, len(pts), None, 0.0, "g == 0")

    def fit(q):
        q = q[q != 0.0]
        ratio = np.abs(model.rhs(q)) / np.abs(q) ** p0
        i = int(np.argmax(ratio))
        return float(ratio[i]), float(q[i])

    d, witness = fit(pts)
    satisfied = True
    notes = []
    if p0 > 0 and abs(float(model.rhs(np.array([0.0]))[0])) > TOL_MONO:
        satisfied, witness = False, 0.0
        notes.append("g(0) != 0")
    for name, q in (("widened", probe_points(2 * radius, count, floor=0.5e-6)),
                    ("refined", probe_points(radius, count, floor=0.5e-6))):
        dq, wq = fit(q)
        if _grows(d, dq):
            satisfied, witness = False, wq
            notes.append(f"constant grows on {name} range")
    return ConditionReport("source-bound", satisfied, {"d": max(d, POSITIVE_FLOOR), "p0": p0},
                           radius, len(pts), witness, 0.0, "; ".join(notes))


def check_all(model, radius=PROBE_RADIUS, count=PROBE_COUNT):
    """Run the four hypothesis checks the solver and the bounds rely on."""
    return {
        "growth": check_growth(model, radius=radius, count=count),
        "lipschitz": check_lipschitz(model, radius=radius, count=count),
        "monotone": check_monotone_F(model, radius=radius, count=count),
        "domination": check_energy_domination(model, radius=radius, count=count),
    }
