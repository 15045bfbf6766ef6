"""Scenario files: TOML sections -> validated :class:`Scenario`.

Sections and keys (all optional except where noted)::

    [model]    preset | family, k0, k1, k2, p, p1, source, d, p0
    [domain]   l_dom, m, n_quad
    [data]     u0, u1 (sine-sum expressions) or u0_modes, u1_modes (lists)
    [time]     t_final, dt, integrator, sample_every, blowup_threshold
    [bounds]   probe_radius, probe_count, l_factor, drift_tol, pairing_tol
    [output]   directory, formats, figures
    [converge] m_list, dt_list

Initial-data expressions are finite sums of ``c*sin(k*x)`` terms, where
``c`` and ``k`` are products/quotients of numbers, ``pi``, ``l`` (the
domain length) and ``sqrt(number)``.
"""

import copy
import json
import math
import re
import sys
from importlib import resources
from pathlib import Path

from .galerkin import INTEGRATORS, BLOWUP_THRESHOLD, Scenario, ScenarioError, default_dt
from .nonlinearity import SOURCE_NAMES, ModelError, power_family

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ScenarioFileError(ValueError):
    pass


MODEL_PRESETS = {
    "linear": {"k0": 0.0, "k1": 0.0, "k2": 1.0, "p": 4.0, "p1": 0.0, "source": "none"},
    "cubic": {"k0": 3.0, "k1": 0.0, "k2": 0.0, "p": 4.0, "p1": 0.0, "source": "none"},
    "cubic-source": {"k0": 3.0, "k1": 0.0, "k2": 0.0, "p": 4.0, "p1": 0.0,
                     "source": "one-minus-cos", "d": 1.0},
    "non-monotone": {"k0": 1.0, "k1": 10.0, "k2": 1.0, "p": 4.0, "p1": 1.0,
                     "source": "none"},
}

SCHEMA = {
    "model": {"preset": str, "family": str, "k0": float, "k1": float, "k2": float,
              "p": float, "p1": float, "source": str, "d": float, "p0": float},
    "domain": {"l_dom": float, "m": int, "n_quad": int},
    "data": {"u0": str, "u1": str, "u0_modes": list, "u1_modes": list},
    "time": {"t_final": float, "dt": float, "integrator": str, "sample_every": int,
             "blowup_threshold": float},
    "bounds": {"probe_radius": float, "probe_count": int, "l_factor": float,
               "drift_tol": float, "pairing_tol": float},
    "output": {"directory": str, "formats": list, "figures": bool},
    "converge": {"m_list": list, "dt_list": list},
}

DEFAULTS = {
    "model": {"family": "power-family", "k0": 1.0, "k1": 0.0, "k2": 0.0, "p": 4.0,
              "p1": 0.0, "source": "none", "d": 1.0, "p0": 1.0},
    "domain": {"l_dom": 1.0, "m": 32},
    "data": {},
    "time": {"t_final": 1.0, "integrator": "verlet", "sample_every": 10,
             "blowup_threshold": BLOWUP_THRESHOLD},
    "bounds": {"probe_radius": 10.0, "probe_count": 4096, "l_factor": 2.0,
               "drift_tol": 1e-6, "pairing_tol": 1e-5},
    "output": {"directory": "out", "formats": ["csv", "json"], "figures": True},
    "converge": {"m_list": [4, 8, 16, 32], "dt_list": []},
}


# ---------------------------------------------------------------------------
# sine-sum expressions

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|(\w+)|(.))")


def _tokenize(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            break
        num, name, sym = mt.groups()
        if num is not None:
            out.append(("num", float(num)))
        elif name is not None:
            out.append(("name", name))
        elif sym is not None and not sym.isspace():
            out.append(("sym", sym))
        pos = mt.end()
    return out


class _Parser:
    # product values are (coefficient, power of x, wavenumber or None)

    def __init__(self, text, l_dom):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.l_dom = l_dom

    def error(self, msg):
        raise ScenarioFileError(f"bad sine expression {self.text!r}: {msg}")

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value and tok[1] != value):
            self.error(f"expected {value or kind} at token {self.i}")
        self.i += 1
        return tok

    def series(self):
        terms = []
        sign = 1.0
        if self.peek() == ("sym", "-"):
            self.take(); sign = -1.0
        elif self.peek() == ("sym", "+"):
            self.take()
        while True:
            c, xp, k = self.product()
            if xp != 0:
                self.error("x may only appear inside sin(...)")
            if k is None:
                if c != 0:
                    self.error("constant terms do not vanish at the boundary")
            else:
                terms.append((sign * c, k))
            tok = self.peek()
            if tok == ("sym", "+"):
                self.take(); sign = 1.0
            elif tok == ("sym", "-"):
                self.take(); sign = -1.0
            elif tok[0] is None:
                return terms
            else:
                self.error(f"unexpected {tok[1]!r}")

    def product(self):
        c, xp, k = self.factor()
        while self.peek() in (("sym", "*"), ("sym", "/")):
            op = self.take()[1]
            c2, xp2, k2 = self.factor()
            if op == "/":
                if xp2 or k2 is not None:
                    self.error("division only by constants")
                c, xp = c / c2, xp
            else:
                if k is not None and k2 is not None:
                    self.error("products of sines are not sine sums")
                c, xp, k = c * c2, xp + xp2, (k if k is not None else k2)
        return c, xp, k

    def factor(self):
        kind, val = self.take()
        if kind == "sym" and val in "+-":
            c, xp, k = self.factor()
            return (-c if val == "-" else c), xp, k
        if kind == "num":
            return val, 0, None
        if kind == "sym" and val == "(":
            out = self.product()
            self.take("sym", ")")
            return out
        if kind == "name":
            if val == "pi":
                return math.pi, 0, None
            if val in ("l", "l_dom", "L"):
                return self.l_dom, 0, None
            if val == "x":
                return 1.0, 1, None
            if val == "sqrt":
                self.take("sym", "(")
                c, xp, k = self.product()
                self.take("sym", ")")
                if xp or k is not None:
                    self.error("sqrt of a constant only")
                return math.sqrt(c), 0, None
            if val == "sin":
                self.take("sym", "(")
                c, xp, k = self.product()
                self.take("sym", ")")
                if xp != 1 or k is not None:
                    self.error("sin argument must be (constant)*x")
                return 1.0, 0, c
        self.error(f"unexpected token {val!r}")


def parse_sine_series(text, l_dom=1.0):
    """Parse ``text`` into a list of (amplitude, wavenumber) pairs."""
    return _Parser(text, l_dom).series()


class SineSeries:
    def __init__(self, terms, text=""):
        self.terms = list(terms)
        self.text = text

    def __call__(self, x):
        import numpy as np
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, k in self.terms:
            out = out + c * np.sin(k * x)
        return out


# ---------------------------------------------------------------------------
# config handling

def load_config(path):
    """Raw config dict from a TOML scenario file, or from JSON (a run
    manifest or a plain config dict)."""
    path = Path(path)
    if not path.exists():
        preset = preset_path(str(path))
        if preset is None:
            raise ScenarioFileError(f"{path}: no such file or preset")
        path = preset
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioFileError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        return copy.deepcopy(data.get("scenario", data))
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioFileError(f"{path}: {exc}") from exc


def preset_names():
    return sorted(p.stem for p in resources.files("netflow_waves").joinpath("presets").iterdir()
                  if p.name.endswith(".toml"))


def preset_path(name):
    res = resources.files("netflow_waves").joinpath("presets").joinpath(f"{name}.toml")
    return Path(str(res)) if res.is_file() else None


def _coerce(section, key, value, kind):
    where = f"{section}.{key}"
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioFileError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ScenarioFileError(f"{where}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ScenarioFileError(f"{where}: expected {kind.__name__}, got {value!r}")
    return value


def resolve_config(raw, overrides=None):
    """Validate ``raw``, apply ``overrides`` (section -> key -> value) and
    fill every default.  The result is self-contained: feeding it back
    reproduces the same scenario."""
    cfg = {}
    for section, keys in raw.items():
        if section not in SCHEMA:
            raise ScenarioFileError(f"unknown section [{section}]")
        if not isinstance(keys, dict):
            raise ScenarioFileError(f"[{section}] must be a table")
        for key, value in keys.items():
            if key not in SCHEMA[section]:
                raise ScenarioFileError(f"unknown key {section}.{key}")
            cfg.setdefault(section, {})[key] = _coerce(section, key, value,
                                                       SCHEMA[section][key])
    for section, keys in (overrides or {}).items():
        for key, value in keys.items():
            if value is not None:
                cfg.setdefault(section, {})[key] = _coerce(section, key, value,
                                                           SCHEMA[section][key])

    model = dict(DEFAULTS["model"])
    preset = cfg.get("model", {}).get("preset")
    if preset is not None:
        if preset not in MODEL_PRESETS:
            raise ScenarioFileError(
                f"model.preset: unknown preset {preset!r} (known: {sorted(MODEL_PRESETS)})")
        model.update(MODEL_PRESETS[preset])
    model.update(cfg.get("model", {}))
    if model["family"] != "power-family":
        raise ScenarioFileError("model.family: only 'power-family' is available")
    if model["source"] not in SOURCE_NAMES:
        raise ScenarioFileError(f"model.source: must be one of {SOURCE_NAMES}")

    out = {"model": model}
    for section in ("domain", "data", "time", "bounds", "output", "converge"):
        merged = copy.deepcopy(DEFAULTS[section])
        merged.update(cfg.get(section, {}))
        out[section] = merged

    dom = out["domain"]
    if not dom["l_dom"] > 0:
        raise ScenarioFileError("domain.l_dom: must be > 0")
    if dom["m"] < 1:
        raise ScenarioFileError("domain.m: must be >= 1")
    dom.setdefault("n_quad", 4 * dom["m"])
    if dom["n_quad"] < 2 * dom["m"]:
        raise ScenarioFileError("domain.n_quad: must be >= 2 * domain.m")

    tm = out["time"]
    tm.setdefault("dt", default_dt(dom["l_dom"], dom["m"]))
    if not tm["dt"] > 0:
        raise ScenarioFileError("time.dt: must be > 0")
    if not tm["t_final"] > 0:
        raise ScenarioFileError("time.t_final: must be > 0")
    if tm["integrator"] not in INTEGRATORS:
        raise ScenarioFileError(f"time.integrator: must be one of {INTEGRATORS}")
    if tm["sample_every"] < 1:
        raise ScenarioFileError("time.sample_every: must be >= 1")
    if not tm["blowup_threshold"] > 0:
        raise ScenarioFileError("time.blowup_threshold: must be > 0")

    data = out["data"]
    for name in ("u0", "u1"):
        if name in data and f"{name}_modes" in data:
            raise ScenarioFileError(f"data: give either {name} or {name}_modes, not both")
        if name in data:
            parse_sine_series(data[name], dom["l_dom"])
        if f"{name}_modes" in data:
            modes = data[f"{name}_modes"]
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in modes):
                raise ScenarioFileError(f"data.{name}_modes: must be a list of numbers")
            data[f"{name}_modes"] = [float(v) for v in modes]

    b = out["bounds"]
    if not b["l_factor"] > 1:
        raise ScenarioFileError("bounds.l_factor: must be > 1")
    if b["probe_count"] < 1000:
        raise ScenarioFileError("bounds.probe_count: must be >= 1000")
    if not b["probe_radius"] > 0:
        raise ScenarioFileError("bounds.probe_radius: must be > 0")
    return out


def build_model(config, force=False):
    mc = config["model"]
    try:
        return power_family(mc["k0"], mc["k1"], mc["k2"], mc["p"], mc["p1"],
                            source=mc["source"], d=mc["d"], p0=mc["p0"], force=force,
                            radius=config["bounds"]["probe_radius"],
                            count=config["bounds"]["probe_count"],
                            name=mc.get("preset", "power-family"))
    except ModelError as exc:
        raise ScenarioFileError(f"model: {exc}") from exc


def _initial(data, name, l_dom):
    if name in data:
        return SineSeries(parse_sine_series(data[name], l_dom), data[name])
    if f"{name}_modes" in data:
        return list(data[f"{name}_modes"])
    return None


def build_scenario(config, force=False):
    model = build_model(config, force=force)
    dom, tm, data = config["domain"], config["time"], config["data"]
    try:
        return Scenario(model=model, l_dom=dom["l_dom"], m=dom["m"], n_quad=dom["n_quad"],
                        u0=_initial(data, "u0", dom["l_dom"]),
                        u1=_initial(data, "u1", dom["l_dom"]),
                        t_final=tm["t_final"], dt=tm["dt"], integrator=tm["integrator"],
                        sample_every=tm["sample_every"],
                        blowup_threshold=tm["blowup_threshold"],
                        extras={"config": config})
    except ScenarioError as exc:
        raise ScenarioFileError(f"data: {exc}") from exc


def parse_scenario(path, overrides=None, force=False):
    """Load, validate and build; the resolved config is in ``extras["config"]``."""
    return build_scenario(resolve_config(load_config(path), overrides), force=force)
