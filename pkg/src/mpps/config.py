"""JSON system definitions.

A configuration document describes one system::

    {
      "name": "example1",
      "omega": "2*pi",
      "matrix": [["-1 + 0.5*sin(2*t)", "0"], ["0", "-2 + 0.25*cos(t)"]],
      "phi": [[{"coefficient": 2.5, "trig": "cos", "frequency": 1}], ...],
      "psi": [[{"coefficient": 5.5, "theta_power": 2}], ...],
      "logistic": {"mu": 3.85, "q": "6*pi", "k": 3, "seed": 0.4, "length": 20000},
      "initial_state": [2.5, 1.5],
      ...
    }

Expressions are strings over ``t``, numeric constants, ``pi``, ``e`` and
the functions in ``FUNCTIONS``; nonlinearity entries may also use the state
coordinates ``x1 .. xn`` and perturbation matrix entries may use ``theta``.
Forcing components are either an expression string or a list of terms
``{coefficient, theta_power}`` / ``{coefficient, trig, frequency[, power]}``.
"""

from __future__ import annotations

import ast
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .floquet import PeriodicMatrixFn
from .recurrence import (build_step_signal, build_theta, iterate_logistic)
from .solutions import MppsForcing, QuasilinearSystem, ThetaPowers

FUNCTIONS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh,
    "arctan": np.arctan, "atan": np.arctan, "arctg": np.arctan,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
    ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)

_number = {"oneOf": [{"type": "number"}, {"type": "string"}]}
_term = {
    "type": "object",
    "properties": {
        "coefficient": _number,
        "theta_power": {"type": "integer", "minimum": 0},
        "trig": {"enum": ["sin", "cos"]},
        "frequency": _number,
        "power": {"type": "integer", "minimum": 1},
    },
    "required": ["coefficient"],
    "oneOf": [{"required": ["theta_power"]}, {"required": ["trig", "frequency"]}],
    "additionalProperties": False,
}
_component = {"oneOf": [{"type": "string"}, {"type": "array", "items": _term}]}
_matrix = {"type": "array", "minItems": 1,
           "items": {"type": "array", "minItems": 1, "items": {"type": "string"}}}

SCHEMA = {
    "type": "object",
    "required": ["omega", "matrix"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "omega": _number,
        "matrix": _matrix,
        "phi": {"type": "array", "items": _component},
        "psi": {"type": "array", "items": _component},
        "bounds": {
            "type": "object",
            "properties": {"m_phi": {"type": "number", "minimum": 0},
                           "m_psi": {"type": "number", "minimum": 0}},
            "additionalProperties": False,
        },
        "logistic": {
            "type": "object",
            "required": ["mu", "q", "k", "seed"],
            "properties": {
                "mu": {"type": "number", "minimum": 0, "maximum": 4},
                "q": _number,
                "k": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "number", "minimum": 0, "maximum": 1},
                "length": {"type": "integer", "minimum": 100},
                "lead_intervals": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "nonlinearity": {
            "type": "object",
            "required": ["terms", "lipschitz", "m_g", "H"],
            "properties": {
                "terms": {"type": "array", "items": {"type": "string"}},
                "lipschitz": {"type": "number", "minimum": 0},
                "m_g": {"type": "number", "minimum": 0},
                "H": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "perturbation": {
            "type": "object",
            "required": ["matrix", "d"],
            "properties": {"matrix": _matrix, "d": {"type": "number", "minimum": 0}},
            "additionalProperties": False,
        },
        "dichotomy": {
            "type": "object",
            "required": ["K", "alpha"],
            "properties": {"K": _number, "alpha": _number},
            "additionalProperties": False,
        },
        "initial_state": {"type": "array", "items": {"type": "number"}},
        "poisson": {
            "type": "object",
            "properties": {
                "window": {"type": "integer", "minimum": 2},
                "offset": {"type": "integer", "minimum": 0},
                "deltas": {"type": "array", "minItems": 1,
                           "items": {"type": "number", "exclusiveMinimum": 0}},
                "interval": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                "eps": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "grid": {"type": "integer", "minimum": 4},
                "burn_in": {"type": "number", "exclusiveMinimum": 0},
                "dichotomy_grid": {"type": "integer", "minimum": 3},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


# -- expressions --------------------------------------------------------------

def _checked(src, variables, where):
    """Validate ``src`` against the whitelist and return its normalized text."""
    if isinstance(src, (int, float)) and not isinstance(src, bool):
        return repr(float(src))
    try:
        tree = ast.parse(str(src).strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {src!r}: {exc.msg}", field=where) from None
    allowed = set(variables) | set(FUNCTIONS) | set(CONSTANTS)
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ConfigError(f"disallowed syntax {type(node).__name__} in {src!r}", field=where)
        if isinstance(node, ast.Name) and node.id not in allowed:
            raise ConfigError(f"unknown name {node.id!r} in {src!r}", field=where)
        if isinstance(node, ast.Call) and not (
            isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS
        ):
            raise ConfigError(f"only {sorted(FUNCTIONS)} may be called in {src!r}", field=where)
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ConfigError(f"non-numeric constant in {src!r}", field=where)
    return ast.unparse(tree)


def compile_many(srcs, variables=("t",), where="expr"):
    """Compile several whitelisted expressions into one positional function
    ``f(*variables)`` returning a tuple of their values."""
    body = ", ".join(f"({_checked(s, variables, f'{where}/{i}')})" for i, s in enumerate(srcs))
    env = {"__builtins__": {}, **FUNCTIONS, **CONSTANTS}
    return eval(f"lambda {', '.join(variables)}: ({body},)", env)


def compile_expr(src, variables=("t",), where=None):
    """Compile one whitelisted expression to a positional function."""
    f = compile_many([src], variables, where or "expr")
    return lambda *args: f(*args)[0]


def eval_number(value, where=None):
    try:
        return float(compile_expr(value, (), where)())
    except (ArithmeticError, ValueError) as exc:
        raise ConfigError(f"cannot evaluate {value!r}: {exc}", field=where) from None


def _matrix_fn(rows, extra_vars=(), where="matrix"):
    """Return ``(f(t, *extra) -> n x n array, diagonal flag)``."""
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ConfigError("matrix must be square", field=where)
    flat = compile_many([c for r in rows for c in r], ("t",) + tuple(extra_vars), where)

    def f(*args):
        return np.array(flat(*args), dtype=float).reshape(n, n)

    diagonal = all(str(rows[i][j]).strip() in ("0", "0.0")
                   for i in range(n) for j in range(n) if i != j)
    return f, diagonal


def _component_fn(comp, where, allow_theta):
    """Return ``(f(t, theta), theta_terms or None)`` for one forcing component."""
    if isinstance(comp, str):
        variables = ("t", "theta") if allow_theta else ("t",)
        f = compile_expr(comp, variables, where)
        return (lambda t, th: f(t, th)) if allow_theta else (lambda t, th: f(t)), None
    pieces, theta_terms = [], []
    for j, term in enumerate(comp):
        c = eval_number(term["coefficient"], f"{where}[{j}].coefficient")
        if "theta_power" in term:
            if not allow_theta:
                raise ConfigError("theta terms are not periodic", field=f"{where}[{j}]")
            p = int(term["theta_power"])
            theta_terms.append((c, p))
            pieces.append(lambda t, th, c=c, p=p: c * th**p)
        else:
            w = eval_number(term["frequency"], f"{where}[{j}].frequency")
            fn = FUNCTIONS[term["trig"]]
            p = int(term.get("power", 1))
            pieces.append(lambda t, th, c=c, w=w, fn=fn, p=p: c * fn(w * t) ** p)
    pure = tuple(theta_terms) if len(theta_terms) == len(comp) else None
    return (lambda t, th: sum((f(t, th) for f in pieces), 0.0 * t)), pure


class _VectorFn:
    def __init__(self, comps, theta=None):
        self.comps = comps
        self.theta = theta

    def __call__(self, t):
        th = self.theta(t) if self.theta is not None else None
        if np.ndim(t) == 0:
            return np.array([float(c(t, th)) for c in self.comps])
        t = np.asarray(t, dtype=float)
        return np.stack([np.broadcast_to(c(t, th), t.shape) for c in self.comps], axis=-1)

    def breakpoints(self, t0, t1):
        return self.theta.breakpoints(t0, t1)

    def sup_bound(self):
        return None


@dataclass
class SystemConfig:
    """Parsed configuration plus the objects built from it."""

    raw: dict
    name: str
    omega: float
    system: QuasilinearSystem
    theta: object = None
    orbit: object = None
    initial_state: np.ndarray | None = None
    declared: tuple | None = None  # (K, alpha) stated for the system
    solver: dict = field(default_factory=dict)
    poisson: dict = field(default_factory=dict)
    logistic: dict = field(default_factory=dict)


def _validate(raw):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(err.message, field=path)


def _locate(text, path):
    """Line of the deepest named key of ``path`` (``a/0/b``) in ``text``, if found."""
    pos, line = 0, None
    for part in path.split("/"):
        if part.isdigit() or part == "<root>":
            continue
        hit = re.compile(r'"%s"\s*:' % re.escape(part)).search(text, pos)
        if hit is None:
            break
        pos = hit.start()
        line = text.count("\n", 0, pos) + 1
    return line


def parse_config(text, source="<config>", overrides=None):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    try:
        return build_config(raw, overrides)
    except ConfigError as exc:
        if exc.line is not None or not exc.field:
            raise
        raise ConfigError(f"{source}: {exc.message}", field=exc.field,
                          line=_locate(text, exc.field)) from None


def load_config(path, overrides=None):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path), overrides)


def bundled_config_path(n):
    return resources.files("mpps") / "configs" / f"example{int(n)}.json"


def load_example(n, overrides=None):
    return parse_config(bundled_config_path(n).read_text(), f"example{n}.json", overrides)


def build_config(raw, overrides=None):
    """Validate ``raw`` and build the system it describes.

    ``overrides`` may set ``seed`` (logistic seed) and ``tol`` (rtol).
    """
    _validate(raw)
    overrides = overrides or {}
    omega = eval_number(raw["omega"], "omega")
    if not omega > 0:
        raise ConfigError("omega must be positive", field="omega")
    A_func, diagonal = _matrix_fn(raw["matrix"])
    n = len(raw["matrix"])
    A = PeriodicMatrixFn(A_func, omega, n, diagonal, raw.get("name", ""))

    theta = orbit = None
    logistic = dict(raw.get("logistic", {}))
    if logistic:
        if overrides.get("seed") is not None:
            logistic["seed"] = float(overrides["seed"])
            if not 0 <= logistic["seed"] <= 1:
                raise ConfigError("seed must lie in [0, 1]", field="logistic/seed")
        q = eval_number(logistic["q"], "logistic/q")
        if not q > 0:
            raise ConfigError("q must be positive", field="logistic/q")
        logistic["q"] = q
        length = int(logistic.get("length", 20000))
        lead = int(logistic.get("lead_intervals", 0))
        orbit = iterate_logistic(logistic["mu"], logistic["seed"], length)
        step = build_step_signal(orbit, q, origin=-lead * q)
        theta = build_theta(step, logistic["k"])

    def vector(key, allow_theta):
        comps = raw.get(key)
        if comps is None:
            return None, None
        if len(comps) != n:
            raise ConfigError(f"{key} needs {n} components", field=key)
        if allow_theta and theta is None:
            raise ConfigError("psi requires a logistic block", field=key)
        fns, terms = zip(*(_component_fn(c, f"{key}/{i}", allow_theta)
                           for i, c in enumerate(comps)))
        if allow_theta and all(tt is not None for tt in terms):
            return ThetaPowers(theta, tuple(terms)), terms
        return _VectorFn(list(fns), theta if allow_theta else None), None

    phi, _ = vector("phi", False)
    psi, _ = vector("psi", True)
    bounds = raw.get("bounds", {})
    forcing = MppsForcing(dim=n, omega=omega, phi=phi, psi=psi,
                          m_phi=bounds.get("m_phi"), m_psi=bounds.get("m_psi"))

    g = None
    lip = m_g = 0.0
    H = math.inf
    nl = raw.get("nonlinearity")
    if nl:
        if len(nl["terms"]) != n:
            raise ConfigError(f"nonlinearity needs {n} terms", field="nonlinearity/terms")
        xs = tuple(f"x{i + 1}" for i in range(n))
        g_terms = compile_many(nl["terms"], ("t",) + xs, "nonlinearity/terms")

        def g(t, x, g_terms=g_terms):
            return np.array(g_terms(t, *x), dtype=float)

        lip, m_g, H = float(nl["lipschitz"]), float(nl["m_g"]), float(nl["H"])

    D = None
    d = 0.0
    pert = raw.get("perturbation")
    if pert:
        if theta is None:
            raise ConfigError("perturbation requires a logistic block", field="perturbation")
        if len(pert["matrix"]) != n:
            raise ConfigError(f"perturbation matrix must be {n}x{n}", field="perturbation/matrix")
        d_func, _ = _matrix_fn(pert["matrix"], ("theta",), "perturbation/matrix")

        def D(t, d_func=d_func):
            return d_func(t, theta(t))

        d = float(pert["d"])

    system = QuasilinearSystem(A=A, forcing=forcing, g=g, lipschitz=lip, m_g=m_g, H=H,
                               D=D, d=d, name=raw.get("name", ""))

    x0 = raw.get("initial_state")
    if x0 is not None and len(x0) != n:
        raise ConfigError(f"initial_state needs {n} entries", field="initial_state")
    declared = None
    if "dichotomy" in raw:
        declared = (eval_number(raw["dichotomy"]["K"], "dichotomy/K"),
                    eval_number(raw["dichotomy"]["alpha"], "dichotomy/alpha"))
    solver = dict(raw.get("solver", {}))
    if overrides.get("tol") is not None:
        solver["rtol"] = float(overrides["tol"])
    poisson = dict(raw.get("poisson", {}))
    if "interval" in poisson:
        poisson["interval"] = [eval_number(v, "poisson/interval") for v in poisson["interval"]]
    return SystemConfig(
        raw=raw, name=raw.get("name", "system"), omega=omega, system=system,
        theta=theta, orbit=orbit,
        initial_state=None if x0 is None else np.array(x0, dtype=float),
        declared=declared, solver=solver, poisson=poisson, logistic=logistic,
    )
