"""Experiment configuration files.

A config is a flat text file with one ``key = value`` per line; ``#`` starts
a comment.  Coefficients are polynomial expressions in ``x``, ``y`` and the
sweep parameter ``alpha`` (``^`` and ``**`` both mean power), or ``inf``.
"""
from __future__ import annotations

import ast
import operator
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    pass


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = ("x", "y", "alpha")


class Expression:
    """Restricted arithmetic expression, evaluated with numpy broadcasting."""

    def __init__(self, text: str):
        self.text = text.strip()
        try:
            tree = ast.parse(self.text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {text!r}") from exc
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            self._check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        elif isinstance(node, ast.Name) and node.id in _NAMES + ("inf",):
            pass
        else:
            raise ConfigError(f"unsupported syntax in expression {self.text!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, env))
        if isinstance(node, ast.Constant):
            return float(node.value)
        if node.id == "inf":
            return np.inf
        return env[node.id]

    def __call__(self, x, y, alpha=0.0):
        with np.errstate(invalid="ignore"):
            return self._eval(self._tree, {"x": x, "y": y, "alpha": alpha})

    def __repr__(self):
        return f"Expression({self.text!r})"


def _floats(text):
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {text!r}") from exc
    if not vals:
        raise ConfigError("empty list")
    return vals


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


@dataclass
class ExperimentConfig:
    domain: tuple = (-0.5, 0.5, -0.5, 0.5)
    n: int = 25
    mesh: str | None = None
    mesh_level: int = 1
    levels: list = field(default_factory=lambda: [1])
    f: Expression = field(default_factory=lambda: Expression("100"))
    b: Expression = field(default_factory=lambda: Expression("alpha*(x^2 + y^2)"))
    u_a: Expression = field(default_factory=lambda: Expression("-3*x - 3*y + 10"))
    u_b: Expression = field(default_factory=lambda: Expression("inf"))
    y_d: Expression = field(default_factory=lambda: Expression("0"))
    alpha: list = field(default_factory=lambda: [1.0])
    lambda1: float = 0.0
    lambda2: float = 4e-5
    epsilon: list = field(default_factory=lambda: [1e-2])
    warmstart: bool = False
    tol: float = 1e-6
    state_tol: float = 1e-10
    max_iter: int = 50

    def __post_init__(self):
        if not self.alpha or not self.epsilon or not self.levels:
            raise ConfigError("sweep lists must be nonempty")
        if any(e <= 0 for e in self.epsilon):
            raise ConfigError("epsilon entries must be positive")
        if any(lv < 1 for lv in self.levels) or self.mesh_level < 1:
            raise ConfigError("mesh levels start at 1")

    _EXPR = ("f", "b", "u_a", "u_b", "y_d")

    @classmethod
    def from_text(cls, text: str, source="<string>") -> "ExperimentConfig":
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            try:
                kw[key] = cls._convert(key, value)
            except ConfigError as exc:
                raise ConfigError(f"{source}:{lineno}: {exc}") from None
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(f"{source}: {exc}") from None

    @classmethod
    def _convert(cls, key, value):
        if key in cls._EXPR:
            return Expression(value)
        if key == "domain":
            d = _floats(value)
            if len(d) != 4:
                raise ConfigError("domain needs xmin, xmax, ymin, ymax")
            return tuple(d)
        if key in ("alpha", "epsilon"):
            return _floats(value)
        if key == "levels":
            return [int(v) for v in _floats(value)]
        if key in ("n", "mesh_level", "max_iter"):
            return int(_floats(value)[0])
        if key in ("lambda1", "lambda2", "tol", "state_tol"):
            return _floats(value)[0]
        if key == "warmstart":
            return _bool(value)
        if key == "mesh":
            return value
        raise ConfigError(f"unknown key {key!r}")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        cfg = cls.from_text(path.read_text(), source=str(path))
        if cfg.mesh is not None and not Path(cfg.mesh).is_absolute():
            cfg.mesh = str(path.parent / cfg.mesh)
        return cfg


def preset_names():
    return sorted(p.name[:-4] for p in resources.files(__package__).joinpath("presets").iterdir()
                  if p.name.endswith(".cfg"))


def load_preset(name) -> ExperimentConfig:
    res = resources.files(__package__).joinpath("presets", f"{name}.cfg")
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return ExperimentConfig.from_text(res.read_text(), source=f"preset:{name}")
