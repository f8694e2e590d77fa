"""Periodic templates: the three built-in shapes and user piecewise-linear ones."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .quadrature import interval_rule

BUILTIN = ("A", "B", "C")


class TemplateError(ValueError):
    """Invalid template definition."""


def _frac(x):
    return np.mod(np.asarray(x, dtype=float), 1.0)


def _eval_a(x):
    return np.select(
        [(x >= 0.25) & (x < 0.5), (x >= 0.5) & (x < 0.75)],
        [4.0 * x - 1.0, 3.0 - 4.0 * x],
        0.0,
    )


def _deriv_a(x):
    return np.select([(x >= 0.25) & (x < 0.5), (x >= 0.5) & (x < 0.75)], [4.0, -4.0], 0.0)


_B_PIECES = ((0.2, 0.3), (0.3, 0.4), (0.6, 0.7), (0.7, 0.8))


def _eval_b(x):
    conds = [(x >= a) & (x < b) for a, b in _B_PIECES]
    return np.select(conds, [10.0 * x - 2.0, 4.0 - 10.0 * x, 10.0 * x - 6.0, 8.0 - 10.0 * x], 0.0)


def _deriv_b(x):
    conds = [(x >= a) & (x < b) for a, b in _B_PIECES]
    return np.select(conds, [10.0, -10.0, 10.0, -10.0], 0.0)


def _eval_c(x):
    u = 4.0 * x - 2.0
    return np.maximum(0.0, 1.0 - u * u) ** 3


def _deriv_c(x):
    u = 4.0 * x - 2.0
    inside = np.abs(u) < 1.0
    return np.where(inside, -24.0 * u * (1.0 - u * u) ** 2, 0.0)


# max |f'| for C: -24 u (1-u^2)^2 peaks at u = 1/sqrt(5)
_LIP_C = 384.0 / (25.0 * math.sqrt(5.0))

_BUILTINS = {
    "A": (_eval_a, _deriv_a, 4.0, (0.25, 0.5, 0.75), ()),
    "B": (_eval_b, _deriv_b, 10.0, (0.2, 0.3, 0.4, 0.6, 0.7, 0.8), ()),
    "C": (_eval_c, _deriv_c, _LIP_C, (), (0.25, 0.75)),
}


@dataclass(frozen=True)
class Template:
    """A 1-periodic Lipschitz template.

    ``kind`` is ``"A"``, ``"B"``, ``"C"`` or ``"pwl"``; piecewise-linear
    templates carry their knots as ``((position, value), ...)`` with strictly
    increasing positions in [0, 1). The last knot connects to the first one
    shifted by one period.
    """

    kind: str
    knots: tuple = ()
    _pos: np.ndarray = field(default=None, repr=False, compare=False, hash=False)
    _val: np.ndarray = field(default=None, repr=False, compare=False, hash=False)
    _slope: np.ndarray = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.kind in _BUILTINS:
            if self.knots:
                raise TemplateError(f"built-in template {self.kind} takes no knots")
            return
        if self.kind != "pwl":
            raise TemplateError(f"unknown template kind {self.kind!r}")
        knots = tuple((float(p), float(v)) for p, v in self.knots)
        if len(knots) < 1:
            raise TemplateError("piecewise-linear template needs at least one knot")
        pos = np.array([p for p, _ in knots])
        val = np.array([v for _, v in knots])
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(val)):
            raise TemplateError("knots must be finite")
        if pos[0] < 0.0 or pos[-1] >= 1.0:
            raise TemplateError("knot positions must lie in [0, 1)")
        if np.any(np.diff(pos) <= 0.0):
            raise TemplateError("knot positions must be strictly increasing")
        nxt_pos = np.append(pos[1:], pos[0] + 1.0)
        nxt_val = np.append(val[1:], val[0])
        slope = (nxt_val - val) / (nxt_pos - pos)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "_pos", pos)
        object.__setattr__(self, "_val", val)
        object.__setattr__(self, "_slope", slope)

    @property
    def name(self) -> str:
        if self.kind == "pwl":
            return "pwl:" + json.dumps([list(k) for k in self.knots])
        return self.kind

    @property
    def lipschitz_bound(self) -> float:
        if self.kind == "pwl":
            return float(np.max(np.abs(self._slope)))
        return _BUILTINS[self.kind][2]

    @property
    def kink_points(self) -> tuple:
        """Positions in [0, 1) where the derivative jumps."""
        if self.kind == "pwl":
            if len(self.knots) == 1:
                return ()
            prev = np.roll(self._slope, 1)
            return tuple(float(p) for p, a, b in zip(self._pos, prev, self._slope) if a != b)
        return _BUILTINS[self.kind][3]

    @property
    def breakpoints(self) -> tuple:
        """Kinks plus points where the template stops being analytic (quadrature panels)."""
        if self.kind == "pwl":
            return tuple(float(p) for p in self._pos)
        return tuple(sorted(_BUILTINS[self.kind][3] + _BUILTINS[self.kind][4]))

    def eval(self, x):
        """Template value at ``x mod 1``; scalars in, scalars out."""
        xf = _frac(x)
        if self.kind == "pwl":
            out = np.interp(xf, self._pos, self._val, period=1.0)
        else:
            out = _BUILTINS[self.kind][0](xf)
        return float(out) if np.ndim(out) == 0 else out

    __call__ = eval

    def eval_deriv(self, x):
        """Derivative at ``x mod 1``; right-hand derivative at kinks."""
        xf = _frac(x)
        if self.kind == "pwl":
            idx = np.searchsorted(self._pos, xf, side="right") - 1
            out = self._slope[idx]  # idx == -1 wraps to the last segment
        else:
            out = _BUILTINS[self.kind][1](xf)
        return float(out) if np.ndim(out) == 0 else np.asarray(out, dtype=float)

    def deriv_energy(self) -> float:
        """Integral of f'(x)^2 over one period."""
        if self.kind == "A":
            return 8.0
        if self.kind == "B":
            return 40.0
        if self.kind == "pwl":
            nxt = np.append(self._pos[1:], self._pos[0] + 1.0)
            return float(np.sum(self._slope ** 2 * (nxt - self._pos)))
        return _deriv_energy_quad(self)

    def sample_grid(self, n: int) -> np.ndarray:
        """Template at the design points i/n, i = 1..n."""
        return np.asarray(self.eval(np.arange(1, n + 1) / n), dtype=float)

    def to_json(self) -> str:
        if self.kind != "pwl":
            return json.dumps({"builtin": self.kind})
        return json.dumps({"knots": [list(k) for k in self.knots]})


def _deriv_energy_quad(t: Template, rtol: float = 1e-10) -> float:
    m = 64
    x, w = interval_rule(t.breakpoints, m)
    prev = float(w @ t.eval_deriv(x) ** 2)
    while True:
        m *= 2
        x, w = interval_rule(t.breakpoints, m)
        cur = float(w @ t.eval_deriv(x) ** 2)
        if abs(cur - prev) <= rtol * abs(cur) or m > 1 << 16:
            return cur
        prev = cur


TEMPLATE_A = Template("A")
TEMPLATE_B = Template("B")
TEMPLATE_C = Template("C")


def piecewise_linear(knots) -> Template:
    return Template("pwl", tuple(tuple(k) for k in knots))


def template_from_dict(d: dict) -> Template:
    if "builtin" in d:
        return get_template(d["builtin"])
    if "knots" not in d:
        raise TemplateError("template JSON needs a 'knots' list")
    try:
        knots = [(float(p), float(v)) for p, v in d["knots"]]
    except (TypeError, ValueError) as exc:
        raise TemplateError(f"malformed knots: {exc}") from None
    return piecewise_linear(knots)


def load_template(path) -> Template:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise TemplateError(f"cannot read template {path}: {exc}") from None
    return template_from_dict(d)


def get_template(spec) -> Template:
    """Resolve ``"A"|"B"|"C"``, a JSON file path, a dict, or a Template."""
    if isinstance(spec, Template):
        return spec
    if isinstance(spec, dict):
        return template_from_dict(spec)
    s = str(spec)
    if s.upper() in _BUILTINS:
        return Template(s.upper())
    return load_template(s)
