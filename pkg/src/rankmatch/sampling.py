"""Observations Y_i = f(i/n - theta) + Z_i on the regular grid, and ranking."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .noise import NoiseModel
from .templates import Template


class SignalError(ValueError):
    """Malformed or unreadable signal."""


@dataclass
class Signal:
    values: np.ndarray
    truth: dict | None = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise SignalError("a signal needs at least two values")
        if not np.all(np.isfinite(self.values)):
            raise SignalError("signal values must be finite")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def grid(self) -> np.ndarray:
        return np.arange(1, self.n + 1) / self.n


def generate_signal(template: Template, theta_star: float, n: int,
                    noise: NoiseModel | None = None, seed: int = 0) -> Signal:
    """Sample the shift model; ``noise=None`` gives the clean template."""
    if n < 2:
        raise ValueError("n must be >= 2")
    theta_star = float(np.mod(theta_star, 1.0))
    x = np.arange(1, n + 1) / n
    values = np.asarray(template.eval(x - theta_star), dtype=float)
    if noise is not None:
        values = values + noise.sample(n, seed)
    truth = {
        "theta_star": theta_star,
        "template": template.name,
        "noise": None if noise is None else noise.to_dict(),
        "seed": None if noise is None else int(seed),
    }
    return Signal(values, truth)


def rank_transform(values) -> np.ndarray:
    """Increasing-order ranks 1..n; tied values share their average rank."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 1:
        raise ValueError("cannot rank an empty vector")
    order = np.argsort(v, kind="stable")
    sv = v[order]
    new_group = np.empty(v.size, dtype=bool)
    new_group[0] = True
    np.not_equal(sv[1:], sv[:-1], out=new_group[1:])
    starts = np.flatnonzero(new_group)
    ends = np.append(starts[1:], v.size) - 1
    mid = 0.5 * (starts + ends) + 1.0
    ranks = np.empty(v.size, dtype=float)
    ranks[order] = np.repeat(mid, ends - starts + 1)
    return ranks


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_signal(signal: Signal, path) -> None:
    """One value per line (round-trip precision); truth goes to a JSON sidecar."""
    path = Path(path)
    path.write_text("".join(f"{v!r}\n" for v in signal.values.tolist()))
    if signal.truth is not None:
        sidecar_path(path).write_text(json.dumps(signal.truth, indent=2, sort_keys=True) + "\n")


def read_signal(path) -> Signal:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise SignalError(f"cannot read {path}: {exc}") from None
    vals = []
    for lineno, line in enumerate(lines, 1):
        s = line.strip()
        if not s:
            continue
        try:
            vals.append(float(s))
        except ValueError:
            raise SignalError(f"{path}:{lineno}: not a number: {s!r}") from None
    if not vals:
        raise SignalError(f"{path}: no values")
    truth = None
    side = sidecar_path(path)
    if side.exists() and side != path:
        try:
            truth = json.loads(side.read_text())
        except json.JSONDecodeError as exc:
            raise SignalError(f"{side}: bad sidecar JSON: {exc}") from None
    return Signal(np.array(vals), truth)
