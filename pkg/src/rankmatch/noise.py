"""Symmetric noise laws and the law of the difference of two iid draws.

``phi2(t)`` is P(Z' - Z <= t) for iid Z, Z' and ``phi2_density`` its density.
Gaussian and Cauchy differences stay in their family (scale sqrt(2) and 2
respectively), so they use closed forms; t3 goes through line quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .quadrature import integrate_line

FAMILIES = ("gaussian", "t3", "cauchy")
_ALIASES = {"gaussian": "gaussian", "normal": "gaussian", "t3": "t3", "student_t3": "t3",
            "cauchy": "cauchy"}
FAMILY_CODE = {"gaussian": 0, "t3": 1, "cauchy": 2}

_SQRT3 = math.sqrt(3.0)
_T3_NORM = 2.0 / (math.pi * _SQRT3)
QUAD_TOL = 1e-10


class NoiseError(ValueError):
    """Invalid noise specification."""


def mix_seed(master_seed: int, index: int) -> int:
    """Independent 64-bit seed for substream `index` of `master_seed`."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class NoiseModel:
    family: str = "gaussian"
    scale: float = 1.0

    def __post_init__(self):
        fam = _ALIASES.get(str(self.family).lower())
        if fam is None:
            raise NoiseError(f"unknown noise family {self.family!r}; expected one of {FAMILIES}")
        scale = float(self.scale)
        if not (scale > 0.0 and math.isfinite(scale)):
            raise NoiseError(f"noise scale must be positive and finite, got {self.scale!r}")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "scale", scale)

    @property
    def variance(self) -> float:
        if self.family == "gaussian":
            return self.scale ** 2
        if self.family == "t3":
            return 3.0 * self.scale ** 2
        return math.inf

    @property
    def code(self) -> int:
        return FAMILY_CODE[self.family]

    def pdf(self, z):
        u = np.asarray(z, dtype=float) / self.scale
        if self.family == "gaussian":
            out = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
        elif self.family == "t3":
            out = _T3_NORM / (1.0 + u * u / 3.0) ** 2
        else:
            out = 1.0 / (math.pi * (1.0 + u * u))
        return _scalar(out / self.scale)

    def cdf(self, z):
        u = np.asarray(z, dtype=float) / self.scale
        if self.family == "gaussian":
            out = ndtr(u)
        elif self.family == "t3":
            v = u / _SQRT3
            out = 0.5 + (v / (1.0 + v * v) + np.arctan(v)) / math.pi
        else:
            out = 0.5 + np.arctan(u) / math.pi
        return _scalar(out)

    def sample(self, n: int, seed: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = np.random.default_rng(seed)
        if self.family == "gaussian":
            z = rng.standard_normal(n)
        elif self.family == "t3":
            z = rng.standard_t(3, n)
        else:
            z = rng.standard_cauchy(n)
        return self.scale * z

    def phi2(self, t):
        """CDF of the difference of two independent draws."""
        if self.family == "gaussian":
            return _scalar(ndtr(np.asarray(t, dtype=float) / (math.sqrt(2.0) * self.scale)))
        if self.family == "cauchy":
            return _scalar(0.5 + np.arctan(np.asarray(t, dtype=float) / (2.0 * self.scale)) / math.pi)
        return self.phi2_quad(t)

    def phi2_density(self, t):
        """Density of the difference of two independent draws."""
        tt = np.asarray(t, dtype=float)
        if self.family == "gaussian":
            s = math.sqrt(2.0) * self.scale
            return _scalar(np.exp(-0.5 * (tt / s) ** 2) / (s * math.sqrt(2.0 * math.pi)))
        if self.family == "cauchy":
            s = 2.0 * self.scale
            return _scalar(s / (math.pi * (s * s + tt * tt)))
        return self.phi2_density_quad(t)

    # Generic quadrature paths; used for t3 and cross-checked on the others.
    # With an even density the integrand over z < -|t|/2 mirrors the part
    # above it (z -> -z - |t|), so only z > -|t|/2 is integrated and the
    # second peak near z = -|t| never enters.
    def phi2_quad(self, t, tol: float = QUAD_TOL):
        tt = np.asarray(t, dtype=float)
        a = np.abs(tt)

        def f(z, w):
            return self.cdf(w + z) * self.pdf(z) + self.cdf(-z) * self.pdf(z + w)

        val, _ = integrate_line(f, a, self.scale, tol, lower=-0.5 * a)
        return _scalar(np.where(tt < 0, 1.0 - val, val))

    def phi2_density_quad(self, t, tol: float = QUAD_TOL):
        a = np.abs(np.asarray(t, dtype=float))
        val, _ = integrate_line(lambda z, w: 2.0 * self.pdf(w + z) * self.pdf(z), a,
                                self.scale, tol, lower=-0.5 * a)
        return _scalar(val)

    def to_dict(self) -> dict:
        return {"family": self.family, "scale": self.scale}


GAUSSIAN = NoiseModel("gaussian")
T3 = NoiseModel("t3")
CAUCHY = NoiseModel("cauchy")


def noise_from_dict(d) -> NoiseModel:
    if isinstance(d, NoiseModel):
        return d
    if isinstance(d, str):
        return NoiseModel(d)
    if not isinstance(d, dict) or "family" not in d:
        raise NoiseError("noise spec must be an object with a 'family' key")
    return NoiseModel(d["family"], d.get("scale", 1.0))
