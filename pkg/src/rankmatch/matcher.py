"""Shift estimation by maximizing correlation with the shifted template.

Both estimators maximize ``(1/n) sum_i w_i f(i/n - theta)``: the rank method
uses ``w_i = R_i / n``, the Pearson method ``w_i = Y_i``. The search is an
exact scan of all n grid shifts (one FFT cross-correlation) followed by a
golden-section refinement of the exact objective inside the two grid cells
around the best grid shift.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .sampling import Signal, rank_transform
from .templates import Template

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
TIE_RTOL = 1e-12


class MatchError(ValueError):
    pass


class ConstantTemplate(MatchError):
    """Flat template: every shift gives the same criterion."""


class DegenerateSignal(MatchError):
    """All observations tie, so the rank criterion does not depend on the shift."""


class Method(str, Enum):
    RANK = "rank"
    PEARSON = "pearson"


@dataclass(frozen=True)
class RefineOpts:
    refine: bool = True
    tol: float = 1e-7
    max_iter: int = 200


@dataclass
class EstimateResult:
    theta_hat: float
    objective_value: float
    grid_argmax: int
    refine_iterations: int
    method: Method

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        return d


@lru_cache(maxsize=None)
def _energy(template: Template) -> float:
    return template.deriv_energy()


@lru_cache(maxsize=128)
def _template_spectrum(template: Template, n: int) -> np.ndarray:
    spec = np.conj(np.fft.rfft(template.sample_grid(n)))
    spec.setflags(write=False)
    return spec


def correlate_grid(weights, template: Template) -> np.ndarray:
    """Entry k is ``(1/n) sum_i w_i f((i - k)/n)`` for k = 0..n-1."""
    w = np.asarray(weights, dtype=float)
    n = w.size
    if n < 2:
        raise ValueError("need at least two weights")
    return np.fft.irfft(np.fft.rfft(w) * _template_spectrum(template, n), n) / n


def objective(theta: float, weights, template: Template) -> float:
    """Exact O(n) criterion ``(1/n) sum_i w_i f(i/n - theta)``."""
    w = np.asarray(weights, dtype=float)
    n = w.size
    x = np.arange(1, n + 1) / n
    return float(w @ template.eval(x - theta)) / n


def objective_rank(theta: float, ranks, template: Template) -> float:
    r = np.asarray(ranks, dtype=float)
    return objective(theta, r / r.size, template)


def least_squares_criterion(theta: float, values, template: Template) -> float:
    y = np.asarray(values, dtype=float)
    x = np.arange(1, y.size + 1) / y.size
    return float(np.sum((y - template.eval(x - theta)) ** 2))


def golden_section_max(func, a: float, b: float, tol: float, max_iter: int = 200):
    """Maximize a unimodal `func` on [a, b]; returns (x, f(x), iterations)."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    it = 0
    while b - a > tol and it < max_iter:
        it += 1
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = func(d)
    if fc >= fd:
        return c, fc, it
    return d, fd, it


def _grid_argmax(grid: np.ndarray) -> int:
    """First index whose value is within rounding of the maximum (FFT noise ~1e-16)."""
    top = grid.max()
    return int(np.flatnonzero(grid >= top - TIE_RTOL * max(1.0, abs(top)))[0])


def _weights(signal: Signal, method: Method) -> np.ndarray:
    if method is Method.RANK:
        if np.ptp(signal.values) == 0.0:
            raise DegenerateSignal("all observations are equal; the rank criterion is flat")
        return rank_transform(signal.values) / signal.n
    return signal.values


def _refine(crit, k: int, n: int, opts: RefineOpts):
    """Grid value at k/n versus golden-section search on [(k-1)/n, (k+1)/n]."""
    theta0 = k / n
    best_theta, best_val = theta0, crit(theta0)
    it = 0
    if opts.refine:
        t, v, it = golden_section_max(crit, (k - 1) / n, (k + 1) / n, opts.tol, opts.max_iter)
        if v > best_val:
            best_theta, best_val = t, v
    return float(np.mod(best_theta, 1.0)), best_val, it


def estimate(signal: Signal, template: Template, method=Method.RANK,
             opts: RefineOpts = RefineOpts()) -> EstimateResult:
    method = Method(method)
    if _energy(template) <= 0.0:
        raise ConstantTemplate("template is constant; the shift is not identifiable")
    w = _weights(signal, method)
    n = signal.n
    grid = correlate_grid(w, template)
    k = _grid_argmax(grid)
    theta, val, it = _refine(lambda th: objective(th, w, template), k, n, opts)
    return EstimateResult(theta, val, k, it, method)


def estimate_least_squares(signal: Signal, template: Template,
                           opts: RefineOpts = RefineOpts()) -> EstimateResult:
    """Reference least-squares fit: direct O(n^2) grid scan plus the same refinement.

    Returned with ``method=PEARSON`` and ``objective_value`` equal to the
    negated residual sum of squares.
    """
    if _energy(template) <= 0.0:
        raise ConstantTemplate("template is constant; the shift is not identifiable")
    y = signal.values
    n = y.size
    u = template.sample_grid(n)
    # row k holds f((i - k)/n) = u[(i - 1 - k) mod n]
    cols = np.arange(n)
    sse = np.empty(n)
    step = max(1, (1 << 20) // n)
    for lo in range(0, n, step):
        rows = np.arange(lo, min(lo + step, n))
        idx = (cols[None, :] - rows[:, None]) % n
        sse[rows] = np.sum((y[None, :] - u[idx]) ** 2, axis=1)
    k = _grid_argmax(-sse)
    theta, val, it = _refine(lambda th: -least_squares_criterion(th, y, template), k, n, opts)
    return EstimateResult(theta, val, k, it, Method.PEARSON)


def wrap_error(theta_hat, theta_star):
    """Signed circular error in (-1/2, 1/2]."""
    d = np.mod(np.asarray(theta_hat, dtype=float) - theta_star, 1.0)
    out = np.where(d > 0.5, d - 1.0, d)
    return float(out) if np.ndim(out) == 0 else out
