"""Composite Gauss-Legendre rules on the unit interval and on the real line.

Both rules keep every node strictly inside its panel, so derivative jumps
placed on panel boundaries never coincide with a node.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

GAUSS_ORDER = 4
LINE_ORDER = 16


@lru_cache(maxsize=None)
def _legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def interval_rule(breaks=(), n_nodes: int = 2048, order: int = GAUSS_ORDER):
    """Composite Gauss-Legendre rule on [0, 1] with panels aligned to `breaks`.

    Panels are distributed over the pieces in proportion to their length, so
    the total node count is close to `n_nodes`. Returns ``(x, w)``.
    """
    edges = np.unique(np.concatenate([[0.0, 1.0], np.mod(np.asarray(breaks, float), 1.0)]))
    g, gw = _legendre(order)
    per_unit = n_nodes / order
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0.0:
            continue
        k = max(1, int(round(per_unit * (b - a))))
        e = np.linspace(a, b, k + 1)
        half = 0.5 * np.diff(e)
        mid = 0.5 * (e[:-1] + e[1:])
        xs.append((mid[:, None] + half[:, None] * g[None, :]).ravel())
        ws.append((half[:, None] * gw[None, :]).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def line_rule(scale: float = 1.0, panels: int = 8, order: int = LINE_ORDER):
    """Rule for integrals over the whole real line.

    Uses z = scale * tan(pi u / 2) with u in (-1, 1) split into `panels`
    Gauss-Legendre panels; heavy (Cauchy-like) tails map to a bounded,
    smooth integrand in u, so nothing is truncated.
    """
    g, gw = _legendre(order)
    e = np.linspace(-1.0, 1.0, panels + 1)
    half = 0.5 * np.diff(e)
    mid = 0.5 * (e[:-1] + e[1:])
    u = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    wu = (half[:, None] * gw[None, :]).ravel()
    a = 0.5 * np.pi * u
    z = scale * np.tan(a)
    w = wu * scale * 0.5 * np.pi / np.cos(a) ** 2
    return z, w


def _line_nodes(scale, panels, lo, order=LINE_ORDER):
    """Tangent-substituted nodes for u in [lo, 1); `lo` has shape (1, m)."""
    g, gw = _legendre(order)
    e = np.linspace(-1.0, 1.0, panels + 1)
    half = 0.5 * np.diff(e)
    v = ((0.5 * (e[:-1] + e[1:]))[:, None] + half[:, None] * g[None, :]).reshape(-1, 1)
    wv = (half[:, None] * gw[None, :]).reshape(-1, 1)
    span = 0.5 * (1.0 - lo)
    a = 0.5 * np.pi * (lo + span * (v + 1.0))
    return scale * np.tan(a), span * wv * scale * 0.5 * np.pi / np.cos(a) ** 2


def integrate_line(integrand, t, scale=1.0, tol=1e-10, lower=None, start_panels=4,
                   max_panels=512, chunk=1 << 12):
    """Integrate ``integrand(z, t)`` over z in R (or z > lower) for every entry of `t`.

    `integrand` receives z with shape (nz, m) and t with shape (1, m) and must
    broadcast. `lower`, if given, holds one lower limit per entry of `t`.
    Panel counts double until two successive results agree within `tol`
    everywhere. Returns ``(values, abs_error_estimate)``.
    """
    t = np.asarray(t, dtype=float)
    flat = t.ravel()
    if lower is None:
        lo_all = np.full(flat.size, -1.0)
    else:
        lo_all = (2.0 / np.pi) * np.arctan(np.broadcast_to(lower, t.shape).ravel() / scale)
    out = np.empty_like(flat)
    err = 0.0
    for start in range(0, flat.size, chunk):
        idx = np.arange(start, min(start + chunk, flat.size))
        panels = start_panels
        z, w = _line_nodes(scale, panels, lo_all[idx][None, :])
        prev = np.sum(w * integrand(z, flat[idx][None, :]), axis=0)
        # entries leave the active set once two successive doublings agree
        while idx.size:
            panels *= 2
            z, w = _line_nodes(scale, panels, lo_all[idx][None, :])
            cur = np.sum(w * integrand(z, flat[idx][None, :]), axis=0)
            delta = np.abs(cur - prev)
            done = (delta <= tol) | (panels >= max_panels)
            out[idx[done]] = cur[done]
            if done.any():
                err = max(err, float(delta[done].max()))
            idx, prev = idx[~done], cur[~done]
    return out.reshape(t.shape), err
