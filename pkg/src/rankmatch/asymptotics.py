"""Large-sample behaviour of the rank estimator, evaluated by quadrature.

Everything is computed with the true shift at 0. With g(y) = int Phi2(y - f(x)) dx:

* population criterion   M(theta)  = int g(f(x0)) f(x0 - theta) dx0
* curvature at the truth M''(0)    = -int int f'(x)^2 phi2(f(x) - f(x0)) dx dx0
* projection variance    gamma^2   = int int Lambda(x0, z)^2 phi(z) dz dx0, with
  Lambda(x0, z) = int (f'(x) - f'(x0)) [Phi(z + f(x) - f(x0)) - Phi2(f(x) - f(x0))] dx

so sqrt(n)(theta_hat - theta*) has limit variance gamma^2 / M''(0)^2, while the
Pearson estimator has sigma^2 / int f'^2.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from numpy.polynomial import Chebyshev

from ._backend import kernels
from .noise import CAUCHY, GAUSSIAN, T3, NoiseModel
from .quadrature import interval_rule, line_rule
from .templates import TEMPLATE_A, TEMPLATE_B, TEMPLATE_C, Template

ENV_NODES = "RANKMATCH_QUAD_NODES"


@dataclass(frozen=True)
class QuadConfig:
    x_nodes: int = 2048
    z_panels: int = 8
    z_order: int = 16
    cheb_degree: int = 64
    fd_step: float = 1e-3
    theta_grid: int = 4096

    @classmethod
    def from_env(cls, **overrides) -> "QuadConfig":
        cfg = cls(**overrides)
        raw = os.environ.get(ENV_NODES)
        if raw:
            cfg = replace(cfg, x_nodes=int(raw))
        return cfg

    def halved(self) -> "QuadConfig":
        return replace(self, x_nodes=max(64, self.x_nodes // 2), z_panels=max(2, self.z_panels // 2))


def _fmt(x):
    if x is None:
        return None
    return "inf" if math.isinf(x) else float(f"{x:.10g}")


@dataclass
class AsymptoticReport:
    template: str
    noise: dict
    m_second: float
    gamma_sq: float
    avar_rank: float
    avar_pearson: float
    are: float
    sigma_sq: float
    deriv_energy: float
    quadrature: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("m_second", "gamma_sq", "avar_rank", "avar_pearson", "are", "sigma_sq",
                  "deriv_energy"):
            d[k] = _fmt(d[k])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass
class LocalMaxDiagnostic:
    m_prime_at_0: float
    grid_argmax_theta: float
    is_global_max_on_grid: bool
    m_at_0: float
    grid_gap: float  # M(0) minus the best value at any other grid point


def _nodes(template: Template, cfg: QuadConfig):
    x, w = interval_rule(template.breakpoints, cfg.x_nodes)
    return np.asarray(template.eval(x)), np.asarray(template.eval_deriv(x)), w


def _compress(F, D, w):
    """Merge nodes with identical (f, f') values; every integrand sees x only through them."""
    key = np.stack([np.round(F, 12), np.round(D, 12)], axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    return uniq[:, 0].copy(), uniq[:, 1].copy(), np.bincount(inv, weights=w, minlength=len(uniq))


def _pair_matrix(func, U, even=True):
    """func(U[i] - U[j]) at [j, i], evaluated once per distinct |difference|.

    `func` must be even, or satisfy func(-d) = 1 - func(d) when ``even=False``
    (a cdf of a symmetric law). Differences are rounded to 1e-14 before
    matching; with regularly spaced nodes only a few thousand are distinct.
    """
    diff = U[None, :] - U[:, None]
    vals, inv = np.unique(np.round(np.abs(diff), 14), return_inverse=True)
    out = np.asarray(func(vals))[inv.ravel()].reshape(diff.shape)
    if not even:
        out = np.where(diff < 0, 1.0 - out, out)
    return out


def _z_rule(noise: NoiseModel, cfg: QuadConfig):
    z, wz = line_rule(noise.scale, cfg.z_panels, cfg.z_order)
    pz = wz * noise.pdf(z)
    keep = pz > 1e-18 * pz.max()
    return np.ascontiguousarray(z[keep]), np.ascontiguousarray(pz[keep])


def _m_second(template, noise, cfg):
    F, D, w = _compress(*_nodes(template, cfg))
    U, inv = np.unique(F, return_inverse=True)
    inv = inv.ravel()
    # inner[j] = int phi2(f(x) - U[j]) dx; phi2 is even
    inner = _pair_matrix(noise.phi2_density, U) @ np.bincount(inv, weights=w, minlength=U.size)
    return -float(np.dot(w * D * D, inner[inv]))


def m_second_at_star(template: Template, noise: NoiseModel, cfg: QuadConfig | None = None) -> float:
    """Second derivative of the population criterion at the true shift (negative)."""
    return _m_second(template, noise, cfg or QuadConfig.from_env())


def _gamma_sq(template, noise, cfg, reflect=False):
    F, D, w = _compress(*_nodes(template, cfg))
    # Lambda(x0, z) is linear in f', and the cdf term sees x only through f(x),
    # so nodes sharing a value of f are pooled with weights w and w f'
    U, inv = np.unique(F, return_inverse=True)
    inv = inv.ravel()
    a = np.bincount(inv, weights=w, minlength=U.size)
    b = np.bincount(inv, weights=w * D, minlength=U.size)
    z, pz = _z_rule(noise, cfg)
    S0, S1 = kernels.cdf_sums(U, a, b, z, noise.code, noise.scale, bool(reflect))
    P2 = _pair_matrix(noise.phi2, U, even=False)  # P2[j, i] = Phi2(U[i] - U[j])
    L1 = S1 - (P2 @ b)[:, None]
    L0 = S0 - (P2 @ a)[:, None]
    lam = L1[inv] - D[:, None] * L0[inv]
    per_x0 = (lam * lam) @ pz
    return float(np.dot(w, per_x0)), len(F), len(z)


def gamma_squared(template: Template, noise: NoiseModel, cfg: QuadConfig | None = None,
                  reflect: bool = False) -> float:
    """Variance of the linearized rank criterion.

    ``reflect=True`` evaluates Phi(z + w) as 1 - Phi(-z - w), which is the same
    number for symmetric noise.
    """
    return _gamma_sq(template, noise, cfg or QuadConfig.from_env(), reflect)[0]


class _Criterion:
    """Population criterion M(theta) for one (template, noise) pair."""

    def __init__(self, template: Template, noise: NoiseModel, cfg: QuadConfig):
        self.template = template
        self.cfg = cfg
        F, _, w = _nodes(template, cfg)
        U, inv = np.unique(np.round(F, 12), return_inverse=True)
        WU = np.bincount(inv.ravel(), weights=w)
        pad = 0.01 * (U[-1] - U[0]) + template.lipschitz_bound / cfg.x_nodes + 1e-9
        domain = [U[0] - pad, U[-1] + pad]

        def g(y):
            return noise.phi2(np.asarray(y)[:, None] - U[None, :]) @ WU

        self.g = Chebyshev.interpolate(g, cfg.cheb_degree, domain=domain)
        coarse = Chebyshev.interpolate(g, (3 * cfg.cheb_degree) // 4, domain=domain)
        probe = np.linspace(domain[0], domain[1], 257)
        self.interp_error = float(np.max(np.abs(self.g(probe) - coarse(probe))))

    def __call__(self, theta: float) -> float:
        t = self.template
        shifted = np.mod(np.asarray(t.breakpoints, float) + theta, 1.0)
        x, w = interval_rule(np.concatenate([t.breakpoints, shifted]), self.cfg.x_nodes)
        return float(np.dot(w * self.g(t.eval(x)), t.eval(x - theta)))


def big_m(template: Template, noise: NoiseModel, theta, cfg: QuadConfig | None = None):
    """Population limit of the rank criterion at shift `theta` (true shift 0)."""
    crit = _Criterion(template, noise, cfg or QuadConfig.from_env())
    if np.ndim(theta) == 0:
        return crit(float(theta))
    return np.array([crit(float(t)) for t in np.ravel(theta)]).reshape(np.shape(theta))


def verify_local_max(template: Template, noise: NoiseModel, cfg: QuadConfig | None = None,
                     grid_start: float = 0.0) -> LocalMaxDiagnostic:
    """Probe that the truth is a stationary point and the best point of a theta grid."""
    cfg = cfg or QuadConfig.from_env()
    crit = _Criterion(template, noise, cfg)
    h = cfg.fd_step
    m_prime = (crit(h) - crit(-h)) / (2.0 * h)
    thetas = grid_start + np.arange(cfg.theta_grid) / cfg.theta_grid
    vals = np.array([crit(t) for t in thetas])
    j = int(np.argmax(vals))
    best = float(np.mod(thetas[j], 1.0))
    dist = np.abs(np.mod(thetas + 0.5, 1.0) - 0.5)
    at_zero = dist < 1e-12
    m0 = crit(0.0)
    gap = m0 - float(vals[~at_zero].max())
    return LocalMaxDiagnostic(float(m_prime), best, bool(dist[j] < 1e-12), m0, gap)


def report(template: Template, noise: NoiseModel, cfg: QuadConfig | None = None,
           error_estimate: bool = True) -> AsymptoticReport:
    """Limit variances of both estimators and their ratio (rank efficiency)."""
    cfg = cfg or QuadConfig.from_env()
    m2 = _m_second(template, noise, cfg)
    g2, n_x, n_z = _gamma_sq(template, noise, cfg)
    energy = template.deriv_energy()
    sigma2 = noise.variance
    avar_rank = g2 / (m2 * m2)
    avar_pearson = sigma2 / energy
    are = math.inf if math.isinf(avar_pearson) else avar_pearson / avar_rank
    quad = {
        "x_nodes": cfg.x_nodes,
        "x_nodes_distinct": n_x,
        "z_panels": cfg.z_panels,
        "z_order": cfg.z_order,
        "z_nodes_used": n_z,
        "z_substitution": f"z = {noise.scale:g} * tan(pi u / 2)",
    }
    if error_estimate:
        half = cfg.halved()
        quad["abs_error_m_second"] = abs(m2 - _m_second(template, noise, half))
        quad["abs_error_gamma_sq"] = abs(g2 - _gamma_sq(template, noise, half)[0])
    return AsymptoticReport(template.name, noise.to_dict(), m2, g2, avar_rank, avar_pearson, are,
                            sigma2, energy, quad)


TABLE_TEMPLATES = (("A", TEMPLATE_A), ("B", TEMPLATE_B), ("C", TEMPLATE_C))
TABLE_NOISES = (("normal", GAUSSIAN), ("t3", T3), ("cauchy", CAUCHY))


def table1(cfg: QuadConfig | None = None):
    """Rows (template, noise, are) for the nine built-in combinations."""
    cfg = cfg or QuadConfig.from_env()
    rows = []
    for tname, t in TABLE_TEMPLATES:
        for nname, nz in TABLE_NOISES:
            rows.append((tname, nname, report(t, nz, cfg, error_estimate=False).are))
    return rows
