"""Monte Carlo comparison of the rank and Pearson estimators."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .asymptotics import AsymptoticReport, QuadConfig, report
from .matcher import MatchError, Method, RefineOpts, estimate, wrap_error
from .noise import NoiseError, NoiseModel, mix_seed, noise_from_dict
from .sampling import Signal, generate_signal
from .templates import Template, TemplateError, get_template

ROW_HEADER = ("rep", "method", "theta_hat", "abs_err", "sqrtn_err")
HIST_BINS = 64
HIST_HALF_WIDTH = 4.0


class ConfigError(ValueError):
    pass


def _g(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.10g}"


def _jnum(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return float(f"{x:.10g}")


@dataclass(frozen=True)
class RunConfig:
    template: Template
    noise: NoiseModel
    theta_star: float = 0.0
    n: int = 2000
    reps: int = 300
    methods: tuple = (Method.RANK, Method.PEARSON)
    master_seed: int = 0
    workers: int = 1
    refine: bool = True
    tol: float = 1e-7

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.methods:
            raise ConfigError("at least one method is required")
        methods = tuple(dict.fromkeys(Method(m) for m in self.methods))
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "theta_star", float(np.mod(self.theta_star, 1.0)))

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {"template", "noise", "theta_star", "n", "reps", "methods", "master_seed",
                 "seed", "workers", "refine", "tol"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            methods = d.get("methods", ["rank", "pearson"])
            if isinstance(methods, str):
                methods = ["rank", "pearson"] if methods == "both" else [methods]
            return cls(
                template=get_template(d.get("template", "A")),
                noise=noise_from_dict(d.get("noise", {"family": "gaussian"})),
                theta_star=float(d.get("theta_star", 0.0)),
                n=int(d.get("n", 2000)),
                reps=int(d.get("reps", 300)),
                methods=tuple(Method(m) for m in methods),
                master_seed=int(d.get("master_seed", d.get("seed", 0))),
                workers=int(d.get("workers", 1)),
                refine=bool(d.get("refine", True)),
                tol=float(d.get("tol", 1e-7)),
            )
        except (TemplateError, NoiseError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        t = self.template
        return {
            "template": t.kind if t.kind != "pwl" else {"knots": [list(k) for k in t.knots]},
            "noise": self.noise.to_dict(),
            "theta_star": self.theta_star,
            "n": self.n,
            "reps": self.reps,
            "methods": [m.value for m in self.methods],
            "master_seed": self.master_seed,
            "workers": self.workers,
            "refine": self.refine,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class Row:
    rep: int
    method: Method
    theta_hat: float
    abs_err: float
    sqrtn_err: float
    error: str | None = None


@dataclass
class RunResult:
    config: RunConfig
    rows: list
    summary: dict
    report: AsymptoticReport | None = None
    hist: dict = field(default_factory=dict)

    def errors(self, method) -> np.ndarray:
        method = Method(method)
        return np.array([r.sqrtn_err for r in self.rows if r.method is method and r.error is None])

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_HEADER)
        for r in self.rows:
            w.writerow([r.rep, r.method.value, _g(r.theta_hat), _g(r.abs_err), _g(r.sqrtn_err)])
        return buf.getvalue()

    def summary_json(self) -> str:
        doc = {
            "config": self.config.to_dict(),
            "methods": self.summary,
            "asymptotics": None if self.report is None else self.report.to_dict(),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def hist_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("method", "bin_lo", "bin_hi", "count"))
        for method, (edges, counts) in self.hist.items():
            for lo, hi, c in zip(edges[:-1], edges[1:], counts):
                w.writerow((method, _g(float(lo)), _g(float(hi)), int(c)))
        return buf.getvalue()

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "rows.csv").write_text(self.rows_csv())
        (out / "summary.json").write_text(self.summary_json())
        (out / "hist.csv").write_text(self.hist_csv())


def ks_distance(standardized_errors, sigma: float) -> float:
    """Kolmogorov-Smirnov distance between the sample and N(0, sigma^2)."""
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    x = np.sort(np.asarray(standardized_errors, dtype=float))
    m = x.size
    if m < 10:
        raise ValueError("need at least 10 values")
    cdf = ndtr(x / sigma)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - cdf), np.max(cdf - (i - 1) / m)))


def _replicate(config: RunConfig, r: int, distortion=None) -> list:
    seed = mix_seed(config.master_seed, r)
    sig = generate_signal(config.template, config.theta_star, config.n, config.noise, seed)
    if distortion is not None:
        sig = Signal(distortion(sig.values), sig.truth)
    opts = RefineOpts(refine=config.refine, tol=config.tol)
    rows = []
    root_n = math.sqrt(config.n)
    for m in config.methods:
        try:
            est = estimate(sig, config.template, m, opts)
        except MatchError as exc:
            rows.append(Row(r, m, math.nan, math.nan, math.nan, str(exc)))
            continue
        e = wrap_error(est.theta_hat, config.theta_star)
        rows.append(Row(r, m, est.theta_hat, abs(e), root_n * e))
    return rows


def _replicate_star(args):
    return _replicate(*args)


def _predicted(rep: AsymptoticReport | None, method: Method) -> float | None:
    if rep is None:
        return None
    return rep.avar_rank if method is Method.RANK else rep.avar_pearson


def _summarize(config, rows, rep):
    summary, hist = {}, {}
    for m in config.methods:
        ok = [r for r in rows if r.method is m and r.error is None]
        e = np.array([r.sqrtn_err for r in ok])
        a = np.array([r.abs_err for r in ok])
        pred = _predicted(rep, m)
        s = {
            "n_ok": len(ok),
            "n_failed": sum(1 for r in rows if r.method is m) - len(ok),
            "mean_abs_err": _jnum(float(a.mean())) if a.size else None,
            "median_abs_err": _jnum(float(np.median(a))) if a.size else None,
            "mean_sqrtn_err": _jnum(float(e.mean())) if e.size else None,
            "var_sqrtn_err": _jnum(float(e.var(ddof=1))) if e.size > 1 else None,
            "predicted_avar": _jnum(pred),
            "ks_vs_predicted": None,
        }
        if pred is not None and math.isfinite(pred) and e.size >= 10:
            s["ks_vs_predicted"] = _jnum(ks_distance(e, math.sqrt(pred)))
        if pred is not None and math.isfinite(pred):
            sd = math.sqrt(pred)
        elif e.size:
            q75, q25 = np.percentile(e, [75, 25])
            sd = (q75 - q25) / 1.349 or 1.0
        else:
            sd = 1.0
        s["hist_sd"] = _jnum(sd)
        edges = np.linspace(-HIST_HALF_WIDTH * sd, HIST_HALF_WIDTH * sd, HIST_BINS + 1)
        hist[m.value] = (edges, np.histogram(e, bins=edges)[0])
        summary[m.value] = s
    return summary, hist


def run_monte_carlo(config: RunConfig, distortion=None, asymptotics: bool = True,
                    quad: QuadConfig | None = None) -> RunResult:
    """Repeat generate-then-estimate `config.reps` times.

    Replicate r draws its noise from ``mix_seed(master_seed, r)``, so the rows
    do not depend on `config.workers`. `distortion`, if given, is applied to
    every generated signal (must be picklable when workers > 1).
    """
    jobs = [(config, r, distortion) for r in range(config.reps)]
    if config.workers == 1:
        chunks = [_replicate_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            size = max(1, config.reps // (4 * config.workers))
            chunks = list(ex.map(_replicate_star, jobs, chunksize=size))
    rows = sorted((row for chunk in chunks for row in chunk),
                  key=lambda row: (row.rep, config.methods.index(row.method)))
    if all(r.error is not None for r in rows):
        raise RuntimeError(f"every replicate failed: {rows[0].error}")
    rep = None
    if asymptotics:
        rep = report(config.template, config.noise, quad or QuadConfig.from_env(),
                     error_estimate=False)
    summary, hist = _summarize(config, rows, rep)
    return RunResult(config, rows, summary, rep, hist)


def compare_methods(result: RunResult, n_boot: int = 1000, seed: int = 0) -> dict:
    """Empirical efficiency: var(Pearson sqrt(n) err) / var(rank sqrt(n) err).

    Replicates are resampled jointly (both methods saw the same signal) to get
    a bootstrap standard error.
    """
    by_rep = {}
    for r in result.rows:
        if r.error is None:
            by_rep.setdefault(r.rep, {})[r.method] = r.sqrtn_err
    paired = [(v[Method.PEARSON], v[Method.RANK]) for _, v in sorted(by_rep.items())
              if Method.PEARSON in v and Method.RANK in v]
    if len(paired) < 2:
        raise ValueError("need both methods on at least two replicates")
    p, k = np.array(paired).T
    are = float(np.var(p, ddof=1) / np.var(k, ddof=1))
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, p.size, size=(n_boot, p.size))
    boot = np.var(p[idx], axis=1, ddof=1) / np.var(k[idx], axis=1, ddof=1)
    return {
        "are_empirical": are,
        "bootstrap_se": float(np.std(boot, ddof=1)),
        "var_pearson": float(np.var(p, ddof=1)),
        "var_rank": float(np.var(k, ddof=1)),
        "n_pairs": int(p.size),
    }


def load_config(path) -> RunConfig:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return RunConfig.from_dict(d)
