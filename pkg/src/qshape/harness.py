"""Monte Carlo experiments, the closed-form verification suite and report I/O.

Every sample ``i`` of an experiment draws from its own generator seeded by
``SeedSequence(seed, spawn_key=(i,))``, so results do not depend on how the
samples are split between worker threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import boxed, gaussian, shape, unbounded
from .qcore import QParam
from .stats import covariance_with_jackknife, ks_normal_pvalue

__all__ = [
    "MODES",
    "PROFILES",
    "ConfigError",
    "ExperimentConfig",
    "ShapeReport",
    "CovarianceReport",
    "SampleReport",
    "VerificationReport",
    "sample_rng",
    "worker_count",
    "run_sample",
    "run_limit_shape",
    "run_fluctuations",
    "run_unbounded",
    "run_verification_suite",
    "emit_report",
    "report_text",
    "load_report",
]

MODES = ("sample", "limit-shape", "fluctuations", "unbounded", "verify")
PROFILES = ("default", "empty")
DEFAULT_UNBOUNDED_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)


class ConfigError(ValueError):
    """Incomplete or inconsistent experiment configuration."""


def _opt_float(v):
    return None if v is None else float(v)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    n: int | None = None
    rho: float | None = None
    c: float | None = None
    q: float | None = None
    samples: int = 1
    grid: tuple[float, ...] = ()
    seed: int = 0
    out: str | None = None
    profile: str = "default"
    theory_c: float | None = None  # compare against a different c (sanity check of the harness)

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        for name in ("rho", "c", "q", "theory_c"):
            object.__setattr__(self, name, _opt_float(getattr(self, name)))
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if self.mode in ("sample", "limit-shape", "fluctuations"):
            self._check_boxed()
        if self.mode == "fluctuations":
            if not self.grid:
                raise ConfigError("fluctuations needs a grid")
            if min(self.grid) <= 0 or max(self.grid) >= 1:
                raise ConfigError("fluctuation grid must lie inside (0, 1)")
        if self.mode == "unbounded":
            if self.q is None or not 0 < self.q < 1:
                raise ConfigError("unbounded needs q in (0, 1)")
            if not self.grid:
                object.__setattr__(self, "grid", DEFAULT_UNBOUNDED_GRID)
        if self.mode == "verify" and self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}; expected one of {PROFILES}")

    def _check_boxed(self):
        if self.n is None or self.rho is None or self.c is None:
            raise ConfigError(f"{self.mode} needs n, rho and c")
        if self.n < 1:
            raise ConfigError("n must be positive")
        if not 0 < self.rho < 1:
            raise ConfigError("rho must lie in (0, 1)")
        a = round(2 * self.n * self.rho)
        if not 1 <= a <= 2 * self.n - 1:
            raise ConfigError(f"box {a}x{2 * self.n - a} is degenerate")
        if not math.isfinite(self.c):
            raise ConfigError("c must be finite")

    @property
    def box(self) -> boxed.BoxGeometry:
        return boxed.BoxGeometry.from_scaling(self.n, self.rho)

    def to_dict(self) -> dict:
        """Echo of the parameters that determine the output (``out`` excluded)."""
        keys = {
            "sample": ("n", "rho", "c"),
            "limit-shape": ("n", "rho", "c", "samples"),
            "fluctuations": ("n", "rho", "c", "samples", "grid", "theory_c"),
            "unbounded": ("q", "samples", "grid"),
            "verify": ("profile",),
        }[self.mode]
        d = {"mode": self.mode}
        for k in keys:
            v = getattr(self, k)
            if v is not None:
                d[k] = list(v) if k == "grid" else v
        if self.mode != "verify":
            d["seed"] = self.seed
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)


# -- parallel sampling --------------------------------------------------------

def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get("QSHAPE_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def _map_chunks(fn, total: int, workers: int, chunk: int = 256) -> list:
    """``fn(start, stop)`` over contiguous index chunks, results in index order."""
    bounds = [(i, min(i + chunk, total)) for i in range(0, total, chunk)]
    if workers == 1 or len(bounds) == 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))


def _boxed_uniforms(seed: int, lo: int, hi: int, width: int) -> np.ndarray:
    return np.stack([sample_rng(seed, i).random(width) for i in range(lo, hi)])


def _boxed_heights(config: ExperimentConfig, table, width: int, workers):
    """Height profiles ``X_0..X_{a+b}`` and the extra uniforms beyond the path."""
    length = config.box.length

    def work(lo, hi):
        u = _boxed_uniforms(config.seed, lo, hi, width)
        steps = boxed.sample_paths(table, u[:, :length])
        x = np.zeros((hi - lo, length + 1), dtype=np.int32)
        np.cumsum(steps, axis=1, out=x[:, 1:])
        return x, u[:, length:]

    parts = _map_chunks(work, config.samples, worker_count(workers))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


# -- reports ------------------------------------------------------------------

def _arr(x):
    return np.asarray(x, dtype=float)


class _Report:
    kind = ""

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    __hash__ = None


@dataclass(eq=False)
class SampleReport(_Report):
    config: dict
    steps: np.ndarray
    parts: tuple[int, ...]
    area: int
    kind = "sample"

    def to_dict(self):
        return {
            "report": self.kind,
            "config": self.config,
            "area": self.area,
            "parts": list(self.parts),
            "steps": [int(s) for s in self.steps],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["config"], np.asarray(d["steps"], dtype=np.int8), tuple(d["parts"]), d["area"])


@dataclass(eq=False)
class ShapeReport(_Report):
    config: dict
    n: int
    rho: float
    c: float
    samples: int
    distances: np.ndarray
    median: float
    p95: float
    kind = "limit-shape"

    def to_dict(self):
        return {
            "report": self.kind,
            "config": self.config,
            "n": self.n,
            "rho": self.rho,
            "c": self.c,
            "samples": self.samples,
            "median": self.median,
            "p95": self.p95,
            "distances": [float(d) for d in self.distances],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["config"], d["n"], d["rho"], d["c"], d["samples"], _arr(d["distances"]),
                   d["median"], d["p95"])


@dataclass(eq=False)
class CovarianceReport(_Report):
    config: dict
    grid: np.ndarray
    empirical: np.ndarray
    theoretical: np.ndarray
    stderr: np.ndarray
    max_zscore: float
    extra: dict = field(default_factory=dict)
    kind = "covariance"

    @property
    def zscores(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.empirical - self.theoretical) / self.stderr

    def to_dict(self):
        return {
            "report": self.kind,
            "config": self.config,
            "grid": [float(g) for g in self.grid],
            "empirical": self.empirical.tolist(),
            "theoretical": self.theoretical.tolist(),
            "stderr": self.stderr.tolist(),
            "max_zscore": self.max_zscore,
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["config"], _arr(d["grid"]), _arr(d["empirical"]), _arr(d["theoretical"]),
                   _arr(d["stderr"]), d["max_zscore"], d["extra"])


@dataclass(eq=False)
class VerificationReport(_Report):
    config: dict
    checks: list[dict]
    kind = "verify"

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self):
        return {"report": self.kind, "config": self.config, "passed": self.passed, "checks": self.checks}

    @classmethod
    def from_dict(cls, d):
        return cls(d["config"], d["checks"])


_REPORTS = {r.kind: r for r in (SampleReport, ShapeReport, CovarianceReport, VerificationReport)}


# -- experiments --------------------------------------------------------------

def _qparam(config):
    return QParam.from_scaling(config.n, config.c)


def run_sample(config: ExperimentConfig) -> SampleReport:
    table = boxed.get_table(config.box, _qparam(config))
    path = boxed.LatticePath(boxed.sample_paths(table, sample_rng(config.seed, 0).random(config.box.length))[0])
    diagram = boxed.diagram_from_path(path)
    return SampleReport(config.to_dict(), path.steps, diagram.parts, diagram.area)


def run_limit_shape(config: ExperimentConfig, workers: int | None = None) -> ShapeReport:
    """``sup_t |X_{2tn}/(2n) - L(t)|`` for each of ``samples`` boxed diagrams.

    Between lattice times the path has slope +-1 and ``|L'| < 1``, so the
    supremum is attained at a lattice time.
    """
    if config.mode != "limit-shape":
        raise ConfigError("run_limit_shape needs mode 'limit-shape'")
    box, n = config.box, config.n
    table = boxed.get_table(box, _qparam(config))
    L = shape.limit_shape(shape.EnsembleParams(config.rho, config.c))
    # the path ends at (b - a)/2n, which differs from 1 - 2 rho when 2 n rho is not an integer
    k = np.arange(box.length + 1)
    target = L(k / (2 * n))
    x, _ = _boxed_heights(config, table, box.length, workers)
    dist = np.max(np.abs(x / (2 * n) - target), axis=1)
    return ShapeReport(config.to_dict(), n, config.rho, config.c, config.samples, dist,
                       float(np.median(dist)), float(np.quantile(dist, 0.95)))


def _covariance_report(config, values, theory, extra):
    cov, se = covariance_with_jackknife(values)
    cov = (cov + cov.T) / 2
    z = np.abs(cov - theory) / se
    return CovarianceReport(config.to_dict(), np.asarray(config.grid), cov, theory, se,
                            float(np.max(z)), extra)


def run_fluctuations(config: ExperimentConfig, workers: int | None = None) -> CovarianceReport:
    """Covariance of ``X~_s / f(s)`` against the OU bridge kernel.

    ``X~_s = sqrt(n) (X_{2k}/(2n) - L(2k/(2n)))`` at the even time ``2k``
    nearest ``2ns``.  ``extra["ks_pvalues"]`` tests each column against its
    normal limit after spreading every lattice value uniformly over its cell
    (KS needs a continuous law; the spread has width ``O(n^{-1/2})``).
    """
    if config.mode != "fluctuations":
        raise ConfigError("run_fluctuations needs mode 'fluctuations'")
    box, n, rho, c = config.box, config.n, config.rho, config.c
    grid = np.asarray(config.grid)
    k = np.rint(n * grid).astype(int)
    table = boxed.get_table(box, _qparam(config))
    x, extra_u = _boxed_heights(config, table, box.length + len(grid), workers)
    L = shape.limit_shape(shape.EnsembleParams(rho, c))
    f = np.atleast_1d(shape.fluctuation_scale_f(rho, c, grid))
    values = math.sqrt(n) * (x[:, 2 * k] / (2 * n) - L(k / n)) / f
    theory_c = c if config.theory_c is None else config.theory_c
    theory = np.asarray(shape.bridge_kernel(theory_c, grid[:, None], grid[None, :]))
    cell = 1 / (math.sqrt(n) * f)
    spread = values + (extra_u - 0.5) * cell
    ks = [ks_normal_pvalue(spread[:, j], theory[j, j]) for j in range(len(grid))]
    extra = {"lattice_times": [int(2 * kk) for kk in k], "ks_pvalues": ks}
    return _covariance_report(config, values, theory, extra)


def run_unbounded(config: ExperimentConfig, workers: int | None = None) -> CovarianceReport:
    """Rescaled fluctuation field of ``P^q`` against the stationary OU kernel.

    Also records the Vershik sup-distance of every sample.  The q -> 1 rate is
    not known; finite-q bias is part of the comparison.
    """
    if config.mode != "unbounded":
        raise ConfigError("run_unbounded needs mode 'unbounded'")
    q, grid = config.q, np.asarray(config.grid)
    cutoff = unbounded.part_cutoff(q)

    def work(lo, hi):
        fields, dists = [], []
        for i in range(lo, hi):
            s = unbounded.sample_unbounded(q, sample_rng(config.seed, i), cutoff=cutoff)
            fields.append(unbounded.rescaled_fluctuation_unbounded(s, q, grid))
            dists.append(unbounded.vershik_distance(s, q))
        return np.array(fields), np.array(dists)

    parts = _map_chunks(work, config.samples, worker_count(workers))
    values = np.concatenate([p[0] for p in parts])
    dists = np.concatenate([p[1] for p in parts])
    theory = np.asarray(gaussian.covariance_matrix(0.0, grid, "stationary"))
    extra = {
        "vershik_median": float(np.median(dists)),
        "vershik_p95": float(np.quantile(dists, 0.95)),
        "part_cutoff": cutoff,
        "tail_bound": q ** (cutoff + 1) / (1 - q),
        "note": "finite-q comparison; no convergence rate is known",
    }
    if config.samples >= 3:
        return _covariance_report(config, values, theory, extra)
    m = len(grid)
    nan = np.full((m, m), np.nan)
    return CovarianceReport(config.to_dict(), grid, nan, theory, nan, math.nan, extra)


# -- verification suite -------------------------------------------------------

_POINTS = ((0.5, 1.0), (0.3, 2.0), (0.7, -1.5))
_TIMES = (0.2, 0.45, 0.7)
_FD1, _FD2 = 1e-5, 1e-4


def _d1(fn, args, i, h=_FD1):
    up, dn = list(args), list(args)
    up[i] += h
    dn[i] -= h
    return (fn(*up) - fn(*dn)) / (2 * h)


def _d2(fn, args, i, j, h=_FD2):
    def shifted(di, dj):
        a = list(args)
        a[i] += di
        a[j] += dj
        return fn(*a)

    if i == j:
        return (shifted(h, 0) - 2 * fn(*args) + shifted(-h, 0)) / h**2
    return (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4 * h**2)


def _pairs():
    return [(s, t) for s in _TIMES for t in _TIMES if s < t]


def _check_ratio():
    errs = [abs(shape.ratio_R(r, c, t, shape._L(r, c, t)) - 1)
            for r, c in _POINTS for t in np.linspace(0.05, 0.95, 19)]
    return max(errs), 1e-12


def _check_F1_zero():
    return max(abs(shape.F1(r, c, s, shape._L(r, c, s))) for r, c in _POINTS for s in _TIMES), 1e-10


def _check_F2_zero():
    errs = [abs(shape.F2(r, c, s, t, shape._L(r, c, s), shape._L(r, c, t)))
            for r, c in _POINTS for s, t in _pairs()]
    return max(errs), 1e-10


def _check_restrictions():
    errs = []
    for r, c in _POINTS:
        L = lambda u, r=r, c=c: shape._L(r, c, u)  # noqa: E731
        for s, t in _pairs():
            r1, c1 = shape.restriction_params_right(r, c, s)
            errs.append(abs((L(t) - L(s)) / (1 - s) - shape._L(r1, c1, (t - s) / (1 - s))))
            r2, c2 = shape.restriction_params_left(r, c, t)
            errs.append(abs(L(s) / t - shape._L(r2, c2, s / t)))
            # rate decompositions at an off-shape interior point
            x, y = L(s) + 0.03, L(t) - 0.02
            rp, cp = shape._right_params(r, c, s, x)
            errs.append(abs(shape.F2(r, c, s, t, x, y)
                            - shape.F1(r, c, s, x)
                            - (1 - s) * shape.F1(rp, cp, (t - s) / (1 - s), (y - x) / (1 - s))))
            rpp, cpp = shape._left_params(r, c, t, y)
            errs.append(abs(shape.F2(r, c, s, t, x, y)
                            - shape.F1(r, c, t, y)
                            - t * shape.F1(rpp, cpp, s / t, x / t)))
    return max(errs), 1e-10


def _check_first_partials():
    errs = []
    for r, c in _POINTS:
        f1 = lambda rho, s, x, c=c: shape.F1(rho, c, s, x)  # noqa: E731
        f2 = lambda rho, s, t, x, y, c=c: shape.F2(rho, c, s, t, x, y)  # noqa: E731
        for s in _TIMES:
            args = [r, s, shape._L(r, c, s)]
            errs += [abs(_d1(f1, args, i)) for i in range(3)]
        for s, t in _pairs():
            args = [r, s, t, shape._L(r, c, s), shape._L(r, c, t)]
            errs += [abs(_d1(f2, args, i)) for i in range(5)]
    return max(errs), 1e-6


def _check_hessians():
    errs = []
    for r, c in _POINTS:
        f1x = lambda x, s, r=r, c=c: shape.F1(r, c, s, x)  # noqa: E731
        for s in _TIMES:
            fd = _d2(f1x, [shape._L(r, c, s), s], 0, 0)
            errs.append(abs(fd / shape.d2F1_dx2_at_shape(r, c, s) - 1))
        for s, t in _pairs():
            f2 = lambda x, y, r=r, c=c, s=s, t=t: shape.F2(r, c, s, t, x, y)  # noqa: E731
            args = [shape._L(r, c, s), shape._L(r, c, t)]
            hess = shape.hessian_F2_at_critical(r, c, s, t).hessian
            for i, j in ((0, 0), (1, 1), (0, 1)):
                errs.append(abs(_d2(f2, args, i, j) / hess[i, j] - 1))
            errs.append(abs(shape.d2F2_dxdy(c, s, t, *args) / hess[0, 1] - 1))
    return max(errs), 1e-4


def _check_sigma():
    errs = []
    for r, c in _POINTS:
        for s, t in _pairs():
            cd = shape.hessian_F2_at_critical(r, c, s, t)
            errs.append(float(np.max(np.abs(cd.sigma / cd.sigma_closed - 1))))
    return max(errs), 1e-9


def _check_det():
    errs = []
    for r, c in _POINTS:
        for s, t in _pairs():
            cd = shape.hessian_F2_at_critical(r, c, s, t)
            errs.append(abs(1 / math.sqrt(np.linalg.det(cd.sigma_closed)) / cd.H2 - 1))
    return max(errs), 1e-9


def _check_embedding():
    errs = []
    t = np.linspace(0, 1, 101)
    for s0, s1 in ((-1.0, 1.0), (-0.3, 1.2), (0.5, 2.0), (-2.5, -0.4), (0.0, 0.05)):
        emb = shape.universal_embedding(s0, s1)
        L = shape.limit_shape(emb.params)
        errs.append(float(np.max(np.abs(L(t) - emb.restricted(t)))))
    return max(errs), 1e-9


def _check_f_forms():
    rng = np.random.default_rng(20240611)
    errs = []
    for _ in range(50):
        r, c, s = rng.uniform(0.05, 0.95), rng.uniform(-4, 4), rng.uniform(0, 1)
        errs.append(abs(shape.fluctuation_scale_f_alt(r, c, s) / shape.fluctuation_scale_f(r, c, s) - 1))
    return max(errs), 1e-12


def _check_q_stirling():
    errs = [shape.q_stirling_check(n, n, 1.0) for n in (100, 200, 400)]
    # error must shrink by a factor >= 1.6 per doubling
    return max(b / a for a, b in zip(errs, errs[1:])), 1 / 1.6


CHECKS = {
    "ratio_R_at_shape": _check_ratio,
    "F1_zero_at_shape": _check_F1_zero,
    "F2_zero_at_critical": _check_F2_zero,
    "restriction_relations": _check_restrictions,
    "first_partials_vanish": _check_first_partials,
    "hessian_vs_finite_differences": _check_hessians,
    "sigma_equals_minus_inverse_hessian": _check_sigma,
    "det_sigma_identity": _check_det,
    "universal_embedding": _check_embedding,
    "f_scale_forms_agree": _check_f_forms,
    "q_stirling_error_ratio": _check_q_stirling,
}


def run_verification_suite(profile: str = "default") -> VerificationReport:
    """Evaluate every closed-form identity; failures are recorded, never raised."""
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    names = list(CHECKS) if profile == "default" else []
    checks = []
    for name in names:
        try:
            err, tol = CHECKS[name]()
            err = float(err)
            passed = bool(err <= tol)
        except Exception as exc:  # a broken formula is a failed check
            err, tol, passed = math.nan, math.nan, False
            name = f"{name} ({type(exc).__name__}: {exc})"
        checks.append({"name": name, "max_error": err, "tolerance": tol, "passed": passed})
    return VerificationReport({"mode": "verify", "profile": profile}, checks)


# -- output -------------------------------------------------------------------

def _g17(x) -> str:
    return format(float(x), ".17g")


def _csv_text(report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(report, CovarianceReport):
        w.writerow(["s", "t", "empirical", "theoretical", "stderr", "zscore"])
        g, z = report.grid, report.zscores
        for i in range(len(g)):
            for j in range(i, len(g)):
                w.writerow([_g17(g[i]), _g17(g[j]), _g17(report.empirical[i, j]),
                            _g17(report.theoretical[i, j]), _g17(report.stderr[i, j]), _g17(z[i, j])])
    elif isinstance(report, ShapeReport):
        w.writerow(["sample", "distance"])
        for i, d in enumerate(report.distances):
            w.writerow([i, _g17(d)])
    elif isinstance(report, VerificationReport):
        w.writerow(["name", "max_error", "tolerance", "passed"])
        for c in report.checks:
            w.writerow([c["name"], _g17(c["max_error"]), _g17(c["tolerance"]), int(c["passed"])])
    elif isinstance(report, SampleReport):
        w.writerow(["k", "height"])
        for k, h in enumerate(np.concatenate(([0], np.cumsum(report.steps)))):
            w.writerow([k, int(h)])
    else:
        raise TypeError(f"cannot write {type(report).__name__} as CSV")
    return buf.getvalue()


def report_text(report, fmt: str = "json") -> str:
    if fmt == "csv":
        return _csv_text(report)
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(report, fmt: str, path) -> None:
    """Write ``report`` as CSV or JSON; I/O errors carry the path."""
    text = report_text(report, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report to {path}: {exc.strerror}") from exc


def load_report(path):
    """Inverse of ``emit_report(..., "json", path)``."""
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return _REPORTS[d["report"]].from_dict(d)
