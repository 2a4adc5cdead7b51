"""Per-dataset estimation, Rubin pooling and simulation performance metrics."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import DegenerateSample, ZeroTruth

MEAN, VARIANCE, COVARIANCE, CORRELATION = "mean", "var", "cov", "cor"
KINDS = (MEAN, VARIANCE, COVARIANCE, CORRELATION)

PRB_LIMIT = 10.0
CIC_LIMIT = 0.9
# keeps arctanh finite for |r| == 1
_Z_CLIP = 1.0 - 1e-15


@dataclass(frozen=True)
class Estimand:
    kind: str
    columns: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown estimand kind {self.kind!r}")
        cols = tuple(int(c) for c in self.columns)
        need = 2 if self.kind in (COVARIANCE, CORRELATION) else 1
        if len(cols) != need:
            raise ValueError(f"{self.kind} takes {need} column(s)")
        object.__setattr__(self, "columns", cols)

    @property
    def fisher_z(self) -> bool:
        return self.kind == CORRELATION

    def label(self, names: Sequence[str] | None = None) -> str:
        names = names or [f"z{c + 1}" for c in range(max(self.columns) + 1)]
        return f"{self.kind}({','.join(names[c] for c in self.columns)})"

    @classmethod
    def parse(cls, text: str, names: Sequence[str]) -> "Estimand":
        m = re.fullmatch(r"(\w+)\(([^)]*)\)", text.strip())
        if not m:
            raise ValueError(f"cannot parse estimand {text!r}")
        return cls(m.group(1), tuple(list(names).index(n.strip()) for n in m.group(2).split(",")))


def default_estimands(targets: Sequence[int] = (0, 1, 2)) -> list[Estimand]:
    """Means, variances, covariances and correlations of the target columns."""
    out = [Estimand(MEAN, (j,)) for j in targets]
    out += [Estimand(VARIANCE, (j,)) for j in targets]
    pairs = [(a, b) for i, a in enumerate(targets) for b in targets[i + 1:]]
    out += [Estimand(COVARIANCE, p) for p in pairs]
    out += [Estimand(CORRELATION, p) for p in pairs]
    return out


def estimate(dataset: np.ndarray, estimand: Estimand) -> tuple[float, float]:
    """Point estimate and standard error on one complete data set.

    Correlations return the raw coefficient with the standard error of its
    Fisher-z transform, ``1/sqrt(N-3)``, and so need at least four rows.
    """
    X = np.asarray(dataset, dtype=float)
    n = X.shape[0]
    need = 4 if estimand.kind == CORRELATION else 2
    if n < need:
        raise DegenerateSample(f"{estimand.kind} needs at least {need} rows, got {n}")
    x = X[:, estimand.columns[0]]
    if estimand.kind == MEAN:
        return float(x.mean()), float(x.std(ddof=1) / math.sqrt(n))
    if estimand.kind == VARIANCE:
        s2 = float(x.var(ddof=1))
        return s2, s2 * math.sqrt(2.0 / (n - 1))
    y = X[:, estimand.columns[1]]
    dx, dy = x - x.mean(), y - y.mean()
    if estimand.kind == COVARIANCE:
        cov = float(dx @ dy) / (n - 1)
        prod = dx * dy
        se = math.sqrt(max(float(np.mean((prod - prod.mean()) ** 2)), 0.0) / n)
        return cov, se
    r = float(dx @ dy) / math.sqrt(float(dx @ dx) * float(dy @ dy))
    return max(-1.0, min(1.0, r)), 1.0 / math.sqrt(n - 3)


@dataclass(frozen=True)
class PooledEstimate:
    point: float
    within: float
    between: float
    total: float
    df: float
    ci_lower: float
    ci_upper: float
    level: float = 0.95
    n_imputations: int = 1


def pool(points: Sequence[float], ses: Sequence[float], fisher_z: bool = False,
         level: float = 0.95) -> PooledEstimate:
    """Combine per-imputation estimates with Rubin's rules.

    With ``fisher_z`` the points are correlations: they are pooled on the
    z scale (``ses`` already on that scale) and the point and interval are
    transformed back. ``within``/``between``/``total`` stay on the pooling
    scale. A zero between-imputation variance gives infinite degrees of
    freedom and a normal quantile.
    """
    q = np.asarray(points, dtype=float)
    u = np.asarray(ses, dtype=float) ** 2
    d = q.shape[0]
    if d < 1 or u.shape[0] != d:
        raise ValueError("need matching, non-empty points and ses")
    if fisher_z:
        q = np.arctanh(np.clip(q, -_Z_CLIP, _Z_CLIP))
    qbar = float(q.mean())
    ubar = float(u.mean())
    b = float(q.var(ddof=1)) if d > 1 else 0.0
    t = ubar + (1.0 + 1.0 / d) * b
    df = math.inf
    if b > 0:
        try:
            df = (d - 1) * (1.0 + ubar / ((1.0 + 1.0 / d) * b)) ** 2
        except OverflowError:
            pass  # B negligible next to U
    if math.isfinite(df):
        crit = float(stats.t.ppf(0.5 + level / 2, df))
    else:
        crit = float(stats.norm.ppf(0.5 + level / 2))
    half = crit * math.sqrt(t)
    lo, hi, point = qbar - half, qbar + half, qbar
    if fisher_z:
        lo, hi, point = math.tanh(lo), math.tanh(hi), math.tanh(qbar)
    if d == 1:
        point = float(points[0])
    return PooledEstimate(point, ubar, b, t, df, lo, hi, level, d)


def pool_datasets(datasets: Iterable[np.ndarray], estimand: Estimand,
                  level: float = 0.95) -> PooledEstimate:
    ests = [estimate(ds, estimand) for ds in datasets]
    return pool([e[0] for e in ests], [e[1] for e in ests], estimand.fisher_z, level)


def prb(pooled_points: Sequence[float], truth: float) -> float:
    """Absolute percent relative bias of the across-replication mean."""
    if truth == 0:
        raise ZeroTruth("relative bias undefined for a zero true value")
    return abs((float(np.mean(pooled_points)) - truth) / truth) * 100.0


def ciw(lower: Sequence[float], upper: Sequence[float]) -> float:
    """Average confidence interval width."""
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    if lower.size == 0:
        raise ValueError("no intervals")
    return float(np.mean(upper - lower))


def cic(lower: Sequence[float], upper: Sequence[float], truth: float) -> float:
    """Share of intervals containing ``truth`` (endpoints count as covered)."""
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    if lower.size == 0:
        raise ValueError("no intervals")
    return float(np.mean((lower <= truth) & (truth <= upper)))


@dataclass(frozen=True)
class MetricRow:
    condition: tuple
    estimand: str
    prb: float | None
    ciw: float | None
    cic: float | None
    n_ok: int

    @property
    def problematic(self) -> bool:
        return (self.prb is not None and self.prb > PRB_LIMIT) or \
               (self.cic is not None and self.cic < CIC_LIMIT)
