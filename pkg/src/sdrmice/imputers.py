"""Univariate imputation methods.

Each ``impute_*`` function takes the current values of one target column,
its missingness mask and a fully completed predictor matrix, and returns a
stochastic draw for the masked rows only. Parameter uncertainty comes from
a bootstrap of the observed rows; every random number is taken from the
generator passed in. The order of consumption is fixed: bootstrap indices,
then cross-validation folds (SPCR only, and only when thresholds compete),
then the residual noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import dimred
from .data import DataMatrix
from .errors import (InfeasibleComponents, SingularDesign, TooFewObserved)

PCR = "PCR"
SPCR = "SPCR"
PCOVR = "PCovR"
PLSR = "PLSR"
ALL = "ALL"
QP = "QP"
AM = "AM"

COMPONENT_METHODS = (PCR, SPCR, PCOVR, PLSR)
NORMAL_METHODS = (ALL, QP, AM)

DEFAULT_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))
MAX_BOOT_RETRIES = 25


@dataclass(frozen=True)
class ImputerSpec:
    """Configuration of the univariate imputation model.

    Fields that do not apply to ``method`` must be left as ``None``; the
    SPCR grid and fold count and the quickpred threshold get their defaults
    filled in.
    """

    method: str
    n_components: Optional[int] = None
    threshold_grid: Optional[tuple[float, ...]] = None
    cv_folds: Optional[int] = None
    qp_threshold: Optional[float] = None
    am_columns: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        m = self.method
        if m not in COMPONENT_METHODS + NORMAL_METHODS:
            raise ValueError(f"unknown imputation method {m!r}")
        if m in COMPONENT_METHODS:
            if self.n_components is None or int(self.n_components) < 1:
                raise ValueError(f"{m} needs n_components >= 1")
        elif self.n_components is not None:
            raise ValueError(f"n_components does not apply to {m}")
        if m == SPCR:
            grid = DEFAULT_GRID if self.threshold_grid is None else self.threshold_grid
            object.__setattr__(self, "threshold_grid", tuple(float(g) for g in grid))
            object.__setattr__(self, "cv_folds", 5 if self.cv_folds is None else int(self.cv_folds))
            if not self.threshold_grid:
                raise ValueError("SPCR needs a non-empty threshold grid")
        elif self.threshold_grid is not None or self.cv_folds is not None:
            raise ValueError("threshold_grid/cv_folds only apply to SPCR")
        if m == QP:
            object.__setattr__(self, "qp_threshold",
                               0.1 if self.qp_threshold is None else float(self.qp_threshold))
        elif self.qp_threshold is not None:
            raise ValueError("qp_threshold only applies to QP")
        if m == AM and not self.am_columns:
            raise ValueError("AM needs am_columns")
        if m not in (AM, QP) and self.am_columns is not None:
            raise ValueError("am_columns only apply to AM and QP")
        if self.am_columns is not None:
            object.__setattr__(self, "am_columns", tuple(int(c) for c in self.am_columns))


@dataclass
class ImputationDraw:
    values: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _empty_draw() -> ImputationDraw:
    return ImputationDraw(np.empty(0), {})


def _bootstrap(target, missing, predictors, rng, min_obs):
    y = np.asarray(target, dtype=float)
    miss = np.asarray(missing, dtype=bool)
    X = np.asarray(predictors, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("predictors must have one row per target entry")
    y_obs, X_obs = y[~miss], X[~miss]
    n_obs = y_obs.shape[0]
    if n_obs < min_obs:
        raise TooFewObserved(f"{n_obs} observed rows, need at least {min_obs}")
    idx = rng.integers(0, n_obs, size=n_obs)
    return y_obs[idx], X_obs[idx], X[miss]


def _drop_constant(Xb):
    """Indices of bootstrap predictor columns that still vary."""
    sd = Xb.std(axis=0, ddof=1)
    scale = np.maximum(np.abs(Xb.mean(axis=0)), 1.0)
    return np.flatnonzero(sd > 1e-12 * scale)


def _prepare(target, missing, predictors, Q, rng):
    """Bootstrap, drop degenerate columns, standardize, center the outcome."""
    yb, Xb, Xmis = _bootstrap(target, missing, predictors, rng, Q + 2)
    keep = _drop_constant(Xb)
    if Q > keep.size:
        raise InfeasibleComponents(
            f"{Q} components requested but only {keep.size} usable predictors")
    Xs, stats = dimred.standardize(Xb[:, keep])
    ybar = float(yb.mean())
    return Xs, yb - ybar, ybar, stats.apply(Xmis[:, keep]), keep, stats


def _noisy(pred, sigma2, ybar, rng):
    return pred + np.sqrt(max(sigma2, 0.0)) * rng.standard_normal(pred.shape[0]) + ybar


def impute_pcr(target, missing, predictors, n_components: int,
               rng: np.random.Generator) -> ImputationDraw:
    """Bootstrap PCR imputation."""
    if not np.any(missing):
        return _empty_draw()
    Xs, yc, ybar, Xmis, keep, _ = _prepare(target, missing, predictors, n_components, rng)
    model = dimred.fit_pcr(Xs, yc, n_components)
    values = _noisy(model.predict_std(Xmis), model.residual_variance, ybar, rng)
    return ImputationDraw(values, {"n_active": int(keep.size),
                                   "sigma2": model.residual_variance})


def impute_spcr(target, missing, predictors, n_components: int,
                grid: Sequence[float], cv_folds: int,
                rng: np.random.Generator) -> ImputationDraw:
    """Bootstrap supervised PCR: screen by correlation, pick the threshold by CV."""
    if not np.any(missing):
        return _empty_draw()
    Xs, yc, ybar, Xmis, keep, _ = _prepare(target, missing, predictors, n_components, rng)
    rho, active = dimred.cv_select_threshold(Xs, yc, n_components, grid, cv_folds, rng)
    model = dimred.fit_pcr(Xs[:, active], yc, n_components)
    values = _noisy(model.predict_std(Xmis[:, active]), model.residual_variance, ybar, rng)
    return ImputationDraw(values, {"rho": rho, "n_active": len(active),
                                   "active_set": [int(keep[a]) for a in active],
                                   "sigma2": model.residual_variance})


def impute_pcovr(target, missing, predictors, n_components: int,
                 rng: np.random.Generator) -> ImputationDraw:
    """Bootstrap PCovR imputation with the ML weighting parameter."""
    if not np.any(missing):
        return _empty_draw()
    Xs, yc, ybar, Xmis, keep, _ = _prepare(target, missing, predictors, n_components, rng)
    alpha = dimred.alpha_ml(Xs, yc, n_components)
    model = dimred.fit_pcovr(Xs, yc, n_components, alpha)
    values = _noisy(model.predict_std(Xmis), model.residual_variance, ybar, rng)
    return ImputationDraw(values, {"alpha": alpha, "n_active": int(keep.size),
                                   "sigma2": model.residual_variance})


def impute_plsr(target, missing, predictors, n_components: int,
                rng: np.random.Generator) -> ImputationDraw:
    """Bootstrap PLS regression imputation (naive degrees of freedom)."""
    if not np.any(missing):
        return _empty_draw()
    Xs, yc, ybar, Xmis, keep, _ = _prepare(target, missing, predictors, n_components, rng)
    model = dimred.fit_pls(Xs, yc, n_components)
    values = _noisy(model.predict_std(Xmis), model.residual_variance, ybar, rng)
    first = np.zeros(np.asarray(predictors).shape[1])
    first[keep] = model.weights[:, 0]
    return ImputationDraw(values, {"n_active": int(keep.size), "first_weight": first,
                                   "sigma2": model.residual_variance})


def impute_normlinear(target, missing, predictors, rng: np.random.Generator) -> ImputationDraw:
    """Bootstrap normal linear model with intercept on the given predictors."""
    if not np.any(missing):
        return _empty_draw()
    X = np.asarray(predictors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    p = X.shape[1]
    for _ in range(MAX_BOOT_RETRIES):
        yb, Xb, Xmis = _bootstrap(target, missing, X, rng, p + 2)
        design = np.column_stack([np.ones(yb.shape[0]), Xb])
        coef, _, rank, _ = np.linalg.lstsq(design, yb, rcond=None)
        if rank == p + 1:
            break
    else:
        raise SingularDesign(f"design rank deficient in {MAX_BOOT_RETRIES} bootstraps")
    resid = yb - design @ coef
    sigma2 = float(resid @ resid) / (yb.shape[0] - p - 1)
    pred = coef[0] + Xmis @ coef[1:]
    values = pred + np.sqrt(sigma2) * rng.standard_normal(pred.shape[0])
    return ImputationDraw(values, {"n_active": p, "sigma2": sigma2})


def _pairwise_corr(a, b):
    ac, bc = a - a.mean(), b - b.mean()
    denom = np.sqrt((ac @ ac) * (bc @ bc))
    return float(ac @ bc) / denom if denom > 0 else 0.0


def quickpred_select(data: DataMatrix, target_index: int,
                     threshold: float = 0.1) -> list[int]:
    """Predictors correlated with the target or its missingness indicator.

    A column qualifies when its absolute correlation with the target
    (pairwise-complete rows) or with the target's missingness indicator
    (rows where the column is observed) exceeds ``threshold``.
    """
    j = target_index
    if (~data.mask[:, j]).sum() < 2:
        raise TooFewObserved(f"target {j} has fewer than two observed values")
    indicator = data.mask[:, j].astype(float)
    selected = []
    for k in range(data.n_cols):
        if k == j:
            continue
        col_obs = ~data.mask[:, k]
        both = col_obs & ~data.mask[:, j]
        r_val = _pairwise_corr(data.values[both, j], data.values[both, k]) if both.sum() > 2 else 0.0
        r_ind = _pairwise_corr(indicator[col_obs], data.values[col_obs, k]) if col_obs.sum() > 2 else 0.0
        if abs(r_val) > threshold or abs(r_ind) > threshold:
            selected.append(k)
    return selected


def select_predictors(spec: ImputerSpec, data: DataMatrix, target_index: int) -> list[int]:
    """Columns used as predictors when imputing ``target_index``."""
    others = [k for k in range(data.n_cols) if k != target_index]
    if spec.method == AM:
        return [k for k in spec.am_columns if k != target_index]
    if spec.method == QP:
        chosen = quickpred_select(data, target_index, spec.qp_threshold)
        if chosen:
            return chosen
        if spec.am_columns:
            return [k for k in spec.am_columns if k != target_index]
        return others
    return others


def draw(spec: ImputerSpec, target, missing, predictors,
         rng: np.random.Generator) -> ImputationDraw:
    """Dispatch one imputation draw according to ``spec``."""
    m = spec.method
    if m == PCR:
        return impute_pcr(target, missing, predictors, spec.n_components, rng)
    if m == SPCR:
        return impute_spcr(target, missing, predictors, spec.n_components,
                           spec.threshold_grid, spec.cv_folds, rng)
    if m == PCOVR:
        return impute_pcovr(target, missing, predictors, spec.n_components, rng)
    if m == PLSR:
        return impute_plsr(target, missing, predictors, spec.n_components, rng)
    return impute_normlinear(target, missing, predictors, rng)
