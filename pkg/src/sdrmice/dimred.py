"""Dimensionality-reduction estimators on fully observed numeric matrices.

All functions are pure: inputs are never modified and randomness only enters
through an explicitly passed ``numpy.random.Generator``.

Conventions
-----------
``X_std`` is column-standardized (mean 0, sample variance 1) and ``y`` is
mean-centered. Every fitted model exposes ``weights`` such that the score
matrix is ``T = X_std @ weights`` and in-sample predictions are
``T @ coefficients``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (ConstantColumn, DeflationCollapse, DegenerateDof,
                     DegenerateOutcomeWarning, NoFeasibleThreshold,
                     RankDeficient)

ORTHO_TOL = 1e-8
# relative eigenvalue cut-off below which a direction counts as null
RANK_TOL = 1e-10
ALPHA_FLOOR = 1e-12

PCA = "PCA"
SPCR = "SPCR"
PCOVR = "PCovR"
PLS = "PLS"


@dataclass(frozen=True)
class StandardizationStats:
    means: np.ndarray
    sds: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.means) / self.sds

    def subset(self, columns: Sequence[int]) -> "StandardizationStats":
        idx = np.asarray(columns, dtype=int)
        return StandardizationStats(self.means[idx], self.sds[idx])


@dataclass(frozen=True)
class ComponentModel:
    """Result of a component fit.

    ``coefficients`` is the regression of the outcome on the scores: the PCR
    slopes for PCA/SPCR, ``P_y`` for PCovR and the inner-relation
    coefficients for PLS. It is ``None`` for a bare :func:`fit_pca`.
    """

    weights: np.ndarray
    loadings: np.ndarray
    n_components: int
    kind: str
    active_set: tuple[int, ...]
    outcome_loadings: Optional[np.ndarray] = None
    coefficients: Optional[np.ndarray] = None
    residual_variance: Optional[float] = None
    stats: Optional[StandardizationStats] = None
    outcome_mean: float = 0.0
    alpha: Optional[float] = None
    selected_threshold: Optional[float] = None
    eigenvalues: Optional[np.ndarray] = None

    def scores(self, X_std: np.ndarray) -> np.ndarray:
        return np.asarray(X_std, dtype=float) @ self.weights

    def predict_std(self, X_std: np.ndarray) -> np.ndarray:
        """Centered-outcome predictions from already standardized rows."""
        if self.coefficients is None:
            raise ValueError("model has no regression part")
        return self.scores(X_std) @ self.coefficients

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Outcome predictions for raw rows of the full predictor matrix.

        Uses the stored standardization statistics and keeps only the
        columns in ``active_set``.
        """
        if self.stats is None:
            raise ValueError("model carries no standardization statistics")
        X = np.asarray(X, dtype=float)
        Xs = self.stats.apply(X)[:, list(self.active_set)]
        return self.predict_std(Xs) + self.outcome_mean


def standardize(X: np.ndarray) -> tuple[np.ndarray, StandardizationStats]:
    """Center and scale every column to mean 0 and sample variance 1."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-d matrix with at least two rows")
    means = X.mean(axis=0)
    sds = X.std(axis=0, ddof=1)
    scale = np.maximum(np.abs(means), 1.0)
    bad = np.flatnonzero(~(sds > 1e-12 * scale))
    if bad.size:
        raise ConstantColumn(int(bad[0]))
    return (X - means) / sds, StandardizationStats(means, sds)


def fix_signs(W: np.ndarray) -> np.ndarray:
    """Flip columns so that each one's largest-magnitude entry is positive."""
    W = np.array(W, dtype=float, copy=True)
    if W.size == 0:
        return W
    pivot = W[np.argmax(np.abs(W), axis=0), np.arange(W.shape[1])]
    W *= np.where(pivot < 0, -1.0, 1.0)
    return W


def _eigen_cross_product(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of ``X'X`` in descending order.

    Symmetric eigen-solver on the P x P cross-product when N >= P, thin SVD
    of X otherwise.
    """
    n, p = X.shape
    if n >= p:
        vals, vecs = np.linalg.eigh(X.T @ X)
        order = np.argsort(vals)[::-1]
        return np.clip(vals[order], 0.0, None), vecs[:, order]
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    return s ** 2, vt.T


def _n_positive(vals: np.ndarray) -> int:
    if vals.size == 0 or vals[0] <= 0:
        return 0
    return int(np.sum(vals > RANK_TOL * vals[0]))


def _check_q(Q: int, n: int, p: int) -> None:
    if not 1 <= Q <= min(n - 1, p):
        raise RankDeficient(f"need 1 <= Q <= min(N-1, P) = {min(n - 1, p)}, got Q={Q}")


def fit_pca(X_std: np.ndarray, Q: int) -> ComponentModel:
    """Top-``Q`` principal axes of the cross-product matrix of ``X_std``."""
    X = np.asarray(X_std, dtype=float)
    n, p = X.shape
    _check_q(Q, n, p)
    vals, vecs = _eigen_cross_product(X)
    if _n_positive(vals) < Q:
        raise RankDeficient(f"only {_n_positive(vals)} positive eigenvalues, Q={Q}")
    W = fix_signs(vecs[:, :Q])
    return ComponentModel(weights=W, loadings=W, n_components=Q, kind=PCA,
                          active_set=tuple(range(p)), eigenvalues=vals[:Q])


def _residual_variance(y, fitted, dof):
    resid = y - fitted
    return float(resid @ resid) / dof


def fit_pcr(X_std: np.ndarray, y_centered: np.ndarray, Q: int) -> ComponentModel:
    """Principal component regression with ``Q`` components.

    The residual variance uses ``N - Q`` degrees of freedom.
    """
    X = np.asarray(X_std, dtype=float)
    y = np.asarray(y_centered, dtype=float)
    n = X.shape[0]
    if y.shape != (n,):
        raise ValueError("y must be a vector with one entry per row of X")
    model = fit_pca(X, Q)
    if n <= Q:
        raise DegenerateDof(f"N={n} <= Q={Q}")
    T = X @ model.weights
    beta = np.linalg.solve(T.T @ T, T.T @ y)
    sigma2 = _residual_variance(y, T @ beta, n - Q)
    return replace(model, coefficients=beta, residual_variance=sigma2)


def predictor_correlations(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sample correlation of each column of ``X`` with ``y``.

    Columns (or an outcome) with zero variance get correlation 0.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    denom = np.sqrt(np.einsum("ij,ij->j", Xc, Xc) * (yc @ yc))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (Xc.T @ yc) / denom
    return np.where(denom > 0, r, 0.0)


def screen_predictors(X_std: np.ndarray, y_centered: np.ndarray,
                      threshold: float) -> list[int]:
    """Columns whose absolute correlation with ``y`` is strictly above ``threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    r = np.abs(predictor_correlations(X_std, y_centered))
    return [int(j) for j in np.flatnonzero(r > threshold)]


def _feasible_sets(abs_r, Q, grid):
    """Map each feasible grid value to its active set, in grid order."""
    out = []
    for rho in grid:
        if not 0.0 <= rho <= 1.0:
            raise ValueError(f"threshold {rho} outside [0, 1]")
        active = tuple(int(j) for j in np.flatnonzero(abs_r > rho))
        if len(active) >= Q:
            out.append((float(rho), active))
    return out


def cv_select_threshold(X_std: np.ndarray, y_centered: np.ndarray, Q: int,
                        grid: Sequence[float], K: int = 5,
                        rng: Optional[np.random.Generator] = None,
                        ) -> tuple[float, list[int]]:
    """Pick the screening threshold by K-fold cross-validated PCR error.

    Only thresholds that keep at least ``Q`` columns are compared. The error
    is the mean squared prediction error over all held-out rows, with the
    predictors re-standardized inside every training fold. Ties go to the
    larger threshold. When every feasible threshold yields the same active
    set no folds are drawn and ``rng`` is left untouched.
    """
    X = np.asarray(X_std, dtype=float)
    y = np.asarray(y_centered, dtype=float)
    if len(grid) == 0:
        raise ValueError("threshold grid is empty")
    if K < 2:
        raise ValueError("need at least two folds")
    n = X.shape[0]
    abs_r = np.abs(predictor_correlations(X, y))
    feasible = _feasible_sets(abs_r, Q, grid)
    if not feasible:
        raise NoFeasibleThreshold(
            f"no threshold in the grid keeps at least {Q} of {X.shape[1]} predictors")
    distinct = sorted({active for _, active in feasible}, key=len)
    if len(distinct) == 1:
        rho = max(r for r, _ in feasible)
        return rho, list(distinct[0])
    if rng is None:
        raise ValueError("an rng is required when several thresholds compete")
    if n < K:
        raise ValueError(f"cannot split {n} rows into {K} folds")

    folds = np.array_split(rng.permutation(n), K)
    sse = {active: 0.0 for active in distinct}
    for test in folds:
        train = np.ones(n, dtype=bool)
        train[test] = False
        Xtr, ytr = X[train], y[train]
        mu, sd = Xtr.mean(axis=0), Xtr.std(axis=0, ddof=1)
        sd = np.where(sd > 0, sd, 1.0)
        Xtr = (Xtr - mu) / sd
        Xte = (X[test] - mu) / sd
        ybar = ytr.mean()
        ytr = ytr - ybar
        cross = Xtr.T @ Xtr
        xy = Xtr.T @ ytr
        for active in distinct:
            if sse[active] == np.inf:
                continue
            idx = list(active)
            if Q > min(Xtr.shape[0] - 1, len(idx)):
                sse[active] = np.inf
                continue
            vals, vecs = np.linalg.eigh(cross[np.ix_(idx, idx)])
            vals, vecs = vals[::-1][:Q], vecs[:, ::-1][:, :Q]
            if vals[-1] <= RANK_TOL * max(vals[0], 0.0) or vals[0] <= 0:
                sse[active] = np.inf
                continue
            gamma = (vecs.T @ xy[idx]) / vals
            pred = Xte[:, idx] @ (vecs @ gamma) + ybar
            err = y[test] - pred
            sse[active] += float(err @ err)

    best_rho, best_active, best_err = None, None, np.inf
    for rho, active in feasible:
        err = sse[active] / n
        if best_rho is None or err < best_err or (err == best_err and rho > best_rho):
            best_rho, best_active, best_err = rho, active, err
    if not np.isfinite(best_err):
        raise NoFeasibleThreshold("every feasible active set was rank deficient in some fold")
    return best_rho, list(best_active)


def alpha_ml(X_std: np.ndarray, y_centered: np.ndarray, Q: int,
             floor: float = ALPHA_FLOOR) -> float:
    """Maximum-likelihood weighting between predictor and outcome fit.

    ``alpha = |X|^2 / (|X|^2 + |y|^2 * s2_x / s2_y)`` where ``s2_x`` is the
    per-element variance left unexplained by a ``Q``-component PCA of X and
    ``s2_y`` the per-row residual variance of the OLS regression of y on X.
    A near-perfect OLS fit floors ``s2_y`` at ``floor`` and warns.
    """
    X = np.asarray(X_std, dtype=float)
    y = np.asarray(y_centered, dtype=float)
    n, p = X.shape
    vals, _ = _eigen_cross_product(X)
    if _n_positive(vals) < Q:
        raise RankDeficient(f"rank {_n_positive(vals)} < Q={Q}")
    ss_x = float(np.sum(X * X))
    s2_x = max(float(np.sum(vals[Q:])), 0.0) / (n * p)
    if s2_x == 0.0:
        return 1.0
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    s2_y = float(resid @ resid) / n
    if s2_y < floor:
        warnings.warn("outcome perfectly explained by predictors; flooring its "
                      "residual variance", DegenerateOutcomeWarning, stacklevel=2)
        s2_y = floor
    return ss_x / (ss_x + float(y @ y) * s2_x / s2_y)


def pcovr_objective(X_std: np.ndarray, y_centered: np.ndarray, T: np.ndarray,
                    alpha: float) -> float:
    """Weighted, block-normalized reconstruction loss of orthonormal scores ``T``."""
    X = np.asarray(X_std, dtype=float)
    y = np.asarray(y_centered, dtype=float)
    ex = X - T @ (T.T @ X)
    ey = y - T @ (T.T @ y)
    yy = float(y @ y)
    loss = alpha * float(np.sum(ex * ex)) / float(np.sum(X * X))
    if yy > 0:
        loss += (1.0 - alpha) * float(ey @ ey) / yy
    return loss


def fit_pcovr(X_std: np.ndarray, y_centered: np.ndarray, Q: int,
              alpha: float) -> ComponentModel:
    """Principal covariates regression with ``Q`` components.

    The scores are the top eigenvectors of
    ``alpha XX'/|X|^2 + (1 - alpha) yhat yhat'/|y|^2`` with ``yhat`` the
    projection of y on the column space of X. That matrix lives in the
    column space of X, so the eigenproblem is solved in the rank-sized
    basis of the thin SVD instead of at N x N.
    """
    X = np.asarray(X_std, dtype=float)
    y = np.asarray(y_centered, dtype=float)
    n, p = X.shape
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    _check_q(Q, n, p)
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    r = _n_positive(s ** 2)
    if r < Q:
        raise RankDeficient(f"rank {r} < Q={Q}")
    U, s, V = U[:, :r], s[:r], Vt[:r].T
    u = U.T @ y
    yy = float(y @ y)
    M = alpha * np.diag(s ** 2) / float(np.sum(s ** 2))
    if yy > 0:
        M = M + (1.0 - alpha) * np.outer(u, u) / yy
    vals, vecs = np.linalg.eigh(M)
    E = vecs[:, ::-1][:, :Q]
    W = V @ (E / s[:, None])
    pivot = W[np.argmax(np.abs(W), axis=0), np.arange(Q)]
    signs = np.where(pivot < 0, -1.0, 1.0)
    W = W * signs
    T = U @ (E * signs)
    Px = X.T @ T
    Py = T.T @ y
    if n <= Q:
        raise DegenerateDof(f"N={n} <= Q={Q}")
    sigma2 = _residual_variance(y, T @ Py, n - Q)
    return ComponentModel(weights=W, loadings=Px, outcome_loadings=Py,
                          coefficients=Py, residual_variance=sigma2,
                          n_components=Q, kind=PCOVR, active_set=tuple(range(p)),
                          alpha=float(alpha), eigenvalues=vals[::-1][:Q])


def fit_pls(X_std: np.ndarray, y_centered: np.ndarray, Q: int) -> ComponentModel:
    """PLS1 regression with ``Q`` components, one component at a time.

    Each raw weight vector is proportional to ``X_q' y`` where ``X_q`` is X
    deflated against the previous scores. If the outcome is exhausted before
    ``Q`` components, the remaining weights follow the leading axis of the
    deflated matrix; they carry zero outcome coefficient. ``weights`` holds
    the rotations ``W (P'W)^-1`` so that ``T = X @ weights`` on undeflated X.
    The residual variance uses the naive ``N - Q - 1`` degrees of freedom.
    """
    X = np.asarray(X_std, dtype=float)
    y = np.asarray(y_centered, dtype=float)
    n, p = X.shape
    _check_q(Q, n, p)
    if n <= Q + 1:
        raise DegenerateDof(f"N={n} <= Q+1={Q + 1}")
    norm_x = np.linalg.norm(X)
    scale_y = norm_x * np.linalg.norm(y)
    Xq = X.copy()
    W_raw = np.empty((p, Q))
    P = np.empty((p, Q))
    c = np.empty(Q)
    for q in range(Q):
        if np.linalg.norm(Xq) <= RANK_TOL * norm_x:
            raise DeflationCollapse(f"deflated matrix vanished after {q} components")
        w = Xq.T @ y
        if np.linalg.norm(w) <= RANK_TOL * scale_y:
            w = np.linalg.svd(Xq, full_matrices=False)[2][0]
        w = fix_signs((w / np.linalg.norm(w))[:, None])[:, 0]
        t = Xq @ w
        tt = float(t @ t)
        if tt <= (RANK_TOL * norm_x) ** 2:
            raise DeflationCollapse(f"score {q + 1} has zero variance")
        P[:, q] = Xq.T @ t / tt
        c[q] = float(t @ y) / tt
        W_raw[:, q] = w
        Xq -= np.outer(t, P[:, q])
    R = W_raw @ np.linalg.inv(P.T @ W_raw)
    T = X @ R
    sigma2 = _residual_variance(y, T @ c, n - Q - 1)
    return ComponentModel(weights=R, loadings=P, outcome_loadings=c,
                          coefficients=c, residual_variance=sigma2,
                          n_components=Q, kind=PLS, active_set=tuple(range(p)))
