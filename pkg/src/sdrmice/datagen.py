"""Confirmatory factor model data: ``Z = F Lambda' + E`` with simple structure."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import DataMatrix
from .errors import NotPositiveDefinite


@dataclass(frozen=True)
class FactorSpec:
    n_rows: int = 1000
    n_latent: int = 2
    items_per_latent: int = 3
    loading: float = 0.85
    corr_12: float = 0.8
    corr_other: float = 0.1
    target_mean: float = 5.0
    target_var: float = 6.5
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.loading < 1.0:
            raise ValueError("loading must lie in (0, 1)")
        if self.n_latent < 2 or self.items_per_latent < 1 or self.n_rows < 2:
            raise ValueError("need n_latent >= 2, items_per_latent >= 1, n_rows >= 2")
        if self.target_var <= 0:
            raise ValueError("target_var must be positive")

    @property
    def n_items(self) -> int:
        return self.n_latent * self.items_per_latent


def build_psi(spec: FactorSpec) -> np.ndarray:
    """Latent correlation matrix: 0.8 between factors 1 and 2, 0.1 elsewhere."""
    L = spec.n_latent
    psi = np.full((L, L), spec.corr_other)
    psi[0, 1] = psi[1, 0] = spec.corr_12
    np.fill_diagonal(psi, 1.0)
    if np.linalg.eigvalsh(psi)[0] <= 0:
        raise NotPositiveDefinite("latent correlation matrix is not positive definite")
    return psi


def loading_matrix(spec: FactorSpec) -> np.ndarray:
    """P x L simple-structure loadings; item ``k`` loads on factor ``k // items``."""
    lam = np.zeros((spec.n_items, spec.n_latent))
    for k in range(spec.n_items):
        lam[k, k // spec.items_per_latent] = spec.loading
    return lam


def implied_correlation(spec: FactorSpec) -> np.ndarray:
    lam = loading_matrix(spec)
    sigma = lam @ build_psi(spec) @ lam.T
    np.fill_diagonal(sigma, 1.0)
    return sigma


def generate(spec: FactorSpec, rng: Optional[np.random.Generator] = None) -> DataMatrix:
    """Draw one fully observed N x 3L data set.

    Columns are rescaled exactly (per sample) to the target mean and
    variance, which leaves the correlation structure untouched.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    psi = build_psi(spec)
    lam = loading_matrix(spec)
    chol = np.linalg.cholesky(psi)
    F = rng.standard_normal((spec.n_rows, spec.n_latent)) @ chol.T
    E = rng.standard_normal((spec.n_rows, spec.n_items)) * np.sqrt(1.0 - spec.loading ** 2)
    Z = F @ lam.T + E
    Z = (Z - Z.mean(axis=0)) / Z.std(axis=0, ddof=1)
    Z = spec.target_mean + np.sqrt(spec.target_var) * Z
    return DataMatrix(Z, None, tuple(f"z{k + 1}" for k in range(spec.n_items)))
