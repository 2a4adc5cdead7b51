"""MCAR and logistic MAR amputation of target columns."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .data import DataMatrix

MCAR = "MCAR"
MAR = "MAR"
RIGHT, LEFT, TAILS = "right", "left", "tails"

BRACKET = 20.0
PROPORTION_TOL = 1e-6


@dataclass(frozen=True)
class MissingnessSpec:
    mechanism: str = MAR
    pm: float = 0.5
    targets: tuple[int, ...] = (0, 1, 2)
    predictors: tuple[int, ...] = (3, 4, 5)
    locations: tuple[str, ...] = (RIGHT, LEFT, TAILS)
    seed: Optional[int] = None

    def __post_init__(self):
        if self.mechanism not in (MCAR, MAR):
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if not 0.0 <= self.pm < 1.0:
            raise ValueError("pm must lie in [0, 1)")
        if set(self.targets) & set(self.predictors):
            raise ValueError("targets and predictors overlap")
        if len(self.locations) != len(self.targets):
            raise ValueError("need one location per target")
        for loc in self.locations:
            if loc not in (RIGHT, LEFT, TAILS):
                raise ValueError(f"unknown location {loc!r}")


def _rng(spec, rng):
    return np.random.default_rng(spec.seed) if rng is None else rng


def ampute_mcar(data: DataMatrix, spec: MissingnessSpec,
                rng: Optional[np.random.Generator] = None) -> DataMatrix:
    """Mask each target cell independently with probability ``pm``."""
    rng = _rng(spec, rng)
    mask = data.mask.copy()
    for j in spec.targets:
        mask[:, j] |= rng.random(data.n_rows) < spec.pm
    return data.with_mask(mask)


def expected_proportion(intercept: float, linear_predictor: np.ndarray) -> float:
    return float(expit(intercept + linear_predictor).mean())


def calibrate_intercept(linear_predictor: np.ndarray, pm: float) -> float:
    """Intercept whose expected missing proportion equals ``pm``.

    Bisection on the increasing map ``b -> mean(logistic(b + eta))``; the
    bracket starts at +/-20 and doubles until it straddles ``pm``.
    """
    if not 0.0 < pm < 1.0:
        raise ValueError("pm must lie in (0, 1)")
    eta = np.asarray(linear_predictor, dtype=float)
    lo, hi = -BRACKET, BRACKET
    while expected_proportion(lo, eta) > pm:
        lo *= 2
    while expected_proportion(hi, eta) < pm:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        got = expected_proportion(mid, eta)
        if abs(got - pm) < PROPORTION_TOL * 1e-3 or hi - lo < 1e-15:
            return mid
        if got < pm:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mar_linear_predictor(data: DataMatrix, predictors: Sequence[int], location: str) -> np.ndarray:
    """Standardized missingness score for one target.

    The raw score is the sum of the predictor columns (all slopes 1); the
    location decides its direction: ``right`` keeps it, ``left`` negates it,
    ``tails`` takes the absolute distance from its median.
    """
    s = data.values[:, list(predictors)].sum(axis=1)
    if location == RIGHT:
        score = s
    elif location == LEFT:
        score = -s
    elif location == TAILS:
        score = np.abs(s - np.median(s))
    else:
        raise ValueError(f"unknown location {location!r}")
    return (score - score.mean()) / score.std(ddof=1)


def ampute_mar(data: DataMatrix, spec: MissingnessSpec,
               rng: Optional[np.random.Generator] = None) -> DataMatrix:
    """Logistic MAR missingness on the targets driven by the predictor columns."""
    rng = _rng(spec, rng)
    if data.mask[:, list(spec.predictors)].any():
        raise ValueError("missingness predictors must be fully observed")
    mask = data.mask.copy()
    for j, loc in zip(spec.targets, spec.locations):
        if spec.pm == 0.0:
            continue
        eta = mar_linear_predictor(data, spec.predictors, loc)
        b0 = calibrate_intercept(eta, spec.pm)
        mask[:, j] |= rng.random(data.n_rows) < expit(b0 + eta)
    return data.with_mask(mask)


def ampute(data: DataMatrix, spec: MissingnessSpec,
           rng: Optional[np.random.Generator] = None) -> DataMatrix:
    if spec.mechanism == MCAR:
        return ampute_mcar(data, spec, rng)
    return ampute_mar(data, spec, rng)
