"""Chained-equations loop: initialization, iteration, multiple chains."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import imputers
from .data import DataMatrix
from .errors import AllMissingColumn, ChainError, SdrMiceError
from .imputers import ImputationDraw, ImputerSpec

DrawFn = Callable[[ImputerSpec, np.ndarray, np.ndarray, np.ndarray, np.random.Generator],
                  ImputationDraw]


@dataclass(frozen=True)
class MiceConfig:
    imputer: ImputerSpec
    n_imputations: int = 5
    n_iterations: int = 20
    visit_order: Optional[tuple[int, ...]] = None
    seed: int = 0

    def __post_init__(self):
        if self.n_imputations < 1 or self.n_iterations < 1:
            raise ValueError("n_imputations and n_iterations must be >= 1")
        if self.visit_order is not None:
            object.__setattr__(self, "visit_order", tuple(int(j) for j in self.visit_order))


@dataclass
class ChainState:
    """Current completed data of one chain and its convergence trace.

    ``trace_mean[i][k]`` / ``trace_sd[i][k]`` summarize the imputed values of
    ``targets[k]`` at the end of iteration ``i + 1``.
    """

    completed: np.ndarray
    targets: list[int] = field(default_factory=list)
    trace_mean: list[list[float]] = field(default_factory=list)
    trace_sd: list[list[float]] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)

    @property
    def n_iterations(self) -> int:
        return len(self.trace_mean)


@dataclass
class ImputedSet:
    datasets: list[np.ndarray]
    chains: list[ChainState]

    @property
    def traces(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(np.array(c.trace_mean), np.array(c.trace_sd)) for c in self.chains]

    @property
    def diagnostics(self) -> list[list[dict]]:
        return [c.diagnostics for c in self.chains]


def chain_rng(seed: int, chain_index: int) -> np.random.Generator:
    """Independent, reproducible generator for one chain."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chain_index,)))


def initialize(data: DataMatrix, rng: np.random.Generator) -> ChainState:
    """Fill each missing cell with a random draw from its column's observed values."""
    completed = data.values.copy()
    for j in data.incomplete_columns():
        obs = data.observed(j)
        if obs.size == 0:
            raise AllMissingColumn(j)
        miss = data.mask[:, j]
        completed[miss, j] = rng.choice(obs, size=int(miss.sum()), replace=True)
    return ChainState(completed)


def _visit_order(data: DataMatrix, config: MiceConfig) -> list[int]:
    if config.visit_order is None:
        return data.incomplete_columns()
    order = list(config.visit_order)
    for j in order:
        if not data.mask[:, j].any():
            raise ValueError(f"visit_order column {j} has no missing entries")
    return order


def run_chain(data: DataMatrix, config: MiceConfig, rng: np.random.Generator,
              draw: Optional[DrawFn] = None, chain: Optional[int] = None) -> ChainState:
    """Run ``config.n_iterations`` sweeps over the incomplete columns.

    Each target is imputed from the freshest values of every other column:
    targets visited earlier in the same sweep contribute their new draws.
    ``draw`` defaults to :func:`imputers.draw`.
    """
    draw = imputers.draw if draw is None else draw
    targets = _visit_order(data, config)
    predictors = {j: imputers.select_predictors(config.imputer, data, j) for j in targets}
    state = initialize(data, rng)
    state.targets = targets
    Z = state.completed
    for it in range(1, config.n_iterations + 1):
        diag = {}
        for j in targets:
            miss = data.mask[:, j]
            try:
                result = draw(config.imputer, Z[:, j], miss, Z[:, predictors[j]], rng)
            except SdrMiceError as exc:
                raise ChainError(exc, it, data.columns[j], chain) from exc
            Z[miss, j] = result.values
            diag[data.columns[j]] = result.diagnostics
        state.diagnostics.append(diag)
        means, sds = [], []
        for j in targets:
            imputed = Z[data.mask[:, j], j]
            means.append(float(imputed.mean()))
            sds.append(float(imputed.std(ddof=1)) if imputed.size > 1 else 0.0)
        state.trace_mean.append(means)
        state.trace_sd.append(sds)
    return state


def run_mice(data: DataMatrix, config: MiceConfig, draw: Optional[DrawFn] = None) -> ImputedSet:
    """Run ``n_imputations`` independent chains seeded from ``config.seed``."""
    chains = [run_chain(data, config, chain_rng(config.seed, c), draw=draw, chain=c)
              for c in range(config.n_imputations)]
    return ImputedSet([c.completed for c in chains], chains)


def trace_rows(imputed: ImputedSet, columns: Sequence[str]) -> list[tuple]:
    """Flatten traces to ``(chain, iteration, variable, mean, sd)`` rows."""
    rows = []
    for c, state in enumerate(imputed.chains):
        for i, (means, sds) in enumerate(zip(state.trace_mean, state.trace_sd), start=1):
            for k, j in enumerate(state.targets):
                rows.append((c, i, columns[j], means[k], sds[k]))
    return rows
