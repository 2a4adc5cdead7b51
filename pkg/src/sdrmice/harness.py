"""Monte Carlo simulation harness: factor grid, replications, CSV output."""

from __future__ import annotations

import csv
import logging
import math
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import yaml

from . import amputation, analysis, datagen, imputers
from .analysis import Estimand
from .data import DataMatrix
from .errors import ChainError, ConfigError, EmptyGrid, SdrMiceError, ZeroTruth
from .imputers import ImputerSpec
from .mice import MiceConfig, run_mice

log = logging.getLogger(__name__)

METHODS = OrderedDict([
    ("MI-PCR", imputers.PCR),
    ("MI-SPCR", imputers.SPCR),
    ("MI-PCovR", imputers.PCOVR),
    ("MI-PLSR", imputers.PLSR),
    ("MI-QP", imputers.QP),
    ("MI-AM", imputers.AM),
    ("MI-ALL", imputers.ALL),
    ("CC", None),
    ("FO", None),
])
ALIASES = {"MI-PLS": "MI-PLSR"}
COMPONENT = ("MI-PCR", "MI-SPCR", "MI-PCovR", "MI-PLSR")

PAPER_NC = (0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 20, 29, 30, 40, 48, 49, 50,
            51, 52, 60, 149)
TARGETS = (0, 1, 2)
MAR_PREDICTORS = (3, 4, 5)
LOCATIONS = (amputation.RIGHT, amputation.LEFT, amputation.TAILS)

RESULT_HEADER = ("L", "mech", "pm", "method", "nc", "rep", "estimand", "estimate",
                 "ci_lower", "ci_upper", "truth", "status")
SUMMARY_HEADER = ("L", "mech", "pm", "method", "nc", "estimand", "prb", "ciw", "cic", "n_ok")
TRACE_HEADER = ("L", "mech", "pm", "method", "nc", "rep", "chain", "iteration",
                "variable", "mean", "sd")

# seed streams
_DATA, _AMPUTE, _IMPUTE = 0, 1, 2


@dataclass(frozen=True)
class ConditionGrid:
    L_levels: tuple[int, ...] = (2, 10)
    mech_levels: tuple[str, ...] = (amputation.MCAR, amputation.MAR)
    pm_levels: tuple[float, ...] = (0.1, 0.25, 0.5)
    methods: tuple[str, ...] = tuple(METHODS)
    nc_levels: tuple[int, ...] = PAPER_NC
    reps: int = 50
    d: int = 5
    iterations: int = 20
    base_seed: int = 20240101
    n_rows: int = 1000
    cv_folds: int = 5
    threshold_grid: tuple[float, ...] = imputers.DEFAULT_GRID
    qp_threshold: float = 0.1

    def __post_init__(self):
        for name in ("L_levels", "mech_levels", "pm_levels", "methods", "nc_levels",
                     "threshold_grid"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        methods = tuple(ALIASES.get(m, m) for m in self.methods)
        for m in methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        object.__setattr__(self, "methods", methods)
        for mech in self.mech_levels:
            if mech not in (amputation.MCAR, amputation.MAR):
                raise ConfigError(f"unknown mechanism {mech!r}")
        if any(L < 2 for L in self.L_levels):
            raise ConfigError("L must be >= 2")
        if self.reps < 1 or self.d < 1 or self.iterations < 1:
            raise ConfigError("reps, d and iterations must be >= 1")


PROFILES = {
    "desk": ConditionGrid(),
    "paper": ConditionGrid(L_levels=(2, 10, 50), reps=240),
}


@dataclass(frozen=True, order=True)
class Condition:
    L: int
    mech: str
    pm: float
    method: str
    nc: int

    @property
    def labels(self) -> tuple:
        return (self.L, self.mech, self.pm, self.method, self.nc)


@dataclass
class ResultRecord:
    L: int
    mech: str
    pm: float
    method: str
    nc: int
    rep: int
    estimand: str
    estimate: float
    ci_lower: float
    ci_upper: float
    truth: float
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def cell(self) -> tuple:
        return (self.L, self.mech, self.pm, self.method, self.nc, self.estimand)


def load_config(path: str | Path, base: Optional[ConditionGrid] = None) -> ConditionGrid:
    """Read a YAML/JSON mapping of ConditionGrid fields on top of ``base``.

    Unknown keys are rejected.
    """
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of grid fields")
    known = {f.name for f in fields(ConditionGrid)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return replace(base or ConditionGrid(), **raw)


def expand_grid(grid: ConditionGrid) -> list[Condition]:
    """Cartesian product of the factors in a fixed order.

    Component methods take every positive ``nc`` that leaves at least one
    predictor per component (``nc <= 3L - 1``); the other methods get a
    single condition with ``nc = 0``.
    """
    out = []
    for L in grid.L_levels:
        max_nc = 3 * L - 1
        for mech in grid.mech_levels:
            for pm in grid.pm_levels:
                for method in grid.methods:
                    if method in COMPONENT:
                        ncs = [nc for nc in grid.nc_levels if 1 <= nc <= max_nc]
                    else:
                        ncs = [0]
                    out.extend(Condition(L, mech, float(pm), method, int(nc)) for nc in ncs)
    if not out:
        raise EmptyGrid("factor grid expands to no conditions")
    return out


def _seed(base_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, *map(int, key)])


def _mech_code(mech: str) -> int:
    return 0 if mech == amputation.MCAR else 1


def replication_inputs(L: int, mech: str, pm: float, rep: int, grid: ConditionGrid):
    """Full data, amputed data and imputation seed of one replication.

    Depends only on ``(L, mech, pm, rep)`` and the base seed, so every
    method in a replication sees the same data, mask and random stream.
    """
    pm_code = int(round(pm * 1_000_000))
    full = datagen.generate(datagen.FactorSpec(n_rows=grid.n_rows, n_latent=L),
                            np.random.default_rng(_seed(grid.base_seed, _DATA, L, rep)))
    spec = amputation.MissingnessSpec(mech, pm, TARGETS, MAR_PREDICTORS, LOCATIONS)
    rng = np.random.default_rng(_seed(grid.base_seed, _AMPUTE, L, _mech_code(mech), pm_code, rep))
    amputed = amputation.ampute(full, spec, rng)
    state = _seed(grid.base_seed, _IMPUTE, L, _mech_code(mech), pm_code, rep).generate_state(2, np.uint32)
    impute_seed = (int(state[0]) << 32) | int(state[1])
    return full, amputed, impute_seed


def imputer_spec(condition: Condition, grid: ConditionGrid) -> Optional[ImputerSpec]:
    method = METHODS[condition.method]
    if method is None:
        return None
    if condition.method in COMPONENT:
        if method == imputers.SPCR:
            return ImputerSpec(method, condition.nc, grid.threshold_grid, grid.cv_folds)
        return ImputerSpec(method, condition.nc)
    if method == imputers.QP:
        return ImputerSpec(method, qp_threshold=grid.qp_threshold, am_columns=TARGETS)
    if method == imputers.AM:
        return ImputerSpec(method, am_columns=TARGETS)
    return ImputerSpec(method)


def _single(dataset, estimand):
    point, se = analysis.estimate(dataset, estimand)
    return analysis.pool([point], [se], estimand.fisher_z)


def run_replication(condition: Condition, rep: int, grid: ConditionGrid,
                    with_traces: bool = False):
    """Generate, ampute, treat and analyse one replication of one condition.

    Imputation failures become ``failed:<ErrorClass>`` records, one per
    estimand. Returns the records, plus trace rows when ``with_traces``.
    """
    full, amputed, impute_seed = replication_inputs(condition.L, condition.mech,
                                                    condition.pm, rep, grid)
    estimands = analysis.default_estimands(TARGETS)
    names = full.columns
    truths = [analysis.estimate(full.values, e)[0] for e in estimands]
    traces = []
    pooled, status = None, "ok"
    try:
        if condition.method == "FO":
            pooled = [_single(full.values, e) for e in estimands]
        elif condition.method == "CC":
            complete = ~amputed.mask[:, list(TARGETS)].any(axis=1)
            pooled = [_single(full.values[complete], e) for e in estimands]
        else:
            config = MiceConfig(imputer_spec(condition, grid), grid.d, grid.iterations,
                                seed=impute_seed)
            imputed = run_mice(amputed, config)
            pooled = [analysis.pool_datasets(imputed.datasets, e) for e in estimands]
            if with_traces:
                for c, chain in enumerate(imputed.chains):
                    for i, (means, sds) in enumerate(zip(chain.trace_mean, chain.trace_sd), 1):
                        for k, j in enumerate(chain.targets):
                            traces.append((*condition.labels, rep, c, i, names[j],
                                           means[k], sds[k]))
    except SdrMiceError as exc:
        cause = exc.cause if isinstance(exc, ChainError) else exc
        status = f"failed:{type(cause).__name__}"
        log.info("condition %s rep %d failed: %s", condition.labels, rep, exc)

    records = []
    for k, e in enumerate(estimands):
        if pooled is None:
            est = lo = hi = math.nan
        else:
            est, lo, hi = pooled[k].point, pooled[k].ci_lower, pooled[k].ci_upper
        records.append(ResultRecord(*condition.labels, rep, e.label(names), est, lo, hi,
                                    truths[k], status))
    return (records, traces) if with_traces else records


def _task(args):
    condition, rep, grid, with_traces = args
    return run_replication(condition, rep, grid, with_traces=with_traces)


def run_batch(grid: ConditionGrid, workers: int = 1, with_traces: bool = True,
              conditions: Optional[Sequence[Condition]] = None):
    """Run every (condition, replication) task; output order ignores scheduling."""
    conditions = expand_grid(grid) if conditions is None else list(conditions)
    tasks = [(c, r, grid, with_traces) for c in conditions for r in range(grid.reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_task, tasks, chunksize=1))
    else:
        outputs = [_task(t) for t in tasks]
    records, traces = [], []
    for out in outputs:
        if with_traces:
            records.extend(out[0])
            traces.extend(out[1])
        else:
            records.extend(out)
    return records, traces


def summarize(records: Iterable[ResultRecord]) -> list[analysis.MetricRow]:
    """PRB/CIW/CIC per condition and estimand over successful replications.

    The true value of a cell is the mean of the full-data estimates over all
    of its replications.
    """
    cells: OrderedDict[tuple, list[ResultRecord]] = OrderedDict()
    for rec in records:
        cells.setdefault(rec.cell, []).append(rec)
    rows = []
    for cell, recs in cells.items():
        truth = float(np.mean([r.truth for r in recs]))
        ok = [r for r in recs if r.ok]
        if not ok:
            rows.append(analysis.MetricRow(cell[:5], cell[5], None, None, None, 0))
            continue
        points = [r.estimate for r in ok]
        lower = [r.ci_lower for r in ok]
        upper = [r.ci_upper for r in ok]
        try:
            bias = analysis.prb(points, truth)
        except ZeroTruth:
            log.warning("zero truth for %s; reporting absolute bias", cell)
            bias = abs(float(np.mean(points)) - truth)
        rows.append(analysis.MetricRow(cell[:5], cell[5], bias, analysis.ciw(lower, upper),
                                       analysis.cic(lower, upper, truth), len(ok)))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else format(value, ".17g")
    return str(value)


def write_results(records: Iterable[ResultRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_HEADER)
        for r in records:
            writer.writerow([_fmt(v) for v in asdict(r).values()])


def _num(text: str) -> float:
    return math.nan if text == "" else float(text)


def read_results(path: str | Path) -> list[ResultRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_HEADER:
            raise ConfigError(f"{path} does not have the results header")
        return [ResultRecord(int(row["L"]), row["mech"], float(row["pm"]), row["method"],
                             int(row["nc"]), int(row["rep"]), row["estimand"],
                             _num(row["estimate"]), _num(row["ci_lower"]),
                             _num(row["ci_upper"]), _num(row["truth"]), row["status"])
                for row in reader]


def write_summary(rows: Iterable[analysis.MetricRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for m in rows:
            writer.writerow([_fmt(v) for v in (*m.condition, m.estimand, m.prb, m.ciw,
                                                m.cic, m.n_ok)])


def write_traces(rows: Iterable[tuple], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
