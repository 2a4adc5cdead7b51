"""Column-labelled numeric matrix with a parallel missingness mask."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class DataMatrix:
    """Values plus a boolean mask (``True`` marks a missing cell).

    Masked cells keep whatever number sits in ``values``; consumers must
    consult ``mask`` rather than test for NaN. Amputation therefore never
    destroys the underlying full data.
    """

    values: np.ndarray
    mask: np.ndarray = None
    columns: tuple[str, ...] = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array")
        mask = (np.zeros(values.shape, dtype=bool) if self.mask is None
                else np.asarray(self.mask, dtype=bool))
        if mask.shape != values.shape:
            raise ValueError("mask shape does not match values")
        columns = self.columns
        if columns is None:
            columns = tuple(f"z{j + 1}" for j in range(values.shape[1]))
        columns = tuple(columns)
        if len(columns) != values.shape[1]:
            raise ValueError("need one label per column")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "columns", columns)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def with_mask(self, mask: np.ndarray) -> "DataMatrix":
        return DataMatrix(self.values, mask, self.columns)

    def observed(self, j: int) -> np.ndarray:
        return self.values[~self.mask[:, j], j]

    def incomplete_columns(self) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.mask.any(axis=0))]

    def as_nan(self) -> np.ndarray:
        """Copy of the values with masked cells set to NaN."""
        out = self.values.copy()
        out[self.mask] = np.nan
        return out

    def to_csv(self, path: str | Path) -> None:
        """Write a header row of labels, then rows; missing cells are blank."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row, miss in zip(self.values, self.mask):
                writer.writerow(["" if m else format(v, ".17g")
                                 for v, m in zip(row, miss)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "DataMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        mask = np.array([[cell.strip() in ("", "NA", "nan") for cell in r]
                         for r in rows], dtype=bool).reshape(len(rows), len(header))
        values = np.array([[0.0 if m else float(cell) for cell, m in zip(r, mr)]
                           for r, mr in zip(rows, mask)]).reshape(len(rows), len(header))
        return cls(values, mask, header)

    @classmethod
    def from_nan(cls, values: np.ndarray, columns: Sequence[str] | None = None) -> "DataMatrix":
        values = np.asarray(values, dtype=float)
        mask = np.isnan(values)
        return cls(np.where(mask, 0.0, values), mask, columns)
