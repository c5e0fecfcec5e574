"""Data ingestion: FRED-MD-style transformation codes, CSV loading, and the
Dataset container feeding the estimation routines.
"""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


class TransformCode(str, enum.Enum):
    """Stationarity-inducing transformations applied per series."""

    NONE = "none"
    LOG = "log"
    DIFF = "diff"
    DIFF_LOG = "diff_log"
    DIFF2_LOG = "diff2_log"

    @property
    def head_loss(self) -> int:
        """Observations lost at the start of the series."""
        return {"none": 0, "log": 0, "diff": 1, "diff_log": 1, "diff2_log": 2}[self.value]

    @property
    def is_level(self) -> bool:
        """True when the transformed series is still in levels (drives the unit prior mean)."""
        return self in (TransformCode.NONE, TransformCode.LOG)


def apply_transform(series: np.ndarray, code: TransformCode | str,
                    labels: list[str] | None = None) -> np.ndarray:
    """Apply one transformation code, dropping the undefined leading entries.

    Non-positive values under a log-based code raise a ValueError naming the
    offending position (or its label when labels are given). NaN entries pass
    through so callers can trim leading missing values themselves.
    """
    code = TransformCode(code)
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a single series")
    if code in (TransformCode.LOG, TransformCode.DIFF_LOG, TransformCode.DIFF2_LOG):
        bad = np.flatnonzero((x <= 0) & ~np.isnan(x))
        if bad.size:
            where = labels[bad[0]] if labels is not None else f"position {bad[0]}"
            raise ValueError(f"non-positive value under {code.value} at {where}")
        with np.errstate(invalid="ignore"):
            lx = np.log(x)
    if code is TransformCode.NONE:
        return x.copy()
    if code is TransformCode.LOG:
        return lx
    if code is TransformCode.DIFF:
        return np.diff(x)
    if code is TransformCode.DIFF_LOG:
        return np.diff(lx)
    return np.diff(lx, n=2)


@dataclass
class Dataset:
    """Raw series with their applied transformations.

    raw is (T', n) aligned with dates; transformed is (T, n) with
    T = T' - start_index, where start_index rows were dropped because of
    differencing or leading missing values. Estimation matrices trim a
    further p rows for the lags.
    """

    names: list[str]
    dates: list[str]
    raw: np.ndarray
    transformed: np.ndarray
    codes: list[TransformCode]
    level_flags: np.ndarray
    start_index: int = 0

    @property
    def n(self) -> int:
        return len(self.names)

    def transformed_dates(self) -> list[str]:
        return self.dates[self.start_index:]

    def validate(self) -> None:
        if not np.all(np.isfinite(self.transformed)):
            raise ValueError("transformed data contain non-finite entries")
        if self.transformed.shape[0] + self.start_index != len(self.dates):
            raise ValueError("date labels inconsistent with trimming")

    def regression_matrices(self, p: int, upto: int | None = None
                            ) -> tuple[np.ndarray, np.ndarray]:
        """Build (Y, X) with x_t = (1, y_{t-1}', ..., y_{t-p}')'.

        upto restricts the sample to the first `upto` transformed rows, the
        expanding-window convention of the forecast evaluation.
        """
        Z = self.transformed if upto is None else self.transformed[:upto]
        T_all, n = Z.shape
        if T_all <= p:
            raise ValueError(f"not enough observations ({T_all}) for p = {p} lags")
        Y = Z[p:]
        T = Y.shape[0]
        X = np.empty((T, n * p + 1))
        X[:, 0] = 1.0
        for lag in range(1, p + 1):
            X[:, 1 + (lag - 1) * n: 1 + lag * n] = Z[p - lag: T_all - lag]
        return Y, X

    def permuted(self, perm: tuple[int, ...]) -> "Dataset":
        """Reorder the variables; column i of the result is variable perm[i]."""
        idx = list(perm)
        return Dataset(
            names=[self.names[j] for j in idx],
            dates=list(self.dates),
            raw=self.raw[:, idx].copy(),
            transformed=self.transformed[:, idx].copy(),
            codes=[self.codes[j] for j in idx],
            level_flags=self.level_flags[idx].copy(),
            start_index=self.start_index,
        )

    def save(self, path: str | Path) -> None:
        """Bit-exact binary serialization (npz)."""
        np.savez(
            path,
            names=np.array(self.names),
            dates=np.array(self.dates),
            raw=self.raw,
            transformed=self.transformed,
            codes=np.array([c.value for c in self.codes]),
            level_flags=self.level_flags,
            start_index=self.start_index,
        )

    @classmethod
    def load(cls, path: str | Path) -> "Dataset":
        with np.load(path, allow_pickle=False) as z:
            return cls(
                names=[str(s) for s in z["names"]],
                dates=[str(s) for s in z["dates"]],
                raw=z["raw"],
                transformed=z["transformed"],
                codes=[TransformCode(str(c)) for c in z["codes"]],
                level_flags=z["level_flags"].astype(bool),
                start_index=int(z["start_index"]),
            )


def load_code_map(path: str | Path) -> dict[str, TransformCode]:
    """Read a two-column (mnemonic, code) CSV; an optional header row is skipped."""
    out: dict[str, TransformCode] = {}
    with open(path, newline="") as f:
        for row_idx, row in enumerate(csv.reader(f)):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise ValueError(f"code map row {row_idx} needs two columns: {row}")
            name, code = row[0].strip(), row[1].strip()
            if row_idx == 0 and code.lower() not in TransformCode._value2member_map_:
                continue  # header
            out[name] = TransformCode(code)
    if not out:
        raise ValueError(f"empty code map: {path}")
    return out


def load_csv(path: str | Path, code_map: dict[str, TransformCode | str]) -> Dataset:
    """Parse a wide CSV (first column date labels, header of mnemonics),
    apply the transformation codes, and trim leading undefined rows.

    Missing cells are only allowed to produce leading gaps; mnemonics in the
    code map must exactly cover the file's columns.
    """
    with open(path, newline="") as f:
        rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    if len(rows) < 2:
        raise ValueError(f"{path}: no data rows")
    header = [cell.strip() for cell in rows[0]]
    names = header[1:]
    width = len(header)
    if not names:
        raise ValueError(f"{path}: header has no variable columns")
    dates: list[str] = []
    body: list[list[float]] = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ValueError(f"{path}: ragged row {r}: {len(row)} cells, expected {width}")
        dates.append(row[0].strip())
        body.append([float(cell) if cell.strip() else np.nan for cell in row[1:]])
    raw = np.array(body, dtype=float)

    unknown = set(code_map) - set(names)
    if unknown:
        raise ValueError(f"code map mentions unknown mnemonics: {sorted(unknown)}")
    missing = set(names) - set(code_map)
    if missing:
        raise ValueError(f"code map does not cover columns: {sorted(missing)}")
    codes = [TransformCode(code_map[name]) for name in names]

    T_raw, n = raw.shape
    full = np.full((T_raw, n), np.nan)
    for j in range(n):
        col = raw[:, j]
        if np.all(np.isnan(col)):
            raise ValueError(f"{path}: column {names[j]} is entirely missing")
        t = apply_transform(col, codes[j], labels=dates)
        full[T_raw - t.size:, j] = t

    finite_rows = np.all(np.isfinite(full), axis=1)
    if not finite_rows.any():
        raise ValueError(f"{path}: no row with all series defined")
    start = int(np.argmax(finite_rows))
    if not finite_rows[start:].all():
        bad = start + int(np.argmin(finite_rows[start:]))
        raise ValueError(f"{path}: interior missing value around {dates[bad]}")
    transformed = full[start:]
    if start:
        logger.info("dropped %d leading rows; effective sample %s .. %s",
                    start, dates[start], dates[-1])
    return Dataset(
        names=names, dates=dates, raw=raw, transformed=transformed,
        codes=codes,
        level_flags=np.array([c.is_level for c in codes]),
        start_index=start,
    )
