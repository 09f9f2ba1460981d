"""CSV ingestion in the canonical observation schema.

Columns: ``site``, ``day``, ``coord_x``, optional ``coord_y``, ``count``,
``exposure``. Rows sharing (site, day) are summed; day d becomes time step
d - first day + 1, so a day without rows is a fully masked step, and
(site, day) pairs without data are masked.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, Optional, Union

import numpy as np
import pandas as pd

from seqeb.config import ModelConfig
from seqeb.errors import DataError
from seqeb.spatial.covariates import CovariateBuilder
from seqeb.spatial.kernels import SiteSet
from seqeb.spatial.observation import ObservationBatch, ObservationFamily, ObservationModel

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("site", "day", "coord_x", "count", "exposure")
OPTIONAL_COLUMNS = ("coord_y",)
SITE_COLUMNS = ("site", "coord_x", "coord_y")
HEADER_LINES = 1

Source = Union[str, Path, IO[str]]


@dataclass(frozen=True, eq=False)
class ObservationData:
    """Aggregated observations on a (T, n) day-by-site grid."""
    sites: SiteSet
    days: np.ndarray
    y: np.ndarray
    tau: np.ndarray
    mask: np.ndarray
    design: CovariateBuilder

    @property
    def T(self) -> int:
        return int(self.days.shape[0])

    @property
    def n(self) -> int:
        return self.sites.n

    def batch(self, t: int) -> ObservationBatch:
        return ObservationBatch(t=t, y=self.y[t - 1], tau=self.tau[t - 1], mask=self.mask[t - 1])

    def batches(self, start: int = 1) -> Iterator[ObservationBatch]:
        for t in range(start, self.T + 1):
            yield self.batch(t)

    def observation_model(self, family: ObservationFamily) -> ObservationModel:
        return ObservationModel(family=family, tau=self.tau, mask=self.mask)


def _line_numbers(frame: pd.DataFrame, bad: pd.Series) -> list[int]:
    return [int(i) + HEADER_LINES + 1 for i in frame.index[bad.to_numpy()]]


def _check_columns(columns: list[str], required: tuple[str, ...], optional: tuple[str, ...]) -> None:
    unknown = [c for c in columns if c not in required + optional]
    if unknown:
        raise DataError(f"unknown columns: {', '.join(unknown)} (expected {', '.join(required + optional)})")
    missing = [c for c in required if c not in columns]
    if missing:
        raise DataError(f"missing required columns: {', '.join(missing)}")


def _numeric(frame: pd.DataFrame, column: str) -> pd.Series:
    values = pd.to_numeric(frame[column], errors="coerce")
    bad = values.isna() | ~np.isfinite(values.fillna(0.0))
    if bad.any():
        raise DataError(f"column '{column}' must be numeric", _line_numbers(frame, bad))
    return values.astype(float)


def validate_records(frame: pd.DataFrame) -> pd.DataFrame:
    """Type-check and validate raw rows; returns a cleaned copy.

    Raises:
        DataError: with the file line numbers of offending rows.
    """
    _check_columns(list(frame.columns), REQUIRED_COLUMNS, OPTIONAL_COLUMNS)
    out = pd.DataFrame(index=frame.index)
    out["site"] = frame["site"].astype(str).str.strip()
    empty = out["site"].isin(["", "nan"])
    if empty.any():
        raise DataError("site ids must be non-empty", _line_numbers(frame, empty))
    day = _numeric(frame, "day")
    fractional = day != np.round(day)
    if fractional.any():
        raise DataError("day must be an integer", _line_numbers(frame, fractional))
    out["day"] = day.astype(np.int64)
    out["coord_x"] = _numeric(frame, "coord_x")
    if "coord_y" in frame.columns:
        out["coord_y"] = _numeric(frame, "coord_y")
    count = _numeric(frame, "count")
    exposure = _numeric(frame, "exposure")
    negative = count < 0
    if negative.any():
        raise DataError("counts must be nonnegative", _line_numbers(frame, negative))
    fractional = count != np.round(count)
    if fractional.any():
        raise DataError("counts must be integers", _line_numbers(frame, fractional))
    bad_exposure = exposure < 0
    if bad_exposure.any():
        raise DataError("exposure must be nonnegative", _line_numbers(frame, bad_exposure))
    unexposed = (exposure == 0) & (count > 0)
    if unexposed.any():
        raise DataError("positive count with zero exposure", _line_numbers(frame, unexposed))
    out["count"] = count
    out["exposure"] = exposure
    return out


def _site_table(records: pd.DataFrame) -> pd.DataFrame:
    coord_cols = [c for c in ("coord_x", "coord_y") if c in records.columns]
    spread = records.groupby("site")[coord_cols].nunique()
    moving = spread[(spread > 1).any(axis=1)].index
    if len(moving):
        bad = records["site"].isin(moving)
        raise DataError(
            f"sites with inconsistent coordinates: {', '.join(map(str, moving))}", _line_numbers(records, bad)
        )
    return records.groupby("site", sort=True)[coord_cols].first()


def _sites(table: pd.DataFrame) -> SiteSet:
    return SiteSet(table.to_numpy(dtype=float), tuple(str(s) for s in table.index))


def read_records(source: Source) -> pd.DataFrame:
    try:
        frame = pd.read_csv(source, dtype={"site": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot parse observation CSV: {exc}") from exc
    return validate_records(frame)


def aggregate(records: pd.DataFrame, model: Optional[ModelConfig] = None) -> ObservationData:
    """Sum duplicate (site, day) rows and lay the result on the day-by-site grid."""
    if records.empty:
        raise DataError("no observation rows")
    model = model or ModelConfig()
    table = _site_table(records)
    sites = _sites(table)
    totals = records.groupby(["day", "site"], sort=True)[["count", "exposure"]].sum()
    observed = records["day"].to_numpy()
    first = int(observed.min())
    days = np.arange(first, int(observed.max()) + 1, dtype=np.int64)
    gaps = days.shape[0] - np.unique(observed).shape[0]
    if gaps:
        logger.info("%d days without rows are fully masked", gaps)
    site_index = {s: i for i, s in enumerate(sites.ids)}
    T, n = days.shape[0], sites.n
    y = np.zeros((T, n))
    tau = np.ones((T, n))
    mask = np.zeros((T, n), dtype=bool)
    for (day, site), row in totals.iterrows():
        if row["exposure"] <= 0:
            continue
        t, i = int(day) - first, site_index[str(site)]
        y[t, i] = row["count"]
        tau[t, i] = row["exposure"]
        mask[t, i] = True
    duplicates = int(records.duplicated(["site", "day"]).sum())
    if duplicates:
        logger.info("aggregated %d duplicate site-day rows", duplicates)
    design = CovariateBuilder.from_names(model.covariates, sites.coords, model.reference, model.time_scale)
    return ObservationData(sites=sites, days=days, y=y, tau=tau, mask=mask, design=design)


def ingest(source: Source, model: Optional[ModelConfig] = None) -> ObservationData:
    """Read, validate and aggregate an observation CSV."""
    data = aggregate(read_records(source), model)
    logger.info("ingested %d sites over %d days (%d site-days observed)", data.n, data.T, int(data.mask.sum()))
    return data


def write_dataset(data: ObservationData, path: Union[str, Path]) -> Path:
    """Write ``data`` back in the canonical schema (one row per observed site-day)."""
    coords = data.sites.coords
    rows = []
    for t, i in zip(*np.nonzero(data.mask)):
        row = {"site": data.sites.ids[i], "day": int(data.days[t]), "coord_x": float(coords[i, 0])}
        if coords.shape[1] > 1:
            row["coord_y"] = float(coords[i, 1])
        row["count"] = int(data.y[t, i])
        row["exposure"] = float(data.tau[t, i])
        rows.append(row)
    path = Path(path)
    pd.DataFrame(rows).to_csv(path, index=False)
    return path


def read_sites(source: Source) -> SiteSet:
    """Site list with columns ``site``, ``coord_x`` and optional ``coord_y``."""
    try:
        frame = pd.read_csv(source, dtype={"site": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot parse site CSV: {exc}") from exc
    _check_columns(list(frame.columns), ("site", "coord_x"), ("coord_y",))
    coords = [c for c in ("coord_x", "coord_y") if c in frame.columns]
    for column in coords:
        _numeric(frame, column)
    if frame["site"].duplicated().any():
        raise DataError("duplicate site ids", _line_numbers(frame, frame["site"].duplicated()))
    table = frame.assign(site=frame["site"].astype(str).str.strip()).set_index("site").sort_index()[coords]
    return _sites(table)


def iter_batches(source: Source, sites: SiteSet, chunksize: int = 4096) -> Iterator[ObservationBatch]:
    """Stream batches from rows sorted by day; one batch per calendar day.

    A batch is emitted as soon as a later day appears (or the input ends),
    so stdin can be consumed incrementally. Days skipped between two
    observed days are emitted as fully masked batches.
    """
    index = {s: i for i, s in enumerate(sites.ids)}
    n = sites.n
    t = 0
    current_day: Optional[int] = None
    y = np.zeros(n)
    tau = np.zeros(n)

    def flush() -> ObservationBatch:
        mask = tau > 0
        return ObservationBatch(t=t, y=y.copy(), tau=np.where(mask, tau, 1.0), mask=mask)

    try:
        reader = pd.read_csv(source, dtype={"site": str}, chunksize=chunksize)
        for chunk in reader:
            records = validate_records(chunk)
            unknown = ~records["site"].isin(list(index))
            if unknown.any():
                raise DataError("rows reference sites missing from the site list", _line_numbers(records, unknown))
            for row in records.itertuples(index=True):
                day = int(row.day)
                if current_day is not None and day < current_day:
                    raise DataError("streamed rows must be sorted by day", [int(row.Index) + HEADER_LINES + 1])
                if day != current_day:
                    if current_day is not None:
                        yield flush()
                        for _ in range(day - current_day - 1):
                            t += 1
                            yield ObservationBatch.empty(t, n)
                    current_day = day
                    t += 1
                    y[:] = 0.0
                    tau[:] = 0.0
                i = index[row.site]
                y[i] += row.count
                tau[i] += row.exposure
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot parse observation stream: {exc}") from exc
    if current_day is not None:
        yield flush()
