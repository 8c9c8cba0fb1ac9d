"""
Price tables from CSV exports: a header row, one timestamp column (integer epoch
or ISO-8601) and one or more numeric price columns. The sampling frequency is
not interpreted, only the ordering of the timestamps.
"""
import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from extremal.errors import DataError

logger = logging.getLogger("extremal")

# header is line 1, the first data row is line 2
_FIRST_DATA_LINE = 2


@dataclass
class PriceTable:
    frame: pd.DataFrame

    def __post_init__(self):
        index = self.frame.index
        if not (index.is_monotonic_increasing and index.is_unique):
            raise DataError("timestamps must be strictly increasing")

    @classmethod
    def from_columns(cls, columns: Dict[str, Sequence[float]], timestamps: Optional[Sequence] = None) -> "PriceTable":
        lengths = {name: len(values) for name, values in columns.items()}
        if len(set(lengths.values())) > 1:
            raise DataError(f"columns must have equal lengths, got {lengths}")
        frame = pd.DataFrame({name: np.asarray(v, dtype=float) for name, v in columns.items()})
        if timestamps is not None:
            frame.index = pd.Index(timestamps, name="timestamp")
        else:
            frame.index = pd.RangeIndex(len(frame), name="timestamp")
        return cls(frame)

    @property
    def names(self) -> List[str]:
        return list(self.frame.columns)

    @property
    def timestamps(self) -> pd.Index:
        return self.frame.index

    def column(self, name: str) -> np.ndarray:
        if name not in self.frame.columns:
            raise DataError(f"no column {name!r}, available: {self.names}")
        return self.frame[name].to_numpy(dtype=float)

    def __len__(self):
        return len(self.frame)


def _parse_timestamps(raw: pd.Series) -> pd.Index:
    as_int = pd.to_numeric(raw, errors="coerce")
    if as_int.notna().all() and (as_int == np.floor(as_int)).all():
        return pd.Index(as_int.astype("int64"), name="timestamp")
    parsed = pd.to_datetime(raw, errors="coerce", utc=True)
    bad = parsed.isna().to_numpy()
    if bad.any():
        pos = int(np.argmax(bad))
        raise DataError(f"unparseable timestamp {raw.iloc[pos]!r}", line=pos + _FIRST_DATA_LINE)
    return pd.DatetimeIndex(parsed, name="timestamp")


def ingest_csv(
    path: Union[str, os.PathLike],
    columns: Optional[Sequence[str]] = None,
    timestamp_column: Optional[str] = None,
) -> PriceTable:
    """
    Reads `path` into a PriceTable. `timestamp_column` defaults to the first
    column and `columns` to every other column.
    """
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"no such file {os.fspath(path)!r}")
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f"cannot read {os.fspath(path)!r}: {e}")
    if raw.shape[1] < 2:
        raise DataError("expected a timestamp column and at least one price column")

    timestamp_column = timestamp_column or raw.columns[0]
    wanted = list(columns) if columns else [c for c in raw.columns if c != timestamp_column]
    missing = [c for c in [timestamp_column] + wanted if c not in raw.columns]
    if missing:
        raise DataError(f"missing columns {missing}, header has {list(raw.columns)}")
    if raw.empty:
        raise DataError(f"{os.fspath(path)!r} has a header but no rows")

    prices = {}
    for name in wanted:
        values = pd.to_numeric(raw[name].str.strip(), errors="coerce")
        bad = values.isna().to_numpy() | ~np.isfinite(values.to_numpy(dtype=float))
        if bad.any():
            lines = (np.flatnonzero(bad) + _FIRST_DATA_LINE).tolist()
            first = lines[0] - _FIRST_DATA_LINE
            raise DataError(
                f"column {name!r} value {raw[name].iloc[first]!r} is not numeric"
                + (f" ({len(lines) - 1} more bad rows, lines {lines[1:6]}...)" if len(lines) > 1 else ""),
                line=lines[0],
            )
        prices[name] = values.to_numpy(dtype=float)

    index = _parse_timestamps(raw[timestamp_column].str.strip())
    steps = np.asarray(index[1:] > index[:-1])
    if not steps.all():
        pos = int(np.argmin(steps)) + 1
        raise DataError(
            f"timestamps must be strictly increasing, {index[pos]} follows {index[pos - 1]}",
            line=pos + _FIRST_DATA_LINE,
        )
    frame = pd.DataFrame(prices, index=index)
    logger.info("ingested %d rows of %s from %s", len(frame), wanted, os.fspath(path))
    return PriceTable(frame)
