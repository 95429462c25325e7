"""Read observation files into TimeSeries."""
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from opentelemetry import trace

from ..core.model_core import TimeSeries
from ..helpers.errors import IngestError, InvalidInputError

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except (TypeError, ValueError):
        return False


def ingest(path: Union[str, Path], header: Optional[bool] = None) -> TimeSeries:
    """
    Read a series from a UTF-8 text file.

    Accepted layouts:
        - one value per line;
        - ``time,value`` with strictly increasing integer times;
        - ``time,value`` with repeated times, giving a multi-observation series.

    Args:
        path: File to read (LF or CRLF line endings)
        header: Whether the first line is a header; None detects it from a
            non-numeric first line

    Returns:
        TimeSeries

    Raises:
        IngestError: With the offending line number
    """
    with tracer.start_as_current_span("ingest") as span:
        span.set_attribute("source", str(path))
        try:
            table = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=False,
                                encoding="utf-8-sig", skipinitialspace=True)
        except FileNotFoundError as e:
            raise IngestError("file not found", path=path) from e
        except pd.errors.EmptyDataError as e:
            raise IngestError("empty file", path=path) from e
        except (pd.errors.ParserError, UnicodeDecodeError) as e:
            raise IngestError(f"unreadable file: {e}", path=path) from e

        table.index = np.arange(1, len(table) + 1)  # 1-based line numbers
        table = table.apply(lambda col: col.str.strip())
        table = table.dropna(how="all")
        if table.empty:
            raise IngestError("empty file", path=path)

        if header is None:
            header = not all(_is_number(v) for v in table.iloc[0].dropna())
        if header:
            table = table.iloc[1:]
        if table.empty:
            raise IngestError("no observations after the header", path=path)
        if table.shape[1] > 2:
            raise IngestError(f"expected 1 or 2 columns, found {table.shape[1]}", path=path)

        numeric = table.apply(pd.to_numeric, errors="coerce")
        bad = numeric.isna().any(axis=1)
        if bad.any():
            line = int(bad.idxmax())
            raise IngestError(f"non-numeric value {table.loc[line].tolist()}", line=line, path=path)

        try:
            if numeric.shape[1] == 1:
                series = TimeSeries(numeric.iloc[:, 0].to_numpy(dtype=float))
            else:
                series = _from_time_value(numeric, path)
        except InvalidInputError as e:
            raise IngestError(str(e), path=path) from e

        span.set_attribute("series_length", series.T)
        logger.debug("read %d instants from %s", series.T, path)
        return series


def _from_time_value(numeric: pd.DataFrame, path) -> TimeSeries:
    times = numeric.iloc[:, 0].to_numpy(dtype=float)
    values = numeric.iloc[:, 1].to_numpy(dtype=float)
    lines = numeric.index.to_numpy()

    not_integer = times != np.round(times)
    if not_integer.any():
        raise IngestError("time must be an integer", line=int(lines[np.argmax(not_integer)]), path=path)
    steps = np.diff(times)
    if (steps < 0).any():
        raise IngestError("time not increasing", line=int(lines[np.argmax(steps < 0) + 1]), path=path)

    if (steps > 0).all():
        return TimeSeries(values)
    _, counts = np.unique(times, return_counts=True)
    return TimeSeries(values, counts)
