import logging
from pathlib import Path
from typing import Any, Iterable, Union

import numpy as np
import pandas as pd

from core.errors import (
    EmptySampleError, LengthMismatchError, NegativeTimeError,
    NonBinaryEventError, NonFiniteTimeError, SchemaError,
)
from core.models import SurvivalSample, OrderedSample, TwoSampleData

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("time", "event", "group")


def validate(raw_times: Iterable[Any], raw_events: Iterable[Any]) -> SurvivalSample:
    """
    Builds a SurvivalSample from raw sequences.
    Times must be finite and nonnegative; events must be 0/1 (bools accepted).
    """
    try:
        times = np.asarray(raw_times, dtype=np.float64).ravel()
    except (TypeError, ValueError) as e:
        raise NonFiniteTimeError(f"times are not numeric: {e}") from e
    try:
        events_f = np.asarray(raw_events, dtype=np.float64).ravel()
    except (TypeError, ValueError) as e:
        raise NonBinaryEventError(f"events are not numeric: {e}") from e

    if times.size == 0 and events_f.size == 0:
        raise EmptySampleError("sample has no observations")
    if times.size != events_f.size:
        raise LengthMismatchError(f"{times.size} times but {events_f.size} event flags")

    bad = ~np.isfinite(times)
    if bad.any():
        raise NonFiniteTimeError(f"non-finite time at position {int(np.argmax(bad))}")
    if (times < 0).any():
        pos = int(np.argmax(times < 0))
        raise NegativeTimeError(f"negative time {times[pos]} at position {pos}")
    not_flag = ~np.isin(events_f, (0.0, 1.0))
    if not_flag.any():
        pos = int(np.argmax(not_flag))
        raise NonBinaryEventError(f"event flag {events_f[pos]} at position {pos} is not 0/1")

    return SurvivalSample(times, events_f.astype(np.int8))


def order_with_censoring(sample: SurvivalSample) -> OrderedSample:
    """Sorts by time; at tied times events come before censorings. Stable otherwise."""
    # lexsort uses the last key as primary
    order = np.lexsort((-sample.events.astype(np.int16), sample.times))
    return OrderedSample(sample.times[order], sample.events[order], order)


def two_sample(times0, events0, times1, events1) -> TwoSampleData:
    return TwoSampleData(validate(times0, events0), validate(times1, events1))


# --- CSV ingestion ---

def _coerce_flag(series: pd.Series, column: str) -> np.ndarray:
    """Numeric 0/1 column or SchemaError naming the first offending row."""
    values = pd.to_numeric(series, errors='coerce')
    bad = values.isna() | ~values.isin([0, 1])
    if bad.any():
        row = int(bad.to_numpy().argmax())
        raise SchemaError(f"column '{column}' must be 0 or 1; row {row + 1} has {series.iloc[row]!r}")
    return values.to_numpy(dtype=np.int8)


def frame_to_two_sample(frame: pd.DataFrame) -> TwoSampleData:
    columns = [str(c).strip().lower() for c in frame.columns]
    frame = frame.set_axis(columns, axis=1)
    missing = [c for c in REQUIRED_COLUMNS if c not in columns]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}; expected header time,event,group")

    times = pd.to_numeric(frame["time"], errors='coerce')
    if times.isna().any():
        row = int(times.isna().to_numpy().argmax())
        raise SchemaError(f"column 'time' must be numeric; row {row + 1} has {frame['time'].iloc[row]!r}")
    events = _coerce_flag(frame["event"], "event")
    groups = _coerce_flag(frame["group"], "group")

    for g in (0, 1):
        if not (groups == g).any():
            raise SchemaError(f"group {g} has no rows")

    mask = groups == 1
    t = times.to_numpy(dtype=np.float64)
    return TwoSampleData(validate(t[~mask], events[~mask]), validate(t[mask], events[mask]))


def load_two_sample_csv(path: Union[str, Path]) -> TwoSampleData:
    """Reads a `time,event,group` CSV into TwoSampleData."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    try:
        frame = pd.read_csv(path, skipinitialspace=True)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise SchemaError(f"could not parse {path.name}: {e}") from e
    except UnicodeDecodeError as e:
        raise SchemaError(f"{path.name} is not UTF-8 text: {e}") from e
    except OSError as e:
        raise SchemaError(f"could not read {path}: {e}") from e

    data = frame_to_two_sample(frame)
    logger.info(f"Loaded {path.name}: n0={data.n0} ({data.group0.n_events} events), "
                f"n1={data.n1} ({data.group1.n_events} events)")
    return data


def two_sample_to_frame(data: TwoSampleData) -> pd.DataFrame:
    times, events, labels = data.pooled()
    return pd.DataFrame({"time": times, "event": events.astype(int), "group": labels.astype(int)})
