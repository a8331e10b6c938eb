"""
Trace Reader — digitised magnetic-field records as replayable schedules.
Input: CSV with header t_s,bx_g,by_g,bz_g (seconds, gauss).
At least two rows, strictly increasing time.
Output: sampled_trace FieldSchedule (piecewise-linear between samples).
"""

import logging

import numpy as np
import pandas as pd

from features.field_schedules import FieldSchedule, ScheduleError, make_sampled_trace, sample_fields

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["t_s", "bx_g", "by_g", "bz_g"]


class TraceFormatError(ScheduleError):
    pass


def load_trace_csv(path) -> FieldSchedule:
    """
    Read a field trace and return it as a sampled_trace schedule.

    Raises:
        TraceFormatError: wrong header, non-numeric cells, fewer than two rows
                          or non-increasing time column.
    """
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise TraceFormatError(f"cannot read field trace {path}: {exc}") from exc

    header = [str(c).strip() for c in df.columns]
    if header != TRACE_COLUMNS:
        raise TraceFormatError(f"trace header must be {','.join(TRACE_COLUMNS)}, got {','.join(header)}")
    df.columns = header
    if len(df) < 2:
        raise TraceFormatError(f"trace needs at least 2 samples, got {len(df)}")
    try:
        values = df.astype(float).to_numpy()
    except ValueError as exc:
        raise TraceFormatError(f"trace contains non-numeric cells: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise TraceFormatError("trace contains non-finite values")
    if np.any(np.diff(values[:, 0]) <= 0):
        raise TraceFormatError("trace time column must be strictly increasing")

    schedule = make_sampled_trace(values[:, 0].tolist(), [tuple(row) for row in values[:, 1:]])
    logger.info("loaded field trace %s: %d samples over [%.6g, %.6g] s",
                path, len(df), schedule.t_start, schedule.t_end)
    return schedule


def digitize_schedule(schedule: FieldSchedule, n_samples: int) -> pd.DataFrame:
    """Sample any schedule on a uniform grid over its domain, as a trace frame."""
    if n_samples < 2:
        raise TraceFormatError(f"need at least 2 samples, got {n_samples}")
    times = np.linspace(schedule.t_start, schedule.t_end, n_samples)
    fields = sample_fields(schedule, times)
    return pd.DataFrame(np.column_stack([times, fields]), columns=TRACE_COLUMNS)


def write_trace_csv(frame: pd.DataFrame, path) -> None:
    if list(frame.columns) != TRACE_COLUMNS:
        raise TraceFormatError(f"trace frame must have columns {TRACE_COLUMNS}")
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
