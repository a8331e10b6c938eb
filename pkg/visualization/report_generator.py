"""
Report Generator — writes the data and text artefacts of a run.

Uses pandas for the CSV tables and plain key=value text for fit reports and
run manifests, so every artefact diffs cleanly between runs.
Includes: scan CSVs, row tables, fit report, manifest.
"""

import math

import numpy as np
import pandas as pd


def format_value(value) -> str:
    """Stable text form: repr for floats, lowercase booleans, 'none' for None."""
    if value is None:
        return "none"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "nan" if math.isnan(v) else repr(v)
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def write_frame_csv(frame: pd.DataFrame, path) -> None:
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")


def write_scan_csv(points, columns: list[str], path) -> None:
    """(x, y) pairs under a two-column header, e.g. detuning_hz,p_f2."""
    pairs = list(getattr(points, "points", points))
    write_frame_csv(pd.DataFrame(pairs, columns=columns), path)


def write_rows_csv(rows: list[dict], path) -> None:
    write_frame_csv(pd.DataFrame(rows), path)


def render_report(entries: dict) -> str:
    return "".join(f"{key}={format_value(value)}\n" for key, value in entries.items())


def write_report(entries: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_report(entries))


def read_report(path) -> dict:
    """Inverse of write_report, values kept as text."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            key, _, value = line.partition("=")
            out[key] = value
    return out
