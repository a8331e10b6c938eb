"""Field traces from CSV."""

import pytest

from features.field_schedules import field_at, make_smooth_reversal, reversal_window
from trace_reader import TraceFormatError, digitize_schedule, load_trace_csv, write_trace_csv


def _write(tmp_path, text):
    path = tmp_path / "trace.csv"
    path.write_text(text)
    return path


def test_load_trace(tmp_path):
    path = _write(tmp_path, "t_s,bx_g,by_g,bz_g\n0,0,0,0.2\n1e-3,0.02,0,0\n2e-3,0,0,-0.2\n")
    s = load_trace_csv(path)
    assert s.kind == "sampled_trace"
    assert (s.t_start, s.t_end) == (0.0, 2e-3)
    assert field_at(s, 0.5e-3).as_tuple() == pytest.approx((0.01, 0.0, 0.1))


@pytest.mark.parametrize("text", [
    "time,bx,by,bz\n0,0,0,1\n1,0,0,-1\n",
    "t_s,bx_g,by_g,bz_g\n0,0,0,1\n",
    "t_s,bx_g,by_g,bz_g\n0,0,0,1\n1,0,x,-1\n",
    "t_s,bx_g,by_g,bz_g\n0,0,0,1\n0,0,0,-1\n",
    "t_s,bx_g,by_g,bz_g\n0,0,0,1\n1,0,0,inf\n",
    "",
])
def test_malformed_traces(tmp_path, text):
    with pytest.raises(TraceFormatError):
        load_trace_csv(_write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(TraceFormatError):
        load_trace_csv(tmp_path / "absent.csv")


def test_digitized_schedule_replays(tmp_path):
    smooth = make_smooth_reversal(0.2, 0.02, 2e-3, 1e-3)
    path = tmp_path / "digitized.csv"
    write_trace_csv(digitize_schedule(smooth, 201), path)
    trace = load_trace_csv(path)
    for t in (0.0, 0.37e-3, 1e-3, 2e-3):
        assert field_at(trace, t).as_tuple() == pytest.approx(field_at(smooth, t).as_tuple(), abs=2e-4)
    start, end = reversal_window(trace)
    assert start < 1e-3 < end


def test_digitize_needs_two_samples():
    with pytest.raises(TraceFormatError):
        digitize_schedule(make_smooth_reversal(0.2, 0.02, 2e-3, 1e-3), 1)
