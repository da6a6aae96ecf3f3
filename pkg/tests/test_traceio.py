import math

import numpy as np
import pytest

from sirkit.errors import TraceFormatError, ValidationError
from sirkit.fitting import synthetic_notch_trace
from sirkit.network import S21Trace
from sirkit.traceio import (
    export_touchstone,
    read_fit_results,
    read_touchstone,
    read_trace,
    write_fit_results,
    write_trace,
)


@pytest.fixture
def trace():
    return synthetic_notch_trace(6e9, 1e5, 2e5, 0.1, 40e-9, 0.3, 1.0, points=301,
                                 incident_power_dbm=-35.5)


class TestRoundTrip:
    @pytest.mark.parametrize("suffix", [".csv", ".s2p"])
    def test_lossless(self, tmp_path, trace, suffix):
        back = read_trace(write_trace(trace, tmp_path / f"t{suffix}"))
        np.testing.assert_array_equal(back.frequencies, trace.frequencies)
        np.testing.assert_array_equal(back.s21, trace.s21)
        assert back.incident_power_dbm == -35.5
        assert back.metadata["true_q_internal"] == 1e5

    def test_s2p_keeps_reflections(self, tmp_path):
        f = np.linspace(1e9, 2e9, 4)
        tr = S21Trace(f, [1, 0.5j, -0.5, 0.1], s11=[0.1, 0.2, 0.3, 0.4], s22=[0, 0, 0, 0.5j])
        back = read_touchstone(export_touchstone(tr, tmp_path / "x.s2p"))
        np.testing.assert_array_equal(back.s11, tr.s11)
        np.testing.assert_array_equal(back.s22, tr.s22)

    def test_bytes_deterministic(self, tmp_path, trace):
        a = write_trace(trace, tmp_path / "a.s2p").read_bytes()
        b = write_trace(trace, tmp_path / "b.s2p").read_bytes()
        assert a == b

    def test_unknown_suffix(self, tmp_path, trace):
        with pytest.raises(ValidationError):
            write_trace(trace, tmp_path / "x.txt")
        with pytest.raises(TraceFormatError):
            read_trace(tmp_path / "x.txt")


class TestTouchstoneReader:
    def test_ma_ghz_s1p(self, tmp_path):
        p = tmp_path / "m.s1p"
        p.write_text("! comment\n# GHz S MA R 50\n6.0 0.5 90\n6.1 1.0 0 ! trailing\n")
        tr = read_touchstone(p)
        np.testing.assert_allclose(tr.frequencies, [6e9, 6.1e9])
        np.testing.assert_allclose(tr.s21, [0.5j, 1.0], atol=1e-15)

    def test_db_and_continuation(self, tmp_path):
        p = tmp_path / "d.s2p"
        p.write_text("# MHz S DB R 75\n100 -20 0 -6.0206 180\n  -6.0206 180 -20 0\n")
        tr = read_touchstone(p)
        assert tr.frequencies[0] == 1e8
        assert tr.s21[0] == pytest.approx(-0.5, rel=1e-5)
        assert tr.metadata["z_ref"] == 75.0

    def test_default_option_is_ghz_ma(self, tmp_path):
        p = tmp_path / "n.s1p"
        p.write_text("1.0 1.0 0\n2.0 1.0 0\n")
        assert read_touchstone(p).frequencies[1] == 2e9

    @pytest.mark.parametrize(
        "body, line",
        [
            ("# Hz S RI R 50\n1 1 0 1 0 1 0 1 0\n2 1 0 x 0 1 0 1 0\n", 3),
            ("# Hz S XY R 50\n", 1),
            ("# Hz S RI R 50\n# Hz S RI R 50\n", 2),
            ("# Hz S RI R 50\n1 1 0 1 0 1 0 1 0 1 2\n", 2),
            ("# Hz S RI R 50\n1 1 0 1\n", 2),
        ],
    )
    def test_malformed_names_line(self, tmp_path, body, line):
        p = tmp_path / "bad.s2p"
        p.write_text(body)
        with pytest.raises(TraceFormatError) as info:
            read_touchstone(p)
        assert info.value.line == line
        assert f"line {line}" in str(info.value)

    def test_empty_and_unsorted(self, tmp_path):
        p = tmp_path / "e.s1p"
        p.write_text("# Hz S RI R 50\n")
        with pytest.raises(TraceFormatError):
            read_touchstone(p)
        p.write_text("# Hz S RI R 50\n2 1 0\n1 1 0\n")
        with pytest.raises(TraceFormatError):
            read_touchstone(p)


class TestCsvReader:
    def test_bad_header(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("f,re,im\n1,1,0\n")
        with pytest.raises(TraceFormatError) as info:
            read_trace(p)
        assert info.value.line == 1

    def test_bad_row(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("# power_dbm=-10\nfrequency_hz,s21_re,s21_im\n1,1,0\n2,1\n")
        with pytest.raises(TraceFormatError) as info:
            read_trace(p)
        assert info.value.line == 4

    def test_no_power(self, tmp_path):
        p = tmp_path / "n.csv"
        p.write_text("frequency_hz,s21_re,s21_im\n1,1,0\n2,1,0\n")
        assert read_trace(p).incident_power_dbm is None


class TestFitResults:
    def test_round_trip(self, tmp_path):
        rows = [{"trace_id": "a", "f_r_hz": 6e9, "q_internal": 1.5e5, "status": "ok"},
                {"trace_id": "b", "status": "no-resonance"}]
        back = read_fit_results(write_fit_results(rows, tmp_path / "r.csv"))
        assert back[0]["f_r_hz"] == 6e9 and back[0]["status"] == "ok"
        assert math.isnan(back[1]["q_internal"])
