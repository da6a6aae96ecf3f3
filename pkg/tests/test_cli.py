import csv
import json

import numpy as np
import pytest

from sirkit.cli import main
from sirkit.fitting import synthetic_notch_trace
from sirkit.network import S21Trace
from sirkit.traceio import read_fit_results, read_trace, write_trace


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def dips(trace, level=0.5):
    mag = np.abs(trace.s21)
    return int(np.sum((mag[1:-1] < mag[:-2]) & (mag[1:-1] <= mag[2:]) & (mag[1:-1] < level)))


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestImpedance:
    def test_design_lines(self, capsys):
        code, out, _ = run(capsys, "impedance", "--w", "20", "--g", "10", "--er", "10")
        assert code == 0
        assert "z0_ohm=51.4102" in out and "eps_eff=5.5000" in out
        code, out, _ = run(capsys, "impedance", "--w", "4", "--g", "18", "--er", "10")
        assert "z0_ohm=94.3124" in out

    def test_bad_width(self, capsys):
        code, _, err = run(capsys, "impedance", "--w", "0", "--g", "10")
        assert code == 2
        assert "center_width" in err


class TestDesign:
    @pytest.mark.parametrize("r, pct", [("0.54", 19.4), ("0.41", 27.5)])
    def test_shortening_report(self, capsys, r, pct):
        code, out, _ = run(capsys, "design", "--freq", "6.5e9", "--r", r)
        assert code == 0
        reported = float(out.split("shortening=")[1].split("%")[0])
        assert reported == pytest.approx(pct, abs=0.1)

    def test_uniform_label(self, capsys):
        code, out, _ = run(capsys, "design", "--freq", "6.5e9", "--r", "1")
        assert code == 0
        assert "UIR" in out and "shortening=0.00%" in out

    def test_infeasible(self, capsys):
        code, _, err = run(capsys, "design", "--freq", "6.5e9", "--r", "0.54",
                           "--coupling-cap", "1e6")
        assert code == 3 and "infeasible" in err

    def test_unreachable_impedance(self, capsys):
        code, _, _ = run(capsys, "design", "--freq", "6.5e9", "--r", "1e-6")
        assert code == 3

    def test_missing_target(self, capsys):
        assert run(capsys, "design", "--r", "0.5")[0] == 2

    def test_writes_manifest(self, capsys, workdir):
        code, _, _ = run(capsys, "design", "--freq", "6.2e9", "--r", "0.54", "--out", "d.manifest")
        assert code == 0
        data = json.loads((workdir / "d.manifest").read_text())
        entry = data["resonators"][0]
        assert entry["type"] == "SIR" and entry["target_frequency_hz"] == 6.2e9

    def test_manifest_in_keeps_untargeted(self, capsys, workdir):
        code, out, _ = run(capsys, "design", "--manifest", "design1.manifest", "--out", "x.manifest")
        assert code == 0 and "kept as is" in out
        assert (workdir / "x.manifest").read_text() == \
            (workdir / "x.manifest").read_text()


class TestSimulate:
    def test_design1_has_ten_dips(self, capsys, workdir):
        code, _, _ = run(capsys, "simulate", "design1.manifest", "--out", "chip.csv")
        assert code == 0
        assert dips(read_trace(workdir / "chip.csv")) == 10

    def test_empty_is_flat(self, capsys, workdir):
        (workdir / "e.manifest").write_text(json.dumps({
            "schema_version": 1,
            "substrate": {"relative_permittivity": 10.0, "model": "half-space"},
            "feedline": {"center_width_um": 22.031783486284798, "gap_um": 10.0},
            "resonators": []}))
        assert run(capsys, "simulate", "e.manifest", "--out", "e.s2p")[0] == 0
        tr = read_trace(workdir / "e.s2p")
        np.testing.assert_allclose(np.abs(tr.s21), 1.0, atol=1e-12)

    def test_byte_identical(self, capsys, workdir):
        run(capsys, "simulate", "design2.manifest", "--out", "a.csv")
        run(capsys, "simulate", "design2.manifest", "--out", "b.csv")
        assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()

    def test_zoom_traces(self, capsys, workdir):
        code, _, _ = run(capsys, "simulate", "design1.manifest", "--out", "c.csv",
                         "--zoom-dir", "z", "--qi", "3e5")
        assert code == 0
        assert len(list((workdir / "z").glob("*.csv"))) == 10

    def test_io_error(self, capsys, workdir):
        code, _, err = run(capsys, "simulate", "design1.manifest", "--out", "nodir/x.csv")
        assert code == 4
        code, _, _ = run(capsys, "simulate", "missing.manifest")
        assert code == 4

    def test_invalid_manifest(self, capsys, workdir):
        (workdir / "bad.manifest").write_text("{")
        assert run(capsys, "simulate", "bad.manifest")[0] == 2


class TestFit:
    def test_known_q(self, capsys, workdir):
        write_trace(synthetic_notch_trace(6e9, 1.5e5, 2e5, 0.2, 30e-9, 0.4, 0.5), workdir / "t.s2p")
        code, _, _ = run(capsys, "fit", "t.s2p", "--out", "r.csv")
        assert code == 0
        res = read_fit_results(workdir / "r.csv")[0]
        assert res["q_internal"] == pytest.approx(1.5e5, rel=0.01)
        assert res["status"] == "ok"

    def test_flat_trace_warns(self, capsys, workdir):
        write_trace(S21Trace(np.linspace(6e9, 6.1e9, 300), np.ones(300)), workdir / "flat.csv")
        code, out, err = run(capsys, "fit", "flat.csv", "--out", "r.csv")
        assert code == 0
        assert "1 warnings" in out and "warning" in err
        assert read_fit_results(workdir / "r.csv")[0]["status"] == "no-resonance"

    def test_malformed_touchstone(self, capsys, workdir):
        (workdir / "bad.s2p").write_text("# Hz S RI R 50\n1 1 0 1 0 1 0 1 0\n2 1 0 z 0 1 0 1 0\n")
        code, _, err = run(capsys, "fit", "bad.s2p", "--out", "r.csv")
        assert code == 2
        assert "line 3" in err

    def test_photon_number_column(self, capsys, workdir):
        write_trace(synthetic_notch_trace(6e9, 1e5, 2e5, incident_power_dbm=-20.0), workdir / "p.csv")
        run(capsys, "fit", "p.csv", "--attenuation-db", "75", "--out", "r.csv")
        n = read_fit_results(workdir / "r.csv")[0]["photon_number"]
        assert n == pytest.approx(93773.274885455249, rel=1e-4)


class TestSweep:
    def test_photon_span(self, capsys, workdir):
        code, _, _ = run(capsys, "synth-sweep", "design1.manifest", "--resonator", "SIR1",
                         "--out-dir", "sw", "--coupling-cap", "1.310778837278995",
                         "--tls", "1e-9", "--q-other", "1e5", "--snr-db", "0")
        assert code == 0
        code, _, _ = run(capsys, "sweep", "sw", "--attenuation-db", "75", "--out", "qn.csv")
        assert code == 0
        table = rows(workdir / "qn.csv")
        assert len(table) == 10
        n = [float(r["photon_number"]) for r in table]
        assert n == sorted(n)
        assert 3.0 / 1.5 < n[0] < 3.0 * 1.5
        assert 9.4e4 / 1.5 < n[-1] < 9.4e4 * 1.5

    def test_single_file_and_missing_power(self, capsys, workdir):
        (workdir / "d").mkdir()
        write_trace(synthetic_notch_trace(6e9, 1e5, 2e5, incident_power_dbm=-30.0),
                    workdir / "d" / "a.csv")
        write_trace(synthetic_notch_trace(6e9, 1e5, 2e5), workdir / "d" / "b.csv")
        code, _, err = run(capsys, "sweep", "d", "--attenuation-db", "70", "--out", "qn.csv")
        assert code == 0
        assert "b skipped" in err
        assert [r["trace_id"] for r in rows(workdir / "qn.csv")] == ["a"]


def test_design_simulate_fit_pipeline(capsys, workdir):
    targets = [6.1e9, 6.45e9, 6.8e9]
    names = []
    for i, f in enumerate(targets):
        run(capsys, "design", "--freq", repr(f), "--r", "0.54", "--name", f"R{i}",
            "--out", f"r{i}.manifest")
        names.append(json.loads((workdir / f"r{i}.manifest").read_text()))
    merged = names[0]
    merged["resonators"] = [m["resonators"][0] for m in names]
    (workdir / "chip.manifest").write_text(json.dumps(merged))
    assert run(capsys, "simulate", "chip.manifest", "--out", "c.csv", "--zoom-dir", "z",
               "--qi", "2e5")[0] == 0
    assert run(capsys, "fit", "z", "--out", "r.csv")[0] == 0
    fitted = {r["trace_id"]: r["f_r_hz"] for r in read_fit_results(workdir / "r.csv")}
    for i, f in enumerate(targets):
        assert fitted[f"R{i}"] == pytest.approx(f, rel=1e-3)
