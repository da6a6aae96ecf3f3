import json

import pytest

from sirkit.cpw import SAPPHIRE
from sirkit.errors import ValidationError
from sirkit.manifest import (
    CONFIG_ENV,
    DesignManifest,
    FeedlineEntry,
    ResonatorEntry,
    SegmentEntry,
    bundled_manifest_names,
    empty_manifest,
    load_manifest,
    locate_manifest,
    read_manifest,
    write_manifest,
)
from sirkit.network import fundamental_frequency

# Table rows as (name, shorted-section (g, w, l), coupled-section (g, w, l), rounded step)
DESIGN1_SIRS = [
    ("SIR1", 2151, 2128, False), ("SIR2", 2114, 2092, True), ("SIR3", 2083, 2060, False),
    ("SIR4", 2048, 2027, True), ("SIR5", 2018, 1995, False), ("SIR6", 1984, 1963, True),
    ("SIR7", 1956, 1933, False), ("SIR8", 1929, 1905, False),
]


class TestBundled:
    def test_names(self):
        assert bundled_manifest_names() == ["design1.manifest", "design2.manifest"]

    def test_design1_rows(self):
        m = load_manifest("design1.manifest")
        assert len(m.resonators) == 10
        for entry, (name, l_short, l_open, rounded) in zip(m.resonators, DESIGN1_SIRS):
            assert entry.name == name and entry.type == "SIR"
            (w0, g0, l0), (w1, g1, l1) = [(s.center_width_um, s.gap_um, s.length_um)
                                          for s in entry.segments]
            assert (w0, g0, l0) == (20.0, 10.0, l_open)
            assert (w1, g1, l1) == (4.0, 18.0, l_short)
            assert entry.rounded_step is rounded
            assert m.coupling_cap(entry) == 0.8
        uirs = {e.name: e for e in m.resonators[8:]}
        assert uirs["UIR9"].segments == [SegmentEntry(20.0, 10.0, 4702.0)]
        assert uirs["UIR10"].segments == [SegmentEntry(4.0, 2.0, 4569.0)]

    def test_design2_rows(self):
        m = load_manifest("design2.manifest")
        names = [e.name for e in m.resonators]
        assert names == ["UIR1", "UIR2", "UIR3", "SIR4", "SIR5", "SIR6", "SIR7", "SIR8", "SIR9"]
        sir7 = m.resonators[6]
        assert [(s.center_width_um, s.gap_um) for s in sir7.segments] == [(20.0, 2.0), (4.0, 10.0)]
        assert [s.length_um for s in sir7.segments] == [1728.0, 1729.0]
        assert sir7.coupling_cap_ff is None
        assert m.resonators[5].rounded_step

    @pytest.mark.parametrize("name", ["design1.manifest", "design2.manifest"])
    def test_byte_identical_round_trip(self, tmp_path, name):
        original = locate_manifest(name).read_text()
        m = load_manifest(name)
        out = write_manifest(m, tmp_path / name)
        assert out.read_text() == original
        assert write_manifest(read_manifest(out), tmp_path / "again").read_text() == original

    def test_fundamentals_in_band(self):
        m = load_manifest("design1.manifest")
        f = [fundamental_frequency(m.resonator_spec(e)) for e in m.resonators[:8]]
        assert all(5.9e9 < x < 6.9e9 for x in f)
        assert f == sorted(f)

    def test_feedline_is_fifty_ohm(self):
        assert load_manifest("design1.manifest").feedline_params().z0 == pytest.approx(50.0,
                                                                                       rel=1e-12)


class TestLookup:
    def test_config_dir(self, tmp_path, monkeypatch):
        write_manifest(empty_manifest(), tmp_path / "mine.manifest")
        monkeypatch.setenv(CONFIG_ENV, str(tmp_path))
        assert locate_manifest("mine.manifest") == tmp_path / "mine.manifest"

    def test_cwd_wins(self, tmp_path, monkeypatch):
        write_manifest(empty_manifest(), tmp_path / "design1.manifest")
        monkeypatch.chdir(tmp_path)
        assert len(load_manifest("design1.manifest").resonators) == 0

    def test_missing(self):
        with pytest.raises(FileNotFoundError):
            locate_manifest("nope.manifest")


class TestValidation:
    def _entry(self, name="A", **kw):
        return ResonatorEntry(name, kw.pop("type", "UIR"), [SegmentEntry(20.0, 10.0, 4000.0)], **kw)

    def _manifest(self, *entries):
        return DesignManifest(SAPPHIRE, FeedlineEntry(22.0, 10.0), list(entries))

    def test_duplicate_names(self):
        with pytest.raises(ValidationError, match="duplicate"):
            self._manifest(self._entry(), self._entry())

    def test_type_segment_count(self):
        with pytest.raises(ValidationError):
            self._manifest(self._entry(type="SIR"))
        with pytest.raises(ValidationError):
            self._manifest(self._entry(type="XYZ"))

    def test_bad_segment(self):
        bad = ResonatorEntry("B", "UIR", [SegmentEntry(20.0, 10.0, -5.0)])
        with pytest.raises(ValidationError):
            self._manifest(bad)

    def test_bad_json(self):
        with pytest.raises(ValidationError, match="line"):
            DesignManifest.loads("{\n  nope")
        with pytest.raises(ValidationError):
            DesignManifest.loads("[]")

    def test_missing_fields(self):
        with pytest.raises(ValidationError):
            DesignManifest.loads(json.dumps({"schema_version": 1}))

    def test_schema_version(self):
        data = empty_manifest().to_dict()
        data["schema_version"] = 99
        with pytest.raises(ValidationError):
            DesignManifest.from_dict(data)

    def test_placements(self):
        m = self._manifest(self._entry("A"), self._entry("B", coupling_cap_ff=2.0))
        placed = m.placements(internal_q=1e5)
        assert [tap for _, tap in placed] == [1000.0, 2000.0]
        assert placed[1][0].coupling_cap == 2.0 and placed[0][0].coupling_cap == 0.8
        assert m.feedline_length() == 3000.0
