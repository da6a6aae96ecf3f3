"""Design manifests: a chip's substrate, feedline and resonators as JSON.

Floats are written in their shortest round-trip form (at most 17
significant digits), so write -> read -> write is byte-identical.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from sirkit.cpw import CpwCrossSection, LineParams, SubstrateSpec, cpw_params
from sirkit.errors import ValidationError
from sirkit.network import ResonatorSpec

SCHEMA_VERSION = 1
CONFIG_ENV = "SIRKIT_CONFIG_DIR"
DEFAULT_COUPLING_CAP_FF = 0.8
RESONATOR_TYPES = ("SIR", "UIR")


@dataclass
class SegmentEntry:
    center_width_um: float
    gap_um: float
    length_um: float

    @property
    def cross_section(self) -> CpwCrossSection:
        return CpwCrossSection(self.center_width_um, self.gap_um)


@dataclass
class ResonatorEntry:
    """One resonator; ``segments`` run from the coupled end."""

    name: str
    type: str
    segments: list
    coupling_cap_ff: float | None = None  # None: manifest default
    target_frequency_hz: float | None = None
    rounded_step: bool = False  # layout note only, no electrical effect
    termination: str = "short"


@dataclass
class FeedlineEntry:
    center_width_um: float
    gap_um: float
    tap_spacing_um: float = 1000.0

    @property
    def cross_section(self) -> CpwCrossSection:
        return CpwCrossSection(self.center_width_um, self.gap_um)


@dataclass
class DesignManifest:
    substrate: SubstrateSpec
    feedline: FeedlineEntry
    resonators: list = field(default_factory=list)
    default_coupling_cap_ff: float = DEFAULT_COUPLING_CAP_FF
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValidationError(f"unsupported schema version {self.schema_version}",
                                  field="schema_version")
        names = [r.name for r in self.resonators]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise ValidationError(f"duplicate resonator names: {', '.join(dup)}", field="name")
        if not self.default_coupling_cap_ff >= 0:
            raise ValidationError("default coupling cap must be >= 0",
                                  field="default_coupling_cap_ff")
        self.feedline_params()
        for entry in self.resonators:
            if entry.type not in RESONATOR_TYPES:
                raise ValidationError(f"{entry.name}: type must be SIR or UIR", field="type")
            if entry.type == "UIR" and len(entry.segments) != 1:
                raise ValidationError(f"{entry.name}: a UIR has exactly one segment",
                                      field="segments")
            if entry.type == "SIR" and len(entry.segments) < 2:
                raise ValidationError(f"{entry.name}: a SIR needs at least two segments",
                                      field="segments")
            if entry.target_frequency_hz is not None and not entry.target_frequency_hz > 0:
                raise ValidationError(f"{entry.name}: target frequency must be > 0",
                                      field="target_frequency_hz")
            self.resonator_spec(entry)

    def feedline_params(self) -> LineParams:
        return cpw_params(self.feedline.cross_section, self.substrate)

    def coupling_cap(self, entry: ResonatorEntry) -> float:
        return self.default_coupling_cap_ff if entry.coupling_cap_ff is None else entry.coupling_cap_ff

    def segment_lines(self, entry: ResonatorEntry) -> list:
        return [cpw_params(seg.cross_section, self.substrate) for seg in entry.segments]

    def resonator_spec(self, entry: ResonatorEntry, internal_q: float | None = None) -> ResonatorSpec:
        lines = self.segment_lines(entry)
        return ResonatorSpec(
            segments=tuple((line, seg.length_um) for line, seg in zip(lines, entry.segments)),
            termination=entry.termination,
            coupling_cap=self.coupling_cap(entry),
            internal_q=internal_q,
            name=entry.name,
        )

    def placements(self, internal_q: float | None = None) -> list:
        """``(ResonatorSpec, tap_um)`` pairs, one tap spacing apart."""
        step = self.feedline.tap_spacing_um
        return [(self.resonator_spec(e, internal_q), step * (i + 1))
                for i, e in enumerate(self.resonators)]

    def feedline_length(self) -> float:
        return self.feedline.tap_spacing_um * (len(self.resonators) + 1)

    # --- serialisation -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "substrate": {
                "relative_permittivity": float(self.substrate.relative_permittivity),
                "model": self.substrate.model,
            },
            "feedline": {
                "center_width_um": float(self.feedline.center_width_um),
                "gap_um": float(self.feedline.gap_um),
                "tap_spacing_um": float(self.feedline.tap_spacing_um),
            },
            "default_coupling_cap_ff": float(self.default_coupling_cap_ff),
            "resonators": [
                {
                    "name": e.name,
                    "type": e.type,
                    "termination": e.termination,
                    "segments": [
                        {
                            "center_width_um": float(s.center_width_um),
                            "gap_um": float(s.gap_um),
                            "length_um": float(s.length_um),
                        }
                        for s in e.segments
                    ],
                    "coupling_cap_ff": _opt_float(e.coupling_cap_ff),
                    "target_frequency_hz": _opt_float(e.target_frequency_hz),
                    "rounded_step": bool(e.rounded_step),
                }
                for e in self.resonators
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "DesignManifest":
        try:
            sub = data["substrate"]
            feed = data["feedline"]
            resonators = [
                ResonatorEntry(
                    name=str(r["name"]),
                    type=str(r["type"]),
                    termination=str(r.get("termination", "short")),
                    segments=[
                        SegmentEntry(float(s["center_width_um"]), float(s["gap_um"]),
                                     float(s["length_um"]))
                        for s in r["segments"]
                    ],
                    coupling_cap_ff=_opt_float(r.get("coupling_cap_ff")),
                    target_frequency_hz=_opt_float(r.get("target_frequency_hz")),
                    rounded_step=bool(r.get("rounded_step", False)),
                )
                for r in data.get("resonators", [])
            ]
            return cls(
                substrate=SubstrateSpec(float(sub["relative_permittivity"]),
                                        str(sub.get("model", "half-space"))),
                feedline=FeedlineEntry(float(feed["center_width_um"]), float(feed["gap_um"]),
                                       float(feed.get("tap_spacing_um", 1000.0))),
                resonators=resonators,
                default_coupling_cap_ff=float(
                    data.get("default_coupling_cap_ff", DEFAULT_COUPLING_CAP_FF)),
                schema_version=int(data.get("schema_version", -1)),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed manifest: missing or bad field {exc}") from None

    @classmethod
    def loads(cls, text: str) -> "DesignManifest":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"manifest is not valid JSON (line {exc.lineno}): {exc.msg}") from None
        if not isinstance(data, dict):
            raise ValidationError("manifest must be a JSON object")
        return cls.from_dict(data)


def _opt_float(x):
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError("manifest numbers must be finite")
    return x


def write_manifest(manifest: DesignManifest, path) -> Path:
    path = Path(path)
    path.write_text(manifest.dumps(), encoding="utf-8")
    return path


def read_manifest(path) -> DesignManifest:
    return DesignManifest.loads(Path(path).read_text(encoding="utf-8"))


def bundled_manifest_names() -> list:
    return sorted(p.name for p in resources.files("sirkit").joinpath("data").iterdir()
                  if p.name.endswith(".manifest"))


def locate_manifest(name) -> Path:
    """Resolve ``name`` against the working directory, then
    ``$SIRKIT_CONFIG_DIR``, then the manifests shipped with the package."""
    candidate = Path(name)
    if candidate.is_file():
        return candidate
    if not candidate.is_absolute():
        config = os.environ.get(CONFIG_ENV)
        if config and (Path(config) / candidate).is_file():
            return Path(config) / candidate
        bundled = resources.files("sirkit").joinpath("data", str(candidate))
        if bundled.is_file():
            return Path(str(bundled))
    raise FileNotFoundError(f"manifest {name!r} not found")


def load_manifest(name) -> DesignManifest:
    return read_manifest(locate_manifest(name))


def empty_manifest(substrate: SubstrateSpec | None = None) -> DesignManifest:
    from sirkit.cpw import SAPPHIRE, solve_center_width

    sub = substrate or SAPPHIRE
    return DesignManifest(sub, FeedlineEntry(solve_center_width(50.0, 10.0, sub), 10.0))


__all__ = [
    "CONFIG_ENV",
    "DEFAULT_COUPLING_CAP_FF",
    "DesignManifest",
    "FeedlineEntry",
    "ResonatorEntry",
    "SCHEMA_VERSION",
    "SegmentEntry",
    "bundled_manifest_names",
    "empty_manifest",
    "load_manifest",
    "locate_manifest",
    "read_manifest",
    "write_manifest",
]
