"""Coplanar waveguide line parameters from the conformal-mapping model.

The substrate is treated as a lossless dielectric half-space below a
zero-thickness metal layer, so that::

    eps_eff = (1 + eps_r) / 2
    z0      = 30 pi / sqrt(eps_eff) * K(k') / K(k),   k = w / (w + 2 g)

Lengths are passed in micrometres; everything returned is SI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from sirkit.errors import (
    InvalidGeometryError,
    InvalidSubstrateError,
    NoSolutionError,
    ValidationError,
)

SPEED_OF_LIGHT = 299_792_458.0
UM = 1e-6

# bracket for the inverse solver; outside it K(k')/K(k) loses digits
_K_MIN = 1e-12
_K_MAX = 1.0 - 1e-12


@dataclass(frozen=True)
class CpwCrossSection:
    """Centre conductor width and gap, both in micrometres."""

    center_width: float
    gap: float
    film_thickness: float = 0.0

    def __post_init__(self):
        if not self.center_width > 0:
            raise InvalidGeometryError(
                f"center_width must be > 0 (got {self.center_width})", field="center_width"
            )
        if not self.gap > 0:
            raise InvalidGeometryError(f"gap must be > 0 (got {self.gap})", field="gap")
        if self.film_thickness < 0:
            raise InvalidGeometryError(
                f"film_thickness must be >= 0 (got {self.film_thickness})", field="film_thickness"
            )

    @property
    def modulus(self) -> float:
        return self.center_width / (self.center_width + 2.0 * self.gap)


@dataclass(frozen=True)
class SubstrateSpec:
    relative_permittivity: float = 10.0
    model: str = "half-space"

    def __post_init__(self):
        if not self.relative_permittivity >= 1.0:
            raise InvalidSubstrateError(
                f"relative_permittivity must be >= 1 (got {self.relative_permittivity})",
                field="relative_permittivity",
            )
        if self.model != "half-space":
            raise InvalidSubstrateError(f"unknown substrate model {self.model!r}", field="model")


SAPPHIRE = SubstrateSpec(10.0)


@dataclass(frozen=True)
class LineParams:
    """Per-unit-length description of a TEM line.

    ``attenuation`` is in nepers per metre and is treated as frequency
    independent unless a resonator overrides it with an internal Q.
    """

    eps_eff: float
    z0: float
    phase_velocity: float | None = None
    attenuation: float = 0.0

    def __post_init__(self):
        if self.phase_velocity is None:
            object.__setattr__(self, "phase_velocity", SPEED_OF_LIGHT / math.sqrt(self.eps_eff))
        if self.eps_eff < 1.0:
            raise ValidationError(f"eps_eff must be >= 1 (got {self.eps_eff})", field="eps_eff")
        if not self.z0 > 0:
            raise ValidationError(f"z0 must be > 0 (got {self.z0})", field="z0")
        if self.attenuation < 0:
            raise ValidationError(f"attenuation must be >= 0 (got {self.attenuation})", field="attenuation")

    def beta(self, f):
        """Phase constant in rad/m at frequency ``f`` (Hz)."""
        return 2.0 * math.pi * f / self.phase_velocity

    def with_attenuation(self, attenuation: float) -> "LineParams":
        return LineParams(self.eps_eff, self.z0, self.phase_velocity, attenuation)


def ellipk(k: float) -> float:
    """Complete elliptic integral of the first kind, K(k), by the AGM.

    Takes the modulus ``k`` (not the parameter m = k**2).
    """
    if not 0.0 <= k < 1.0:
        raise ValueError(f"modulus must satisfy 0 <= k < 1 (got {k})")
    return _k_from_complement(math.sqrt((1.0 - k) * (1.0 + k)))


def _k_from_complement(kp: float) -> float:
    # K(k) = pi / (2 AGM(1, k')); taking k' directly keeps K(k') accurate
    # for tiny k, where sqrt(1 - k^2) would round to 1
    if kp == 0.0:
        return math.inf
    a, b = 1.0, kp
    while abs(a - b) > 1e-15 * a:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def _z0_from_modulus(k: float, eps_eff: float) -> float:
    kp = math.sqrt((1.0 - k) * (1.0 + k))
    return 30.0 * math.pi / math.sqrt(eps_eff) * _k_from_complement(k) / _k_from_complement(kp)


def effective_permittivity(sub: SubstrateSpec) -> float:
    return 0.5 * (1.0 + sub.relative_permittivity)


def cpw_params(xs: CpwCrossSection, sub: SubstrateSpec = SAPPHIRE) -> LineParams:
    """Effective permittivity, impedance and phase velocity of a CPW."""
    eps_eff = effective_permittivity(sub)
    return LineParams(eps_eff=eps_eff, z0=_z0_from_modulus(xs.modulus, eps_eff))


def solve_center_width(target_z0: float, gap: float, sub: SubstrateSpec = SAPPHIRE) -> float:
    """Centre width (um) giving ``target_z0`` for a fixed gap.

    Bisects on the modulus k, along which z0 is strictly decreasing.
    """
    if not gap > 0:
        raise InvalidGeometryError(f"gap must be > 0 (got {gap})", field="gap")
    eps_eff = effective_permittivity(sub)
    z_hi = _z0_from_modulus(_K_MIN, eps_eff)
    z_lo = _z0_from_modulus(_K_MAX, eps_eff)
    if not (z_lo <= target_z0 <= z_hi):
        raise NoSolutionError(
            f"target impedance {target_z0} ohm outside attainable range "
            f"[{z_lo:.4g}, {z_hi:.4g}] ohm for eps_r={sub.relative_permittivity}"
        )
    lo, hi = _K_MIN, _K_MAX
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _z0_from_modulus(mid, eps_eff) > target_z0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * mid:
            break
    k = 0.5 * (lo + hi)
    return 2.0 * gap * k / (1.0 - k)
