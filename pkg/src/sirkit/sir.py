"""Stepped-impedance resonator design.

A quarter-wave SIR is a low-impedance section (Z1, electrical length
theta1) at the coupled, open end followed by a high-impedance section
(Z2, theta2) shorted to ground. It resonates where

    tan(theta1) * tan(theta2) = R,    R = Z1 / Z2,

and for a fixed R the total length theta1 + theta2 is smallest when the
two sections are equally long, giving 2 atan(sqrt(R)).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from sirkit import kernels
from sirkit.cpw import UM, LineParams
from sirkit.errors import DesignInfeasibleError, DomainError, PoleError, ValidationError
from sirkit.network import FF, ResonatorSpec, fundamental_frequency

HALF_PI = 0.5 * math.pi
_POLE_EPS = 1e-12


def _tan_checked(theta: float, name: str) -> float:
    if abs(math.cos(theta)) < _POLE_EPS:
        raise PoleError(f"{name}={theta!r} sits on a tangent pole", field=name)
    return math.tan(theta)


def resonance_residual(r: float, theta1: float, theta2: float) -> float:
    """tan(theta1) tan(theta2) - R; zero exactly at resonance."""
    return _tan_checked(theta1, "theta1") * _tan_checked(theta2, "theta2") - r


def _check_ratio(r):
    if not r > 0 or not math.isfinite(r):
        raise DomainError(f"impedance ratio must be positive and finite (got {r})", field="R")


def minimal_total_theta(r: float) -> float:
    """Shortest total electrical length 2 atan(sqrt(R)) of a resonant SIR."""
    _check_ratio(r)
    return 2.0 * math.atan(math.sqrt(r))


def shortening(r: float) -> float:
    """Fractional length saving of the equal-split SIR against lambda/4."""
    return 1.0 - minimal_total_theta(r) / HALF_PI


def solve_theta2(r: float, theta1: float) -> float:
    """Length of the shorted section that makes the SIR resonant."""
    _check_ratio(r)
    if not 0.0 < theta1 < HALF_PI:
        raise DomainError(f"theta1 must lie in (0, pi/2) (got {theta1})", field="theta1")
    return math.atan(r / math.tan(theta1))


def spurious_ratios(r: float, count: int = 3, split: str = "equal-theta") -> list:
    """First ``count`` higher-mode frequency ratios f_k / f_0.

    For the equal split both sections share theta, so the modes are the
    positive roots of tan^2(theta) = R: a, pi - a, pi + a, 2 pi - a, ...
    with a = atan(sqrt(R)).
    """
    _check_ratio(r)
    if split != "equal-theta":
        raise DomainError("closed form only covers the equal-theta split", field="split")
    if count < 1:
        raise DomainError(f"count must be >= 1 (got {count})", field="count")
    a = math.atan(math.sqrt(r))
    roots = []
    k = 0
    while len(roots) < count + 1:
        roots.append(k * math.pi + a)
        roots.append((k + 1) * math.pi - a)
        k += 1
    roots.sort()
    return [x / a for x in roots[1 : count + 1]]


def scan_resonances(r: float, count: int, theta_ratio: float = 1.0, step: float = math.pi / 1000,
                    tol: float = 1e-12) -> np.ndarray:
    """Brute-force roots of tan(x) tan(theta_ratio x) = R.

    Sign-change scan at ``step`` followed by bisection to ``tol``; returns
    the first ``count`` + 1 roots (fundamental first).
    """
    _check_ratio(r)
    x_max = math.pi * (count + 2) / min(theta_ratio, 1.0)
    roots = kernels.tan_product_roots(r, theta_ratio, x_max, step, tol)
    if len(roots) < count + 1:
        raise DomainError(f"only {len(roots)} roots found below {x_max:.3g}")
    return roots[: count + 1]


def physical_length(theta: float, f: float, line: LineParams) -> float:
    """Length in um of a section with electrical length ``theta`` at ``f``."""
    if not f > 0:
        raise DomainError(f"frequency must be > 0 (got {f})", field="f")
    if theta < 0:
        raise DomainError(f"theta must be >= 0 (got {theta})", field="theta")
    return theta * line.phase_velocity / (2.0 * math.pi * f) / UM


def length_correction(cap: float, z0: float, f: float, line: LineParams) -> float:
    """Shortening (um) that absorbs a ``cap`` fF capacitance to ground.

    The capacitor loads the line like an extra section of electrical
    length atan(omega C Z0).
    """
    if cap < 0:
        raise DomainError(f"capacitance must be >= 0 (got {cap})", field="cap")
    omega = 2.0 * math.pi * f
    return physical_length(math.atan(omega * cap * FF * z0), f, line)


@dataclass(frozen=True)
class CorrectionCap:
    """Parasitic capacitance to ground, in fF.

    ``at`` is ``"open"`` (the coupled end), ``"step"`` (the impedance
    step) or ``"bend"``; bends sit at ``position`` (0..1) along
    ``segment``.
    """

    cap: float
    at: str = "open"
    segment: int = 0
    position: float = 0.5

    def __post_init__(self):
        if self.cap < 0:
            raise DomainError("correction capacitance must be >= 0", field="cap")
        if self.at not in ("open", "step", "bend"):
            raise DomainError(f"unknown attachment point {self.at!r}", field="at")
        if not 0.0 <= self.position <= 1.0:
            raise DomainError("bend position must lie in [0, 1]", field="position")


_TERMINATIONS = {
    "short": "short",
    "shorted-one-end": "short",
    "open": "open",
    "open-both-ends": "open",
}


@dataclass(frozen=True)
class DesignTarget:
    fundamental_frequency: float
    split: object = "equal-theta"  # or a float theta1 in rad
    termination: str = "short"

    def __post_init__(self):
        if not self.fundamental_frequency > 0:
            raise ValidationError("target frequency must be > 0", field="fundamental_frequency")
        if self.termination not in _TERMINATIONS:
            raise ValidationError(f"unknown termination {self.termination!r}", field="termination")
        object.__setattr__(self, "termination", _TERMINATIONS[self.termination])
        if self.split != "equal-theta":
            t1 = float(self.split)
            if not 0.0 < t1 < HALF_PI:
                raise ValidationError("explicit theta1 must lie in (0, pi/2)", field="split")


@dataclass(frozen=True)
class SirDesign:
    """Solved design; ``segments`` run from the coupled end as
    ``(LineParams, length_um)`` pairs."""

    impedance_ratio: float
    theta1: float
    theta2: float
    segments: tuple
    correction_caps: tuple
    coupling_cap: float
    termination: str
    target_frequency: float

    @property
    def is_uniform(self) -> bool:
        return len(self.segments) == 1

    @property
    def total_length(self) -> float:
        return sum(length for _, length in self.segments)

    @property
    def shortening(self) -> float:
        """Electrical length saved against the uniform-impedance resonator."""
        return 1.0 - (self.theta1 + self.theta2) / HALF_PI

    def cap_positions(self) -> tuple:
        edges = np.cumsum([0.0] + [length for _, length in self.segments])
        out = []
        for cc in self.correction_caps:
            if cc.at == "open":
                out.append((0.0, cc.cap))
            elif cc.at == "step":
                out.append((float(edges[1]) if len(self.segments) > 1 else 0.0, cc.cap))
            else:
                seg = min(cc.segment, len(self.segments) - 1)
                out.append((float(edges[seg] + cc.position * self.segments[seg][1]), cc.cap))
        return tuple(out)

    def to_resonator(self, internal_q: float | None = None, name: str = "") -> ResonatorSpec:
        return ResonatorSpec(
            segments=self.segments,
            termination=self.termination,
            coupling_cap=self.coupling_cap,
            internal_q=internal_q,
            shunt_caps=self.cap_positions(),
            name=name,
        )


def synthesize_design(
    target: DesignTarget,
    lines: Sequence[LineParams] | LineParams,
    caps: Sequence[CorrectionCap] = (),
    coupling_cap: float = 0.0,
    r: float | None = None,
    trim: bool = True,
) -> SirDesign:
    """Section lengths for a resonator hitting ``target``.

    ``lines`` is one LineParams (uniform resonator) or the pair
    (coupled-end section, shorted-end section). R defaults to their
    impedance ratio. Each correction capacitance, and the coupling
    capacitor, shortens the section it is attached to by
    ``length_correction``; with ``trim`` the coupled-end section is then
    adjusted until the simulated loaded resonance matches the target.
    """
    if isinstance(lines, LineParams):
        lines = (lines,)
    lines = tuple(lines)
    if len(lines) not in (1, 2):
        raise ValidationError("need one (UIR) or two (SIR) line sections", field="lines")
    f = target.fundamental_frequency
    caps = tuple(caps)

    if len(lines) == 1:
        ratio = 1.0
        # bookkeeping split of the quarter wave, so shortening() reads 0
        theta1 = theta2 = 0.25 * math.pi
        theta_total = HALF_PI if target.termination == "short" else math.pi
        segments = [[lines[0], physical_length(theta_total, f, lines[0])]]
    else:
        implied = lines[0].z0 / lines[1].z0
        ratio = implied if r is None else float(r)
        _check_ratio(ratio)
        if r is not None and abs(ratio / implied - 1.0) > 1e-6:
            raise ValidationError(
                f"R={ratio} disagrees with the section impedances ({implied:.6g})", field="R"
            )
        if target.split == "equal-theta":
            theta1 = theta2 = math.atan(math.sqrt(ratio))
        else:
            theta1 = float(target.split)
            theta2 = solve_theta2(ratio, theta1)
        if target.termination == "short":
            segments = [
                [lines[0], physical_length(theta1, f, lines[0])],
                [lines[1], physical_length(theta2, f, lines[1])],
            ]
        else:
            # mirrored half-wave SIR; the midpoint is a virtual short
            segments = [
                [lines[0], physical_length(theta1, f, lines[0])],
                [lines[1], physical_length(2.0 * theta2, f, lines[1])],
                [lines[0], physical_length(theta1, f, lines[0])],
            ]
    if ratio >= 1.0 and len(lines) == 2:
        warnings.warn(f"R={ratio:.3g} >= 1: the SIR is not shorter than a UIR", stacklevel=2)

    corrections = list(caps)
    if coupling_cap > 0:
        corrections.append(CorrectionCap(coupling_cap, "open"))
    for cc in corrections:
        if cc.at == "open":
            seg = 0
        elif cc.at == "step":
            seg = 0
        else:
            seg = min(cc.segment, len(segments) - 1)
        line = segments[seg][0]
        segments[seg][1] -= length_correction(cc.cap, line.z0, f, line)
    for line, length in segments:
        if not length > 0:
            raise DesignInfeasibleError(
                f"corrections exceed the section length at {f:.4g} Hz"
            )

    design = SirDesign(
        impedance_ratio=ratio,
        theta1=theta1,
        theta2=theta2,
        segments=tuple((line, length) for line, length in segments),
        correction_caps=caps,
        coupling_cap=coupling_cap,
        termination=target.termination,
        target_frequency=f,
    )
    if trim:
        design = _trim(design)
    return design


def _trim(design: SirDesign, rtol: float = 1e-7, max_iter: int = 8) -> SirDesign:
    """Secant on the coupled-end section length until the loaded
    resonance equals the target."""
    f_t = design.target_frequency

    def with_first(length):
        segs = list(design.segments)
        segs[0] = (segs[0][0], length)
        return replace(design, segments=tuple(segs))

    def err(d):
        return fundamental_frequency(d.to_resonator(), tol_hz=f_t * 1e-11) / f_t - 1.0

    x0 = design.segments[0][1]
    e0 = err(design)
    if abs(e0) < rtol:
        return design
    x1 = x0 + e0 * design.total_length
    for _ in range(max_iter):
        if not x1 > 0:
            raise DesignInfeasibleError("trim drove the coupled-end section to zero length")
        e1 = err(with_first(x1))
        if abs(e1) < rtol:
            return with_first(x1)
        if e1 == e0:
            break
        x0, x1, e0 = x1, x1 - e1 * (x1 - x0) / (e1 - e0), e1
    raise DesignInfeasibleError(f"could not reach {f_t:.6g} Hz (residual {e1:.3g})")
