"""Shared domain types, units and device parameter sets.

Units throughout: millimetres for displacement, newtons for force, seconds for
time, radians for angles unless a name says otherwise.  The user frame is
right-handed with +x pointing away from the chest, +y to the user's right and
+z up; a right forearm is assumed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import InputError, RangeError

G = 9.81


class Side(enum.IntEnum):
    """Forearm side of a stretch unit.  The integer value is the wire/CSV order."""

    DORSAL = 0
    RIGHT = 1
    VENTRAL = 2
    LEFT = 3

    @property
    def letter(self) -> str:
        return self.name[0]

    @classmethod
    def from_letter(cls, letter: str) -> "Side":
        for side in cls:
            if side.letter == letter.upper():
                return side
        raise InputError(f"unknown side {letter!r}")

    @property
    def opposite(self) -> "Side":
        return Side((self.value + 2) % 4)


SIDES = tuple(Side)


class StretchType(enum.Enum):
    CONTRACTION = -1
    EXPANSION = 1

    @property
    def sign(self) -> int:
        return self.value

    @property
    def letter(self) -> str:
        return "c" if self is StretchType.CONTRACTION else "e"


class TactorSite(enum.Enum):
    """One tactor of a stretch unit: side plus distal/proximal position."""

    Dd = (Side.DORSAL, "d")
    Dp = (Side.DORSAL, "p")
    Rd = (Side.RIGHT, "d")
    Rp = (Side.RIGHT, "p")
    Vd = (Side.VENTRAL, "d")
    Vp = (Side.VENTRAL, "p")
    Ld = (Side.LEFT, "d")
    Lp = (Side.LEFT, "p")

    @property
    def side(self) -> Side:
        return self.value[0]

    @classmethod
    def of_side(cls, side: Side) -> tuple["TactorSite", "TactorSite"]:
        return tuple(s for s in cls if s.side is side)


TACTOR_SITES = tuple(TactorSite)


@dataclass(frozen=True)
class StretchFrame:
    """Four signed control signals in D, R, V, L order (mm of no-load tactor travel)."""

    signals: tuple[float, float, float, float]
    timestamp: float = 0.0

    def __post_init__(self):
        values = tuple(float(v) for v in self.signals)
        if len(values) != 4:
            raise InputError(f"a frame needs exactly four signals, got {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise InputError(f"non-finite control signal in {values}")
        object.__setattr__(self, "signals", values)
        object.__setattr__(self, "timestamp", float(self.timestamp))

    @classmethod
    def from_mapping(cls, signals: Mapping[Side, float], timestamp: float = 0.0) -> "StretchFrame":
        missing = [s.name for s in SIDES if s not in signals]
        if missing or len(signals) != 4:
            raise InputError(f"frame mapping must name every side exactly once (missing {missing})")
        return cls(tuple(signals[s] for s in SIDES), timestamp)

    @classmethod
    def neutral(cls, timestamp: float = 0.0) -> "StretchFrame":
        return cls((0.0, 0.0, 0.0, 0.0), timestamp)

    def __getitem__(self, side: Side) -> float:
        return self.signals[Side(side)]

    def as_dict(self) -> dict[Side, float]:
        return dict(zip(SIDES, self.signals))

    def as_array(self) -> np.ndarray:
        return np.array(self.signals)


@dataclass(frozen=True)
class ForceVector:
    """Dimensionless 3-DoF force in the user frame; x is the non-directional layer."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InputError(f"force component {name} is not finite ({v})")
            object.__setattr__(self, name, v)

    @classmethod
    def from_array(cls, v) -> "ForceVector":
        x, y, z = (float(c) for c in v)
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "ForceVector":
        """Scale down to unit norm when longer than one; shorter vectors pass unchanged."""
        n = self.norm
        if n <= 1.0:
            return self
        return ForceVector(self.x / n, self.y / n, self.z / n)


ZERO_FORCE = ForceVector()


MEAN_CONTRACTION_SLOPE = 0.84
MEAN_EXPANSION_SLOPE = 0.62

# Only the extremes of the per-tactor regression are published; every other
# site keeps the mean.
PUBLISHED_CONTRACTION_EXTREMES = {TactorSite.Vp: 0.78, TactorSite.Dd: 0.95}
PUBLISHED_EXPANSION_EXTREMES = {TactorSite.Dd: 0.55, TactorSite.Rp: 0.70}


def _frozen_slopes(slopes: Mapping, default: float) -> Mapping[TactorSite, float]:
    table = {site: float(default) for site in TACTOR_SITES}
    for key, value in slopes.items():
        site = key if isinstance(key, TactorSite) else TactorSite[key]
        table[site] = float(value)
    return MappingProxyType(table)


@dataclass(frozen=True)
class QuadDeviceParams:
    max_travel: float = 11.0
    comfort_limit: float = 8.6
    max_speed: float = 206.0
    max_force: float = 6.8
    skin_ratio_contraction: Mapping[TactorSite, float] = field(default_factory=dict)
    skin_ratio_expansion: Mapping[TactorSite, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "skin_ratio_contraction",
            _frozen_slopes(self.skin_ratio_contraction, MEAN_CONTRACTION_SLOPE))
        object.__setattr__(
            self, "skin_ratio_expansion",
            _frozen_slopes(self.skin_ratio_expansion, MEAN_EXPANSION_SLOPE))

    def slope(self, site: TactorSite, signal: float) -> float:
        """Skin-to-signal ratio that applies for the sign of ``signal``."""
        if signal < 0:
            return self.skin_ratio_contraction[site]
        return self.skin_ratio_expansion[site]

    def side_slope(self, side: Side, signal: float) -> float:
        """Mean of the distal and proximal slopes of one stretch unit."""
        d, p = TactorSite.of_side(side)
        return 0.5 * (self.slope(d, signal) + self.slope(p, signal))


def default_quad_params(published_extremes: bool = False, **overrides) -> QuadDeviceParams:
    """Published QuadStretcher constants.

    Every tactor site gets the mean skin ratio (0.84 contraction, 0.62
    expansion).  With ``published_extremes=True`` the four sites whose
    individual ratios were reported (Vp/Dd contraction, Dd/Rp expansion)
    carry those values instead.
    """
    if published_extremes:
        overrides.setdefault("skin_ratio_contraction", dict(PUBLISHED_CONTRACTION_EXTREMES))
        overrides.setdefault("skin_ratio_expansion", dict(PUBLISHED_EXPANSION_EXTREMES))
    return QuadDeviceParams(**overrides)


def default_tension_curve() -> tuple[tuple[float, float], ...]:
    # Synthetic convex stiffening curve (not measured data): 0 N at the
    # calibrated zero, 40 N at 20 mm of string contraction.
    return tuple((float(c), 40.0 * (c / 20.0) ** 2) for c in range(0, 21, 2))


@dataclass(frozen=True)
class SqueezerParams:
    tactor_count: int = 6
    max_string_tension: float = 9.0 * G
    tension_curve: tuple[tuple[float, float], ...] = field(default_factory=default_tension_curve)
    tactor_force_factor: float = 0.87
    pid_rate: float = 1000.0
    encoder_bits: int = 12
    pulley_radius: float = 5.0
    travel_limit: float = 20.0
    max_angular_velocity: float = 10.0
    motor_time_constant: float = 0.02

    def __post_init__(self):
        curve = tuple((float(c), float(t)) for c, t in self.tension_curve)
        object.__setattr__(self, "tension_curve", curve)

    @property
    def encoder_counts(self) -> int:
        return 1 << self.encoder_bits

    @property
    def contraction_resolution(self) -> float:
        """String contraction represented by one encoder count (mm)."""
        return 2.0 * math.pi / self.encoder_counts * self.pulley_radius


def default_squeezer_params(**overrides) -> SqueezerParams:
    return SqueezerParams(**overrides)


@dataclass(frozen=True)
class Violation:
    name: str
    detail: str

    def __str__(self):
        return f"{self.name}: {self.detail}"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.violations]


def _validate_quad(p: QuadDeviceParams) -> list[Violation]:
    out = []
    if not p.comfort_limit > 0:
        out.append(Violation("comfort_limit > 0", f"comfort_limit={p.comfort_limit}"))
    if not p.comfort_limit <= p.max_travel:
        out.append(Violation("comfort_limit <= max_travel",
                             f"comfort_limit={p.comfort_limit} exceeds max_travel={p.max_travel}"))
    if not p.max_speed > 0:
        out.append(Violation("max_speed > 0", f"max_speed={p.max_speed}"))
    if not p.max_force > 0:
        out.append(Violation("max_force > 0", f"max_force={p.max_force}"))
    for kind, table in (("contraction", p.skin_ratio_contraction),
                        ("expansion", p.skin_ratio_expansion)):
        for site, s in table.items():
            if not 0.0 < s <= 1.0:
                out.append(Violation("slope in (0, 1]", f"{kind} slope {s} at {site.name}"))
    for site in TACTOR_SITES:
        c = p.skin_ratio_contraction[site]
        e = p.skin_ratio_expansion[site]
        if not e < c:
            out.append(Violation("expansion < contraction",
                                 f"{site.name}: expansion {e} >= contraction {c}"))
    return out


def _validate_squeezer(p: SqueezerParams) -> list[Violation]:
    out = []
    curve = p.tension_curve
    if len(curve) < 2:
        out.append(Violation("tension_curve has >= 2 knots", f"{len(curve)} knots"))
    else:
        xs = [c for c, _ in curve]
        ts = [t for _, t in curve]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            out.append(Violation("tension_curve knots increasing", f"contractions {xs}"))
        if any(b < a for a, b in zip(ts, ts[1:])):
            out.append(Violation("tension_curve non-decreasing", f"tensions {ts}"))
        if curve[0] != (0.0, 0.0):
            out.append(Violation("tension_curve starts at (0, 0)", f"first knot {curve[0]}"))
        if p.travel_limit > xs[-1]:
            out.append(Violation("travel_limit within tension_curve",
                                 f"travel_limit={p.travel_limit} beyond last knot {xs[-1]}"))
    if not 0.0 < p.tactor_force_factor < 1.0:
        out.append(Violation("tactor_force_factor in (0, 1)", f"{p.tactor_force_factor}"))
    if p.tactor_count < 1:
        out.append(Violation("tactor_count >= 1", f"{p.tactor_count}"))
    for name in ("max_string_tension", "pid_rate", "pulley_radius", "travel_limit",
                 "max_angular_velocity", "motor_time_constant"):
        if not getattr(p, name) > 0:
            out.append(Violation(f"{name} > 0", f"{getattr(p, name)}"))
    if p.encoder_bits < 1:
        out.append(Violation("encoder_bits >= 1", f"{p.encoder_bits}"))
    return out


def validate_params(params) -> ValidationResult:
    """Check every invariant of a parameter set; never raises on bad values."""
    if isinstance(params, QuadDeviceParams):
        return ValidationResult(tuple(_validate_quad(params)))
    if isinstance(params, SqueezerParams):
        return ValidationResult(tuple(_validate_squeezer(params)))
    return ValidationResult((Violation("known parameter type", type(params).__name__),))


def check_unit_interval(value: float, name: str = "value") -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise RangeError(f"{name}={value!r} outside [0, 1]")
    return value


def check_force(force: ForceVector, tol: float = 1e-12) -> ForceVector:
    if not isinstance(force, ForceVector):
        force = ForceVector.from_array(force)
    if force.norm > 1.0 + tol:
        raise RangeError(f"force norm {force.norm:.6g} exceeds 1")
    return force

