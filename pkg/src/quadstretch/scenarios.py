"""Interaction scenarios: hand trajectories to 1-DoF values and 3-DoF forces.

Trajectory files are CSV with the header ``t,px,py,pz,vx,vy,vz,aux``.  The
velocity triple and ``aux`` are optional.  Positions are metres in the user
frame, velocities m/s; ``aux`` carries the scenario's 1-DoF input (button
depth fraction, knob angle in rad, trigger bend fraction).
"""

from __future__ import annotations

import csv
import enum
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import ZERO_FORCE, ForceVector
from .errors import InputError, ParseError, StreamError


class Scenario(enum.Enum):
    PUSH_BUTTON = "push_button"
    ROTATE_KNOB = "rotate_knob"
    TRIGGER_SPRAYER = "trigger_sprayer"
    RUBBER_BAND = "rubber_band"
    FISHING_ROD = "fishing_rod"
    TENNIS_RACKET = "tennis_racket"

    @property
    def dof(self) -> int:
        return 1 if self in (Scenario.PUSH_BUTTON, Scenario.ROTATE_KNOB,
                             Scenario.TRIGGER_SPRAYER) else 3


@dataclass(frozen=True)
class HandSample:
    t: float
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] | None = None
    aux: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        if self.velocity is not None:
            object.__setattr__(self, "velocity", tuple(float(v) for v in self.velocity))


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry and scaling of one scenario.

    ``aux_full_range`` is the aux reading that counts as fully pressed /
    rotated / triggered.  ``racket_lever`` (m, not a published value) places
    the racket's momentum centre along ``racket_axis`` from the hand.
    ``fishing_speed`` selects ``"full"`` hand speed or only the
    ``"vertical"`` component as the fishing-force magnitude.
    """

    scenario: Scenario
    neutral_position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rod_tip: tuple[float, float, float] | None = None
    fish_position: tuple[float, float, float] | None = None
    max_pull_length: float = 0.4
    max_speed_scale: float = 2.0
    aux_full_range: float = 1.0
    racket_lever: float = 0.5
    racket_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    fishing_speed: str = "full"
    smoothing_window: int = 3

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if not self.max_pull_length > 0:
            raise InputError(f"max_pull_length must be positive, got {self.max_pull_length}")
        if not self.max_speed_scale > 0:
            raise InputError(f"max_speed_scale must be positive, got {self.max_speed_scale}")
        if not self.aux_full_range > 0:
            raise InputError(f"aux_full_range must be positive, got {self.aux_full_range}")
        if self.fishing_speed not in ("full", "vertical"):
            raise InputError(f"fishing_speed must be 'full' or 'vertical', got {self.fishing_speed!r}")
        if self.smoothing_window < 1:
            raise InputError("smoothing_window must be at least 1")

    @classmethod
    def from_config(cls, cfg) -> "ScenarioConfig":
        from .config import get_float, get_vector
        if "scenario.id" not in cfg:
            raise InputError("missing config key 'scenario.id'")
        d = cls(Scenario.PUSH_BUTTON)
        return cls(
            scenario=Scenario(cfg["scenario.id"]),
            neutral_position=get_vector(cfg, "scenario.neutral_position", d.neutral_position),
            rod_tip=get_vector(cfg, "scenario.rod_tip"),
            fish_position=get_vector(cfg, "scenario.fish_position"),
            max_pull_length=get_float(cfg, "scenario.max_pull_length", d.max_pull_length),
            max_speed_scale=get_float(cfg, "scenario.max_speed_scale", d.max_speed_scale),
            aux_full_range=get_float(cfg, "scenario.aux_full_range", d.aux_full_range),
            racket_lever=get_float(cfg, "scenario.racket_lever", d.racket_lever),
            racket_axis=get_vector(cfg, "scenario.racket_axis", d.racket_axis),
            fishing_speed=cfg.get("scenario.fishing_speed", d.fishing_speed),
            smoothing_window=int(get_float(cfg, "scenario.smoothing_window", d.smoothing_window)),
        )

    def to_config(self) -> dict[str, object]:
        cfg: dict[str, object] = {
            "scenario.id": self.scenario.value,
            "scenario.neutral_position": self.neutral_position,
            "scenario.max_pull_length": self.max_pull_length,
            "scenario.max_speed_scale": self.max_speed_scale,
            "scenario.aux_full_range": self.aux_full_range,
            "scenario.racket_lever": self.racket_lever,
            "scenario.racket_axis": self.racket_axis,
            "scenario.fishing_speed": self.fishing_speed,
            "scenario.smoothing_window": self.smoothing_window,
        }
        if self.rod_tip is not None:
            cfg["scenario.rod_tip"] = self.rod_tip
        if self.fish_position is not None:
            cfg["scenario.fish_position"] = self.fish_position
        return cfg


def _capped(direction: np.ndarray, magnitude: float) -> ForceVector:
    n = float(np.linalg.norm(direction))
    if n == 0.0 or magnitude == 0.0:
        return ZERO_FORCE
    return ForceVector.from_array(direction / n * min(magnitude, 1.0)).normalized()


def _velocity(sample: HandSample) -> np.ndarray:
    if sample.velocity is None:
        raise InputError(f"sample at t={sample.t} has no velocity")
    return np.array(sample.velocity)


def value_1dof(sample: HandSample, cfg: ScenarioConfig) -> float:
    if sample.aux is None or not math.isfinite(sample.aux):
        raise InputError(f"sample at t={sample.t} has no aux value for {cfg.scenario.value}")
    return min(max(sample.aux / cfg.aux_full_range, 0.0), 1.0)


def rubber_band_force(sample: HandSample, cfg: ScenarioConfig) -> ForceVector:
    """Pull back toward the band's neutral point, scaled by the pulled length."""
    pull = np.array(cfg.neutral_position) - np.array(sample.position)
    return _capped(pull, float(np.linalg.norm(pull)) / cfg.max_pull_length)


def fishing_force(sample: HandSample, cfg: ScenarioConfig) -> ForceVector:
    if cfg.rod_tip is None or cfg.fish_position is None:
        raise InputError("fishing scenario needs rod_tip and fish_position")
    v = _velocity(sample)
    speed = abs(v[2]) if cfg.fishing_speed == "vertical" else float(np.linalg.norm(v))
    line = np.array(cfg.fish_position) - np.array(cfg.rod_tip)
    return _capped(line, speed / cfg.max_speed_scale)


def momentum_center(sample: HandSample, cfg: ScenarioConfig) -> np.ndarray:
    axis = np.array(cfg.racket_axis, dtype=float)
    return np.array(sample.position) + cfg.racket_lever * axis / np.linalg.norm(axis)


def tennis_force(sample: HandSample, cfg: ScenarioConfig) -> ForceVector:
    """Oppose the momentum-centre velocity.

    Racket orientation is not tracked, so the momentum centre is a rigid
    translation of the hand and shares its velocity.
    """
    v = _velocity(sample)
    return _capped(-v, float(np.linalg.norm(v)) / cfg.max_speed_scale)


_FORCE_LAWS = {
    Scenario.RUBBER_BAND: rubber_band_force,
    Scenario.FISHING_ROD: fishing_force,
    Scenario.TENNIS_RACKET: tennis_force,
}


def scenario_force(sample: HandSample, cfg: ScenarioConfig) -> ForceVector:
    try:
        law = _FORCE_LAWS[cfg.scenario]
    except KeyError:
        raise InputError(f"{cfg.scenario.value} is a 1-DoF scenario") from None
    return law(sample, cfg)


def smooth_velocities(samples: Sequence[HandSample], window: int = 3) -> list[HandSample]:
    """Trailing moving average of velocities over ``window`` samples."""
    if window <= 1 or not samples:
        return list(samples)
    v = np.array([_velocity(s) for s in samples])
    csum = np.cumsum(np.vstack([np.zeros(3), v]), axis=0)
    out = []
    for i, s in enumerate(samples):
        lo = max(0, i - window + 1)
        mean = (csum[i + 1] - csum[lo]) / (i + 1 - lo)
        out.append(HandSample(s.t, s.position, tuple(mean), s.aux))
    return out


def scenario_inputs(samples: Sequence[HandSample], cfg: ScenarioConfig) -> list:
    """Per-sample 1-DoF values (1-DoF scenarios) or force vectors (3-DoF)."""
    if cfg.scenario.dof == 1:
        return [value_1dof(s, cfg) for s in samples]
    if cfg.scenario is not Scenario.RUBBER_BAND:
        samples = smooth_velocities(samples, cfg.smoothing_window)
    return [scenario_force(s, cfg) for s in samples]


# --- trajectory files ------------------------------------------------------------

COLUMNS = ("t", "px", "py", "pz", "vx", "vy", "vz", "aux")


def derive_velocities(t, positions) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    p = np.asarray(positions, dtype=float)
    if len(t) < 2:
        return np.zeros_like(p)
    return np.gradient(p, t, axis=0)


def velocity_mismatch(samples: Sequence[HandSample]) -> float:
    """RMS difference between supplied velocities and finite differences of
    the positions, relative to the larger RMS speed of the two."""
    if len(samples) < 3 or any(s.velocity is None for s in samples):
        return 0.0
    t = [s.t for s in samples]
    fd = derive_velocities(t, [s.position for s in samples])
    v = np.array([s.velocity for s in samples])
    scale = max(np.sqrt(np.mean(np.sum(fd ** 2, axis=1))), np.sqrt(np.mean(np.sum(v ** 2, axis=1))))
    if scale == 0.0:
        return 0.0
    return float(np.sqrt(np.mean(np.sum((v - fd) ** 2, axis=1))) / scale)


def load_trajectory(path: str | os.PathLike, velocity_tolerance: float | None = 0.1) -> list[HandSample]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            return []  # a zero-byte file is an empty trajectory
        unknown = set(header) - set(COLUMNS)
        if unknown or not {"t", "px", "py", "pz"} <= set(header):
            raise ParseError(f"bad header {header}; expected columns from {COLUMNS}", 1)
        has_v = {"vx", "vy", "vz"} & set(header)
        if has_v and has_v != {"vx", "vy", "vz"}:
            raise ParseError("velocity columns must be vx, vy and vz together", 1)
        idx = {name: header.index(name) for name in header}
        rows = []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            try:
                values = {name: float(row[i]) if row[i].strip() else None for name, i in idx.items()}
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if any(values[k] is None for k in ("t", "px", "py", "pz")):
                raise ParseError("t, px, py and pz are required", lineno)
            if not all(math.isfinite(v) for v in values.values() if v is not None):
                raise ParseError("non-finite value", lineno)
            rows.append(values)

    t = [r["t"] for r in rows]
    for i, (a, b) in enumerate(zip(t, t[1:]), start=2):
        if not b > a:
            raise StreamError(f"time not strictly increasing at data row {i} ({a} -> {b})")
    positions = [(r["px"], r["py"], r["pz"]) for r in rows]
    if has_v:
        velocities = [(r["vx"], r["vy"], r["vz"]) for r in rows]
    else:
        velocities = [tuple(v) for v in derive_velocities(t, positions)]
    samples = [HandSample(r["t"], p, v, r.get("aux")) for r, p, v in zip(rows, positions, velocities)]
    if has_v and velocity_tolerance is not None:
        mismatch = velocity_mismatch(samples)
        if mismatch > velocity_tolerance:
            raise InputError(f"velocities disagree with positions by {mismatch:.1%} "
                             f"(tolerance {velocity_tolerance:.0%})")
    return samples


def write_trajectory(path: str | os.PathLike, samples: Sequence[HandSample]) -> None:
    with_v = all(s.velocity is not None for s in samples)
    with_aux = all(s.aux is not None for s in samples) and samples
    cols = ["t", "px", "py", "pz"] + (["vx", "vy", "vz"] if with_v else []) + (["aux"] if with_aux else [])
    lines = [",".join(cols)]
    for s in samples:
        vals = [s.t, *s.position]
        if with_v:
            vals += list(s.velocity)
        if with_aux:
            vals.append(s.aux)
        lines.append(",".join(repr(float(v)) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")
