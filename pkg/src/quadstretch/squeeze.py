"""Squeezer baseline: calibration, value-to-contraction mapping and tension model."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import ForceVector, SqueezerParams, check_force, check_unit_interval
from .errors import CalibrationError, ExtrapolationError, InputError, RangeError


class ButtonEvent(enum.Enum):
    CONTRACT = "contract"
    RELEASE = "release"
    CONFIRM = "confirm"


@dataclass(frozen=True)
class SqueezeCalibration:
    """Contraction range of one wearer, in mm relative to the minimal-tension reference."""

    min_contraction: float = 0.0
    max_contraction: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.min_contraction < self.max_contraction:
            raise CalibrationError(
                f"need 0 <= min < max, got min={self.min_contraction} max={self.max_contraction}")

    def check_travel(self, params: SqueezerParams) -> "SqueezeCalibration":
        if self.max_contraction > params.travel_limit:
            raise CalibrationError(
                f"max_contraction {self.max_contraction} exceeds travel limit {params.travel_limit}")
        return self

    def to_config(self) -> dict[str, float]:
        return {"calibration.min_contraction": self.min_contraction,
                "calibration.max_contraction": self.max_contraction}

    @classmethod
    def from_config(cls, cfg) -> "SqueezeCalibration":
        from .config import get_float
        return cls(get_float(cfg, "calibration.min_contraction", 0.0),
                   get_float(cfg, "calibration.max_contraction", 10.0))


@dataclass(frozen=True)
class SqueezeCommand:
    contraction: float
    timestamp: float = 0.0


def calibrate(step_events: Iterable, step_size: float,
              params: SqueezerParams | None = None) -> SqueezeCalibration:
    """Replay button presses of the calibration procedure.

    The first CONFIRM fixes the minimal-tension position, which becomes the
    zero of the contraction scale; the second CONFIRM fixes the comfort
    ceiling.  Releasing below the starting slack is not possible and is
    ignored.
    """
    if not step_size > 0:
        raise InputError(f"step_size must be positive, got {step_size}")
    count = 0
    confirmed: list[int] = []
    for raw in step_events:
        event = ButtonEvent(raw)
        if event is ButtonEvent.CONTRACT:
            count += 1
        elif event is ButtonEvent.RELEASE:
            count = max(count - 1, 0)
        else:
            confirmed.append(count)
            if len(confirmed) == 2:
                break
    if len(confirmed) < 2:
        raise CalibrationError("calibration needs a confirm for the minimum and one for the maximum")
    lo, hi = confirmed
    if hi <= lo:
        raise CalibrationError(f"maximum ({hi * step_size} mm raw) must exceed minimum ({lo * step_size} mm raw)")
    cal = SqueezeCalibration(0.0, (hi - lo) * step_size)
    if params is not None:
        cal.check_travel(params)
    return cal


def render_value(value: float, cal: SqueezeCalibration, timestamp: float = 0.0) -> SqueezeCommand:
    value = check_unit_interval(value)
    span = cal.max_contraction - cal.min_contraction
    return SqueezeCommand(cal.min_contraction + value * span, timestamp)


def render_force(force: ForceVector, cal: SqueezeCalibration, timestamp: float = 0.0) -> SqueezeCommand:
    """Squeeze by the force magnitude; the direction is lost."""
    force = check_force(force)
    return render_value(min(force.norm, 1.0), cal, timestamp)


def tension_from_contraction(contraction: float, params: SqueezerParams | None = None) -> float:
    params = params or SqueezerParams()
    xs = np.array([c for c, _ in params.tension_curve])
    ts = np.array([t for _, t in params.tension_curve])
    if not xs[0] <= contraction <= xs[-1]:
        raise ExtrapolationError(
            f"contraction {contraction} mm outside tension table [{xs[0]}, {xs[-1]}]")
    return float(np.interp(contraction, xs, ts))


def tactor_normal_force(tension: float, params: SqueezerParams | None = None) -> float:
    params = params or SqueezerParams()
    if tension < 0:
        raise RangeError(f"tension must be non-negative, got {tension}")
    return params.tactor_force_factor * tension


def wrap_force_factor(contact_points: int = 7) -> float:
    """Normal force per contact, relative to string tension, for a string
    wrapped over ``contact_points`` equally spaced points of a circle.

    The string turns by 2*pi/n at each point, so the resultant of the two
    tension vectors there has magnitude 2*sin(pi/n).
    """
    if contact_points < 2:
        raise InputError("need at least two contact points")
    return 2.0 * math.sin(math.pi / contact_points)
