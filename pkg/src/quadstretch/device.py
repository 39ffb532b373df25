"""Fixed-timestep virtual hardware for both devices.

QuadStretcher servos are reduced to slew-rate-limited position tracking, and
the skin follows each tactor through a sign-dependent linear ratio.  The
Squeezer is a pulley driven by a velocity-saturated geared motor with a
first-order lag, closed by a position PID on the quantized encoder angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import (SIDES, TACTOR_SITES, QuadDeviceParams, SqueezerParams, StretchFrame,
                   TactorSite, default_quad_params)
from .errors import ContractViolation, InputError, StreamError
from .squeeze import SqueezeCommand, tension_from_contraction
from .trace import Trace


# --- QuadStretcher -----------------------------------------------------------

def skin_displacement(signal: float, site: TactorSite,
                      params: QuadDeviceParams | None = None) -> float:
    params = params or default_quad_params()
    if abs(signal) > params.max_travel:
        raise ContractViolation(f"|signal| {abs(signal)} exceeds max travel {params.max_travel}")
    if signal == 0:
        return 0.0
    return params.slope(site, signal) * signal


def slew_limit(position, target, max_step):
    """Move ``position`` toward ``target`` by at most ``max_step`` (array-friendly)."""
    return position + np.clip(np.subtract(target, position), -max_step, max_step)


@dataclass(frozen=True)
class QuadDeviceState:
    tactor_position: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    skin: tuple[float, ...] = (0.0,) * 8
    sim_time: float = 0.0

    def skin_at(self, site: TactorSite) -> float:
        return self.skin[TACTOR_SITES.index(site)]


def _skin_for(positions, params) -> tuple[float, ...]:
    return tuple(skin_displacement(positions[site.side], site, params) for site in TACTOR_SITES)


def quad_step(state: QuadDeviceState, target: StretchFrame, dt: float,
              params: QuadDeviceParams | None = None) -> QuadDeviceState:
    params = params or default_quad_params()
    if not dt > 0:
        raise ContractViolation(f"dt must be positive, got {dt}")
    lim = params.comfort_limit
    if any(abs(s) > lim for s in target.signals):
        raise ContractViolation(f"target {target.signals} not clamped to +/-{lim} mm")
    max_step = params.max_speed * dt
    positions = tuple(float(p) for p in slew_limit(np.array(state.tactor_position),
                                                   np.array(target.signals), max_step))
    return QuadDeviceState(positions, _skin_for(positions, params), state.sim_time + dt)


def displacement_sweep(site: TactorSite, params: QuadDeviceParams | None = None, steps: int = 10):
    """Signals from 0 to +/-max_travel in ``steps`` increments and the resulting skin displacement.

    Returns ``(signals, displacements)`` arrays for contraction and expansion as a dict.
    """
    params = params or default_quad_params()
    out = {}
    for kind, sign in (("contraction", -1.0), ("expansion", 1.0)):
        signals = sign * params.max_travel * np.arange(steps + 1) / steps
        disp = np.array([skin_displacement(s, site, params) for s in signals])
        out[kind] = (signals, disp)
    return out


def fit_slope(signals, displacements) -> float:
    """Least-squares slope of a line through the origin."""
    x = np.asarray(signals, dtype=float)
    y = np.asarray(displacements, dtype=float)
    return float(np.dot(x, y) / np.dot(x, x))


# --- Squeezer -----------------------------------------------------------------

@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    integrator_limit: float = 5.0

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "integrator_limit"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"gain {name} is not finite")
        if not self.kp > 0:
            raise InputError(f"kp must be positive, got {self.kp}")

    @classmethod
    def from_config(cls, cfg) -> "PidGains":
        from .config import get_float
        r = REFERENCE_GAINS
        return cls(get_float(cfg, "pid.kp", r.kp), get_float(cfg, "pid.ki", r.ki),
                   get_float(cfg, "pid.kd", r.kd),
                   get_float(cfg, "pid.integrator_limit", r.integrator_limit))


# Output unit is pulley angular velocity (rad/s) per mm of contraction error.
# Tuned on the default plant (r = 5 mm, 10 rad/s, 20 ms motor lag) for a
# 5 mm step: about 1.3 % overshoot, inside the 2 % band after 150 ms.  The
# plant already integrates, so the integral term is kept small; larger ki
# turns encoder quantization into a slow limit cycle.
REFERENCE_GAINS = PidGains(kp=4.0, ki=0.5, kd=0.0, integrator_limit=1.0)


@dataclass(frozen=True)
class SqueezerState:
    pulley_angle: float = 0.0
    motor_velocity: float = 0.0
    encoder_reading: int = 0
    encoder_turns: int = 0
    string_contraction: float = 0.0
    sensed_tension: float = 0.0
    pid_integrator: float = 0.0
    pid_prev_error: float = 0.0
    sim_time: float = 0.0


def encoder_counts_for(angle: float, params: SqueezerParams) -> int:
    n = params.encoder_counts
    return int(math.floor((angle % (2.0 * math.pi)) / (2.0 * math.pi) * n)) % n


def measured_contraction(state: SqueezerState, params: SqueezerParams) -> float:
    counts = state.encoder_turns * params.encoder_counts + state.encoder_reading
    return counts * params.contraction_resolution


def _sensed_tension(contraction: float, params: SqueezerParams) -> float:
    lo, hi = params.tension_curve[0][0], params.tension_curve[-1][0]
    return tension_from_contraction(min(max(contraction, lo), hi), params)


def squeezer_step(state: SqueezerState, setpoint: SqueezeCommand, gains: PidGains, dt: float,
                  params: SqueezerParams | None = None) -> SqueezerState:
    params = params or SqueezerParams()
    if not math.isclose(dt, 1.0 / params.pid_rate, rel_tol=1e-9):
        raise ContractViolation(f"dt={dt} but the PID loop runs at {params.pid_rate} Hz")
    target = setpoint.contraction
    if not 0.0 <= target <= params.travel_limit:
        raise ContractViolation(f"setpoint {target} mm outside [0, {params.travel_limit}]")

    error = target - measured_contraction(state, params)
    deriv = (error - state.pid_prev_error) / dt
    w_max = params.max_angular_velocity
    integ = min(max(state.pid_integrator + error * dt, -gains.integrator_limit),
                gains.integrator_limit)
    command = gains.kp * error + gains.ki * integ + gains.kd * deriv
    if abs(command) > w_max:
        # conditional integration: hold the integrator while saturated
        integ = state.pid_integrator
        command = gains.kp * error + gains.ki * integ + gains.kd * deriv
    command = min(max(command, -w_max), w_max)

    omega = state.motor_velocity + (command - state.motor_velocity) * dt / params.motor_time_constant
    angle = state.pulley_angle + omega * dt

    reading = encoder_counts_for(angle, params)
    turns = state.encoder_turns
    half = params.encoder_counts // 2
    if reading - state.encoder_reading > half:
        turns -= 1
    elif state.encoder_reading - reading > half:
        turns += 1

    contraction = angle * params.pulley_radius
    return SqueezerState(
        pulley_angle=angle,
        motor_velocity=omega,
        encoder_reading=reading,
        encoder_turns=turns,
        string_contraction=contraction,
        sensed_tension=_sensed_tension(contraction, params),
        pid_integrator=integ,
        pid_prev_error=error,
        sim_time=state.sim_time + dt,
    )


def step_response(setpoint: float, duration: float = 0.5, gains: PidGains = REFERENCE_GAINS,
                  params: SqueezerParams | None = None):
    """Simulate a step from rest; returns ``(times, contractions)``."""
    params = params or SqueezerParams()
    dt = 1.0 / params.pid_rate
    n = int(round(duration * params.pid_rate))
    state = SqueezerState()
    cmd = SqueezeCommand(setpoint)
    t = np.empty(n + 1)
    c = np.empty(n + 1)
    t[0], c[0] = 0.0, 0.0
    for k in range(1, n + 1):
        state = squeezer_step(state, cmd, gains, dt, params)
        t[k] = k * dt
        c[k] = state.string_contraction
    return t, c


def settling_time(times, values, target: float, band: float = 0.02) -> float:
    """First time after which ``values`` stay within ``band`` of ``target``; inf if never."""
    err = np.abs(np.asarray(values) - target) > band * abs(target)
    if err[-1]:
        return math.inf
    outside = np.nonzero(err)[0]
    return float(times[outside[-1] + 1]) if len(outside) else float(times[0])


# --- simulators driven by command streams --------------------------------------

class QuadSimulator:
    columns = (("time",)
               + tuple(f"target_{s.letter}" for s in SIDES)
               + tuple(f"position_{s.letter}" for s in SIDES)
               + tuple(f"skin_{site.name}" for site in TACTOR_SITES))

    def __init__(self, params: QuadDeviceParams | None = None):
        self.params = params or default_quad_params()
        self.state = QuadDeviceState()
        self.target = StretchFrame.neutral()

    def command(self, frame: StretchFrame) -> None:
        self.target = frame

    def advance(self, dt: float) -> None:
        self.state = quad_step(self.state, self.target, dt, self.params)

    def row(self, t: float) -> tuple:
        return (t, *self.target.signals, *self.state.tactor_position, *self.state.skin)


class SqueezerSimulator:
    columns = ("time", "setpoint", "contraction", "encoder_counts", "tension")

    def __init__(self, params: SqueezerParams | None = None, gains: PidGains = REFERENCE_GAINS):
        self.params = params or SqueezerParams()
        self.gains = gains
        self.state = SqueezerState()
        self.target = SqueezeCommand(0.0)

    def command(self, cmd: SqueezeCommand) -> None:
        self.target = cmd

    def advance(self, dt: float) -> None:
        tick = 1.0 / self.params.pid_rate
        n = dt / tick
        if n < 0.5 or not math.isclose(n, round(n), rel_tol=0, abs_tol=1e-6):
            raise ContractViolation(
                f"advance({dt}) is not a whole number of {self.params.pid_rate} Hz PID ticks")
        for _ in range(int(round(n))):
            self.state = squeezer_step(self.state, self.target, self.gains, tick, self.params)

    def row(self, t: float) -> tuple:
        s = self.state
        counts = s.encoder_turns * self.params.encoder_counts + s.encoder_reading
        return (t, self.target.contraction, s.string_contraction, counts, s.sensed_tension)


def check_timestamps(timestamps) -> None:
    for i, (a, b) in enumerate(zip(timestamps, timestamps[1:]), start=1):
        if not b > a:
            raise StreamError(f"timestamps must increase strictly (item {i}: {a} -> {b})")


def run_realtime(frame_source: Iterable, device, rate: float, tail: float = 0.0) -> Trace:
    """Drive ``device`` from a timestamped command stream at a fixed sample rate.

    Commands are zero-order held: at every sample the latest command whose
    timestamp is not after the sample time is active.  One trace row is
    recorded per sample, before the device is advanced by ``1/rate``.
    """
    if not rate > 0:
        raise InputError(f"rate must be positive, got {rate}")
    commands = list(frame_source)
    trace = Trace(device.columns)
    if not commands:
        return trace
    stamps = [c.timestamp for c in commands]
    check_timestamps(stamps)
    t0, t_end = stamps[0], stamps[-1] + tail
    dt = 1.0 / rate
    n_samples = int(math.floor((t_end - t0) * rate + 1e-9)) + 1
    j = 0
    for k in range(n_samples):
        t = t0 + k * dt
        while j < len(commands) and stamps[j] <= t + 1e-12:
            device.command(commands[j])
            j += 1
        trace.append(device.row(t))
        device.advance(dt)
    return trace
