"""Flat key-value configuration files.

One ``key = value`` per line, ``#`` starts a comment.  Keys are dotted
(``quad.comfort_limit``, ``squeezer.tension_curve.4 = 1.6``); values are
decimal numbers in SI-style units of this package (mm, N, s, rad), a
comma-separated list of numbers for vectors, or a bare word for identifiers.

Sections used by the package:

``quad.*``         QuadDeviceParams (``quad.skin_ratio_contraction.<site>``)
``squeezer.*``     SqueezerParams (``squeezer.tension_curve.<mm> = <N>``)
``pid.*``          kp, ki, kd, integrator_limit
``calibration.*``  min_contraction, max_contraction
``scenario.*``     see :class:`quadstretch.scenarios.ScenarioConfig`
``observer.*``     weber_k, noise_sigma, channel_sigma
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

from .core import QuadDeviceParams, SqueezerParams, TactorSite
from .errors import InputError, ParseError


def parse_config(text: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ParseError(f"empty key or value in {raw.strip()!r}", lineno)
        if key in cfg:
            raise ParseError(f"duplicate key {key!r}", lineno)
        cfg[key] = value
    return cfg


def read_config(path: str | os.PathLike) -> dict[str, str]:
    return parse_config(Path(path).read_text())


def format_config(cfg: dict[str, object]) -> str:
    lines = []
    for key in sorted(cfg):
        value = cfg[key]
        if isinstance(value, (tuple, list)):
            value = ", ".join(repr(float(v)) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def write_config(path: str | os.PathLike, cfg: dict[str, object]) -> None:
    Path(path).write_text(format_config(cfg))


def config_hash(cfg: dict[str, object]) -> str:
    """Short stable digest of a configuration (order-insensitive)."""
    return hashlib.sha256(format_config(cfg).encode()).hexdigest()[:16]


def get_float(cfg, key, default=None) -> float:
    if key not in cfg:
        if default is None:
            raise InputError(f"missing config key {key!r}")
        return float(default)
    try:
        return float(cfg[key])
    except ValueError:
        raise InputError(f"config key {key!r} is not a number: {cfg[key]!r}") from None


def get_vector(cfg, key, default=None) -> tuple[float, ...] | None:
    if key not in cfg:
        return default
    try:
        return tuple(float(v) for v in str(cfg[key]).split(","))
    except ValueError:
        raise InputError(f"config key {key!r} is not a number list: {cfg[key]!r}") from None


def _subtable(cfg, prefix):
    return {k[len(prefix):]: v for k, v in cfg.items() if k.startswith(prefix)}


def quad_params_from_config(cfg: dict[str, str]) -> QuadDeviceParams:
    d = QuadDeviceParams()
    contraction = {TactorSite[k]: float(v)
                   for k, v in _subtable(cfg, "quad.skin_ratio_contraction.").items()}
    expansion = {TactorSite[k]: float(v)
                 for k, v in _subtable(cfg, "quad.skin_ratio_expansion.").items()}
    return QuadDeviceParams(
        max_travel=get_float(cfg, "quad.max_travel", d.max_travel),
        comfort_limit=get_float(cfg, "quad.comfort_limit", d.comfort_limit),
        max_speed=get_float(cfg, "quad.max_speed", d.max_speed),
        max_force=get_float(cfg, "quad.max_force", d.max_force),
        skin_ratio_contraction=contraction,
        skin_ratio_expansion=expansion,
    )


def quad_params_to_config(p: QuadDeviceParams) -> dict[str, object]:
    cfg: dict[str, object] = {
        "quad.max_travel": p.max_travel,
        "quad.comfort_limit": p.comfort_limit,
        "quad.max_speed": p.max_speed,
        "quad.max_force": p.max_force,
    }
    for site in TactorSite:
        cfg[f"quad.skin_ratio_contraction.{site.name}"] = p.skin_ratio_contraction[site]
        cfg[f"quad.skin_ratio_expansion.{site.name}"] = p.skin_ratio_expansion[site]
    return cfg


def squeezer_params_from_config(cfg: dict[str, str]) -> SqueezerParams:
    d = SqueezerParams()
    knots = _subtable(cfg, "squeezer.tension_curve.")
    curve = sorted((float(k), float(v)) for k, v in knots.items()) or d.tension_curve
    return SqueezerParams(
        tactor_count=int(get_float(cfg, "squeezer.tactor_count", d.tactor_count)),
        max_string_tension=get_float(cfg, "squeezer.max_string_tension", d.max_string_tension),
        tension_curve=tuple(curve),
        tactor_force_factor=get_float(cfg, "squeezer.tactor_force_factor", d.tactor_force_factor),
        pid_rate=get_float(cfg, "squeezer.pid_rate", d.pid_rate),
        encoder_bits=int(get_float(cfg, "squeezer.encoder_bits", d.encoder_bits)),
        pulley_radius=get_float(cfg, "squeezer.pulley_radius", d.pulley_radius),
        travel_limit=get_float(cfg, "squeezer.travel_limit", d.travel_limit),
        max_angular_velocity=get_float(cfg, "squeezer.max_angular_velocity",
                                       d.max_angular_velocity),
        motor_time_constant=get_float(cfg, "squeezer.motor_time_constant",
                                      d.motor_time_constant),
    )


def squeezer_params_to_config(p: SqueezerParams) -> dict[str, object]:
    cfg: dict[str, object] = {
        "squeezer.tactor_count": p.tactor_count,
        "squeezer.max_string_tension": p.max_string_tension,
        "squeezer.tactor_force_factor": p.tactor_force_factor,
        "squeezer.pid_rate": p.pid_rate,
        "squeezer.encoder_bits": p.encoder_bits,
        "squeezer.pulley_radius": p.pulley_radius,
        "squeezer.travel_limit": p.travel_limit,
        "squeezer.max_angular_velocity": p.max_angular_velocity,
        "squeezer.motor_time_constant": p.motor_time_constant,
    }
    for c, t in p.tension_curve:
        cfg[f"squeezer.tension_curve.{c:g}"] = t
    return cfg
