"""Skin-stretch haptic rendering for a four-sided forearm stretcher and a string squeezer."""

__version__ = "0.1.0"

from pathlib import Path as _Path


def data_path(name: str) -> _Path:
    """Path of a file bundled in ``quadstretch/data`` (trajectories, configs)."""
    path = _Path(__file__).with_name("data") / name
    if not path.is_file():
        raise FileNotFoundError(f"no bundled data file {name!r}")
    return path


from .core import (G, SIDES, TACTOR_SITES, ForceVector, QuadDeviceParams, Side, SqueezerParams,
                   StretchFrame, StretchType, TactorSite, default_quad_params,
                   default_squeezer_params, validate_params)
from .errors import (CalibrationError, ChecksumError, ContractViolation, ExtrapolationError,
                     HapticError, InputError, ParseError, ProtocolError, RangeError,
                     StaircaseStateError, StreamError, SyncError)
from .stretch import RenderScheme1D, RenderScheme3D, clamp_frame, render_1dof, render_3dof
from .squeeze import (ButtonEvent, SqueezeCalibration, SqueezeCommand, calibrate, render_force,
                      render_value, tension_from_contraction)

__all__ = [
    "data_path",
    "G", "SIDES", "TACTOR_SITES", "ForceVector", "QuadDeviceParams", "Side", "SqueezerParams",
    "StretchFrame", "StretchType", "TactorSite", "default_quad_params",
    "default_squeezer_params", "validate_params",
    "CalibrationError", "ChecksumError", "ContractViolation", "ExtrapolationError",
    "HapticError", "InputError", "ParseError", "ProtocolError", "RangeError",
    "StaircaseStateError", "StreamError", "SyncError",
    "RenderScheme1D", "RenderScheme3D", "clamp_frame", "render_1dof", "render_3dof",
    "ButtonEvent", "SqueezeCalibration", "SqueezeCommand", "calibrate", "render_force",
    "render_value", "tension_from_contraction",
]
