"""Map interaction values and force vectors onto QuadStretcher control signals."""

from __future__ import annotations

import enum

import numpy as np

from .core import (ForceVector, QuadDeviceParams, Side, StretchFrame, check_force,
                   check_unit_interval, default_quad_params)


class RenderScheme1D(enum.Enum):
    ALL_CONTRACT = "all-contract"
    ALL_EXPAND = "all-expand"


class RenderScheme3D(enum.Enum):
    CONTRACT_TOWARDS_FORCE = "contract-towards-force"
    CONTRACT_AWAY_FROM_FORCE = "contract-away-from-force"


_D, _R, _V, _L = Side.DORSAL, Side.RIGHT, Side.VENTRAL, Side.LEFT


def render_1dof(value: float, scheme: RenderScheme1D = RenderScheme1D.ALL_CONTRACT,
                params: QuadDeviceParams | None = None, timestamp: float = 0.0) -> StretchFrame:
    """Drive all four units by ``value`` of the comfort limit.

    >>> render_1dof(0.4).signals
    (-3.44, -3.44, -3.44, -3.44)
    """
    params = params or default_quad_params()
    value = check_unit_interval(value)
    sign = -1.0 if RenderScheme1D(scheme) is RenderScheme1D.ALL_CONTRACT else 1.0
    s = sign * value * params.comfort_limit
    return StretchFrame((s, s, s, s), timestamp)


def layer_contributions(force: ForceVector,
                        scheme: RenderScheme3D = RenderScheme3D.CONTRACT_TOWARDS_FORCE,
                        params: QuadDeviceParams | None = None) -> np.ndarray:
    """Per-layer signals before summation and clamping.

    Returns a (3, 4) array: rows are the x (non-directional), y (horizontal)
    and z (vertical) layers, columns the sides in D, R, V, L order.
    """
    params = params or default_quad_params()
    force = check_force(force)
    lim = params.comfort_limit
    layers = np.zeros((3, 4))
    layers[0, :] = -abs(force.x) * lim
    # contraction on the side the force points to, expansion opposite
    directional = 1.0 if RenderScheme3D(scheme) is RenderScheme3D.CONTRACT_TOWARDS_FORCE else -1.0
    layers[1, _L] = directional * force.y * lim
    layers[1, _R] = -directional * force.y * lim
    layers[2, _V] = directional * force.z * lim
    layers[2, _D] = -directional * force.z * lim
    return layers + 0.0  # drop negative zeros


def render_3dof(force: ForceVector,
                scheme: RenderScheme3D = RenderScheme3D.CONTRACT_TOWARDS_FORCE,
                params: QuadDeviceParams | None = None, timestamp: float = 0.0) -> StretchFrame:
    """Sum the three layers per side, then clip each side to the comfort limit.

    Clipping is per side, so a saturated diagonal force does not keep its
    exact direction.
    """
    params = params or default_quad_params()
    summed = layer_contributions(force, scheme, params).sum(axis=0)
    return clamp_frame(StretchFrame(tuple(summed), timestamp), params)


def clamp_frame(frame: StretchFrame, params: QuadDeviceParams | None = None) -> StretchFrame:
    params = params or default_quad_params()
    lim = params.comfort_limit
    if all(-lim <= s <= lim for s in frame.signals):
        return frame
    return StretchFrame(tuple(min(max(s, -lim), lim) for s in frame.signals), frame.timestamp)


def is_clamped(frame: StretchFrame, params: QuadDeviceParams | None = None) -> bool:
    lim = (params or default_quad_params()).comfort_limit
    return all(-lim <= s <= lim for s in frame.signals)
