import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadstretch.core import (SIDES, TACTOR_SITES, ForceVector, QuadDeviceParams, Side,
                              SqueezerParams, StretchFrame, StretchType, TactorSite,
                              check_force, check_unit_interval, default_quad_params,
                              validate_params)
from quadstretch.errors import InputError, RangeError


def test_side_order_and_letters():
    assert [s.letter for s in SIDES] == ["D", "R", "V", "L"]
    assert [int(s) for s in SIDES] == [0, 1, 2, 3]
    assert Side.from_letter("v") is Side.VENTRAL
    assert Side.DORSAL.opposite is Side.VENTRAL
    assert Side.LEFT.opposite is Side.RIGHT
    with pytest.raises(InputError):
        Side.from_letter("x")


def test_tactor_sites():
    assert [s.name for s in TACTOR_SITES] == ["Dd", "Dp", "Rd", "Rp", "Vd", "Vp", "Ld", "Lp"]
    assert TactorSite.of_side(Side.RIGHT) == (TactorSite.Rd, TactorSite.Rp)
    assert StretchType.CONTRACTION.sign == -1 and StretchType.EXPANSION.letter == "e"


def test_stretch_frame_validation():
    f = StretchFrame((1, 2, 3, 4), 0.5)
    assert f[Side.VENTRAL] == 3.0
    assert f.as_dict()[Side.LEFT] == 4.0
    assert StretchFrame.from_mapping(f.as_dict()) == StretchFrame((1, 2, 3, 4))
    with pytest.raises(InputError):
        StretchFrame((1, 2, 3))
    with pytest.raises(InputError):
        StretchFrame((1, 2, math.nan, 4))
    with pytest.raises(InputError):
        StretchFrame.from_mapping({Side.DORSAL: 1.0})


def test_force_vector():
    assert ForceVector(3, 4, 0).norm == 5.0
    n = ForceVector(3, 4, 0).normalized()
    assert math.isclose(n.norm, 1.0)
    small = ForceVector(0.1, 0.2, 0.0)
    assert small.normalized() is small
    with pytest.raises(InputError):
        ForceVector(math.inf, 0, 0)


def test_check_helpers():
    assert check_unit_interval(0.0) == 0.0
    assert check_unit_interval(1.0) == 1.0
    for bad in (-1e-9, 1.0000001, math.nan):
        with pytest.raises(RangeError):
            check_unit_interval(bad)
    with pytest.raises(RangeError):
        check_force(ForceVector(1.0, 0.1, 0.0))
    assert check_force((0.0, 0.6, 0.8)).norm == pytest.approx(1.0)


def test_default_params_are_valid_and_published():
    p = default_quad_params()
    assert (p.max_travel, p.comfort_limit, p.max_speed, p.max_force) == (11.0, 8.6, 206.0, 6.8)
    assert all(p.skin_ratio_contraction[s] == 0.84 for s in TACTOR_SITES)
    assert all(p.skin_ratio_expansion[s] == 0.62 for s in TACTOR_SITES)
    assert validate_params(p).ok
    sq = SqueezerParams()
    assert sq.tactor_count == 6
    assert sq.max_string_tension == pytest.approx(9 * 9.81)
    assert sq.encoder_counts == 4096
    assert validate_params(sq)


def test_published_extremes():
    p = default_quad_params(published_extremes=True)
    assert p.skin_ratio_contraction[TactorSite.Vp] == 0.78
    assert p.skin_ratio_contraction[TactorSite.Dd] == 0.95
    assert p.skin_ratio_expansion[TactorSite.Dd] == 0.55
    assert p.skin_ratio_expansion[TactorSite.Rp] == 0.70
    assert p.skin_ratio_contraction[TactorSite.Lp] == 0.84
    assert validate_params(p).ok
    assert p.side_slope(Side.DORSAL, -1.0) == pytest.approx((0.95 + 0.84) / 2)


def test_params_are_immutable():
    p = default_quad_params()
    with pytest.raises(TypeError):
        p.skin_ratio_contraction[TactorSite.Dd] = 0.5


def test_validation_reports_every_violation():
    bad = QuadDeviceParams(comfort_limit=12.0, skin_ratio_expansion={"Dd": 0.9})
    result = validate_params(bad)
    assert not result
    assert "comfort_limit <= max_travel" in result.names
    assert "expansion < contraction" in result.names
    sq = SqueezerParams(tension_curve=((0, 0), (5, 2)), tactor_force_factor=1.5)
    names = validate_params(sq).names
    assert "travel_limit within tension_curve" in names
    assert "tactor_force_factor in (0, 1)" in names
    assert validate_params(object()).names == ["known parameter type"]


@given(st.lists(st.floats(-20, 20), min_size=3, max_size=3))
def test_normalized_never_exceeds_unit(v):
    f = ForceVector.from_array(v).normalized()
    assert f.norm <= 1.0 + 1e-12
    if ForceVector.from_array(v).norm <= 1.0:
        assert np.array_equal(f.as_array(), np.array(v, dtype=float))
