import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadstretch import data_path
from quadstretch.core import ForceVector
from quadstretch.errors import InputError, ParseError, StreamError
from quadstretch.scenarios import (HandSample, Scenario, ScenarioConfig, derive_velocities,
                                   fishing_force, load_trajectory, momentum_center,
                                   rubber_band_force, scenario_force, scenario_inputs,
                                   smooth_velocities, tennis_force, value_1dof,
                                   write_trajectory)

BAND = ScenarioConfig(Scenario.RUBBER_BAND)
FISH = ScenarioConfig(Scenario.FISHING_ROD, rod_tip=(1.0, 0.0, 1.0), fish_position=(3.0, 0.0, 0.0))
RACKET = ScenarioConfig(Scenario.TENNIS_RACKET)


def sample(p=(0, 0, 0), v=(0, 0, 0), aux=None, t=0.0):
    return HandSample(t, p, v, aux)


def test_dof():
    assert [s.dof for s in Scenario] == [1, 1, 1, 3, 3, 3]


def test_rubber_band_points_home():
    f = rubber_band_force(sample((0, 0.2, 0)), BAND)
    assert (f.x, f.y, f.z) == pytest.approx((0, -0.5, 0))
    assert rubber_band_force(sample((0, 0, -0.8)), BAND) == ForceVector(0, 0, 1)
    assert rubber_band_force(sample(), BAND) == ForceVector()


def test_fishing_force_along_line():
    f = fishing_force(sample(v=(0, 1.0, 0)), FISH)
    d = np.array([2.0, 0.0, -1.0]) / np.sqrt(5)
    assert f.as_array() == pytest.approx(0.5 * d)
    vertical = ScenarioConfig(Scenario.FISHING_ROD, rod_tip=FISH.rod_tip,
                              fish_position=FISH.fish_position, fishing_speed="vertical")
    assert fishing_force(sample(v=(0, 1.0, 0)), vertical) == ForceVector()
    with pytest.raises(InputError):
        fishing_force(sample(), BAND)


def test_tennis_opposes_motion():
    f = tennis_force(sample(v=(0, 1.0, 0)), RACKET)
    assert f.as_array() == pytest.approx([0, -0.5, 0])
    assert tennis_force(sample(v=(10, 0, 0)), RACKET).norm == pytest.approx(1.0)
    assert momentum_center(sample((0, 0, 0)), RACKET) == pytest.approx([0.5, 0, 0])


def test_1dof_values():
    cfg = ScenarioConfig(Scenario.ROTATE_KNOB, aux_full_range=np.pi / 2)
    assert value_1dof(sample(aux=np.pi / 4), cfg) == pytest.approx(0.5)
    assert value_1dof(sample(aux=5.0), cfg) == 1.0
    assert value_1dof(sample(aux=-1.0), cfg) == 0.0
    with pytest.raises(InputError):
        value_1dof(sample(), cfg)
    with pytest.raises(InputError):
        scenario_force(sample(aux=0.5), cfg)


def test_config_validation():
    with pytest.raises(InputError):
        ScenarioConfig(Scenario.RUBBER_BAND, max_pull_length=0)
    with pytest.raises(InputError):
        ScenarioConfig(Scenario.FISHING_ROD, fishing_speed="diagonal")
    with pytest.raises(ValueError):
        ScenarioConfig("skipping_rope")
    with pytest.raises(InputError):
        ScenarioConfig.from_config({})


def test_smoothing_is_trailing_average():
    s = [sample(v=(float(k), 0, 0), t=k) for k in range(5)]
    out = smooth_velocities(s, 3)
    assert [o.velocity[0] for o in out] == pytest.approx([0, 0.5, 1, 2, 3])
    assert smooth_velocities(s, 1) == s


def test_scenario_inputs_dispatch():
    s = [sample((0, 0.1 * k, 0), (0, 1, 0), t=0.01 * k) for k in range(4)]
    forces = scenario_inputs(s, BAND)
    assert all(isinstance(f, ForceVector) for f in forces)
    assert forces[1].y == pytest.approx(-0.25)


def test_central_differences_on_sine():
    t = np.linspace(0, 2, 2001)
    p = np.stack([np.sin(2 * np.pi * t), np.cos(np.pi * t), 0.1 * t], axis=1)
    exact = np.stack([2 * np.pi * np.cos(2 * np.pi * t), -np.pi * np.sin(np.pi * t),
                      np.full_like(t, 0.1)], axis=1)
    v = derive_velocities(t, p)
    # second-order interior, first-order at the two ends
    assert np.max(np.abs(v[1:-1] - exact[1:-1])) < 1e-4
    assert np.max(np.abs(v - exact)) < 0.02


def write(tmp_path, text):
    path = tmp_path / "traj.csv"
    path.write_text(text)
    return path


def test_load_trajectory_variants(tmp_path):
    s = load_trajectory(write(tmp_path, "t,px,py,pz\n0,0,0,0\n0.1,0.1,0,0\n0.2,0.2,0,0\n"))
    assert s[1].velocity == pytest.approx((1.0, 0, 0))
    s = load_trajectory(write(tmp_path, "t,px,py,pz,aux\n0,0,0,0,0.5\n"))
    assert s[0].aux == 0.5
    assert load_trajectory(write(tmp_path, "")) == []
    assert load_trajectory(write(tmp_path, "t,px,py,pz\n")) == []


@pytest.mark.parametrize("text, line", [
    ("t,px,py\n0,0,0\n", 1),
    ("t,px,py,pz,wx\n", 1),
    ("t,px,py,pz,vx\n", 1),
    ("t,px,py,pz\n0,0,0,0\n0.1,0,x,0\n", 3),
    ("t,px,py,pz\n0,0,0,0\n0.1,0,0\n", 3),
    ("t,px,py,pz\n0,0,nan,0\n", 2),
])
def test_load_trajectory_parse_errors(tmp_path, text, line):
    with pytest.raises(ParseError) as exc:
        load_trajectory(write(tmp_path, text))
    assert exc.value.line == line


def test_load_trajectory_stream_errors(tmp_path):
    with pytest.raises(StreamError):
        load_trajectory(write(tmp_path, "t,px,py,pz\n0,0,0,0\n0,1,0,0\n"))
    bad_v = "t,px,py,pz,vx,vy,vz\n" + "".join(f"{k/10},{k/10},0,0,5,0,0\n" for k in range(5))
    with pytest.raises(InputError):
        load_trajectory(write(tmp_path, bad_v))


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=30))
def test_trajectory_round_trip(tmp_path_factory, xs):
    t = np.arange(len(xs)) * 0.01
    samples = [HandSample(tt, (x, 0.0, 0.0), aux=0.25) for tt, x in zip(t, xs)]
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    write_trajectory(path, samples)
    back = load_trajectory(path)
    assert [b.position for b in back] == [s.position for s in samples]
    assert [b.aux for b in back] == [0.25] * len(xs)


def test_bundled_trajectory_consistent():
    samples = load_trajectory(data_path("rubber_band.csv"))
    assert len(samples) == 151
    forces = scenario_inputs(samples, BAND)
    assert max(f.norm for f in forces) <= 1.0
    assert forces[0] == ForceVector() and forces[-1] == ForceVector()
