import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadstretch.core import Side, StretchType
from quadstretch.errors import InputError, StaircaseStateError
from quadstretch.psychophysics import (MEASURED_JND, ChannelObserver, SimulatedObserver,
                                       afc3_trial, calibrate_channel_sigma,
                                       calibrated_channel_observer, comfort_probe,
                                       confusion_experiment, mean_weber, run_staircase,
                                       staircase_init, staircase_summary, staircase_update,
                                       stimulus_set, threshold_observer, weber_fraction,
                                       write_json, write_trial_log)


def oracle_staircase(ref, responses):
    """Plain-loop 2-down-1-up: returns (deltas presented, reversal deltas, done)."""
    delta = 0.4 * abs(ref)
    run = 0
    last = None
    revs = []
    shown = []
    for ok in responses:
        shown.append(delta)
        move = None
        if ok:
            run += 1
            if run == 2:
                move, run = "down", 0
        else:
            move, run = "up", 0
        if move is None:
            continue
        if last is not None and move != last:
            revs.append(delta)
        last = move
        if len(revs) >= 8:
            return shown, revs, True
        f = 0.2 if len(revs) < 3 else 0.04
        delta = delta * (1 - f) if move == "down" else delta * (1 + f)
    return shown, revs, False


def test_measured_jnd_values():
    assert MEASURED_JND[Side.DORSAL, StretchType.EXPANSION] == (1.3, 0.302)
    assert MEASURED_JND[Side.VENTRAL, StretchType.CONTRACTION] == (1.2, 0.279)
    ks = [k for _, k in MEASURED_JND.values()]
    assert (min(ks), max(ks)) == (0.279, 0.349)


def test_init_and_validation():
    s = staircase_init(4.3)
    assert s.delta == pytest.approx(1.72)
    assert staircase_init(-4.3).delta == pytest.approx(1.72)
    for bad in (0.0, math.inf):
        with pytest.raises(InputError):
            staircase_init(bad)
    assert weber_fraction(1.3, -4.3) == pytest.approx(0.302, abs=5e-4)


@given(st.lists(st.booleans(), min_size=1, max_size=300), st.floats(0.5, 11))
def test_update_matches_oracle(responses, ref):
    state = staircase_init(ref)
    shown = []
    for ok in responses:
        if state.terminated:
            break
        shown.append(state.delta)
        state = staircase_update(state, ok)
    o_shown, o_revs, done = oracle_staircase(ref, responses)
    assert shown == pytest.approx(o_shown[:len(shown)], rel=1e-12)
    assert list(state.reversal_deltas) == pytest.approx(o_revs, rel=1e-12)
    assert state.converged == done


def test_update_is_pure():
    s0 = staircase_init(4.3)
    s1 = staircase_update(s0, True)
    assert s0.history == () and len(s1.history) == 1
    assert staircase_update(s0, True) == s1


def test_terminated_staircase_rejects_updates():
    s = run_staircase(4.3, threshold_observer(1.0))
    assert s.converged
    with pytest.raises(StaircaseStateError):
        staircase_update(s, True)


def test_step_schedule_audit():
    s = run_staircase(4.3, threshold_observer(1.0))
    count = 0
    for trial in s.history:
        count += trial.reversal
        if trial.step:
            assert trial.step == (0.2 if count < 3 else 0.04)
    assert sum(t.reversal for t in s.history) == 8
    assert s.jnd == pytest.approx(np.mean(s.reversal_deltas[-4:]))


@pytest.mark.parametrize("theta", [0.3, 0.5, 1.0, 2.0, 3.0])
def test_threshold_observer_recovers_theta(theta):
    s = run_staircase(4.3, threshold_observer(theta))
    assert s.converged
    assert s.jnd == pytest.approx(theta, rel=0.05)


def test_stop_statuses():
    s = run_staircase(4.3, lambda r, d: False, max_delta=4.3)
    assert s.status == "diverged" and s.delta > 4.3
    s = run_staircase(4.3, lambda r, d: True, max_trials=50)
    assert s.status == "exhausted" and len(s.history) == 50
    # fewer than four reversals: the current increment stands in for the JND
    assert s.jnd == s.delta


def test_afc3_extremes():
    ideal = SimulatedObserver(0.0, seed=1)
    assert all(afc3_trial(4.3, 0.01, ideal) for _ in range(200))
    assert all(afc3_trial(-4.3, 0.01, ideal) for _ in range(200))
    chance = SimulatedObserver(math.inf, seed=1)
    rate = np.mean([afc3_trial(4.3, 3.0, chance) for _ in range(6000)])
    assert rate == pytest.approx(1 / 3, abs=0.02)
    with pytest.raises(InputError):
        afc3_trial(4.3, -1.0, ideal)
    with pytest.raises(InputError):
        SimulatedObserver(-1.0)


def test_observer_monotone_in_noise():
    rates = []
    for sigma in (0.1, 0.5, 1.0, 3.0):
        obs = SimulatedObserver(sigma, seed=3)
        rates.append(np.mean([afc3_trial(4.3, 1.0, obs) for _ in range(3000)]))
    assert rates == sorted(rates, reverse=True)


def test_seeded_runs_reproducible():
    a = run_staircase(4.3, SimulatedObserver.for_weber(0.3, seed=9))
    b = run_staircase(4.3, SimulatedObserver.for_weber(0.3, seed=9))
    assert a == b


@pytest.mark.parametrize("key", list(MEASURED_JND))
def test_calibrated_observer_near_table(key):
    k = MEASURED_JND[key][1]
    m, ks = mean_weber(SimulatedObserver.for_weber(k), runs=200)
    assert len(ks) == 200
    assert m == pytest.approx(k, rel=0.06)


def test_comfort_probe():
    assert comfort_probe(["+10"] * 8 + ["-1", "discomfort"]) == pytest.approx(0.79 * 11)
    assert comfort_probe(["-10", "+1", "discomfort"]) == pytest.approx(0.11)
    assert comfort_probe(["+10"] * 20) == 11.0
    with pytest.raises(InputError):
        comfort_probe(["+5"])
    with pytest.raises(InputError):
        comfort_probe(["ouch"])


def test_stimulus_sets():
    assert [s.label for s in stimulus_set(1)] == ["De", "Re", "Ve", "Le", "Dc", "Rc", "Vc", "Lc"]
    assert [len(stimulus_set(n)) for n in (1, 2, 3, 4)] == [8, 4, 4, 2]
    assert stimulus_set(2)[1].signals == (0.0, -8.6, 0.0, 0.0)
    assert stimulus_set(4)[0].signals == (8.6,) * 4
    with pytest.raises(InputError):
        stimulus_set(5)


def test_confusion_bookkeeping():
    m = confusion_experiment(stimulus_set(1), 20, ChannelObserver(0.0), seed=2)
    assert m.total == 160
    assert list(m.row_sums()) == [20] * 8
    assert m.accuracy == 1.0
    d = m.to_dict()
    assert d["labels"][0] == "De" and d["accuracy"] == 1.0
    with pytest.raises(InputError):
        confusion_experiment([], 5, ChannelObserver(0.0))
    with pytest.raises(InputError):
        confusion_experiment(stimulus_set(4), 0, ChannelObserver(0.0))


def test_channel_accuracy_monotone_in_sigma():
    accs = [confusion_experiment(stimulus_set(1), 200, ChannelObserver(s, 4), 4).accuracy
            for s in (0.5, 1.5, 2.5, 4.0, 8.0)]
    assert accs == sorted(accs, reverse=True)


def test_channel_calibration_constant():
    sigma = calibrate_channel_sigma(reps=500)
    assert sigma == pytest.approx(0.2789, rel=0.08)
    acc = confusion_experiment(stimulus_set(1), 2000, calibrated_channel_observer(seed=7), 7).accuracy
    assert acc == pytest.approx(0.9734, abs=0.01)


def test_exports(tmp_path):
    s = run_staircase(4.3, threshold_observer(1.0))
    write_trial_log(tmp_path / "log.csv", s, {"seed": 1})
    lines = (tmp_path / "log.csv").read_text().splitlines()
    assert lines[0] == "# seed=1"
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == len(s.history)
    assert rows[0] == {"trial": "1", "delta": "1.720000", "response": "1", "reversal": "0"}
    summary = staircase_summary(s)
    write_json(tmp_path / "s.json", summary)
    assert json.loads((tmp_path / "s.json").read_text())["status"] == "converged"
