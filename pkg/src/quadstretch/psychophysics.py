"""Adaptive staircase, 3-AFC simulated observers and discrimination experiments.

The staircase follows a 2-down-1-up rule on the stimulus increment: it
starts at 40 % of the reference level, moves by 20 % of the current
increment until the third reversal and by 4 % afterwards, and stops at the
eighth reversal.  The JND is the mean increment over the last four
reversals.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import SIDES, Side, StretchType
from .errors import InputError, StaircaseStateError

INITIAL_FRACTION = 0.4
COARSE_STEP = 0.20
FINE_STEP = 0.04
COARSE_REVERSALS = 3
TOTAL_REVERSALS = 8
JND_REVERSALS = 4

REFERENCE_LEVEL = 4.3

# Measured JNDs of the control signal (mm) and their Weber fractions at the
# 4.3 mm reference.
MEASURED_JND = {
    (Side.DORSAL, StretchType.EXPANSION): (1.3, 0.302),
    (Side.RIGHT, StretchType.EXPANSION): (1.4, 0.326),
    (Side.VENTRAL, StretchType.EXPANSION): (1.5, 0.349),
    (Side.LEFT, StretchType.EXPANSION): (1.5, 0.349),
    (Side.DORSAL, StretchType.CONTRACTION): (1.2, 0.279),
    (Side.RIGHT, StretchType.CONTRACTION): (1.4, 0.326),
    (Side.VENTRAL, StretchType.CONTRACTION): (1.2, 0.279),
    (Side.LEFT, StretchType.CONTRACTION): (1.5, 0.349),
}

UP, DOWN = "up", "down"


@dataclass(frozen=True)
class Trial:
    delta: float
    correct: bool
    reversal: bool
    step: float  # fractional change applied after this trial; 0.0 when delta held


@dataclass(frozen=True)
class StaircaseState:
    reference: float
    delta: float
    consecutive_correct: int = 0
    reversal_count: int = 0
    reversal_deltas: tuple[float, ...] = ()
    direction: str | None = None
    history: tuple[Trial, ...] = ()
    status: str = "running"
    max_trials: int | None = None
    max_delta: float | None = None

    @property
    def terminated(self) -> bool:
        return self.status != "running"

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def jnd(self) -> float:
        """Mean increment over the last four reversals.

        Before four reversals exist this falls back to the current increment,
        an upper bound for an observer that has not yet failed.
        """
        if len(self.reversal_deltas) >= JND_REVERSALS:
            return float(np.mean(self.reversal_deltas[-JND_REVERSALS:]))
        return self.delta

    @property
    def weber_fraction(self) -> float:
        return weber_fraction(self.jnd, self.reference)


def staircase_init(reference: float, max_trials: int | None = None,
                   max_delta: float | None = None) -> StaircaseState:
    """Start a staircase.  ``max_trials`` and ``max_delta`` end runs that
    never collect eight reversals ("exhausted") or whose increment outgrows
    what the device can render ("diverged")."""
    reference = float(reference)
    if reference == 0 or not math.isfinite(reference):
        raise InputError(f"reference must be finite and non-zero, got {reference}")
    return StaircaseState(reference, INITIAL_FRACTION * abs(reference),
                          max_trials=max_trials, max_delta=max_delta)


def staircase_update(state: StaircaseState, correct: bool) -> StaircaseState:
    if state.terminated:
        raise StaircaseStateError(f"staircase already {state.status}")
    correct = bool(correct)
    move = None
    streak = state.consecutive_correct
    if correct:
        streak += 1
        if streak == 2:
            move, streak = DOWN, 0
    else:
        move, streak = UP, 0

    delta = state.delta
    count = state.reversal_count
    reversals = state.reversal_deltas
    direction = state.direction
    reversal = False
    step = 0.0
    status = "running"
    if move is not None:
        if direction is not None and move != direction:
            reversal = True
            reversals = reversals + (delta,)
            count += 1
        direction = move
        if count >= TOTAL_REVERSALS:
            status = "converged"
        else:
            step = COARSE_STEP if count < COARSE_REVERSALS else FINE_STEP
            delta = delta * (1.0 - step) if move == DOWN else delta * (1.0 + step)

    history = state.history + (Trial(state.delta, correct, reversal, step),)
    if status == "running":
        if state.max_delta is not None and delta > state.max_delta:
            status = "diverged"
        elif state.max_trials is not None and len(history) >= state.max_trials:
            status = "exhausted"
    return replace(state, delta=delta, consecutive_correct=streak, reversal_count=count,
                   reversal_deltas=reversals, direction=direction, history=history,
                   status=status)


def weber_fraction(jnd: float, reference: float) -> float:
    if reference == 0:
        raise InputError("reference must be non-zero")
    return jnd / abs(reference)


# --- simulated 3-AFC observer ----------------------------------------------------

# Mean staircase JND per unit of perceptual noise for the most-isolated-sample
# observer at the 4.3 mm reference, fitted at a Weber fraction of 0.31 (Monte
# Carlo, 2000 seeded runs; see calibrate_noise_sigma).  Not exactly
# proportional across noise levels because the starting increment is fixed.
JND_PER_SIGMA = 2.502


@dataclass
class SimulatedObserver:
    """Additive-Gaussian observer on the control-signal scale.

    ``noise_sigma = 0`` is the ideal observer; ``math.inf`` answers at random.
    """

    noise_sigma: float
    weber_k: float | None = None
    seed: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise InputError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        self.rng = np.random.default_rng(self.seed)

    @classmethod
    def for_weber(cls, weber_k: float, reference: float = REFERENCE_LEVEL, seed: int = 0):
        sigma = weber_k * abs(reference) / JND_PER_SIGMA
        return cls(sigma, weber_k, seed)

    def reseeded(self, seed: int) -> "SimulatedObserver":
        return SimulatedObserver(self.noise_sigma, self.weber_k, seed)


def _pick_max(scores: np.ndarray, u: float) -> int:
    best = np.flatnonzero(scores == scores.max())
    return int(best[min(int(u * len(best)), len(best) - 1)])


def afc3_trial(reference: float, delta: float, observer: SimulatedObserver) -> bool:
    """Present two reference stimuli and one stronger comparison in random order;
    the observer names the sample farthest from the other two."""
    if delta < 0:
        raise InputError(f"delta must be non-negative, got {delta}")
    rng = observer.rng
    odd = int(rng.integers(3))
    noise = rng.standard_normal(3)
    u = rng.random()
    if math.isinf(observer.noise_sigma):
        return odd == min(int(u * 3), 2)
    values = np.full(3, float(reference))
    values[odd] += math.copysign(delta, reference)
    perceived = values + observer.noise_sigma * noise
    isolation = np.abs(perceived[:, None] - perceived[None, :]).sum(axis=1)
    return _pick_max(isolation, u) == odd


def run_staircase(reference: float, observer, max_trials: int | None = 1000,
                  max_delta: float | None = None) -> StaircaseState:
    """Run one staircase to termination.

    ``observer`` is a SimulatedObserver or any callable ``(reference, delta) -> bool``.
    """
    state = staircase_init(reference, max_trials=max_trials, max_delta=max_delta)
    respond = observer if callable(observer) else (
        lambda ref, d: afc3_trial(ref, d, observer))
    while not state.terminated:
        state = staircase_update(state, respond(state.reference, state.delta))
    return state


def threshold_observer(theta: float):
    """Deterministic observer: correct exactly when the increment reaches ``theta``."""
    return lambda reference, delta: delta >= theta


def mean_weber(observer: SimulatedObserver, reference: float = REFERENCE_LEVEL,
               runs: int = 100, seed: int = 0) -> tuple[float, np.ndarray]:
    """Mean Weber fraction over ``runs`` independently seeded staircases."""
    ks = np.array([run_staircase(reference, observer.reseeded(seed + i)).weber_fraction
                   for i in range(runs)])
    return float(ks.mean()), ks


def calibrate_noise_sigma(weber_k: float, reference: float = REFERENCE_LEVEL, runs: int = 400,
                          seed: int = 0, iterations: int = 4) -> float:
    """Find the noise level whose mean staircase Weber fraction is ``weber_k``.

    Fixed-point iteration on the (nearly proportional) sigma-to-JND relation,
    every iteration re-using the same seeds.
    """
    sigma = weber_k * abs(reference) / JND_PER_SIGMA
    for _ in range(iterations):
        k, _ = mean_weber(SimulatedObserver(sigma), reference, runs, seed)
        sigma *= weber_k / k
    return sigma


# --- comfort probe ------------------------------------------------------------

COARSE_PERCENT, FINE_PERCENT = 10, 1


def comfort_probe(step_events: Iterable, device_max: float = 11.0) -> float:
    """Replay a comfort-limit probe.

    Events are ``"+10"``, ``"-10"``, ``"+1"``, ``"-1"`` (percent of the
    device range) and ``"discomfort"``.  Returns the signal magnitude at the
    first discomfort report, or ``device_max`` if none is reported.
    """
    percent = 0
    for ev in step_events:
        ev = str(ev).strip().lower()
        if ev == "discomfort":
            return percent * device_max / 100.0
        try:
            step = int(ev)
        except ValueError:
            raise InputError(f"unknown probe event {ev!r}") from None
        if abs(step) not in (COARSE_PERCENT, FINE_PERCENT):
            raise InputError(f"probe steps are +/-10 or +/-1 percent, got {ev!r}")
        percent = min(max(percent + step, 0), 100)
    return float(device_max)


# --- discrimination (confusion matrix) experiments ------------------------------

@dataclass(frozen=True)
class Stimulus:
    label: str
    signals: tuple[float, float, float, float]


def stimulus_set(session: int, amplitude: float = 8.6) -> tuple[Stimulus, ...]:
    """Stimuli of the four discrimination sessions.

    1: 4 sides x 2 stretch types, 2: 4 sides contracting, 3: 4 sides
    expanding, 4: all units expanding vs all contracting.
    """
    def single(side: Side, kind: StretchType) -> Stimulus:
        sig = [0.0] * 4
        sig[side] = kind.sign * amplitude
        return Stimulus(side.letter + kind.letter, tuple(sig))

    expand = tuple(single(s, StretchType.EXPANSION) for s in SIDES)
    contract = tuple(single(s, StretchType.CONTRACTION) for s in SIDES)
    if session == 1:
        return expand + contract
    if session == 2:
        return contract
    if session == 3:
        return expand
    if session == 4:
        return (Stimulus("e", (amplitude,) * 4), Stimulus("c", (-amplitude,) * 4))
    raise InputError(f"session must be 1, 2, 3 or 4, got {session}")


@dataclass
class ChannelObserver:
    """Reads each stretch unit through an independent Gaussian channel and
    answers with the nearest stimulus template.  ``guess=True`` or an
    infinite sigma answers uniformly at random."""

    noise_sigma: float
    seed: int = 0
    guess: bool = False
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise InputError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        self.rng = np.random.default_rng(self.seed)

    def classify(self, signals: Sequence[float], templates: np.ndarray) -> int:
        noise = self.rng.standard_normal(len(signals))
        u = self.rng.random()
        if self.guess or math.isinf(self.noise_sigma):
            return min(int(u * len(templates)), len(templates) - 1)
        perceived = np.asarray(signals) + self.noise_sigma * noise
        dist = np.sum((templates - perceived) ** 2, axis=1)
        return _pick_max(-dist, u)


# Channel noise, relative to stimulus amplitude, giving about 97.3 % accuracy
# on the 8-stimulus session (Monte Carlo, 2000 reps per stimulus; see
# calibrate_channel_sigma).
CHANNEL_SIGMA_PER_AMPLITUDE = 0.2789


def calibrated_channel_observer(amplitude: float = 8.6, seed: int = 0) -> ChannelObserver:
    return ChannelObserver(CHANNEL_SIGMA_PER_AMPLITUDE * amplitude, seed)


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    counts: np.ndarray  # rows: presented stimulus, columns: response

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total)

    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": self.counts.tolist(),
                "accuracy": self.accuracy}


def confusion_experiment(stimuli: Sequence[Stimulus], reps: int, observer: ChannelObserver,
                         seed: int = 0) -> ConfusionMatrix:
    """Present every stimulus ``reps`` times in shuffled order and tally responses."""
    stimuli = tuple(stimuli)
    if not stimuli:
        raise InputError("stimulus set is empty")
    if reps < 1:
        raise InputError(f"reps must be positive, got {reps}")
    templates = np.array([s.signals for s in stimuli])
    order = np.repeat(np.arange(len(stimuli)), reps)
    np.random.default_rng(seed).shuffle(order)
    counts = np.zeros((len(stimuli), len(stimuli)), dtype=int)
    for i in order:
        counts[i, observer.classify(templates[i], templates)] += 1
    return ConfusionMatrix(tuple(s.label for s in stimuli), counts)


def calibrate_channel_sigma(target_accuracy: float = 0.9734, session: int = 1, reps: int = 2000,
                            seed: int = 0, amplitude: float = 1.0) -> float:
    """Bisect the channel noise (relative to amplitude) hitting ``target_accuracy``.

    Uses common random numbers, so accuracy is monotone in sigma and the
    bisection is well defined.
    """
    stimuli = stimulus_set(session, amplitude)
    lo, hi = 0.0, 2.0 * amplitude
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        acc = confusion_experiment(stimuli, reps, ChannelObserver(mid, seed), seed).accuracy
        if acc > target_accuracy:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi) / amplitude


# --- export ----------------------------------------------------------------------

def write_trial_log(path: str | os.PathLike, state: StaircaseState, header: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for key, value in sorted((header or {}).items()):
            fh.write(f"# {key}={value}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "delta", "response", "reversal"])
        for i, trial in enumerate(state.history, start=1):
            w.writerow([i, f"{trial.delta:.6f}", int(trial.correct), int(trial.reversal)])


def staircase_summary(state: StaircaseState) -> dict:
    return {
        "reference": state.reference,
        "status": state.status,
        "trials": len(state.history),
        "jnd": state.jnd,
        "weber_fraction": state.weber_fraction,
        "reversal_deltas": list(state.reversal_deltas),
    }


def write_json(path: str | os.PathLike, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
