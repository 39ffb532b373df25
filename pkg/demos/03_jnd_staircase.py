# Simulated 2-down-1-up staircases with a 3-AFC observer.
# Run: python3 demos/03_jnd_staircase.py

# %%
import numpy as np

from quadstretch.psychophysics import (MEASURED_JND, SimulatedObserver, mean_weber, run_staircase,
                                       threshold_observer)

# %% a deterministic observer lets us check the procedure itself
s = run_staircase(4.3, threshold_observer(1.0))
print("threshold 1.0 mm -> JND", round(s.jnd, 3), "after", len(s.history), "trials")
print("reversal increments:", np.round(s.reversal_deltas, 3))
print("steps used:", sorted({t.step for t in s.history if t.step}))

# %% one noisy run, trial by trial
s = run_staircase(4.3, SimulatedObserver.for_weber(0.302, seed=1))
for i, t in enumerate(s.history[:12], 1):
    print(f"{i:3d}  delta {t.delta:.3f}  {'correct' if t.correct else 'wrong  '}  {'R' if t.reversal else ''}")
print("...", s.status, "JND", round(s.jnd, 3), "Weber", round(s.weber_fraction, 3))

# %% averaged over seeds each condition lands near its measured Weber fraction
for (side, kind), (jnd, k) in MEASURED_JND.items():
    m, _ = mean_weber(SimulatedObserver.for_weber(k), runs=100)
    print(f"{side.letter}{kind.letter}: measured {k:.3f}  simulated {m:.3f}")
