# Stimulus discrimination sessions with a channel observer.
# Run: python3 demos/04_confusion.py

# %%
from quadstretch.psychophysics import (ChannelObserver, calibrated_channel_observer,
                                       confusion_experiment, stimulus_set)

# %% session 1: eight single-unit stimuli
m = confusion_experiment(stimulus_set(1), 100, calibrated_channel_observer(seed=1), seed=1)
print("      " + " ".join(f"{l:>4s}" for l in m.labels))
for label, row in zip(m.labels, m.counts):
    print(f"{label:>4s}  " + " ".join(f"{n:4d}" for n in row))
print("accuracy", m.accuracy)

# %% all four sessions, plus the two reference observers
for session in (1, 2, 3, 4):
    stim = stimulus_set(session)
    acc = confusion_experiment(stim, 100, calibrated_channel_observer(seed=session), session).accuracy
    rnd = confusion_experiment(stim, 1000, ChannelObserver(0.0, session, guess=True), session).accuracy
    print(f"session {session}: calibrated {acc:.3f}  random {rnd:.3f}  chance {1 / len(stim):.3f}")

# %% accuracy falls as channel noise grows
for sigma in (1, 2, 3, 4, 6):
    acc = confusion_experiment(stimulus_set(1), 200, ChannelObserver(sigma, 0), 0).accuracy
    print(f"sigma {sigma} mm -> {acc:.3f}")
