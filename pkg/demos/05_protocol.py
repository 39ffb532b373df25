# Wire frames, servo PWM and a noisy loopback link.
# Run: python3 demos/05_protocol.py

# %%
import numpy as np

from quadstretch import StretchFrame, render_1dof
from quadstretch.device import QuadSimulator
from quadstretch.protocol import (CommandFrame, annotate_frame, encode_frame, frame_to_pwm,
                                  loopback_session)

# %% one frame on the wire
raw = encode_frame(CommandFrame.from_stretch(render_1dof(0.4), seq=7))
print(annotate_frame(raw))

# %% the same command as eight servo channels
for pwm in frame_to_pwm(render_1dof(0.4)):
    print(f"channel {pwm.channel}: off={pwm.off}")

# %% 1% byte corruption: every damaged frame is dropped and counted
rng = np.random.default_rng(0)
frames = [StretchFrame(tuple(rng.uniform(-8.6, 8.6, 4))) for _ in range(2000)]
res = loopback_session(frames, QuadSimulator(), frame_period=0.01, corrupt_rate=0.01, seed=0)
print("sent", res.sent, "applied", len(res.applied), "dropped", res.dropped_frames,
      "checksum errors", res.checksum_errors, "sequence gaps", res.seq_gaps)
