# Virtual hardware: slew-limited stretch units and the PID-driven squeezer.
# Run: python3 demos/02_device_sim.py

# %%
import numpy as np

from quadstretch import StretchFrame, TactorSite, default_quad_params
from quadstretch.device import (QuadSimulator, displacement_sweep, fit_slope, run_realtime,
                                settling_time, step_response)

# %% a full-range step takes several 10 ms ticks at 206 mm/s
frames = [StretchFrame((8.6, -8.6, 0, 0), 0.0), StretchFrame((0, 0, 0, 0), 0.1)]
trace = run_realtime(frames, QuadSimulator(), rate=100, tail=0.1)
print("time    target_D  position_D  skin_Dd")
for t, tgt, pos, skin in zip(trace.column("time"), trace.column("target_D"),
                             trace.column("position_D"), trace.column("skin_Dd")):
    print(f"{t:5.2f}  {tgt:8.2f}  {pos:10.2f}  {skin:7.3f}")

# %% skin follows the tactor less in expansion than in contraction
p = default_quad_params(published_extremes=True)
for site in (TactorSite.Dd, TactorSite.Vp, TactorSite.Rp):
    sweep = displacement_sweep(site, p)
    print(site.name, "contraction slope", round(fit_slope(*sweep["contraction"]), 3),
          "expansion slope", round(fit_slope(*sweep["expansion"]), 3))

# %% squeezer: 5 mm step under the reference PID gains at 1 kHz
t, c = step_response(5.0, 0.4)
print("overshoot %.2f%%" % (100 * (c.max() / 5.0 - 1)))
print("2%% settling %.0f ms" % (1e3 * settling_time(t, c, 5.0)))
print("samples every 50 ms:", np.round(c[::50], 3))
