# Rendering interaction values and forces onto the four stretch units.
# Run: python3 demos/01_rendering.py

# %%
import numpy as np

from quadstretch import ForceVector, Side, render_1dof, render_3dof
from quadstretch.stretch import RenderScheme1D, RenderScheme3D, layer_contributions
from quadstretch.squeeze import SqueezeCalibration, render_force, render_value

# %% 1-DoF: a button pressed 40% of the way
frame = render_1dof(0.4, RenderScheme1D.ALL_CONTRACT)
print("all contract :", frame.signals)
print("all expand   :", render_1dof(0.4, RenderScheme1D.ALL_EXPAND).signals)

# %% 3-DoF: each force axis is its own layer, summed and then clipped per side
f = ForceVector(0.5, -0.6, 0.3)
print("layers (rows x, y, z; cols D R V L)")
print(np.round(layer_contributions(f), 3))
towards = render_3dof(f, RenderScheme3D.CONTRACT_TOWARDS_FORCE)
away = render_3dof(f, RenderScheme3D.CONTRACT_AWAY_FROM_FORCE)
for side in Side:
    print(f"{side.name:8s} towards {towards[side]:+6.2f}  away {away[side]:+6.2f}")

# %% pulling left contracts the left unit and expands the right one
print(render_3dof(ForceVector(0, -1, 0)).as_dict())

# %% the squeeze baseline only sees magnitudes
cal = SqueezeCalibration(0.0, 10.0)
print("value 0.4 ->", render_value(0.4, cal).contraction, "mm")
print("force     ->", round(render_force(f, cal).contraction, 3), "mm  (|f| =", round(f.norm, 3), ")")
