# %% [markdown]
# # Playing a movie backwards
#
# Given a movie, is time running forward with record r(t), or backward with
# the flipped record -r(T - t)?  The reversed movie obeys the same equations
# of motion, so no single frame gives it away.  Only the statistics of the
# record do.

# %%
import numpy as np

from qubitarrow.arrow import log_likelihood_ratio
from qubitarrow.trajectory import SimConfig, residual_check, reverse_movie, simulate_forward

cfg = SimConfig(omega=4 * np.pi, tau=1.0, dt=1 / 200, duration=2.0, seed=7)
fwd = simulate_forward(cfg)
passive = reverse_movie(fwd, "passive")
active = reverse_movie(fwd, "active")

# %% [markdown]
# Passive reversal keeps the coordinates and negates the record.  Active
# reversal flips the Bloch vector and the drive, and keeps the record sign.
# Both are involutions.

# %%
for name, m in (("forward", fwd), ("passive", passive), ("active", active)):
    print(f"{name:8s} start {np.round(m.bloch[0], 3)}  residual {residual_check(m):.4f}  "
          f"ln R {log_likelihood_ratio(m):+.4f}")
print("passive twice is identity:", reverse_movie(passive, "passive").equals(fwd))
print("active twice is identity: ", reverse_movie(active, "active").equals(fwd))

# %% [markdown]
# If the record is *not* flipped the reversed movie breaks the equations of
# motion badly.  The record has to be played backwards too.

# %%
from qubitarrow.trajectory import REVERSED_PASSIVE, MeasurementRecord, Movie

wrong = Movie(fwd.bloch[::-1], MeasurementRecord(fwd.record.samples[::-1], fwd.dt, fwd.tau),
              fwd.omega, fwd.tau, fwd.dt, fwd.alpha, REVERSED_PASSIVE)
print("residual with unflipped record:", round(residual_check(wrong), 3))
