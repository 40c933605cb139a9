# %% [markdown]
# # Janus sequences: undoing measurements
#
# A partial measurement M can be undone with some probability by the inverse
# of its time-reversed image, (Theta M Theta^-1)^-1, rescaled into a valid
# measurement operator.  Applying those partners in reverse order rewinds a
# whole sequence and returns the time-reversed initial state.

# %%
import numpy as np

from qubitarrow.measurement import (
    GaussianMeasurement,
    discrete_log_ratio,
    gaussian_kraus,
    janus_backward_operator,
    janus_backward_sequence,
    janus_restoration_deficit,
)

# %% [markdown]
# Uncollapse of a single weak z measurement: the partner of diag(cos e, sin e)
# is diag(1, tan e).

# %%
e = 0.3
print(janus_backward_operator(np.diag([np.cos(e), np.sin(e)])).real.round(6))

# %% [markdown]
# A sequence of Gaussian measurement results, interleaved with a rotation.

# %%
m = GaussianMeasurement(tau=1.0, dt=0.05, alpha=(0, 0.2j, 1))
rot = np.array([[np.cos(0.4), -np.sin(0.4)], [np.sin(0.4), np.cos(0.4)]])
seq = []
for r in (1.3, -0.4, 2.2):
    seq += [gaussian_kraus(r, m), rot]
psi = np.array([0.8, 0.6j])
back = janus_backward_sequence(seq)
print("restoration deficit:", janus_restoration_deficit(seq, back, psi))
print("ln(P_F / P_B):", discrete_log_ratio(seq, back, psi))

# %% [markdown]
# Projective measurements cannot be undone.

# %%
from qubitarrow.errors import NotInvertibleError

try:
    janus_backward_sequence(seq + [np.diag([1.0, 0.0])])
except NotInvertibleError as exc:
    print("rejected:", exc)
