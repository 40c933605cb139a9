# %% [markdown]
# # No drive: an exactly solvable arrow
#
# Without the Rabi drive the integrated signal gamma is a sufficient
# statistic, and ln R = 2 ln(cosh gamma + z_i sinh gamma).  Its density has
# a closed form with an integrable divergence at the lower support edge.
# For an unbiased start (z_i = 0) ln R is never negative: every run points
# forward in time.

# %%
import numpy as np

from qubitarrow.algebra import QubitState
from qubitarrow.arrow import cdf_lnR_no_drive, lnR_support_min, pdf_lnR_no_drive
from qubitarrow.ensemble import histogram, ks_distance_no_drive, run_ensemble
from qubitarrow.trajectory import SimConfig

T, tau = 2.0, 1.0
for z_i in (0.0, 0.5):
    start = QubitState.from_bloch(np.sqrt(1 - z_i**2), 0, z_i)
    ens = run_ensemble(SimConfig(0.0, tau, tau / 200, T, start, seed=11), 50_000, workers=4)
    h = histogram(ens.lnR, bins=60, range=(lnR_support_min(z_i), 12.0), density=True)
    p = pdf_lnR_no_drive(h.centers, T, tau, z_i)
    core = slice(5, None)
    print(f"z_i={z_i}: min ln R {ens.lnR.min():.3g}, P_err {ens.p_err_empirical:.4f}, "
          f"KS {ks_distance_no_drive(ens.lnR, T, tau, z_i):.4f}, "
          f"max |hist - pdf| (away from edge) {np.max(np.abs(h.density - p)[core]):.3f}")

# %% [markdown]
# The analytic P_err for z_i = 0.5 is the CDF at zero.

# %%
print("analytic P(ln R < 0), z_i = 0.5:", cdf_lnR_no_drive(0.0, T, tau, 0.5))
