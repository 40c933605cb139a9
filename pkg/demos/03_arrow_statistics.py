# %% [markdown]
# # The statistical arrow of time
#
# For each movie the log-likelihood ratio ln R compares the forward
# hypothesis with the reversed one.  Over many runs ln R has mean
# (T/tau)(1 + <z^2>) = 3T/2tau for Rabi-averaged <z^2> = 1/2, and variance
# about 2T/tau.  The chance of guessing the wrong direction is the area
# below zero.

# %%
import numpy as np

from qubitarrow import io
from qubitarrow.arrow import mean_lnR_theory, p_err_theory, variance_lnR_theory
from qubitarrow.ensemble import histogram, run_ensemble
from qubitarrow.trajectory import SimConfig

N = 50_000  # the acceptance suite uses 2e5
base = SimConfig(omega=4 * np.pi, tau=1.0, dt=1 / 200, duration=2.0, seed=3)

# %%
print(" T/tau    mean  theory    var  theory   P_err  theory  skew")
for T in (0.02, 0.2, 1.18, 2.0):
    ens = run_ensemble(base.with_(duration=T), N, workers=4)
    print(f"{T:6.2f} {ens.mean:7.3f} {mean_lnR_theory(T, 1.0, 0.5):7.3f} {ens.variance:6.3f} "
          f"{variance_lnR_theory(T, 1.0):7.3f} {ens.p_err_empirical:7.4f} {p_err_theory(T, 1.0):7.4f} "
          f"{ens.skewness:+.2f}")
    with open(f"fig2_histogram_T{T:g}.txt", "w") as fh:
        fh.write(io.format_histogram(histogram(ens.lnR, bins=400, density=True)))

# %% [markdown]
# Short runs are strongly skewed: the distribution is not Gaussian until T
# covers a few Rabi periods.  By T = 2 tau error probabilities match the
# Gaussian tail formula to within Monte Carlo noise.  The Rabi-averaged
# formulas only apply once T covers a Rabi period, so the short-T rows
# disagree.
