# %% [markdown]
# # Runs that seem to go backwards
#
# A few percent of forward runs have ln R < 0: the record looks more likely
# played in reverse.  Starting from a nearly mixed state also produces runs
# with ln R ~ 0 that begin and end mixed, and these are genuinely
# time-ambiguous.

# %%
import numpy as np

from qubitarrow import io
from qubitarrow.algebra import QubitState
from qubitarrow.arrow import log_likelihood_ratio
from qubitarrow.ensemble import run_ensemble, select_anomalous
from qubitarrow.trajectory import SimConfig

cfg = SimConfig(omega=4 * np.pi, tau=1.0, dt=1 / 200, duration=2.0, seed=5)
ens = run_ensemble(cfg, 10_000)
rev = select_anomalous(ens, lnr_below=0.0)
print(f"{len(rev)} of {ens.n} runs look reversed (P_err {ens.p_err_empirical:.4f})")
i = rev[np.argmin(np.abs(ens.lnR[rev] + 1.4))]
movie = ens.movie(i)
print(f"run {i}: ln R = {ens.lnR[i]:.3f} (midpoint sum {log_likelihood_ratio(movie):.3f})")
io.write_movie("seemingly_reversed.csv", movie)

# %%
mixed = SimConfig(omega=4 * np.pi, tau=1.0, dt=1 / 200, duration=0.3,
                  initial_state=QubitState.from_bloch(0.1, 0, 0), seed=6)
ens = run_ensemble(mixed, 5000)
amb = select_anomalous(ens, lnr_abs_below=1e-3, max_initial_purity=0.9, max_final_purity=0.9)
print(f"{len(amb)} time-ambiguous runs; smallest |ln R| = {np.min(np.abs(ens.lnR[amb])):.2e}")
io.write_movie("time_ambiguous.csv", ens.movie(amb[np.argmin(np.abs(ens.lnR[amb]))]))
