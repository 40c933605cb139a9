"""Monte Carlo ensembles of ``ln R``, histograms and anomalous-run selection.

Trajectory ``i`` always draws from the stream keyed by ``(cfg.seed, i)`` and
trajectories are grouped into chunks of a fixed size, so an ensemble is a
pure function of ``(cfg, n)`` whatever the number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .algebra import purity_of_bloch
from .arrow import cdf_table
from .errors import InvalidParametersError, QubitArrowError
from .trajectory import propagate_streams, simulate_forward

DEFAULT_CHUNK = 2048
DEFAULT_BINS = 400


@dataclass(frozen=True)
class ArrowSample:
    lnR: float
    gamma: float
    T: float
    tau: float


ESTIMATORS = ("exact", "midpoint")


@dataclass(frozen=True, eq=False)
class ArrowEnsemble:
    """Per-trajectory ``ln R``, ``gamma`` and final states.

    Both estimators are kept.  ``lnR`` is the one selected by ``estimator``:
    ``"exact"`` (default) is the finite-``dt`` likelihood ratio of the
    Kraus model, ``"midpoint"`` the time-symmetric Riemann sum of
    ``(2/tau) int r z dt``.  The summary statistics use ``lnR``.
    """

    config: object
    lnR_exact: np.ndarray
    lnR_midpoint: np.ndarray
    gamma: np.ndarray
    final_bloch: np.ndarray
    estimator: str = "exact"

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise InvalidParametersError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")

    @property
    def lnR(self):
        return self.lnR_exact if self.estimator == "exact" else self.lnR_midpoint

    @property
    def n(self):
        return len(self.lnR)

    @property
    def mean(self):
        return float(np.mean(self.lnR))

    @property
    def variance(self):
        """Unbiased sample variance; ``None`` (undefined) for a single run."""
        if self.n < 2:
            return None
        return float(np.var(self.lnR, ddof=1))

    @property
    def p_err_empirical(self):
        return empirical_p_err(self.lnR)

    @property
    def skewness(self):
        if self.n < 3:
            return None
        return float(stats.skew(self.lnR, bias=False))

    @property
    def skewness_se(self):
        n = self.n
        if n < 3:
            return None
        return float(np.sqrt(6.0 * n * (n - 1) / ((n - 2) * (n + 1) * (n + 3))))

    def sample(self, i):
        cfg = self.config
        return ArrowSample(float(self.lnR[i]), float(self.gamma[i]), cfg.duration, cfg.tau)

    def movie(self, i):
        """Regenerate the movie of trajectory ``i`` from its stream."""
        return simulate_forward(self.config, i)


def _run_chunk(cfg, start, stop):
    try:
        return propagate_streams(cfg, range(start, stop))
    except QubitArrowError as exc:
        raise type(exc)(f"trajectories {start}..{stop - 1}: {exc}") from exc


def run_ensemble(cfg, n, workers=1, chunk_size=DEFAULT_CHUNK, estimator="exact"):
    """Simulate ``n`` independent trajectories of ``cfg``.

    ``workers`` only changes the wall-clock time; ``chunk_size`` fixes the
    batching and is part of the reproducibility contract.
    """
    n = int(n)
    if n < 1:
        raise InvalidParametersError("ensemble size must be at least 1")
    bounds = [(s, min(s + chunk_size, n)) for s in range(0, n, chunk_size)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _run_chunk(cfg, *b), bounds))
    else:
        parts = [_run_chunk(cfg, *b) for b in bounds]
    return ArrowEnsemble(
        config=cfg,
        lnR_exact=np.concatenate([p.lnr_bayes for p in parts]),
        lnR_midpoint=np.concatenate([p.lnr_midpoint for p in parts]),
        gamma=np.concatenate([p.gamma for p in parts]),
        final_bloch=np.concatenate([p.final for p in parts]),
        estimator=estimator,
    )


def empirical_p_err(samples):
    """Fraction of ``ln R < 0``; exact zeros count one half."""
    lnr = np.asarray(getattr(samples, "lnR", samples), dtype=float)
    if lnr.size == 0:
        raise InvalidParametersError("no samples")
    return (np.count_nonzero(lnr < 0) + 0.5 * np.count_nonzero(lnr == 0)) / lnr.size


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    underflow: int = 0
    overflow: int = 0
    mode: str = "counts"

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def width(self):
        return float(self.edges[1] - self.edges[0])

    @property
    def total(self):
        return int(self.counts.sum() + self.underflow + self.overflow)

    @property
    def density(self):
        """Counts per unit ``ln R`` normalized by all samples (in and out of range)."""
        if self.total == 0:
            return np.zeros(len(self.counts))
        return self.counts / (self.total * self.width)

    def values(self):
        return self.density if self.mode == "density" else self.counts.astype(float)


def histogram(samples, bins=DEFAULT_BINS, range=None, density=False):
    """Uniform histogram with separate under/overflow tallies.

    The last bin is closed on the right.  Without ``range`` the sample
    extremes are used.
    """
    x = np.asarray(getattr(samples, "lnR", samples), dtype=float)
    bins = int(bins)
    if bins < 1:
        raise InvalidParametersError("need at least one bin")
    if range is None:
        if x.size == 0:
            range = (0.0, 1.0)
        else:
            lo, hi = float(x.min()), float(x.max())
            range = (lo, hi) if hi > lo else (lo - 0.5, lo + 0.5)
    lo, hi = map(float, range)
    if not hi > lo:
        raise InvalidParametersError("histogram range must satisfy lo < hi")
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    return Histogram(
        edges=edges,
        counts=counts.astype(np.int64),
        underflow=int(np.count_nonzero(x < lo)),
        overflow=int(np.count_nonzero(x > hi)),
        mode="density" if density else "counts",
    )


def select_anomalous(ens, lnr_below=None, lnr_abs_below=None, max_initial_purity=None,
                     max_final_purity=None):
    """Indices of trajectories matching every given condition.

    ``lnr_below`` keeps seemingly reversed runs (``ln R < threshold``);
    ``lnr_abs_below`` keeps time-ambiguous runs (``|ln R| < eps``); the
    purity bounds restrict the boundary states (``Tr rho^2 <= bound``).
    """
    lnr = ens.lnR
    keep = np.ones(ens.n, dtype=bool)
    if lnr_below is not None:
        keep &= lnr < lnr_below
    if lnr_abs_below is not None:
        keep &= np.abs(lnr) < lnr_abs_below
    if max_initial_purity is not None:
        keep &= ens.config.initial_state.purity <= max_initial_purity
    if max_final_purity is not None:
        keep &= purity_of_bloch(ens.final_bloch) <= max_final_purity
    return np.flatnonzero(keep)


def ks_distance_no_drive(samples, T, tau, z_i, n_grid=1 << 14):
    """Kolmogorov-Smirnov distance between samples and the no-drive ``ln R`` law."""
    x = np.sort(np.asarray(samples, dtype=float))
    xg, cg = cdf_table(T, tau, z_i, n_grid=n_grid)
    f = np.interp(x, xg, cg, left=0.0, right=1.0)
    n = len(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
