"""Forward quantum trajectories of a continuously monitored qubit.

A trajectory ("movie") is the sequence of Bloch vectors ``v_0 .. v_N`` on the
grid ``t_k = k dt`` together with its record ("soundtrack") ``r_0 .. r_{N-1}``;
``r_k`` belongs to the interval ``[t_k, t_{k+1})``.

Each step is the Strang splitting

    half Rabi rotation -> Gaussian Kraus update with result r_k -> half rotation

with ``r_k`` drawn from the exact Born-rule mixture of two Gaussians centred
at +-1 (variance ``tau / dt``).  The Kraus update is the exact Bayesian
filter, so states never leave the Bloch ball at any ``dt``.  The Stratonovich
differential form of the same dynamics is in :func:`stratonovich_rhs` and is
used only to validate movies (:func:`residual_check`).

Sign convention: the Rabi drive rotates the Bloch vector as
``xdot = -Omega z, zdot = Omega x``.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import SIGMA_Y, IDENTITY, QubitState, purity_of_bloch
from .errors import InvalidInputError, InvalidParametersError, ZeroProbabilityError
from .measurement import Z_AXIS, GaussianMeasurement, as_alpha, gaussian_kraus

FORWARD = "forward"
REVERSED_PASSIVE = "reversed-passive"
REVERSED_ACTIVE = "reversed-active"
DIRECTIONS = (FORWARD, REVERSED_PASSIVE, REVERSED_ACTIVE)


def stream(seed, index):
    """Counter-based random stream for trajectory ``index`` of run ``seed``.

    Philox keyed by the pair ``(seed, index)``: every trajectory owns an
    independent stream, so results do not depend on how trajectories are
    scheduled across workers.
    """
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Physical and numerical parameters of a monitored-qubit run.

    ``omega`` is the Rabi frequency, ``tau`` the measurement time, ``dt`` the
    timestep and ``duration`` the run length ``T = N dt``.
    """

    omega: float
    tau: float
    dt: float
    duration: float
    initial_state: QubitState = field(default_factory=lambda: QubitState.from_bloch(1.0, 0.0, 0.0))
    alpha: tuple = Z_AXIS
    seed: int = 0

    def __post_init__(self):
        for name in ("omega", "tau", "dt", "duration"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not isinstance(self.initial_state, QubitState):
            object.__setattr__(self, "initial_state", QubitState.from_bloch(*self.initial_state))
        object.__setattr__(self, "alpha", tuple(complex(c) for c in as_alpha(self.alpha)))
        object.__setattr__(self, "seed", int(self.seed))
        if not 0 <= self.seed < 2**64:
            raise InvalidParametersError("seed must be a 64-bit unsigned integer")
        if not np.isfinite(self.omega):
            raise InvalidParametersError("omega must be finite")
        if not self.tau > 0:
            raise InvalidParametersError(f"tau must be positive, got {self.tau!r}")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise InvalidParametersError(f"dt must be positive, got {self.dt!r}")
        if not (self.duration >= 0 and np.isfinite(self.duration)):
            raise InvalidParametersError(f"duration must be non-negative, got {self.duration!r}")
        if self.dt > self.tau / 2:
            raise InvalidParametersError(f"dt={self.dt!r} exceeds tau/2; not a weak measurement")
        if self.dt > self.tau / 10:
            warnings.warn(f"dt={self.dt!r} exceeds tau/10; per-step measurement is not weak", stacklevel=3)
        n = self.duration / self.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise InvalidParametersError(f"duration/dt = {n!r} is not an integer")
        GaussianMeasurement(self.tau, self.dt, self.alpha)

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    @property
    def measurement(self):
        return GaussianMeasurement(self.tau, self.dt, self.alpha)

    def with_(self, **changes):
        return replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, SimConfig):
            return NotImplemented
        return (
            (self.omega, self.tau, self.dt, self.duration, self.alpha, self.seed)
            == (other.omega, other.tau, other.dt, other.duration, other.alpha, other.seed)
            and self.initial_state == other.initial_state
        )


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    samples: np.ndarray
    dt: float
    tau: float

    def __post_init__(self):
        s = np.array(self.samples, dtype=float).reshape(-1)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class RawSignalParams:
    """Detector-level signal parameters: background, contrast, noise density."""

    background: float
    contrast: float
    noise_density: float

    def __post_init__(self):
        if self.contrast == 0 or not np.isfinite(self.contrast):
            raise InvalidParametersError("signal contrast Delta I must be nonzero")
        if not self.noise_density > 0:
            raise InvalidParametersError("noise spectral density S must be positive")


def normalize_raw_signal(current, params, dt=1.0):
    """Rescale a detector current to the normalized record.

    ``r = 2 (I - Ibar) / Delta I`` and ``tau = 2 S / Delta I^2``.  Returns
    ``(MeasurementRecord, tau)``.
    """
    current = np.asarray(current, dtype=float)
    r = 2.0 * (current - params.background) / params.contrast
    tau = 2.0 * params.noise_density / params.contrast**2
    return MeasurementRecord(r, dt, tau), tau


@dataclass(frozen=True, eq=False)
class Movie:
    """Time-ordered Bloch vectors plus the record that produced them.

    ``omega`` and ``alpha`` echo the parameters attached to this movie's
    direction: for a passive reversal they are the frame-relative values
    (``omega`` kept, ``alpha -> conj(alpha)``); ``effective_omega`` and
    ``effective_alpha`` give the values that make the stored coordinates
    satisfy the standard right-handed equations of motion.
    """

    bloch: np.ndarray
    record: MeasurementRecord
    omega: float
    tau: float
    dt: float
    alpha: tuple = Z_AXIS
    direction: str = FORWARD

    def __post_init__(self):
        b = np.array(self.bloch, dtype=float)
        if b.ndim != 2 or b.shape[1] != 3:
            raise InvalidInputError("bloch array must have shape (N+1, 3)")
        if len(b) != len(self.record) + 1:
            raise InvalidInputError(
                f"{len(b)} states need {len(b) - 1} record samples, got {len(self.record)}"
            )
        if self.direction not in DIRECTIONS:
            raise InvalidInputError(f"unknown direction tag {self.direction!r}")
        b.setflags(write=False)
        object.__setattr__(self, "bloch", b)
        object.__setattr__(self, "alpha", tuple(complex(c) for c in as_alpha(self.alpha)))
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def n_steps(self):
        return len(self.record)

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def duration(self):
        return self.n_steps * self.dt

    @property
    def states(self):
        return tuple(QubitState.from_bloch(*v) for v in self.bloch)

    @property
    def initial(self):
        return QubitState.from_bloch(*self.bloch[0])

    @property
    def final(self):
        return QubitState.from_bloch(*self.bloch[-1])

    @property
    def axis(self):
        return np.array([c.real for c in self.alpha])

    @property
    def effective_omega(self):
        return -self.omega if self.direction == REVERSED_PASSIVE else self.omega

    @property
    def effective_alpha(self):
        if self.direction == REVERSED_PASSIVE:
            return tuple(c.conjugate() for c in self.alpha)
        return self.alpha

    def projection(self):
        """Bloch projection onto the measured axis ``Re(alpha)`` at each grid time."""
        return self.bloch @ self.axis

    def equals(self, other):
        """Bit-identical comparison of data and metadata."""
        return (
            np.array_equal(self.bloch, other.bloch)
            and np.array_equal(self.record.samples, other.record.samples)
            and (self.omega, self.tau, self.dt, self.alpha, self.direction)
            == (other.omega, other.tau, other.dt, other.alpha, other.direction)
        )


# ---------------------------------------------------------------------------
# single-step operations (density-matrix form)


def rabi_unitary(omega, t):
    """Rabi propagator with ``xdot = -Omega z, zdot = Omega x``: ``exp(i Omega t sigma_y / 2)``."""
    phi = 0.5 * omega * t
    return np.cos(phi) * IDENTITY + 1j * np.sin(phi) * SIGMA_Y


def sample_record_step(state, m, rng):
    """Draw one record value from the Born-rule density ``Tr(E_r rho)``.

    The density is ``(1+p)/2 G+(r) + (1-p)/2 G-(r)`` with ``p`` the Bloch
    projection on ``Re(alpha)`` and ``G+-`` Gaussians of mean +-1 and
    variance ``tau / dt``.
    """
    p = float(state.bloch @ m.axis)
    branch = 1.0 if rng.random() < 0.5 * (1.0 + p) else -1.0
    return branch + m.record_std * rng.standard_normal()


def step(state, r, cfg):
    """One Strang-split timestep ``U_half M_r U_half`` on a density matrix."""
    u = rabi_unitary(cfg.omega, 0.5 * cfg.dt)
    mr = gaussian_kraus(r, cfg.measurement)
    k = u @ mr @ u
    rho = k @ state.rho @ k.conj().T
    tr = np.trace(rho).real
    if not tr > 0:
        raise ZeroProbabilityError(f"record value {r!r} has zero probability for this state")
    rho = rho / tr
    return QubitState(0.5 * (rho + rho.conj().T))


# ---------------------------------------------------------------------------
# batched Bloch-vector propagation


@dataclass
class _BatchResult:
    final: np.ndarray
    lnr_midpoint: np.ndarray
    lnr_bayes: np.ndarray
    gamma: np.ndarray
    bloch: np.ndarray = None
    record: np.ndarray = None


def _log_weight(h, p):
    """``ln(cosh h + p sinh h)`` without overflow."""
    a = np.abs(h)
    e = np.exp(-2.0 * a)
    return a + np.log(0.5 * (1.0 + e) + 0.5 * np.sign(h) * p * (1.0 - e))


def _propagate(v0, n_steps, omega, tau, dt, alpha, draw, keep=False):
    """Propagate a batch of Bloch vectors ``v0`` (shape ``(B, 3)``).

    ``draw(k, p)`` returns the record values of step ``k`` given the
    projections ``p`` of the state being measured.  Accumulates the midpoint
    (Stratonovich) log-likelihood sum, the exact per-step Bayes log ratio and
    the integrated signal in fixed time order.
    """
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    x, y, z = (v0[:, i].copy() for i in range(3))
    b = len(x)
    a = as_alpha(alpha)
    n = a.real
    m = a.imag
    nm = float(np.linalg.norm(m))
    if nm > 0:
        mh = m / nm
    c = np.cos(0.5 * omega * dt)
    s = np.sin(0.5 * omega * dt)
    rot = omega != 0.0
    k_h = dt / tau

    acc_mid = np.zeros(b)
    acc_bayes = np.zeros(b)
    acc_r = np.zeros(b)
    if keep:
        hist = np.empty((n_steps + 1, b, 3))
        hist[0, :, 0], hist[0, :, 1], hist[0, :, 2] = x, y, z
        recs = np.empty((n_steps, b))
    p_grid = n[0] * x + n[1] * y + n[2] * z
    for k in range(n_steps):
        if rot:
            x, z = c * x - s * z, s * x + c * z
        p = n[0] * x + n[1] * y + n[2] * z
        r = draw(k, p)
        h = k_h * r
        acc_bayes += _log_weight(h, p)
        # exact Gaussian Kraus update along the measured axis
        t = np.tanh(h)
        ah = np.abs(h)
        e = np.exp(-2.0 * ah)
        sech = 2.0 * np.exp(-ah) / (1.0 + e)
        den = 1.0 + p * t
        p_new = (p + t) / den
        f = sech / den
        x = f * (x - p * n[0]) + p_new * n[0]
        y = f * (y - p * n[1]) + p_new * n[1]
        z = f * (z - p * n[2]) + p_new * n[2]
        if nm > 0:
            # phase backaction: rotation about Im(alpha) by -h |Im(alpha)|
            psi = -h * nm
            cp, sp = np.cos(psi), np.sin(psi)
            dot = mh[0] * x + mh[1] * y + mh[2] * z
            cx = mh[1] * z - mh[2] * y
            cy = mh[2] * x - mh[0] * z
            cz = mh[0] * y - mh[1] * x
            x = x * cp + cx * sp + mh[0] * dot * (1 - cp)
            y = y * cp + cy * sp + mh[1] * dot * (1 - cp)
            z = z * cp + cz * sp + mh[2] * dot * (1 - cp)
        if rot:
            x, z = c * x - s * z, s * x + c * z
        p_next = n[0] * x + n[1] * y + n[2] * z
        acc_mid += r * (p_grid + p_next)
        acc_r += r
        p_grid = p_next
        if keep:
            hist[k + 1, :, 0], hist[k + 1, :, 1], hist[k + 1, :, 2] = x, y, z
            recs[k] = r
    out = _BatchResult(
        final=np.stack([x, y, z], axis=1),
        lnr_midpoint=acc_mid * k_h,
        lnr_bayes=2.0 * acc_bayes,
        gamma=acc_r * k_h,
    )
    if keep:
        out.bloch = hist
        out.record = recs
    return out


def sampling_draw(cfg, generators):
    """Record sampler for ``_propagate`` backed by per-trajectory generators."""
    n = cfg.n_steps
    u = np.empty((len(generators), n))
    g = np.empty((len(generators), n))
    for i, gen in enumerate(generators):
        u[i] = gen.random(n)
        g[i] = gen.standard_normal(n)
    sigma = np.sqrt(cfg.tau / cfg.dt)

    def draw(k, p):
        return np.where(u[:, k] < 0.5 * (1.0 + p), 1.0, -1.0) + sigma * g[:, k]

    return draw


def propagate_streams(cfg, indices, keep=False):
    """Propagate trajectories ``indices`` of ``cfg`` (one stream each)."""
    gens = [stream(cfg.seed, i) for i in indices]
    v0 = np.tile(cfg.initial_state.bloch, (len(gens), 1))
    return _propagate(
        v0, cfg.n_steps, cfg.omega, cfg.tau, cfg.dt, cfg.alpha, sampling_draw(cfg, gens), keep=keep
    )


def simulate_forward(cfg, index=0):
    """Sample one forward movie; deterministic given ``(cfg.seed, index)``."""
    res = propagate_streams(cfg, [index], keep=True)
    return Movie(
        bloch=res.bloch[:, 0, :],
        record=MeasurementRecord(res.record[:, 0], cfg.dt, cfg.tau),
        omega=cfg.omega,
        tau=cfg.tau,
        dt=cfg.dt,
        alpha=cfg.alpha,
        direction=FORWARD,
    )


def simulate_many(cfg, indices):
    """Forward movies for several stream indices, propagated as one batch."""
    indices = list(indices)
    res = propagate_streams(cfg, indices, keep=True)
    return [
        Movie(
            bloch=res.bloch[:, j, :],
            record=MeasurementRecord(res.record[:, j], cfg.dt, cfg.tau),
            omega=cfg.omega, tau=cfg.tau, dt=cfg.dt, alpha=cfg.alpha, direction=FORWARD,
        )
        for j in range(len(indices))
    ]


def replay_records(initial_state, records, omega, tau, dt, alpha=Z_AXIS):
    """Filter each row of ``records`` (shape ``(B, N)``) from ``initial_state``."""
    if not isinstance(initial_state, QubitState):
        initial_state = QubitState.from_bloch(*initial_state)
    r = np.atleast_2d(np.asarray(records, dtype=float))
    v0 = np.tile(initial_state.bloch, (len(r), 1))
    res = _propagate(v0, r.shape[1], omega, tau, dt, alpha, lambda k, p: r[:, k], keep=True)
    return [
        Movie(
            bloch=res.bloch[:, j, :],
            record=MeasurementRecord(r[j], dt, tau),
            omega=omega, tau=tau, dt=dt, alpha=alpha, direction=FORWARD,
        )
        for j in range(len(r))
    ]


def replay_record(initial_state, record, omega, tau, dt, alpha=Z_AXIS):
    """Filter a given record from ``initial_state``: the movie it implies."""
    r = np.asarray(getattr(record, "samples", record), dtype=float).reshape(-1)
    return replay_records(initial_state, r[None, :], omega, tau, dt, alpha)[0]


# ---------------------------------------------------------------------------
# equations of motion and validation


def stratonovich_rhs(state, r, omega, tau, alpha=None):
    """Bloch-vector time derivative in the Stratonovich picture.

    For ``alpha = z`` this is ``xdot = -Omega z - x z r / tau``,
    ``ydot = -y z r / tau``, ``zdot = Omega x + (1 - z^2) r / tau``.  For a
    general direction ``A = alpha . sigma`` the measurement term reads
    ``(r / tau) (n - (n . v) v - m x v)`` with ``n, m = Re, Im alpha``.
    Works elementwise on arrays of shape ``(..., 3)``.
    """
    v = np.asarray(getattr(state, "bloch", state), dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    r = np.asarray(r, dtype=float)
    if alpha is None:
        return np.stack(
            [-omega * z - x * z * r / tau, -y * z * r / tau, omega * x + (1.0 - z * z) * r / tau],
            axis=-1,
        )
    a = as_alpha(alpha)
    n, m = a.real, a.imag
    proj = v @ n
    meas = n - proj[..., None] * v - np.cross(m, v)
    rabi = np.stack([-omega * z, np.zeros_like(y), omega * x], axis=-1)
    return rabi + (r / tau)[..., None] * meas


def residual_check(movie, scheme="midpoint", reduce="max"):
    """Largest mismatch between a movie and the Stratonovich equations.

    ``scheme="midpoint"`` (default) compares the forward difference
    ``(v_{k+1} - v_k) / dt`` with the right-hand side at the interval midpoint
    ``(v_k + v_{k+1}) / 2`` and record ``r_k``; this residual vanishes like
    ``sqrt(dt)`` on stochastic movies.

    ``scheme="centered"`` compares ``(v_{k+1} - v_{k-1}) / 2 dt`` with the
    right-hand side at ``v_k`` and ``(r_{k-1} + r_k) / 2``.  On noisy movies it
    stays O(1) as ``dt -> 0`` (the squared noise increments do not cancel) and
    only converges for smooth records.

    Both are exactly odd under time reversal, so a reversed movie has the
    same residual as the original.  The movie's effective (right-handed)
    parameters are used.  ``reduce`` selects the maximum (default) or the
    root-mean-square of the per-step residual norms; the maximum over more
    steps shrinks more slowly than ``sqrt(dt)`` because of extreme noise
    values, the RMS shrinks like ``sqrt(dt)``.
    """
    if movie.n_steps < 2:
        raise InvalidInputError("residual check needs a movie with at least 3 states")
    v = movie.bloch
    r = movie.record.samples
    dt = movie.dt
    om, al = movie.effective_omega, movie.effective_alpha
    kw = {} if al == Z_AXIS else {"alpha": al}
    if scheme == "midpoint":
        lhs = (v[1:] - v[:-1]) / dt
        rhs = stratonovich_rhs(0.5 * (v[1:] + v[:-1]), r, om, movie.tau, **kw)
    elif scheme == "centered":
        lhs = (v[2:] - v[:-2]) / (2 * dt)
        rhs = stratonovich_rhs(v[1:-1], 0.5 * (r[:-1] + r[1:]), om, movie.tau, **kw)
    else:
        raise ValueError(f"unknown residual scheme {scheme!r}")
    res = np.linalg.norm(lhs - rhs, axis=1)
    if reduce == "max":
        return float(np.max(res))
    if reduce == "rms":
        return float(np.sqrt(np.mean(res * res)))
    raise ValueError(f"unknown reduction {reduce!r}")


def reverse_movie(movie, convention="passive"):
    """Play a movie backwards under the passive or active convention.

    passive: states reversed with coordinates kept, record negated and
    reversed, ``omega`` kept, ``alpha -> conj(alpha)``.
    active: states reversed and Bloch-negated, record reversed, ``omega``
    negated, ``alpha -> conj(alpha)``.

    Each convention is an involution.  Mixing conventions is rejected.
    """
    tag = {"passive": REVERSED_PASSIVE, "active": REVERSED_ACTIVE}.get(convention)
    if tag is None:
        raise ValueError(f"convention must be 'passive' or 'active', got {convention!r}")
    if movie.direction not in (FORWARD, tag):
        raise InvalidInputError(
            f"cannot apply {convention} reversal to a {movie.direction} movie"
        )
    new_tag = FORWARD if movie.direction == tag else tag
    r = movie.record.samples[::-1]
    b = movie.bloch[::-1]
    alpha = tuple(c.conjugate() for c in movie.alpha)
    if convention == "passive":
        r, omega = -r, movie.omega
    else:
        b, omega = -b, -movie.omega
    return Movie(
        bloch=b,
        record=MeasurementRecord(r, movie.dt, movie.tau),
        omega=omega, tau=movie.tau, dt=movie.dt, alpha=alpha, direction=new_tag,
    )


def max_purity_deviation(movie):
    return float(np.max(np.abs(purity_of_bloch(movie.bloch) - 1.0)))
