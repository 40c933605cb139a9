"""The arrow-of-time discriminator ``ln R`` and its closed-form statistics.

``ln R = ln P_F / P_B`` compares the probability of a record under the
forward hypothesis with that of the negated, time-reversed record started
from the final state.  Two estimators are provided for a movie:

* :func:`log_likelihood_ratio` -- the continuum expression
  ``(2 / tau) int r z dt`` with a time-symmetric (midpoint) Riemann sum.
  Exactly odd under passive reversal; O(dt) away from the exact ratio.
* :func:`exact_log_likelihood_ratio` -- the exact finite-``dt`` ratio of
  Born-rule probabilities of the Kraus model,
  ``2 sum_k ln(cosh h_k + p_k sinh h_k)``, ``h_k = r_k dt / tau``.

Without drive the integrated signal ``gamma = sum r_k dt / tau`` is a
sufficient statistic and everything has a closed form.
"""

import math

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, InvalidInputError, InvalidParametersError, NumericalError
from .trajectory import reverse_movie

LN2 = math.log(2.0)


def log_likelihood_ratio(movie):
    """Midpoint-rule ``(2/tau) sum_k r_k (z_k + z_{k+1}) / 2 dt``.

    ``z`` is the Bloch projection on the measured axis.  The sum is
    correctly rounded (``math.fsum``), so the value of a passively reversed
    movie is exactly the negative.
    """
    p = movie.projection()
    r = movie.record.samples
    if len(p) != len(r) + 1:
        raise InvalidInputError("record and state lengths do not match")
    return math.fsum(r * (p[:-1] + p[1:])) * movie.dt / movie.tau


def _log_weight(h, p):
    a = np.abs(h)
    e = np.exp(-2.0 * a)
    return a + np.log(0.5 * (1.0 + e) + 0.5 * np.sign(h) * p * (1.0 - e))


def exact_log_likelihood_ratio(movie):
    """Exact finite-step ``ln(P_F / P_B)`` of the Gaussian Kraus model.

    Each step contributes ``2 ln(cosh h + p sinh h)`` where ``p`` is the
    measured-axis projection of the state right before the Kraus update
    (after the first Rabi half step).
    """
    v = movie.bloch[:-1]
    om = movie.effective_omega
    phi = 0.5 * om * movie.dt
    x = np.cos(phi) * v[:, 0] - np.sin(phi) * v[:, 2]
    z = np.sin(phi) * v[:, 0] + np.cos(phi) * v[:, 2]
    n = np.array([c.real for c in movie.effective_alpha])
    p = n[0] * x + n[1] * v[:, 1] + n[2] * z
    h = movie.record.samples * movie.dt / movie.tau
    return 2.0 * math.fsum(_log_weight(h, p))


def negate_under_reversal(movie):
    """``(ln R(movie), ln R(passive reversal))``; the pair sums to zero."""
    return log_likelihood_ratio(movie), log_likelihood_ratio(reverse_movie(movie, "passive"))


def integrated_signal(record, tau=None, dt=None):
    """``gamma = sum_k r_k dt / tau`` (dimensionless).

    Accepts a :class:`MeasurementRecord` or a raw array with ``tau``/``dt``.
    """
    r = np.asarray(getattr(record, "samples", record), dtype=float)
    tau = getattr(record, "tau", tau)
    dt = getattr(record, "dt", dt)
    if r.size == 0:
        raise InvalidInputError("record is empty")
    return math.fsum(r) * dt / tau


def mean_signal(record):
    """Time average ``sum_k r_k dt / T`` of the record."""
    r = np.asarray(record.samples, dtype=float)
    if r.size == 0:
        raise InvalidInputError("record is empty")
    return math.fsum(r) / r.size


def mean_lnR_theory(T, tau, z_sq_avg):
    """Stochastic average ``(T / tau) (1 + <z^2>)`` for constant ``<z^2>``."""
    if not 0.0 <= z_sq_avg <= 1.0:
        raise InvalidParametersError("z_sq_avg must lie in [0, 1]")
    return (T / tau) * (1.0 + z_sq_avg)


def variance_lnR_theory(T, tau):
    """Approximate variance ``2 T / tau`` in the Rabi-averaged regime."""
    return 2.0 * T / tau


def p_err_theory(T, tau):
    """Gaussian-tail error probability ``(1 - erf(3/4 sqrt(T/tau))) / 2``."""
    if T < 0 or not tau > 0:
        raise InvalidParametersError("need T >= 0 and tau > 0")
    return 0.5 * special.erfc(0.75 * math.sqrt(T / tau))


def min_duration_for_separation(n_sigma, tau):
    """Shortest ``T`` whose mean ``ln R`` lies ``n_sigma`` std above zero: ``8 n^2 tau / 9``."""
    return 8.0 * n_sigma**2 * tau / 9.0


# ---------------------------------------------------------------------------
# no-drive closed forms


def _logcosh(g):
    a = np.abs(g)
    return np.where(a < 1.0, np.log(np.cosh(np.minimum(a, 1.0))), a + np.log1p(np.exp(-2.0 * a)) - LN2)


def _one_minus_abs_tanh(g):
    a = np.abs(g)
    e = np.exp(-2.0 * a)
    return 2.0 * e / (1.0 + e)


def _log1p_ztanh(z, g):
    """``ln(1 + z tanh g)`` avoiding cancellation when ``z tanh g -> -1``."""
    z = np.asarray(z, dtype=float)
    g = np.asarray(g, dtype=float)
    t = np.tanh(g)
    same = z * t >= 0
    # 1 - |z||t| = (1 - |t|) + |t| (1 - |z|), both terms exact-ish and positive
    opp = _one_minus_abs_tanh(g) + np.abs(t) * (1.0 - np.abs(z))
    with np.errstate(divide="ignore"):
        return np.where(same, np.log1p(np.abs(z * t)), np.log(opp))


def _check_z(z):
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > 1.0):
        raise InvalidParametersError("|z| must not exceed 1")
    return z


def lnR_no_drive(gamma, z_i):
    """``2 ln(cosh gamma + z_i sinh gamma)``; ``-inf`` only at the domain edge."""
    z = _check_z(z_i)
    val = 2.0 * (_logcosh(gamma) + _log1p_ztanh(z, gamma))
    return val if np.ndim(val) else float(val)


def zf_no_drive(gamma, z_i):
    """Final ``z`` after integrated signal ``gamma``: ``(z cosh + sinh)/(cosh + z sinh)``."""
    z = _check_z(z_i)
    t = np.tanh(gamma)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = (z + t) / (1.0 + z * t)
    val = np.where(np.abs(z) == 1.0, z, np.clip(val, -1.0, 1.0))
    return val if np.ndim(val) else float(val)


def lnR_ratio_form(gamma, z_i, z_f):
    """``ln[(cosh gamma + z_i sinh gamma) / (cosh gamma - z_f sinh gamma)]``."""
    z_i = _check_z(z_i)
    z_f = _check_z(z_f)
    num = _log1p_ztanh(z_i, gamma)
    den = _log1p_ztanh(-z_f, gamma)
    if np.any(~np.isfinite(den)):
        raise DomainError("denominator cosh(gamma) - z_f sinh(gamma) is not positive")
    val = num - den
    return val if np.ndim(val) else float(val)


def lnR_support_min(z_i):
    """Smallest attainable no-drive ``ln R``: ``ln(1 - z_i^2)`` (``-inf`` at ``|z_i| = 1``)."""
    z_i = float(z_i)
    if abs(z_i) == 1.0:
        return -math.inf
    return math.log1p(-z_i * z_i)


def _pf_gamma(g, T, tau, z_i):
    """Two-Gaussian density of ``gamma``: means ``+-T/tau``, variance ``T/tau``."""
    mu = T / tau
    s2 = T / tau
    norm = 1.0 / np.sqrt(2.0 * np.pi * s2)
    return norm * (
        0.5 * (1.0 + z_i) * np.exp(-((g - mu) ** 2) / (2 * s2))
        + 0.5 * (1.0 - z_i) * np.exp(-((g + mu) ** 2) / (2 * s2))
    )


def _acosh_exp_half(x):
    """``acosh(exp(x/2))`` for ``x >= 0`` without overflow or cancellation."""
    return 0.5 * x + np.log1p(np.sqrt(-np.expm1(-x)))


def gamma_branches(x, z_i, method="analytic"):
    """Both solutions ``gamma`` of ``lnR_no_drive(gamma, z_i) = x`` (``|z_i| < 1``).

    ``method="analytic"`` inverts ``2 ln cosh(gamma + a) - 2 ln cosh a`` with
    ``a = atanh z_i``; ``method="bracket"`` grows a bracket geometrically and
    runs Brent's method to an x-residual of 1e-12.  Returns ``(lower, upper)``.
    """
    z_i = float(z_i)
    if abs(z_i) >= 1.0:
        raise InvalidParametersError("two branches exist only for |z_i| < 1")
    x = float(x)
    xmin = lnR_support_min(z_i)
    if x < xmin:
        raise DomainError(f"ln R = {x!r} is below the support minimum {xmin!r}")
    a = math.atanh(z_i)
    if method == "analytic":
        # cosh(gamma + a) = exp(x/2) cosh a
        w = float(_acosh_exp_half(x - xmin))
        return -w - a, w - a
    if method != "bracket":
        raise ValueError(f"unknown method {method!r}")
    f = lambda g: lnR_no_drive(g, z_i) - x
    out = []
    for sign in (-1.0, 1.0):
        g_lo, g_hi = -a, -a + sign
        while f(g_hi) < 0:
            g_hi = -a + 2.0 * (g_hi + a)
            if abs(g_hi) > 1e6:
                raise NumericalError(f"could not bracket branch {sign:+} for x={x!r}, z_i={z_i!r}")
        if f(g_lo) >= 0.0:
            # x at (or rounding onto) the support minimum: double root at -a
            out.append(g_lo)
            continue
        root, info = optimize.brentq(f, min(g_lo, g_hi), max(g_lo, g_hi), xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                     maxiter=500, full_output=True)
        if not info.converged or abs(f(root)) > 1e-12 * max(1.0, abs(x)):
            raise NumericalError(f"root finding failed: {info.flag}, residual {f(root)!r}")
        out.append(root)
    return tuple(out)


def pdf_lnR_no_drive(x, T, tau, z_i):
    """Probability density of ``ln R`` for the undriven qubit.

    For ``z_i = 0`` the closed form
    ``sqrt(tau/2piT) e^x / sqrt(e^x - 1) exp(-T/2tau - (tau/2T) acosh(e^{x/2})^2)``
    is used.  Otherwise the two ``gamma`` branches are summed,
    ``P_F(gamma) / (2 |z_f(gamma)|)``.  Zero outside the support.
    """
    if not (T > 0 and tau > 0):
        raise InvalidParametersError("need T > 0 and tau > 0")
    z_i = float(z_i)
    if abs(z_i) > 1:
        raise InvalidParametersError("|z_i| must not exceed 1")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if z_i == 0.0:
        ok = x > 0
        xs = x[ok]
        with np.errstate(over="ignore"):
            logp = (
                0.5 * np.log(tau / (2 * np.pi * T)) + xs - 0.5 * np.log(np.expm1(xs))
                - T / (2 * tau) - (tau / (2 * T)) * _acosh_exp_half(xs) ** 2
            )
        out[ok] = np.exp(logp)
    elif abs(z_i) == 1.0:
        mu = z_i * T / tau
        g = z_i * x / 2.0
        out = np.exp(-((g - mu) ** 2) * tau / (2 * T)) / np.sqrt(2 * np.pi * T / tau) / 2.0
    else:
        a = math.atanh(z_i)
        xmin = lnR_support_min(z_i)
        ok = x > xmin
        w = _acosh_exp_half(x[ok] - xmin)
        out[ok] = (_pf_gamma(w - a, T, tau, z_i) + _pf_gamma(-w - a, T, tau, z_i)) / (2.0 * np.tanh(w))
    return out if out.ndim else float(out)


def _support_upper(T, tau, z_i, n_sigma=12.0):
    g = T / tau + n_sigma * math.sqrt(T / tau)
    return max(float(lnR_no_drive(g, z_i)), float(lnR_no_drive(-g, z_i)))


def cdf_lnR_no_drive(x, T, tau, z_i):
    """CDF of the no-drive ``ln R`` by quadrature of :func:`pdf_lnR_no_drive`.

    Uses ``x = x_min + u^2`` to remove the inverse-square-root divergence at
    the lower support edge.
    """
    z_i = float(z_i)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if abs(z_i) == 1.0:
        # ln R = 2 gamma z_i with gamma ~ N(z_i T/tau, T/tau): same law for both signs
        out = special.ndtr((xs / 2.0 - T / tau) / math.sqrt(T / tau))
        return out if np.ndim(x) else float(out[0])
    xmin = lnR_support_min(z_i)
    f = lambda u: 2.0 * u * pdf_lnR_no_drive(xmin + u * u, T, tau, z_i)
    out = np.empty_like(xs)
    for i, xv in enumerate(xs):
        if xv <= xmin:
            out[i] = 0.0
            continue
        val, err = integrate.quad(f, 0.0, math.sqrt(xv - xmin), limit=200, epsabs=1e-13, epsrel=1e-12)
        out[i] = min(1.0, val)
    return out if np.ndim(x) else float(out[0])


def cdf_table(T, tau, z_i, n_grid=4096):
    """Tabulated no-drive CDF on a grid in ``u = sqrt(x - x_min)``.

    Returns ``(x_grid, cdf)``.  Each grid cell is integrated with 10-point
    Gauss-Legendre quadrature, so the table is accurate far below Monte Carlo
    resolution and cheap to interpolate.
    """
    z_i = float(z_i)
    if abs(z_i) == 1.0:
        s = math.sqrt(T / tau)
        xg = np.linspace(2.0 * (T / tau - 12 * s), 2.0 * (T / tau + 12 * s), n_grid + 1)
        return xg, cdf_lnR_no_drive(xg, T, tau, z_i)
    xmin = lnR_support_min(z_i)
    umax = math.sqrt(_support_upper(T, tau, z_i) - xmin)
    ug = np.linspace(0.0, umax, n_grid + 1)
    nodes, weights = special.roots_legendre(10)
    a, b = ug[:-1, None], ug[1:, None]
    u = 0.5 * (b - a) * nodes[None, :] + 0.5 * (a + b)
    vals = 2.0 * u * pdf_lnR_no_drive(xmin + u * u, T, tau, z_i)
    cells = 0.5 * (b[:, 0] - a[:, 0]) * (vals @ weights)
    cdf = np.concatenate([[0.0], np.cumsum(cells)])
    return xmin + ug * ug, cdf


def cdf_lnR_no_drive_analytic(x, T, tau, z_i):
    """Same CDF through ``P(gamma_- <= gamma <= gamma_+)`` with normal CDFs."""
    z_i = float(z_i)
    xmin = lnR_support_min(z_i)
    a = math.atanh(z_i)
    x = np.asarray(x, dtype=float)
    w = _acosh_exp_half(np.maximum(x - xmin, 0.0))
    mu, s = T / tau, math.sqrt(T / tau)

    def mass(lo, hi, m):
        return special.ndtr((hi - m) / s) - special.ndtr((lo - m) / s)

    out = 0.5 * (1 + z_i) * mass(-w - a, w - a, mu) + 0.5 * (1 - z_i) * mass(-w - a, w - a, -mu)
    return np.where(x > xmin, out, 0.0)
