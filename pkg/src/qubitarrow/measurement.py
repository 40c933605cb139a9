"""Gaussian qubit measurements and Janus (time-reversed inverse) sequences.

A measurement with direction ``alpha`` monitors ``A = alpha . sigma``; the
Hermitian part ``A_h = Re(alpha) . sigma`` is the observable and the
anti-Hermitian part ``A_ah = Im(alpha) . sigma`` generates phase backaction.
The Kraus operator for a normalized result ``r`` is the product

    M_r = exp(i dt r A_ah / 2 tau) exp(-dt (r - A_h)^2 / 4 tau)

so ``E_r = M_r^dag M_r`` is exactly Gaussian in ``A_h``.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from .algebra import IDENTITY, QubitState, as_matrix, pauli_vector, theta_apply_vector
from .errors import InvalidParametersError, NotInvertibleError, ZeroProbabilityError

INVERTIBILITY_RTOL = 1e-12
CONTRACTION_TOL = 1e-12

Z_AXIS = (0j, 0j, 1 + 0j)


def as_alpha(alpha):
    a = np.asarray(alpha, dtype=complex).reshape(-1)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise InvalidParametersError("alpha must be a finite complex 3-vector")
    return a


@dataclass(frozen=True)
class GaussianMeasurement:
    """Weak Gaussian measurement of ``alpha . sigma`` over one timestep ``dt``."""

    tau: float
    dt: float
    alpha: tuple = field(default=Z_AXIS)

    def __post_init__(self):
        a = as_alpha(self.alpha)
        object.__setattr__(self, "alpha", tuple(complex(c) for c in a))
        if not self.tau > 0:
            raise InvalidParametersError(f"tau must be positive, got {self.tau!r}")
        if not self.dt >= 0 or not np.isfinite(self.dt):
            raise InvalidParametersError(f"dt must be non-negative, got {self.dt!r}")
        if abs(np.linalg.norm(a.real) - 1.0) > 1e-10:
            raise InvalidParametersError(
                "Re(alpha) must be a unit vector so that A_h has eigenvalues +-1"
            )

    @property
    def axis(self):
        """Unit vector ``Re(alpha)`` (measured Bloch direction)."""
        return np.array([c.real for c in self.alpha])

    @property
    def phase_axis(self):
        """``Im(alpha)``; zero for measurements without phase backaction."""
        return np.array([c.imag for c in self.alpha])

    @property
    def a_h(self):
        return pauli_vector(self.axis)

    @property
    def a_ah(self):
        return pauli_vector(self.phase_axis)

    @property
    def record_std(self):
        """Standard deviation ``sqrt(tau / dt)`` of each record Gaussian."""
        return float(np.sqrt(self.tau / self.dt))


def _projectors(m):
    a_h = m.a_h
    return 0.5 * (IDENTITY + a_h), 0.5 * (IDENTITY - a_h)


def _phase_factor(r, m):
    b = m.phase_axis
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return IDENTITY
    theta = m.dt * r * nb / (2.0 * m.tau)
    return np.cos(theta) * IDENTITY + 1j * np.sin(theta) * pauli_vector(b / nb)


def gaussian_kraus(r, m, normalize=True):
    """Kraus operator of a Gaussian measurement for record value ``r``.

    Exact exponential form (not the first-order expansion).  With
    ``normalize=True`` the operator is rescaled so its largest singular value
    is 1; otherwise the Gaussian factors carry their analytic weights and
    ``c * integral(M^dag M dr) = 1`` with ``c = sqrt(dt / 2 pi tau)``.
    """
    p_plus, p_minus = _projectors(m)
    k = m.dt / (4.0 * m.tau)
    log_plus = -k * (r - 1.0) ** 2
    log_minus = -k * (r + 1.0) ** 2
    if normalize:
        top = max(log_plus, log_minus)
        log_plus -= top
        log_minus -= top
    g = np.exp(log_plus) * p_plus + np.exp(log_minus) * p_minus
    return _phase_factor(r, m) @ g


def povm_element(r, m):
    """Unnormalized POVM density ``E_r = M_r^dag M_r`` (Gaussian in ``A_h``)."""
    mr = gaussian_kraus(r, m, normalize=False)
    return mr.conj().T @ mr


def povm_closure_check(m, quadrature_span):
    """Max deviation of ``c * integral E_r dr`` from the identity.

    The integral runs over ``[-1 - span, 1 + span]``; ``span`` must cover at
    least ten record standard deviations ``sqrt(tau / dt)``.
    """
    if m.dt <= 0:
        raise InvalidParametersError("closure check needs dt > 0")
    sigma = m.record_std
    if quadrature_span < 10.0 * sigma:
        raise InvalidParametersError(
            f"quadrature_span={quadrature_span!r} is below 10 record std ({10 * sigma:.6g})"
        )
    c = np.sqrt(m.dt / (2.0 * np.pi * m.tau))

    def f(r):
        e = povm_element(r, m)
        return np.concatenate([e.real.ravel(), e.imag.ravel()])

    lo, hi = -1.0 - quadrature_span, 1.0 + quadrature_span
    # split at the two Gaussian centres so quad_vec sees both peaks
    edges = [lo, -1.0, 1.0, hi]
    total = np.zeros(8)
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad_vec(f, a, b, epsabs=1e-14, epsrel=1e-13)
        total += val
    e_int = c * (total[:4] + 1j * total[4:]).reshape(2, 2)
    return float(np.max(np.abs(e_int - IDENTITY)))


@dataclass(frozen=True, eq=False)
class KrausOperator:
    """A labelled measurement (or measurement + unitary) operator."""

    label: str
    matrix: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.matrix)
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    def __eq__(self, other):
        if not isinstance(other, KrausOperator):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.matrix, other.matrix)


def as_sequence(seq):
    """Coerce a list of matrices / ``(label, matrix)`` pairs / KrausOperators."""
    out = []
    for i, item in enumerate(seq):
        if isinstance(item, KrausOperator):
            out.append(item)
        elif isinstance(item, tuple) and len(item) == 2 and isinstance(item[0], str):
            out.append(KrausOperator(item[0], item[1]))
        else:
            out.append(KrausOperator(f"m{i}", item))
    return out


def validate_sequence(seq):
    """Raise unless every operator is a contraction (``M^dag M <= 1``)."""
    for i, op in enumerate(seq):
        smax = np.linalg.svd(op.matrix, compute_uv=False)[0]
        if smax > 1.0 + CONTRACTION_TOL:
            raise InvalidParametersError(
                f"operator {i} ({op.label!r}) has singular value {smax:.6g} > 1; not a POVM element"
            )


def collective_operator(seq):
    """``M_F = ... M_c M_b M_a`` for a sequence applied first-to-last."""
    out = IDENTITY.copy()
    for op in as_sequence(seq):
        out = op.matrix @ out
    return out


def janus_backward_operator(m):
    """Backward Janus partner ``(Theta M Theta^-1)^-1`` scaled to unit norm.

    For a qubit ``(Theta M Theta^-1)^-1 = M^dag / conj(det M)``, so the
    partner is formed without a numerical inverse: it is ``M^dag`` times
    the phase of ``det M`` over the largest singular value of ``M``.

    Raises
    ------
    NotInvertibleError
        If ``M`` is singular to within a relative tolerance of 1e-12, i.e. a
        projective measurement that cannot be undone.
    """
    m = as_matrix(m)
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0 or s[1] <= INVERTIBILITY_RTOL * s[0]:
        raise NotInvertibleError("operator is singular (projective); no backward Janus partner")
    det = np.linalg.det(m)
    return m.conj().T * (det / abs(det) / s[0])


def _janus_label(label):
    return label[:-1] if label.endswith("'") else label + "'"


def janus_backward_sequence(seq):
    """Backward Janus sequence: partners of each operator, in reverse order."""
    seq = as_sequence(seq)
    out = []
    for i in range(len(seq) - 1, -1, -1):
        op = seq[i]
        try:
            mb = janus_backward_operator(op.matrix)
        except NotInvertibleError as exc:
            raise NotInvertibleError(str(exc), index=i) from None
        out.append(KrausOperator(_janus_label(op.label), mb))
    return out


def _pure_vector(psi):
    if isinstance(psi, QubitState):
        return psi.vector()
    v = np.asarray(psi, dtype=complex).reshape(2)
    n = np.linalg.norm(v)
    if n == 0:
        raise InvalidParametersError("state vector must be nonzero")
    return v / n


def _forward_backward(seq_f, seq_b, psi):
    seq_f, seq_b = as_sequence(seq_f), as_sequence(seq_b)
    if (len(seq_f) == 0) != (len(seq_b) == 0):
        raise InvalidParametersError("sequences must be both empty or both nonempty")
    psi = _pure_vector(psi)
    phi = collective_operator(seq_f) @ psi
    p_f = float(np.vdot(phi, phi).real)
    if p_f == 0.0:
        raise ZeroProbabilityError("forward outcome sequence has zero probability")
    phi = phi / np.sqrt(p_f)
    chi = collective_operator(seq_b) @ theta_apply_vector(phi)
    p_b = float(np.vdot(chi, chi).real)
    if p_b == 0.0:
        raise ZeroProbabilityError("backward outcome sequence has zero probability")
    return psi, p_f, chi, p_b


# Exact evaluation.  Products of several ill-conditioned operators lose the
# minor component of the forward state to rounding, and the backward
# sequence amplifies exactly that component again, so a float evaluation of
# the deficit is only good to about (eps * cond(M_F))^2.  The operator
# entries are binary fractions, so everything below is computed exactly with
# complex numbers represented as pairs of Fractions.


def _cq(z):
    z = complex(z)
    return (Fraction(z.real), Fraction(z.imag))


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _cadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _apply_exact(seq, v):
    for op in seq:
        m = [[_cq(c) for c in row] for row in op.matrix]
        v = [_cadd(_cmul(m[i][0], v[0]), _cmul(m[i][1], v[1])) for i in range(2)]
    return v


def _norm2(v):
    return sum(c[0] * c[0] + c[1] * c[1] for c in v)


def _theta_exact(v):
    # Theta (a, b) = (-conj b, conj a)
    return [(-v[1][0], v[1][1]), (v[0][0], -v[0][1])]


def _exact_forward_backward(seq_f, seq_b, psi):
    """Exact ``|Psi|^2``, ``M_F Psi`` and ``chi = M_B Theta M_F Psi`` (all unnormalized)."""
    seq_f, seq_b = as_sequence(seq_f), as_sequence(seq_b)
    if (len(seq_f) == 0) != (len(seq_b) == 0):
        raise InvalidParametersError("sequences must be both empty or both nonempty")
    psi = psi.vector() if isinstance(psi, QubitState) else np.asarray(psi, dtype=complex).reshape(2)
    v = [_cq(c) for c in psi]
    n_psi = _norm2(v)
    if n_psi == 0:
        raise InvalidParametersError("state vector must be nonzero")
    phi = _apply_exact(seq_f, v)
    if _norm2(phi) == 0:
        raise ZeroProbabilityError("forward outcome sequence has zero probability")
    chi = _apply_exact(seq_b, _theta_exact(phi))
    if _norm2(chi) == 0:
        raise ZeroProbabilityError("backward outcome sequence has zero probability")
    return v, n_psi, phi, chi


def _log_fraction(q):
    return math.log(q.numerator) - math.log(q.denominator)


def janus_restoration_deficit(seq_f, seq_b, psi, exact=True):
    """``1 - |<Theta Psi | chi>|^2`` where ``chi ~ M_B Theta Phi``, ``Phi ~ M_F Psi``.

    Zero means the backward sequence rewinds the forward one exactly (up to
    phase and normalization).  By default the value is computed exactly
    from the given matrix entries and rounded once at the end; with
    ``exact=False`` it is evaluated in floating point.
    """
    if not exact:
        psi, _, chi, p_b = _forward_backward(seq_f, seq_b, psi)
        chi = chi / np.sqrt(p_b)
        target = theta_apply_vector(psi)
        rest = chi - np.vdot(target, chi) * target
        return float(min(1.0, max(0.0, np.vdot(rest, rest).real)))
    v, n_psi, _, chi = _exact_forward_backward(seq_f, seq_b, psi)
    t = _theta_exact(v)
    # <t|chi> = sum conj(t_i) chi_i
    ov = (Fraction(0), Fraction(0))
    for ti, ci in zip(t, chi):
        ov = _cadd(ov, _cmul((ti[0], -ti[1]), ci))
    overlap2 = (ov[0] * ov[0] + ov[1] * ov[1]) / (n_psi * _norm2(chi))
    return float(1 - overlap2)


def discrete_log_ratio(seq_f, seq_b, psi, exact=True):
    """``ln(||M_F Psi||^2 / ||M_B Theta Phi||^2)`` with ``Psi`` and ``Phi`` normalized."""
    if not exact:
        _, p_f, _, p_b = _forward_backward(seq_f, seq_b, psi)
        return float(np.log(p_f) - np.log(p_b))
    _, n_psi, phi, chi = _exact_forward_backward(seq_f, seq_b, psi)
    p_f = _norm2(phi) / n_psi
    # ||M_B Theta Phi||^2 with Phi = M_F Psi / ||M_F Psi||
    p_b = _norm2(chi) / _norm2(phi)
    return _log_fraction(p_f) - _log_fraction(p_b)
