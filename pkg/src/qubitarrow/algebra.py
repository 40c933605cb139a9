"""Two-level complex linear algebra, Bloch conversions and spin time reversal.

All matrices are plain ``numpy`` arrays of shape ``(2, 2)`` and dtype
``complex128``.  The anti-unitary time-reversal operator for spin-1/2 is
``Theta = -i sigma_y K`` (``K`` is complex conjugation).  Its global phase
drops out of every conjugation ``Theta M Theta^-1`` and every density-matrix
map, so only ``sigma_y conj(.) sigma_y`` is ever evaluated.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError

STATE_TOL = 1e-12

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

for _m in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.setflags(write=False)


def as_matrix(m):
    """Return ``m`` as a finite complex 2x2 array (copy)."""
    a = np.array(m, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def pauli_vector(v):
    """Return ``v . sigma`` for a (possibly complex) 3-vector ``v``."""
    v = np.asarray(v)
    return v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z


def check_density(rho, tol=STATE_TOL):
    """Raise :class:`InvalidStateError` unless ``rho`` is a valid qubit state."""
    rho = np.asarray(rho)
    if rho.shape != (2, 2) or not np.all(np.isfinite(rho)):
        raise InvalidStateError("density matrix must be a finite 2x2 array")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InvalidStateError(f"density matrix trace {np.trace(rho).real!r} != 1")
    x, y, z = _bloch(rho)
    if x * x + y * y + z * z > 1.0 + tol:
        raise InvalidStateError("density matrix is not positive semidefinite")


def _bloch(rho):
    # Tr(sigma_x rho) = 2 Re rho_01, Tr(sigma_y rho) = 2 Im rho_10, Tr(sigma_z rho) = rho_00 - rho_11
    return (
        2.0 * rho[0, 1].real,
        2.0 * rho[1, 0].imag,
        (rho[0, 0] - rho[1, 1]).real,
    )


def bloch_from_density(rho):
    """Bloch coordinates ``(x, y, z) = Tr(sigma_k rho)`` of a qubit state.

    Raises
    ------
    InvalidStateError
        If ``rho`` is not Hermitian, not unit trace, or not positive.
    """
    rho = np.asarray(rho, dtype=complex)
    check_density(rho)
    return tuple(float(c) for c in _bloch(rho))


def density_from_bloch(x, y, z):
    """Density matrix ``(1 + x sigma_x + y sigma_y + z sigma_z) / 2``."""
    x, y, z = float(x), float(y), float(z)
    if not all(np.isfinite((x, y, z))):
        raise InvalidStateError("Bloch coordinates must be finite")
    if x * x + y * y + z * z > 1.0 + STATE_TOL:
        raise InvalidStateError(f"Bloch vector ({x}, {y}, {z}) lies outside the unit ball")
    return np.array(
        [[0.5 * (1.0 + z), 0.5 * (x - 1j * y)], [0.5 * (x + 1j * y), 0.5 * (1.0 - z)]],
        dtype=complex,
    )


@dataclass(frozen=True, eq=False)
class QubitState:
    """Immutable qubit density matrix.

    Construct from a matrix directly, or with :meth:`from_bloch` /
    :meth:`from_vector`.
    """

    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        check_density(rho)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_bloch(cls, x, y=None, z=None):
        if y is None and z is None:
            x, y, z = x
        return cls(density_from_bloch(x, y, z))

    @classmethod
    def from_vector(cls, psi):
        psi = np.asarray(psi, dtype=complex).reshape(2)
        norm = np.linalg.norm(psi)
        if norm == 0 or not np.isfinite(norm):
            raise InvalidStateError("state vector must be nonzero and finite")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @property
    def bloch(self):
        return np.array(_bloch(self.rho), dtype=float)

    @property
    def x(self):
        return float(2.0 * self.rho[0, 1].real)

    @property
    def y(self):
        return float(2.0 * self.rho[1, 0].imag)

    @property
    def z(self):
        return float((self.rho[0, 0] - self.rho[1, 1]).real)

    @property
    def purity(self):
        """``Tr(rho^2) = (1 + |v|^2) / 2``."""
        return float(np.real(np.trace(self.rho @ self.rho)))

    def is_pure(self, tol=1e-9):
        return abs(self.purity - 1.0) <= tol

    def vector(self):
        """State vector for a pure state (phase fixed so the largest entry is real)."""
        if not self.is_pure():
            raise InvalidStateError("state is not pure")
        w, v = np.linalg.eigh(self.rho)
        psi = v[:, np.argmax(w)]
        k = np.argmax(np.abs(psi))
        return psi * (abs(psi[k]) / psi[k])

    def __eq__(self, other):
        if not isinstance(other, QubitState):
            return NotImplemented
        return np.array_equal(self.rho, other.rho)

    def __hash__(self):
        return hash(self.rho.tobytes())

    def __repr__(self):
        x, y, z = self.bloch
        return f"QubitState(bloch=({x:.6g}, {y:.6g}, {z:.6g}))"


def theta_conjugate(m):
    """Time-reversed operator ``Theta M Theta^-1 = sigma_y conj(M) sigma_y``.

    Flips every Pauli matrix, conjugates scalars, and is multiplicative:
    ``theta_conjugate(A @ B) == theta_conjugate(A) @ theta_conjugate(B)``.
    """
    m = np.asarray(m, dtype=complex)
    return SIGMA_Y @ m.conj() @ SIGMA_Y


def theta_apply_vector(psi):
    """Apply ``Theta = -i sigma_y K`` to a state vector."""
    psi = np.asarray(psi, dtype=complex)
    return -1j * (SIGMA_Y @ psi.conj())


def theta_apply_state(state):
    """Time-reversed state ``Theta rho Theta^-1``: the Bloch vector is negated."""
    if not isinstance(state, QubitState):
        state = QubitState(state)
    return QubitState(theta_conjugate(state.rho))


def purity_of_bloch(v):
    v = np.asarray(v, dtype=float)
    return 0.5 * (1.0 + np.sum(v * v, axis=-1))
