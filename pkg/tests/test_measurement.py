import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qubitarrow.algebra import IDENTITY, SIGMA_Y, QubitState, theta_conjugate
from qubitarrow.errors import InvalidParametersError, NotInvertibleError, ZeroProbabilityError
from qubitarrow.measurement import (
    GaussianMeasurement,
    KrausOperator,
    collective_operator,
    discrete_log_ratio,
    gaussian_kraus,
    janus_backward_operator,
    janus_backward_sequence,
    janus_restoration_deficit,
    povm_closure_check,
    povm_element,
    validate_sequence,
)

from conftest import random_kraus, random_unitary


def proportional(a, b, tol=1e-10):
    """``a = c b`` for a nonzero complex ``c`` (relative to the norms)."""
    k = np.argmax(np.abs(b))
    c = a.flat[k] / b.flat[k]
    return np.max(np.abs(a - c * b)) <= tol * np.max(np.abs(a))


def test_kraus_z_diagonal():
    m = GaussianMeasurement(tau=1.0, dt=0.04)
    mr = gaussian_kraus(1.0, m)
    assert np.allclose(mr, np.diag([1.0, np.exp(-0.04)]), atol=1e-15)


def test_kraus_dt_zero_is_identity():
    assert np.allclose(gaussian_kraus(3.7, GaussianMeasurement(1.0, 0.0)), IDENTITY)


def test_pure_phase_alpha_rejected():
    with pytest.raises(InvalidParametersError):
        GaussianMeasurement(1.0, 0.01, alpha=(0, 0, 1j))


@given(st.floats(-50, 50), st.floats(1e-4, 0.4))
def test_kraus_largest_singular_value_one(r, dt):
    alpha = (1, 0.3j, 0)
    s = np.linalg.svd(gaussian_kraus(r, GaussianMeasurement(1.0, dt, alpha)), compute_uv=False)
    assert s[0] == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-20, 20))
def test_povm_element_independent_of_phase_backaction(r):
    a = povm_element(r, GaussianMeasurement(1.0, 0.01, (1, 0.7j, 0)))
    b = povm_element(r, GaussianMeasurement(1.0, 0.01, (1, 0, 0)))
    assert np.allclose(a, b, atol=1e-15)


@pytest.mark.parametrize("alpha", [(0, 0, 1), (1, 1j, 0)])
@pytest.mark.parametrize("tau,dt", [(1.0, 0.01), (2.0, 0.001), (0.5, 0.05)])
def test_povm_closure(alpha, tau, dt):
    m = GaussianMeasurement(tau, dt, alpha)
    assert povm_closure_check(m, 12 * m.record_std) < 1e-9


def test_povm_span_too_small():
    m = GaussianMeasurement(1.0, 0.01)
    with pytest.raises(InvalidParametersError):
        povm_closure_check(m, 5 * m.record_std)


@pytest.mark.parametrize("eps", [0.1, 0.4, 0.7])
def test_janus_of_diagonal(eps):
    mb = janus_backward_operator(np.diag([np.cos(eps), np.sin(eps)]))
    assert np.allclose(mb, np.diag([1.0, np.tan(eps)]), atol=1e-15)


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.5])
def test_janus_of_unitary_is_inverse(theta):
    u = np.cos(theta / 2) * IDENTITY - 1j * np.sin(theta / 2) * SIGMA_Y
    assert np.allclose(janus_backward_operator(u), u.conj().T, atol=1e-15)


def test_janus_matches_inverse_definition(rng):
    for _ in range(50):
        m = random_kraus(rng, 10 ** rng.uniform(0, 3))
        ref = np.linalg.inv(theta_conjugate(m))
        assert proportional(janus_backward_operator(m), ref)
        assert np.linalg.norm(janus_backward_operator(m), 2) == pytest.approx(1.0, abs=1e-13)


def test_janus_projector_rejected():
    with pytest.raises(NotInvertibleError):
        janus_backward_operator(np.diag([1.0, 0.0]))
    with pytest.raises(NotInvertibleError):
        janus_backward_operator(np.diag([1.0, 1e-13]))


def test_sequence_error_names_index(rng):
    seq = [random_kraus(rng, 2), random_kraus(rng, 3), np.diag([0.0, 1.0])]
    with pytest.raises(NotInvertibleError) as info:
        janus_backward_sequence(seq)
    assert info.value.index == 2
    assert "operator 2" in str(info.value)


def test_backward_sequence_reversed_and_labelled(rng):
    ops = [KrausOperator(l, random_kraus(rng, 5)) for l in "abc"]
    back = janus_backward_sequence(ops)
    assert [op.label for op in back] == ["c'", "b'", "a'"]
    assert [op.label for op in janus_backward_sequence(back)] == ["a", "b", "c"]
    mf = collective_operator(ops)
    assert proportional(collective_operator(back), np.linalg.inv(theta_conjugate(mf)), 1e-9)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_restoration_property(seed, length):
    rng = np.random.default_rng(seed)
    seq = [random_kraus(rng, 10 ** rng.uniform(0, 3 / length)) for _ in range(length)]
    psi = QubitState.from_vector(rng.normal(size=2) + 1j * rng.normal(size=2))
    back = janus_backward_sequence(seq)
    assert janus_restoration_deficit(seq, back, psi) < 1e-10
    assert janus_restoration_deficit(seq, back, psi, exact=False) < 1e-10


@given(st.integers(0, 2**32 - 1))
def test_double_janus_proportional(seed):
    rng = np.random.default_rng(seed)
    m = random_kraus(rng, 10 ** rng.uniform(0, 3))
    assert proportional(janus_backward_operator(janus_backward_operator(m)), m)


def test_wrong_backward_sequence_has_deficit(rng):
    seq = [random_kraus(rng, 4) for _ in range(3)]
    psi = np.array([1.0, 0.0])
    assert janus_restoration_deficit(seq, [random_kraus(rng, 4)], psi) > 1e-6


def test_unitary_sequence_restores_with_zero_log_ratio(rng):
    seq = [random_unitary(rng) for _ in range(4)]
    psi = np.array([0.6, 0.8])
    back = janus_backward_sequence(seq)
    assert janus_restoration_deficit(seq, back, psi) < 1e-12
    assert abs(discrete_log_ratio(seq, back, psi)) < 1e-12


def test_discrete_log_ratio_exact_and_float_agree(rng):
    seq = [random_kraus(rng, 20) for _ in range(3)]
    back = janus_backward_sequence(seq)
    psi = np.array([0.6, 0.8j])
    a = discrete_log_ratio(seq, back, psi)
    assert a == pytest.approx(discrete_log_ratio(seq, back, psi, exact=False), abs=1e-10)


def test_discrete_log_ratio_single_diagonal():
    # M = diag(1, q) on |+>: P_F = (1 + q^2)/2, Phi ~ (1, q); backward M_B = M^dag
    q = 0.3
    m = np.diag([1.0, q])
    psi = np.array([1.0, 1.0]) / np.sqrt(2)
    back = janus_backward_sequence([m])
    pf = (1 + q * q) / 2
    # Theta Phi ~ (-q, 1); M_B (-q, 1) = (-q, q)
    pb = 2 * q * q / (1 + q * q)
    assert discrete_log_ratio([m], back, psi) == pytest.approx(np.log(pf / pb), rel=1e-13)


def test_zero_probability():
    seq = [np.diag([1.0, 0.5])]
    with pytest.raises(ZeroProbabilityError):
        janus_restoration_deficit([np.diag([0.0, 0.5])], seq, np.array([1.0, 0.0]))
    with pytest.raises(ZeroProbabilityError):
        discrete_log_ratio([np.diag([0.0, 0.5])], seq, np.array([1.0, 0.0]), exact=False)


def test_empty_sequences():
    psi = np.array([1.0, 0.0])
    assert janus_restoration_deficit([], [], psi) == 0.0
    with pytest.raises(InvalidParametersError):
        janus_restoration_deficit([IDENTITY], [], psi)


def test_validate_sequence():
    validate_sequence([KrausOperator("a", np.diag([1.0, 0.5]))])
    with pytest.raises(InvalidParametersError):
        validate_sequence([KrausOperator("a", np.diag([1.1, 0.5]))])
