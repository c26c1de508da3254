import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlandscape import models, qsim
from qlandscape.errors import ContractError, InvalidGateError
from qlandscape.qsim import StateVector
from qlandscape.rng import XorShift64Star

angles = st.floats(min_value=-2 * np.pi, max_value=2 * np.pi, allow_nan=False)


def test_rx_zero_is_identity():
    psi = StateVector(np.array([0.6, 0.8j]), 1)
    assert np.array_equal(qsim.apply_rx(psi, 0, 0.0).amplitudes, psi.amplitudes)


def test_rx_pi_flips_with_phase():
    out = qsim.apply_rx(StateVector.zero(1), 0, np.pi)
    assert np.allclose(out.amplitudes, [0.0, -1j], atol=1e-15)
    assert out.probabilities()[1] == pytest.approx(1.0)


def test_rx_half_pi_probability():
    out = qsim.apply_rx(StateVector.zero(1), 0, np.pi / 2)
    assert out.probabilities()[0] == pytest.approx(0.5, abs=1e-15)


def test_rx_matches_spec_matrix():
    t = 0.731
    expected = np.array([[np.cos(t / 2), -1j * np.sin(t / 2)], [-1j * np.sin(t / 2), np.cos(t / 2)]])
    assert np.allclose(qsim.rx_matrix(t), expected, atol=1e-15)


def test_out_of_range_qubit_raises_index_error():
    with pytest.raises(IndexError):
        qsim.apply_rx(StateVector.zero(2), 2, 0.1)
    with pytest.raises(IndexError):
        qsim.apply_rot(StateVector.zero(2), -1, 0.1, 0.2, 0.3)


def test_rot_zero_is_identity():
    psi = qsim.apply_rx(StateVector.zero(2), 1, 0.4)
    assert np.allclose(qsim.apply_rot(psi, 0, 0, 0, 0).amplitudes, psi.amplitudes, atol=1e-15)


def test_rot_pure_ry():
    t = 1.234
    out = qsim.apply_rot(StateVector.zero(1), 0, 0.0, t, 0.0)
    assert np.allclose(out.amplitudes, [np.cos(t / 2), np.sin(t / 2)], atol=1e-15)


def test_rot_z_only_keeps_probabilities():
    out = qsim.apply_rot(StateVector.zero(1), 0, 0.7, 0.0, -1.9)
    assert np.allclose(out.probabilities(), [1.0, 0.0], atol=1e-15)


def test_rot_order_is_rz_ry_rz():
    p1, p2, p3 = 0.3, 1.1, -0.8
    expected = qsim.rz_matrix(p1) @ qsim.ry_matrix(p2) @ qsim.rz_matrix(p3)
    assert np.allclose(qsim.rot_matrix(p1, p2, p3), expected, atol=1e-15)


def test_cz_fires_only_on_11():
    assert np.array_equal(qsim.apply_cz(StateVector.zero(2), 0, 1).amplitudes, StateVector.zero(2).amplitudes)
    out = qsim.apply_cz(StateVector.basis(2, 3), 0, 1)
    assert np.allclose(out.amplitudes, [0, 0, 0, -1])


def test_cz_twice_identity_and_same_qubit_error():
    psi = qsim.run_circuit(models.build_layered(3, 1), np.linspace(0.1, 2.0, 9))
    twice = qsim.apply_cz(qsim.apply_cz(psi, 0, 2), 0, 2)
    assert np.array_equal(twice.amplitudes, psi.amplitudes)
    with pytest.raises(InvalidGateError):
        qsim.apply_cz(psi, 1, 1)
    with pytest.raises(InvalidGateError):
        qsim.Gate("cz", (1, 1))


def test_qubit_zero_is_most_significant_bit():
    out = qsim.run_circuit(models.build_toy(2), [np.pi, 0.0])
    assert abs(out.amplitudes[0b10]) == pytest.approx(1.0)


def test_toy_zero_params_give_zero_state():
    out = qsim.run_circuit(models.build_toy(3), np.zeros(3))
    assert np.array_equal(out.amplitudes, StateVector.zero(3).amplitudes)


def test_run_circuit_length_mismatch():
    with pytest.raises(ContractError):
        qsim.run_circuit(models.build_toy(3), np.zeros(2))
    with pytest.raises(ContractError):
        qsim.run_circuit(models.build_reuploading(2, 1), np.zeros(6), np.zeros(3))
    with pytest.raises(ContractError):
        qsim.run_circuit(models.build_reuploading(2, 1), np.zeros(6))


def test_expectation_z_examples():
    assert qsim.expectation_z(StateVector.zero(1), 0) == 1.0
    assert qsim.expectation_z(StateVector.basis(1, 1), 0) == -1.0
    half = qsim.apply_rx(StateVector.zero(1), 0, np.pi / 2)
    assert qsim.expectation_z(half, 0) == pytest.approx(0.0, abs=1e-15)


def test_fidelity_examples():
    psi = qsim.run_circuit(models.build_toy(3), [np.pi / 2, np.pi / 2, 0.0])
    assert qsim.fidelity(psi, psi) == pytest.approx(1.0)
    assert qsim.fidelity(StateVector.basis(2, 1), StateVector.basis(2, 2)) == 0.0
    assert qsim.fidelity(psi, StateVector.zero(3)) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(ContractError):
        qsim.fidelity(psi, StateVector.zero(2))


def test_qubit_zero_probability_examples():
    assert qsim.qubit_zero_probability(StateVector.zero(3), 2) == 1.0
    flipped = qsim.run_circuit(models.build_toy(3), [0.0, np.pi, 0.0])
    assert qsim.qubit_zero_probability(flipped, 1) == pytest.approx(0.0, abs=1e-15)
    third = qsim.apply_rx(StateVector.zero(1), 0, 2 * np.pi / 3)
    assert qsim.qubit_zero_probability(third, 0) == pytest.approx(0.25, abs=1e-15)
    assert qsim.qubit_zero_probability(third, 0) == pytest.approx((1 + qsim.expectation_z(third, 0)) / 2)


def test_state_vector_is_immutable_and_checked():
    s = StateVector.zero(2)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0.0
    with pytest.raises(ContractError):
        StateVector(np.zeros(3), 2)


def test_norm_preserved_over_random_gate_sequences():
    rng = XorShift64Star(11)
    for _ in range(1000):
        n = 1 + rng.below(8)
        psi = StateVector.zero(n)
        for _ in range(6):
            q = rng.below(n)
            kind = rng.below(3)
            if kind == 0:
                psi = qsim.apply_rx(psi, q, rng.uniform(-7, 7))
            elif kind == 1 or n == 1:
                psi = qsim.apply_rot(psi, q, *rng.uniform(-7, 7, 3))
            else:
                psi = qsim.apply_cz(psi, q, (q + 1 + rng.below(n - 1)) % n)
            assert abs(psi.norm() ** 2 - 1.0) < 1e-12


@settings(max_examples=50, deadline=None)
@given(angles, angles, angles)
def test_gate_inverses(a, b, c):
    psi = qsim.run_circuit(models.build_layered(2, 1), [0.3, 0.9, -0.4, 1.7, 0.2, 2.5])
    back = qsim.apply_rx(qsim.apply_rx(psi, 1, a), 1, -a)
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-12
    back = qsim.apply_rot(qsim.apply_rot(psi, 0, a, b, c), 0, -c, -b, -a)
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-12


def test_toy_closed_form_fidelity():
    rng = XorShift64Star(5)
    for n in range(1, 11):
        circuit = models.build_toy(n)
        for _ in range(100):
            theta = rng.uniform(0, 2 * np.pi, n)
            f = qsim.fidelity(qsim.run_circuit(circuit, theta), StateVector.zero(n))
            assert abs(f - np.prod(np.cos(theta / 2) ** 2)) < 1e-10


def test_run_circuit_is_deterministic():
    circuit = models.build_reuploading(3, 2)
    params = XorShift64Star(2).uniform(0, 2 * np.pi, circuit.num_params)
    a = qsim.run_circuit(circuit, params, [0.2, -0.5]).amplitudes
    b = qsim.run_circuit(circuit, params, [0.2, -0.5]).amplitudes
    assert a.tobytes() == b.tobytes()


def test_batch_matches_single_runs():
    circuit = models.build_layered(3, 2)
    rows = XorShift64Star(3).uniform(0, 2 * np.pi, (5, circuit.num_params))
    batch = qsim.run_batch(circuit, rows)
    for k in range(5):
        assert np.allclose(batch[k], qsim.run_circuit(circuit, rows[k]).amplitudes, atol=1e-14)


def test_state_derivative_toy_at_zero():
    d = qsim.state_derivative(models.build_toy(1), [0.0], slot=0)
    assert np.allclose(d, [0.0, -0.5j], atol=1e-15)


def test_state_derivative_overlap_is_imaginary_and_matches_fd():
    circuit = models.build_layered(3, 2)
    params = XorShift64Star(9).uniform(0, 2 * np.pi, circuit.num_params)
    psi = qsim.run_circuit(circuit, params).amplitudes
    eps = 1e-5
    for slot in (0, 7, circuit.num_params - 1):
        d = qsim.state_derivative(circuit, params, slot=slot)
        assert abs(np.vdot(psi, d).real) < 1e-12
        step = np.zeros(circuit.num_params)
        step[slot] = eps
        fd = (qsim.run_circuit(circuit, params + step).amplitudes
              - qsim.run_circuit(circuit, params - step).amplitudes) / (2 * eps)
        assert np.max(np.abs(fd - d)) < 1e-6
    with pytest.raises(ContractError):
        qsim.state_derivative(circuit, params, slot=circuit.num_params)


def test_circuit_rejects_shared_or_missing_parameters():
    g = qsim.Gate("rx", (0,), ((qsim.PARAM, 0),))
    with pytest.raises(InvalidGateError):
        qsim.Circuit(2, (g, qsim.Gate("rx", (1,), ((qsim.PARAM, 0),))), num_params=1)
    with pytest.raises(InvalidGateError):
        qsim.Circuit(1, (g,), num_params=2)
    with pytest.raises(InvalidGateError):
        qsim.Circuit(1, (qsim.Gate("rx", (3,), ((qsim.PARAM, 0),)),), num_params=1)
