import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qlandscape import losses, models, qsim, shiftcalc, spectral
from qlandscape.errors import ContractError
from qlandscape.rng import XorShift64Star


def random_symmetric(n, seed):
    a = XorShift64Star(seed).uniform(-1, 1, (n, n))
    return a + a.T


def test_half_identity():
    s = spectral.eigendecompose(0.5 * np.eye(4))
    assert np.array_equal(s.eigenvalues, np.full(4, 0.5))
    assert np.array_equal(s.eigenvectors, np.eye(4))


def test_diagonal_matrix():
    s = spectral.eigendecompose(np.diag([-1.0, 0.0, 2.0]))
    assert np.array_equal(s.eigenvalues, [-1.0, 0.0, 2.0])
    assert np.array_equal(np.abs(s.eigenvectors), np.eye(3))


def test_swap_matrix():
    s = spectral.eigendecompose(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(s.eigenvalues, [-1.0, 1.0], atol=1e-15)


def test_asymmetric_input_rejected():
    with pytest.raises(ContractError):
        spectral.eigendecompose(np.array([[1.0, 1e-6], [0.0, 1.0]]))
    with pytest.raises(ContractError):
        spectral.eigendecompose(np.zeros((2, 3)))


@pytest.mark.parametrize("n,seed", [(2, 1), (5, 2), (17, 3), (48, 4)])
def test_residual_orthonormality_reconstruction_trace(n, seed):
    h = random_symmetric(n, seed)
    s = spectral.eigendecompose(h)
    v, lam = s.eigenvectors, s.eigenvalues
    assert np.all(np.diff(lam) >= 0)
    for i in range(n):
        assert np.max(np.abs(h @ v[:, i] - lam[i] * v[:, i])) < 1e-8 * max(1, abs(lam[i]))
    assert np.max(np.abs(v.T @ v - np.eye(n))) < 1e-10
    hinf = np.max(np.abs(h))
    assert np.max(np.abs(v @ np.diag(lam) @ v.T - h)) < 1e-8 * hinf
    assert abs(lam.sum() - np.trace(h)) < 1e-9 * hinf
    assert np.allclose(lam, np.linalg.eigvalsh(h), atol=1e-10 * hinf)


def test_sign_convention_and_determinism():
    h = random_symmetric(12, 9)
    a, b = spectral.eigendecompose(h), spectral.eigendecompose(h.copy())
    assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()
    assert a.eigenvectors.tobytes() == b.eigenvectors.tobytes()
    for i in range(12):
        col = a.eigenvectors[:, i]
        assert col[np.argmax(np.abs(col))] > 0


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(-10, 10, allow_nan=False)))
def test_property_matches_reference(a):
    h = a + a.T
    s = spectral.eigendecompose(h)
    scale = max(1.0, np.max(np.abs(h)))
    assert np.allclose(s.eigenvalues, np.linalg.eigvalsh(h), atol=1e-9 * scale)
    assert np.max(np.abs(s.eigenvectors @ np.diag(s.eigenvalues) @ s.eigenvectors.T - h)) < 1e-8 * scale


def make_spectrum(values):
    return spectral.Spectrum(np.asarray(values, dtype=float), np.eye(len(values)))


def test_classify_examples():
    assert spectral.classify_stationary(np.zeros(3), make_spectrum([0.5] * 3)).label == "minimum"
    assert spectral.classify_stationary(np.zeros(3), make_spectrum([-1e-9, 0, 1e-9])).label == "plateau"
    saddle = spectral.classify_stationary(np.zeros(3), make_spectrum([-0.3, 0, 0.4]))
    assert saddle.label == "saddle"
    assert (saddle.n_negative, saddle.n_zero, saddle.n_positive) == (1, 1, 1)
    assert spectral.classify_stationary(np.zeros(2), make_spectrum([-0.2, -0.1])).label == "maximum"
    assert spectral.classify_stationary([0.1, 0], make_spectrum([0.5, 0.5])).label == "non-stationary"
    with pytest.raises(ContractError):
        spectral.classify_stationary(np.zeros(2), make_spectrum([1, 1]), tau=0.0)


def test_default_tau_is_relative():
    assert spectral.default_tau([0.0, 0.5]) == 1e-6
    assert spectral.default_tau([-300.0, 200.0]) == pytest.approx(5e-4)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=6), st.floats(0, 1e-3))
def test_labels_are_exhaustive_and_exclusive(values, g):
    cls = spectral.classify_stationary([g], make_spectrum(values), tau=1e-4)
    assert cls.label in spectral.LABELS
    assert cls.n_negative + cls.n_zero + cls.n_positive == len(values)
    if g > 1e-4:
        assert cls.label == "non-stationary"


def toy_objective(n):
    return shiftcalc.CircuitObjective(models.build_toy(n), losses.GlobalFidelity(qsim.StateVector.zero(n)))


def test_perturbation_scan_zero_eps_and_unit_check():
    obj = toy_objective(2)
    t = np.array([0.3, -0.2])
    curve = spectral.perturbation_scan(obj.losses, t, [1.0, 0.0], [-0.1, 0.0, 0.1], eigenvalue=0.4)
    assert curve.losses[1] == obj.value(t)
    assert np.isnan(spectral.perturbation_scan(obj.losses, t, [0.0, 1.0], [0.1]).quadratic_model[0])
    with pytest.raises(ContractError):
        spectral.perturbation_scan(obj.losses, t, [1.0, 1.0], [0.1])


def test_flat_direction_at_redundant_minimum():
    # target |0...0> with two extra qubits' parameters fixed: the toy model padded with a
    # parameter-free direction (layered qubits beyond the first pair rotate only in z)
    circuit = models.build_layered(2, 1)
    obj = shiftcalc.CircuitObjective(circuit, losses.GlobalFidelity(qsim.StateVector.zero(2)))
    t = np.zeros(circuit.num_params)
    s = spectral.eigendecompose(obj.hessian(t).hessian)
    flat = int(np.argmin(np.abs(s.eigenvalues)))
    assert abs(s.eigenvalues[flat]) < 1e-12
    curve = spectral.perturbation_scan(obj.losses, t, s.eigenvectors[:, flat], [0.1])
    assert abs(curve.losses[0] - obj.value(t)) < 1e-4


def test_top_direction_matches_quadratic_model():
    obj = toy_objective(3)
    t = np.zeros(3)
    s = spectral.eigendecompose(obj.hessian(t).hessian)
    eps = np.array([0.01, 0.02, 0.05])
    curve = spectral.perturbation_scan(obj.losses, t, s.eigenvectors[:, -1], eps, s.lambda_max)
    rel = np.abs((curve.losses - obj.value(t)) / (curve.quadratic_model - obj.value(t)) - 1)
    assert np.all(rel < 0.1)


def test_quadratic_model_second_order_convergence():
    circuit = models.build_layered(2, 2)
    obj = shiftcalc.CircuitObjective(circuit, losses.GlobalFidelity(qsim.ghz_state(2)))
    t = XorShift64Star(3).uniform(0, 2 * np.pi, circuit.num_params)
    s = spectral.eigendecompose(obj.hessian(t).hessian)
    f0 = obj.value(t)
    for i in (0, 5, circuit.num_params - 1):
        v, lam = s.eigenvectors[:, i], s.eigenvalues[i]
        errs = []
        for eps in (1e-2, 1e-3):
            vals = obj.losses(np.array([t + eps * v, t - eps * v]))
            errs.append(abs((vals[0] + vals[1] - 2 * f0) / eps**2 - lam))
        assert errs[1] < 1e-4
        assert errs[1] < errs[0] or errs[0] < 1e-6


def test_spectrum_series_rows():
    s = make_spectrum([0.1, 0.2, 0.3])
    rows = spectral.spectrum_series([(0, s)])
    assert rows == [(0, 0, 0.1), (0, 1, 0.2), (0, 2, 0.3)]
    with pytest.raises(ContractError):
        spectral.spectrum_series([])
