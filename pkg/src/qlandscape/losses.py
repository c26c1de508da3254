"""Loss functions over circuit outputs.

Each loss kind splits into an *observable* ``f`` read off the output state and
a scalar map ``l(f)`` with closed-form derivatives ``l'(f)`` and ``l''(f)``.
The split is what the chain rule in :mod:`qlandscape.shiftcalc` composes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qsim
from .errors import ContractError
from .qsim import Circuit, StateVector


@dataclass(frozen=True)
class GlobalFidelity:
    """``l = 1 - |<target|psi>|^2``."""

    target: StateVector

    def observe(self, psi: np.ndarray, num_qubits: int) -> np.ndarray:
        if num_qubits != self.target.num_qubits:
            raise ContractError("target and circuit have different qubit counts")
        return qsim.fidelity_batch(psi, self.target.amplitudes)

    def value(self, f, y=None):
        return 1.0 - np.asarray(f)

    def d1(self, f, y=None):
        return -np.ones_like(np.asarray(f, dtype=np.float64))

    def d2(self, f, y=None):
        return np.zeros_like(np.asarray(f, dtype=np.float64))


@dataclass(frozen=True)
class LocalZ:
    """``l = 1 - mean_i P(qubit i = 0)``.

    The per-qubit sum is divided by N so the loss stays in [0, 1].
    """

    def observe(self, psi: np.ndarray, num_qubits: int) -> np.ndarray:
        probs = np.abs(psi) ** 2
        total = np.zeros(psi.shape[0])
        for q in range(num_qubits):
            total += probs @ (qsim.z_signs(num_qubits, q) > 0).astype(np.float64)
        return total / num_qubits

    def value(self, f, y=None):
        return 1.0 - np.asarray(f)

    def d1(self, f, y=None):
        return -np.ones_like(np.asarray(f, dtype=np.float64))

    def d2(self, f, y=None):
        return np.zeros_like(np.asarray(f, dtype=np.float64))


@dataclass(frozen=True)
class SquareZ:
    """``l = (<Z_qubit> - y)^2``; ``y`` is the label (falls back to ``label``)."""

    label: float | None = None
    qubit: int = 0

    def _y(self, y):
        if y is None:
            if self.label is None:
                raise ContractError("square loss needs a label")
            return self.label
        return y

    def observe(self, psi: np.ndarray, num_qubits: int) -> np.ndarray:
        return qsim.expectation_z_batch(psi, num_qubits, self.qubit)

    def value(self, f, y=None):
        return (np.asarray(f) - self._y(y)) ** 2

    def d1(self, f, y=None):
        return 2.0 * (np.asarray(f) - self._y(y))

    def d2(self, f, y=None):
        return np.full_like(np.asarray(f, dtype=np.float64), 2.0)


LossFunction = GlobalFidelity | LocalZ | SquareZ


def circuit_outputs(circuit: Circuit, loss: LossFunction, rows, X=None) -> np.ndarray:
    """Observable values for every parameter row and data point.

    ``rows`` is (B, P). Returns shape (B, M) with M = number of data points,
    or M = 1 for a data-free circuit.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    n, dim = circuit.num_qubits, circuit.dim
    if X is None:
        if circuit.num_data:
            raise ContractError(f"circuit needs {circuit.num_data} data values")
        step = max(1, qsim.MAX_BATCH_AMPLITUDES // dim)
        out = np.empty((rows.shape[0], 1))
        for start in range(0, rows.shape[0], step):
            psi = qsim.run_batch(circuit, rows[start : start + step])
            out[start : start + step, 0] = loss.observe(psi, n)
        return out
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    m = X.shape[0]
    step = max(1, qsim.MAX_BATCH_AMPLITUDES // (dim * m))
    out = np.empty((rows.shape[0], m))
    for start in range(0, rows.shape[0], step):
        chunk = rows[start : start + step]
        b = chunk.shape[0]
        psi = qsim.run_batch(circuit, np.repeat(chunk, m, axis=0), np.tile(X, (b, 1)))
        out[start : start + b] = loss.observe(psi, n).reshape(b, m)
    return out


def global_fidelity_loss(circuit: Circuit, params, target: StateVector) -> float:
    loss = GlobalFidelity(target)
    return float(loss.value(circuit_outputs(circuit, loss, params)[0, 0]))


def local_loss(circuit: Circuit, params) -> float:
    loss = LocalZ()
    return float(loss.value(circuit_outputs(circuit, loss, params)[0, 0]))


def square_loss(circuit: Circuit, params, x, y: float, qubit: int = 0) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != circuit.num_data:
        raise ContractError(f"expected a data vector of length {circuit.num_data}")
    loss = SquareZ(qubit=qubit)
    return float(loss.value(circuit_outputs(circuit, loss, params, x)[0, 0], y))


def empirical_risk(circuit: Circuit, params, dataset, qubit: int = 0) -> float:
    """Sum (not mean) of the square losses over the dataset."""
    if len(dataset) == 0:
        raise ContractError("empirical risk of an empty dataset")
    loss = SquareZ(qubit=qubit)
    f = circuit_outputs(circuit, loss, params, dataset.points)[0]
    return float(np.sum(loss.value(f, dataset.labels)))
