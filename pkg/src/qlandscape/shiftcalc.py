"""Parameter-shift gradients and Hessians, chain-rule composition, FD oracles.

A *circuit function* here is any callable mapping a (B, P) array of parameter
rows to a (B,) or (B, M) array of outputs. All shifted parameter vectors of a
gradient or Hessian are stacked into one such call so the simulator can batch
them.

For a rotation ``exp(-i t G)`` with eigenvalues of G equal to +-1/2 every
output is ``a + b cos t + c sin t`` in each angle, so with shift s:

    df/dt_i          = [f(t_i + s) - f(t_i - s)] / (2 sin s)
    d2f/dt_i dt_j    = [f(++) + f(--) - f(+-) - f(-+)] / (4 sin^2 s)
    d2f/dt_i^2       = [f(t_i + 2s) + f(t_i - 2s) - 2 f(t)] / (4 sin^2 s)

and with the default s = pi/2 these are exact, not approximations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import LossFunction, circuit_outputs
from .qsim import Circuit

HALF_PI = np.pi / 2


@dataclass(frozen=True)
class ShiftConfig:
    shift: float = HALF_PI
    symmetrize: bool = True


@dataclass
class GradHess:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    eval_count: int


def gradient_eval_count(num_params: int) -> int:
    return 2 * num_params


def hessian_eval_count(num_params: int) -> int:
    p = num_params
    return 4 * (p * (p - 1) // 2) + 2 * p + 1


def _gradient_rows(params: np.ndarray, s: float) -> np.ndarray:
    p = params.shape[0]
    eye = np.eye(p)
    rows = np.empty((2 * p, p))
    rows[0::2] = params + s * eye
    rows[1::2] = params - s * eye
    return rows


def _gradient_from(values: np.ndarray, s: float) -> np.ndarray:
    return (values[0::2] - values[1::2]) / (2.0 * np.sin(s))


def _hessian_rows(params: np.ndarray, s: float) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Base point, diagonal double shifts, then four rows per pair i < j."""
    p = params.shape[0]
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    rows = np.empty((1 + 2 * p + 4 * len(pairs), p))
    rows[:] = params
    rows[1 : 1 + 2 * p : 2, :] += 2 * s * np.eye(p)
    rows[2 : 2 + 2 * p : 2, :] -= 2 * s * np.eye(p)
    base = 1 + 2 * p
    for k, (i, j) in enumerate(pairs):
        r = base + 4 * k
        rows[r, i] += s
        rows[r, j] += s
        rows[r + 1, i] -= s
        rows[r + 1, j] -= s
        rows[r + 2, i] -= s
        rows[r + 2, j] += s
        rows[r + 3, i] += s
        rows[r + 3, j] -= s
    return rows, pairs


def _hessian_from(values: np.ndarray, p: int, pairs, s: float, symmetrize: bool) -> np.ndarray:
    scale = 1.0 / (4.0 * np.sin(s) ** 2)
    f0 = values[0]
    hess = np.zeros((p, p) + values.shape[1:])
    diag = (values[1 : 1 + 2 * p : 2] + values[2 : 2 + 2 * p : 2] - 2.0 * f0) * scale
    for i in range(p):
        hess[i, i] = diag[i]
    base = 1 + 2 * p
    for k, (i, j) in enumerate(pairs):
        v = values[base + 4 * k : base + 4 * k + 4]
        hess[i, j] = hess[j, i] = (v[0] + v[1] - v[2] - v[3]) * scale
    if symmetrize:
        hess = 0.5 * (hess + np.swapaxes(hess, 0, 1))
    return hess


def shift_gradient(f, params, shift: float = HALF_PI) -> np.ndarray:
    """Exact gradient of a circuit function; 2P evaluations.

    Output shape is (P,) for a scalar function or (P, M) for (B, M) outputs.
    """
    params = np.asarray(params, dtype=np.float64)
    return _gradient_from(np.asarray(f(_gradient_rows(params, shift))), shift)


def shift_hessian_raw(f, params, config: ShiftConfig = ShiftConfig()) -> np.ndarray:
    """Exact Hessian of a circuit function; 4 P(P-1)/2 + 2P + 1 evaluations."""
    params = np.asarray(params, dtype=np.float64)
    rows, pairs = _hessian_rows(params, config.shift)
    values = np.asarray(f(rows))
    return _hessian_from(values, params.shape[0], pairs, config.shift, config.symmetrize)


def fd_gradient_oracle(f, params, eps: float = 1e-5) -> np.ndarray:
    """Central finite differences; a test oracle, never used for training."""
    params = np.asarray(params, dtype=np.float64)
    p = params.shape[0]
    rows = np.concatenate([params + eps * np.eye(p), params - eps * np.eye(p)])
    values = np.asarray(f(rows))
    return (values[:p] - values[p:]) / (2.0 * eps)


def fd_hessian_oracle(grad, params, eps: float = 1e-5) -> np.ndarray:
    """Central differences of a gradient function, symmetrized.

    ``grad`` maps a parameter vector to its gradient (e.g. a closure over
    :func:`shift_gradient`). Column j is ``[g(t + eps e_j) - g(t - eps e_j)] / 2 eps``.
    """
    params = np.asarray(params, dtype=np.float64)
    p = params.shape[0]
    cols = []
    for j in range(p):
        step = np.zeros(p)
        step[j] = eps
        cols.append((np.asarray(grad(params + step)) - np.asarray(grad(params - step))) / (2 * eps))
    hess = np.stack(cols, axis=1)
    return 0.5 * (hess + hess.T)


# --------------------------------------------------------------------------
# losses of circuits


def _labels(y, m: int):
    if y is None:
        return None
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    return y if y.shape[0] == m else np.broadcast_to(y, (m,))


def circuit_function(circuit: Circuit, loss: LossFunction, X=None):
    """The observable of ``loss`` as a circuit function with (B, M) output."""
    return lambda rows: circuit_outputs(circuit, loss, rows, X)


def loss_value(circuit: Circuit, params, loss: LossFunction, X=None, y=None) -> float:
    f = circuit_outputs(circuit, loss, params, X)[0]
    return float(np.sum(loss.value(f, _labels(y, f.shape[0]))))


def loss_value_and_gradient(circuit: Circuit, params, loss: LossFunction, X=None, y=None,
                            shift: float = HALF_PI) -> tuple[float, np.ndarray]:
    params = np.asarray(params, dtype=np.float64)
    rows = np.concatenate([params[None, :], _gradient_rows(params, shift)])
    values = circuit_outputs(circuit, loss, rows, X)
    f0 = values[0]
    labels = _labels(y, f0.shape[0])
    grad_f = _gradient_from(values[1:], shift)
    return float(np.sum(loss.value(f0, labels))), grad_f @ loss.d1(f0, labels)


def loss_gradient(circuit: Circuit, params, loss: LossFunction, X=None, y=None,
                  shift: float = HALF_PI) -> np.ndarray:
    """Gradient of ``sum_m l(f_m)`` via ``dl/dt = f' l'(f)``."""
    return loss_value_and_gradient(circuit, params, loss, X, y, shift)[1]


def loss_hessian(circuit: Circuit, params, loss: LossFunction, X=None, y=None,
                 config: ShiftConfig = ShiftConfig()) -> GradHess:
    """Gradient and Hessian of ``sum_m l(f_m)`` with the chain rule applied twice:

    ``d2l/dt_i dt_j = f_ij l'(f) + f_i f_j l''(f)``.
    """
    params = np.asarray(params, dtype=np.float64)
    p = params.shape[0]
    s = config.shift
    hrows, pairs = _hessian_rows(params, s)
    grows = _gradient_rows(params, s)
    values = circuit_outputs(circuit, loss, np.concatenate([hrows, grows]), X)
    m = values.shape[1]
    f0 = values[0]
    labels = _labels(y, m)
    grad_f = _gradient_from(values[hrows.shape[0]:], s)
    hess_f = _hessian_from(values[: hrows.shape[0]], p, pairs, s, config.symmetrize)
    d1 = loss.d1(f0, labels)
    d2 = loss.d2(f0, labels)
    hess = hess_f @ d1 + np.einsum("im,jm,m->ij", grad_f, grad_f, d2)
    return GradHess(
        value=float(np.sum(loss.value(f0, labels))),
        gradient=grad_f @ d1,
        hessian=hess,
        eval_count=(hrows.shape[0] + grows.shape[0]) * m,
    )


class CircuitObjective:
    """A circuit, a loss and (optionally) a labelled dataset bundled for training."""

    def __init__(self, circuit: Circuit, loss: LossFunction, X=None, y=None,
                 config: ShiftConfig = ShiftConfig()):
        self.circuit = circuit
        self.loss = loss
        self.X = None if X is None else np.atleast_2d(np.asarray(X, dtype=np.float64))
        self.y = None if y is None else np.asarray(y, dtype=np.float64)
        self.config = config

    @property
    def num_params(self) -> int:
        return self.circuit.num_params

    @property
    def has_data(self) -> bool:
        return self.X is not None

    def losses(self, rows) -> np.ndarray:
        f = circuit_outputs(self.circuit, self.loss, rows, self.X)
        return np.sum(self.loss.value(f, _labels(self.y, f.shape[1])), axis=1)

    def value(self, params) -> float:
        return float(self.losses(params)[0])

    def gradient(self, params) -> np.ndarray:
        return self.value_and_gradient(params)[1]

    def value_and_gradient(self, params) -> tuple[float, np.ndarray]:
        return loss_value_and_gradient(self.circuit, params, self.loss, self.X, self.y,
                                       self.config.shift)

    def hessian(self, params) -> GradHess:
        return loss_hessian(self.circuit, params, self.loss, self.X, self.y, self.config)
