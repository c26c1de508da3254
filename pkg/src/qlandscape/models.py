"""Circuit architectures and the classical feed-forward baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .qsim import DATA, PARAM, ZERO, Circuit, Gate
from .rng import XorShift64Star
from .shiftcalc import GradHess


def build_toy(num_qubits: int) -> Circuit:
    """One RX per qubit, parameter i on qubit i, no entanglers."""
    if num_qubits < 1:
        raise ContractError("toy circuit needs at least one qubit")
    gates = [Gate("rx", (q,), ((PARAM, q),)) for q in range(num_qubits)]
    return Circuit(num_qubits, tuple(gates), num_params=num_qubits)


def cz_ladder(num_qubits: int, layer: int) -> list[Gate]:
    """Nearest-neighbour CZs; even layers pair (0,1),(2,3),..., odd layers (1,2),(3,4),...

    Open chain: there is no (N-1, 0) pair.
    """
    start = layer % 2
    return [Gate("cz", (q, q + 1)) for q in range(start, num_qubits - 1, 2)]


def rotation_slots(num_qubits: int, layer: int, qubit: int) -> tuple[int, int, int]:
    base = 3 * (layer * num_qubits + qubit)
    return base, base + 1, base + 2


def _layers(num_qubits: int, num_layers: int, reupload: bool) -> list[Gate]:
    gates = []
    for layer in range(num_layers):
        for q in range(num_qubits):
            if reupload:
                gates.append(Gate("rot", (q,), ((DATA, 0), (DATA, 1), (ZERO, 0))))
            slots = rotation_slots(num_qubits, layer, q)
            gates.append(Gate("rot", (q,), tuple((PARAM, s) for s in slots)))
        gates.extend(cz_ladder(num_qubits, layer))
    return gates


def build_layered(num_qubits: int, num_layers: int) -> Circuit:
    """Per layer: ZYZ rotation on every qubit, then the alternating CZ ladder. P = 3NL."""
    if num_qubits < 2 or num_layers < 1:
        raise ContractError("layered circuit needs N >= 2 and L >= 1")
    gates = _layers(num_qubits, num_layers, reupload=False)
    return Circuit(num_qubits, tuple(gates), num_params=3 * num_qubits * num_layers)


def build_reuploading(num_qubits: int, num_layers: int) -> Circuit:
    """Layered circuit with a data rotation R(x1, x2, 0) ahead of every trainable rotation."""
    if num_qubits < 2 or num_layers < 1:
        raise ContractError("reuploading circuit needs N >= 2 and L >= 1")
    gates = _layers(num_qubits, num_layers, reupload=True)
    return Circuit(num_qubits, tuple(gates), num_params=3 * num_qubits * num_layers, num_data=2)


def init_circuit_params(num_params: int, seed: int) -> np.ndarray:
    """Uniform draws in [0, 2 pi)."""
    return XorShift64Star(seed).uniform(0.0, 2.0 * np.pi, num_params)


# --------------------------------------------------------------------------
# feed-forward network

_ACTIVATIONS = {
    "tanh": (np.tanh, lambda out: 1.0 - out**2),
    "identity": (lambda z: z, lambda out: np.ones_like(out)),
}


@dataclass(frozen=True)
class Ffnn:
    """Fully connected net; parameters live in one flat vector.

    Layout per layer: weight matrix (fan_out, fan_in) row-major, then biases.
    """

    sizes: tuple[int, ...] = (2, 12, 10, 1)
    hidden_activation: str = "tanh"
    output_activation: str = "tanh"

    def __post_init__(self):
        if len(self.sizes) < 2 or min(self.sizes) < 1:
            raise ContractError(f"bad layer sizes {self.sizes}")
        for act in (self.hidden_activation, self.output_activation):
            if act not in _ACTIVATIONS:
                raise ContractError(f"unknown activation {act!r}")

    @property
    def num_params(self) -> int:
        return sum(a * b + b for a, b in zip(self.sizes[:-1], self.sizes[1:]))

    def unpack(self, params):
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.num_params,):
            raise ContractError(f"expected {self.num_params} parameters, got {params.shape}")
        layers = []
        pos = 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            w = params[pos : pos + fan_in * fan_out].reshape(fan_out, fan_in)
            pos += fan_in * fan_out
            b = params[pos : pos + fan_out]
            pos += fan_out
            layers.append((w, b))
        return layers

    def init_params(self, seed: int) -> np.ndarray:
        """Uniform in [-a, a] with a = 1/sqrt(fan_in), weights and biases alike."""
        rng = XorShift64Star(seed)
        chunks = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            a = 1.0 / np.sqrt(fan_in)
            chunks.append(rng.uniform(-a, a, fan_in * fan_out + fan_out))
        return np.concatenate(chunks)

    def _acts(self, index: int):
        last = index == len(self.sizes) - 2
        return _ACTIVATIONS[self.output_activation if last else self.hidden_activation]

    def _forward_all(self, params, X):
        outs = [np.atleast_2d(np.asarray(X, dtype=np.float64))]
        for k, (w, b) in enumerate(self.unpack(params)):
            fn, _ = self._acts(k)
            outs.append(fn(outs[-1] @ w.T + b))
        return outs

    def forward(self, params, X) -> np.ndarray:
        """Network outputs for a batch of inputs, shape (M,) for a scalar output."""
        out = self._forward_all(params, X)[-1]
        return out[:, 0] if out.shape[1] == 1 else out

    def loss(self, params, X, y) -> float:
        return float(np.sum((self.forward(params, X) - np.asarray(y)) ** 2))

    def gradient(self, params, X, y) -> np.ndarray:
        """Reverse-mode gradient of sum_m (out_m - y_m)^2."""
        outs = self._forward_all(params, X)
        layers = self.unpack(params)
        delta = 2.0 * (outs[-1] - np.asarray(y, dtype=np.float64).reshape(-1, 1))
        grads = []
        for k in range(len(layers) - 1, -1, -1):
            _, dact = self._acts(k)
            delta = delta * dact(outs[k + 1])
            w, _ = layers[k]
            grads.append((delta.T @ outs[k], delta.sum(axis=0)))
            delta = delta @ w
        flat = []
        for gw, gb in reversed(grads):
            flat.append(gw.ravel())
            flat.append(gb)
        return np.concatenate(flat)

    def hessian(self, params, X, y, eps: float = 1e-4, symmetrize: bool = True) -> np.ndarray:
        """Central differences of :meth:`gradient`."""
        params = np.asarray(params, dtype=np.float64)
        p = params.shape[0]
        hess = np.empty((p, p))
        for j in range(p):
            step = np.zeros(p)
            step[j] = eps
            hess[:, j] = (self.gradient(params + step, X, y) - self.gradient(params - step, X, y)) / (2 * eps)
        return 0.5 * (hess + hess.T) if symmetrize else hess


class FfnnObjective:
    """Square-loss empirical risk of an :class:`Ffnn` on a labelled dataset."""

    def __init__(self, net: Ffnn, X, y, fd_eps: float = 1e-4):
        self.net = net
        self.X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self.y = np.asarray(y, dtype=np.float64)
        self.fd_eps = fd_eps

    @property
    def num_params(self) -> int:
        return self.net.num_params

    has_data = True

    def losses(self, rows) -> np.ndarray:
        return np.array([self.net.loss(r, self.X, self.y) for r in np.atleast_2d(rows)])

    def value(self, params) -> float:
        return self.net.loss(params, self.X, self.y)

    def gradient(self, params) -> np.ndarray:
        return self.net.gradient(params, self.X, self.y)

    def value_and_gradient(self, params) -> tuple[float, np.ndarray]:
        return self.value(params), self.gradient(params)

    def hessian(self, params):
        return GradHess(
            value=self.value(params),
            gradient=self.gradient(params),
            hessian=self.net.hessian(params, self.X, self.y, self.fd_eps),
            eval_count=2 * self.num_params + 1,  # gradient passes
        )
