"""Dense statevector simulation of RX / ZYZ-rotation / CZ circuits.

Conventions
-----------
* Qubit 0 is the most significant bit of the basis-state index, so for three
  qubits ``|100>`` is index 4.
* Every rotation is ``R_A(t) = exp(-i t sigma_A / 2)``. The general rotation is
  ``R(phi1, phi2, phi3) = RZ(phi1) RY(phi2) RZ(phi3)``, i.e. ``RZ(phi3)`` acts
  first. With half-angle generators the pi/2 parameter-shift rule is exact.
* Circuits always start from ``|0...0>``.

The simulator works on batches: ``run_batch`` evolves B independent states at
once, each with its own parameter and data vectors. Gates are applied as
strided 2x2 updates on a working buffer; no 2^N x 2^N matrix is ever built.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ContractError, InvalidGateError

GATE_KINDS = ("rx", "rot", "cz")

# angle sources for a gate slot
PARAM = "param"
DATA = "data"
ZERO = "zero"

# keep a working batch below ~64 MB of amplitudes
MAX_BATCH_AMPLITUDES = 1 << 22


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    num_qubits: int

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.shape[0] != 2**self.num_qubits:
            raise ContractError(
                f"expected {2**self.num_qubits} amplitudes, got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        amps = np.zeros(2**num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, num_qubits)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps, num_qubits)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def uniform_superposition(num_qubits: int) -> StateVector:
    dim = 2**num_qubits
    return StateVector(np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128), num_qubits)


def ghz_state(num_qubits: int) -> StateVector:
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[0] = amps[-1] = 1.0 / np.sqrt(2.0)
    return StateVector(amps, num_qubits)


@dataclass(frozen=True)
class Gate:
    """One gate of a circuit program.

    ``angles`` lists where each rotation angle comes from: ``(PARAM, i)`` reads
    trainable parameter i, ``(DATA, j)`` reads data component j and
    ``(ZERO, 0)`` is a constant 0. RX has one angle, ``rot`` three, CZ none.
    """

    kind: str
    qubits: tuple[int, ...]
    angles: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        expected = {"rx": (1, 1), "rot": (1, 3), "cz": (2, 0)}
        if self.kind not in expected:
            raise InvalidGateError(f"unknown gate kind {self.kind!r}")
        nq, na = expected[self.kind]
        if len(self.qubits) != nq or len(self.angles) != na:
            raise InvalidGateError(
                f"{self.kind} needs {nq} qubit(s) and {na} angle(s), "
                f"got {self.qubits} / {self.angles}"
            )
        if self.kind == "cz" and self.qubits[0] == self.qubits[1]:
            raise InvalidGateError("CZ qubits must be distinct")
        for source, _ in self.angles:
            if source not in (PARAM, DATA, ZERO):
                raise InvalidGateError(f"unknown angle source {source!r}")


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...]
    num_params: int
    num_data: int = 0
    # slot -> (gate index, angle index); filled in __post_init__
    param_locations: tuple[tuple[int, int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ContractError("a circuit needs at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        locations: dict[int, tuple[int, int]] = {}
        for gi, gate in enumerate(self.gates):
            for q in gate.qubits:
                if not 0 <= q < self.num_qubits:
                    raise InvalidGateError(f"gate {gi}: qubit {q} outside [0, {self.num_qubits})")
            for ai, (source, idx) in enumerate(gate.angles):
                if source == PARAM:
                    if not 0 <= idx < self.num_params:
                        raise InvalidGateError(f"gate {gi}: parameter slot {idx} out of range")
                    if idx in locations:
                        raise InvalidGateError(f"parameter slot {idx} is used twice")
                    locations[idx] = (gi, ai)
                elif source == DATA and not 0 <= idx < self.num_data:
                    raise InvalidGateError(f"gate {gi}: data slot {idx} out of range")
        missing = set(range(self.num_params)) - set(locations)
        if missing:
            raise InvalidGateError(f"parameter slots never used: {sorted(missing)}")
        object.__setattr__(
            self, "param_locations", tuple(locations[i] for i in range(self.num_params))
        )

    @property
    def dim(self) -> int:
        return 2**self.num_qubits


# --------------------------------------------------------------------------
# 2x2 gate matrices, vectorized over a leading batch axis


def rx_matrix(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 0, 1] = -1j * s
    out[..., 1, 0] = -1j * s
    out[..., 1, 1] = c
    return out


def ry_matrix(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def rz_matrix(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    out = np.zeros(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = np.exp(-0.5j * theta)
    out[..., 1, 1] = np.exp(0.5j * theta)
    return out


def rot_matrix(phi1, phi2, phi3) -> np.ndarray:
    """Closed form of RZ(phi1) RY(phi2) RZ(phi3)."""
    phi1, phi2, phi3 = np.broadcast_arrays(
        *(np.asarray(p, dtype=np.float64) for p in (phi1, phi2, phi3))
    )
    c = np.cos(phi2 / 2)
    s = np.sin(phi2 / 2)
    plus = 0.5 * (phi1 + phi3)
    minus = 0.5 * (phi1 - phi3)
    out = np.empty(phi1.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = np.exp(-1j * plus) * c
    out[..., 0, 1] = -np.exp(-1j * minus) * s
    out[..., 1, 0] = np.exp(1j * minus) * s
    out[..., 1, 1] = np.exp(1j * plus) * c
    return out


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


# --------------------------------------------------------------------------
# batched kernels; psi has shape (2**n, B), batch innermost, updated in place


@numba.njit(cache=True)
def _kernel_matrix(psi, n, qubit, u00, u01, u10, u11):
    dim, batch = psi.shape
    stride = 1 << (n - qubit - 1)
    for i in range(dim):
        if i & stride:
            continue
        j = i | stride
        for b in range(batch):
            a0 = psi[i, b]
            a1 = psi[j, b]
            psi[i, b] = u00[b] * a0 + u01[b] * a1
            psi[j, b] = u10[b] * a0 + u11[b] * a1


@numba.njit(cache=True)
def _kernel_rx(psi, n, qubit, theta):
    dim, batch = psi.shape
    stride = 1 << (n - qubit - 1)
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    for i in range(dim):
        if i & stride:
            continue
        j = i | stride
        for b in range(batch):
            a0 = psi[i, b]
            a1 = psi[j, b]
            ms = -1j * s[b]
            psi[i, b] = c[b] * a0 + ms * a1
            psi[j, b] = ms * a0 + c[b] * a1


@numba.njit(cache=True)
def _kernel_rot(psi, n, qubit, phi1, phi2, phi3):
    dim, batch = psi.shape
    stride = 1 << (n - qubit - 1)
    c = np.cos(0.5 * phi2)
    s = np.sin(0.5 * phi2)
    plus = 0.5 * (phi1 + phi3)
    minus = 0.5 * (phi1 - phi3)
    u00 = np.exp(-1j * plus) * c
    u01 = -np.exp(-1j * minus) * s
    u10 = np.exp(1j * minus) * s
    u11 = np.exp(1j * plus) * c
    for i in range(dim):
        if i & stride:
            continue
        j = i | stride
        for b in range(batch):
            a0 = psi[i, b]
            a1 = psi[j, b]
            psi[i, b] = u00[b] * a0 + u01[b] * a1
            psi[j, b] = u10[b] * a0 + u11[b] * a1


@numba.njit(cache=True)
def _kernel_cz(psi, n, q1, q2):
    dim, batch = psi.shape
    m1 = 1 << (n - q1 - 1)
    m2 = 1 << (n - q2 - 1)
    for i in range(dim):
        if (i & m1) and (i & m2):
            for b in range(batch):
                psi[i, b] = -psi[i, b]


def _apply_1q_inplace(psi: np.ndarray, n: int, qubit: int, u: np.ndarray) -> None:
    batch = psi.shape[1]
    u = np.broadcast_to(np.asarray(u, dtype=np.complex128), (batch, 2, 2))
    _kernel_matrix(psi, n, qubit, *(np.ascontiguousarray(u[:, i, j]) for i, j in ((0, 0), (0, 1), (1, 0), (1, 1))))


def _apply_cz_inplace(psi: np.ndarray, n: int, q1: int, q2: int) -> None:
    _kernel_cz(psi, n, q1, q2)


def _check_qubit(num_qubits: int, qubit: int) -> None:
    if not 0 <= qubit < num_qubits:
        raise IndexError(f"qubit {qubit} outside [0, {num_qubits})")


def _single(state: StateVector) -> np.ndarray:
    return np.array(state.amplitudes, dtype=np.complex128).reshape(-1, 1)


def apply_matrix(state: StateVector, qubit: int, u: np.ndarray) -> StateVector:
    """Apply an arbitrary 2x2 matrix (not necessarily unitary) to one qubit."""
    _check_qubit(state.num_qubits, qubit)
    psi = _single(state)
    _apply_1q_inplace(psi, state.num_qubits, qubit, np.asarray(u, dtype=np.complex128))
    return StateVector(psi[:, 0], state.num_qubits)


def apply_rx(state: StateVector, qubit: int, theta: float) -> StateVector:
    return apply_matrix(state, qubit, rx_matrix(theta))


def apply_rot(state: StateVector, qubit: int, phi1: float, phi2: float, phi3: float) -> StateVector:
    return apply_matrix(state, qubit, rot_matrix(phi1, phi2, phi3))


def apply_cz(state: StateVector, q1: int, q2: int) -> StateVector:
    if q1 == q2:
        raise InvalidGateError("CZ qubits must be distinct")
    _check_qubit(state.num_qubits, q1)
    _check_qubit(state.num_qubits, q2)
    psi = _single(state)
    _apply_cz_inplace(psi, state.num_qubits, q1, q2)
    return StateVector(psi[:, 0], state.num_qubits)


# --------------------------------------------------------------------------
# circuit execution


def _gate_angles(gate: Gate, params_t: np.ndarray, data_t: np.ndarray | None) -> list[np.ndarray]:
    """Angle arrays (length B) for a gate; ``params_t`` / ``data_t`` are (P, B) / (D, B)."""
    angles = []
    for source, idx in gate.angles:
        if source == PARAM:
            angles.append(params_t[idx])
        elif source == DATA:
            angles.append(data_t[idx])
        else:
            angles.append(np.zeros(params_t.shape[1]))
    return angles


def _as_batch(circuit: Circuit, params, data) -> tuple[np.ndarray, np.ndarray | None]:
    params = np.atleast_2d(np.asarray(params, dtype=np.float64))
    if params.shape[1] != circuit.num_params:
        raise ContractError(
            f"circuit takes {circuit.num_params} parameters, got {params.shape[1]}"
        )
    if circuit.num_data == 0:
        if data is not None and np.size(data) != 0:
            raise ContractError("circuit has no data slots but data was given")
        return params, None
    if data is None:
        raise ContractError(f"circuit needs {circuit.num_data} data values")
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[1] != circuit.num_data:
        raise ContractError(f"circuit takes {circuit.num_data} data values, got {data.shape[1]}")
    if data.shape[0] == 1 and params.shape[0] > 1:
        data = np.broadcast_to(data, (params.shape[0], circuit.num_data))
    elif params.shape[0] == 1 and data.shape[0] > 1:
        params = np.broadcast_to(params, (data.shape[0], circuit.num_params))
    elif data.shape[0] != params.shape[0]:
        raise ContractError("params and data batches have different lengths")
    return params, data


def _evolve(circuit: Circuit, params: np.ndarray, data: np.ndarray | None,
            derivative: tuple[int, int] | None = None) -> np.ndarray:
    n = circuit.num_qubits
    batch = params.shape[0]
    params_t = np.ascontiguousarray(params.T)
    data_t = None if data is None else np.ascontiguousarray(data.T)
    psi = np.zeros((2**n, batch), dtype=np.complex128)
    psi[0, :] = 1.0
    for gi, gate in enumerate(circuit.gates):
        if gate.kind == "cz":
            _kernel_cz(psi, n, gate.qubits[0], gate.qubits[1])
            continue
        angles = _gate_angles(gate, params_t, data_t)
        q = gate.qubits[0]
        if derivative is not None and derivative[0] == gi:
            _apply_1q_inplace(psi, n, q, _derivative_matrix(gate, angles, derivative[1]))
        elif gate.kind == "rx":
            _kernel_rx(psi, n, q, angles[0])
        else:
            _kernel_rot(psi, n, q, angles[0], angles[1], angles[2])
    return psi


def _derivative_matrix(gate: Gate, angles: list[np.ndarray], which: int) -> np.ndarray:
    """d/d(angle ``which``) of the gate matrix, batched: (B, 2, 2)."""
    if gate.kind == "rx":
        factors = [rx_matrix(angles[0])]
        axes = ["x"]
    else:
        factors = [rz_matrix(angles[0]), ry_matrix(angles[1]), rz_matrix(angles[2])]
        axes = ["z", "y", "z"]
    factors[which] = (-0.5j * _PAULI[axes[which]]) @ factors[which]
    u = factors[0]
    for f in factors[1:]:
        u = u @ f
    return u


def run_batch(circuit: Circuit, params, data=None) -> np.ndarray:
    """Evolve ``|0...0>`` under the circuit for every row of ``params``.

    ``params`` has shape (B, P); ``data`` is (B, D) or a single row that is
    broadcast. Returns a (B, 2**N) complex array (a transposed view of the
    working buffer).
    """
    params, data = _as_batch(circuit, params, data)
    return _evolve(circuit, params, data).T


def run_circuit(circuit: Circuit, params, data=None) -> StateVector:
    params = np.asarray(params, dtype=np.float64)
    if params.ndim != 1:
        raise ContractError("run_circuit takes a single parameter vector")
    if data is not None:
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 1:
            raise ContractError("run_circuit takes a single data vector")
    return StateVector(run_batch(circuit, params, data)[0], circuit.num_qubits)


def state_derivative(circuit: Circuit, params, data=None, slot: int = 0) -> np.ndarray:
    """Analytic derivative of the output state with respect to one parameter.

    The generator ``-i sigma/2`` of the rotation factor that carries ``slot`` is
    inserted right at that factor. The result is not normalized.
    """
    if not 0 <= slot < circuit.num_params:
        raise ContractError(f"slot {slot} outside [0, {circuit.num_params})")
    params, data = _as_batch(circuit, np.asarray(params, dtype=np.float64), data)
    if params.shape[0] != 1:
        raise ContractError("state_derivative takes a single parameter vector")
    return _evolve(circuit, params, data, circuit.param_locations[slot])[:, 0]


def state_jacobian(circuit: Circuit, params, data=None) -> np.ndarray:
    """All parameter derivatives of the output state, shape (P, 2**N)."""
    return np.array([state_derivative(circuit, params, data, k) for k in range(circuit.num_params)])


# --------------------------------------------------------------------------
# observables; the *_batch variants act on (B, 2**N) arrays


def z_signs(num_qubits: int, qubit: int) -> np.ndarray:
    """+1 where ``qubit`` is 0 in the basis index, -1 where it is 1."""
    bits = (np.arange(2**num_qubits) >> (num_qubits - 1 - qubit)) & 1
    return 1.0 - 2.0 * bits


def expectation_z_batch(psi: np.ndarray, num_qubits: int, qubit: int) -> np.ndarray:
    _check_qubit(num_qubits, qubit)
    return (np.abs(psi) ** 2) @ z_signs(num_qubits, qubit)


def zero_probability_batch(psi: np.ndarray, num_qubits: int, qubit: int) -> np.ndarray:
    _check_qubit(num_qubits, qubit)
    mask = z_signs(num_qubits, qubit) > 0
    return (np.abs(psi) ** 2) @ mask.astype(np.float64)


def fidelity_batch(psi: np.ndarray, target: np.ndarray) -> np.ndarray:
    return np.abs(psi @ np.conj(target)) ** 2


def expectation_z(state: StateVector, qubit: int) -> float:
    return float(expectation_z_batch(state.amplitudes[None, :], state.num_qubits, qubit)[0])


def qubit_zero_probability(state: StateVector, qubit: int) -> float:
    return float(zero_probability_batch(state.amplitudes[None, :], state.num_qubits, qubit)[0])


def fidelity(state: StateVector, target: StateVector) -> float:
    if state.num_qubits != target.num_qubits:
        raise ContractError("fidelity of states with different qubit counts")
    return float(fidelity_batch(state.amplitudes[None, :], target.amplitudes)[0])
