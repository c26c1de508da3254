"""Training loops for gradient descent, Hessian learning rate (H-LR) and QNG.

An *objective* is anything with ``num_params``, ``value``, ``gradient``,
``value_and_gradient``, ``hessian`` (returning :class:`GradHess`) and
``losses`` over a batch of parameter rows; see
:class:`qlandscape.shiftcalc.CircuitObjective` and
:class:`qlandscape.models.FfnnObjective`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qsim
from .errors import ContractError
from .qsim import Circuit
from .spectral import Spectrum, eigendecompose, jacobi_eigh

OPTIMIZERS = ("gd", "hlr", "qng")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "gd"
    eta: float = 0.1
    eta_cap: float = 2.0
    recompute_every: int = 1
    lambda_reg: float = 1e-6
    epochs: int = 100
    seed: int = 0
    delta: float = 1e-8  # lambda_max at or below this counts as flat

    def __post_init__(self):
        if self.kind not in OPTIMIZERS:
            raise ContractError(f"unknown optimizer {self.kind!r}; expected one of {OPTIMIZERS}")
        if self.eta <= 0 or self.eta_cap <= 0 or self.lambda_reg <= 0:
            raise ContractError("eta, eta_cap and lambda_reg must be positive")
        if self.recompute_every < 1:
            raise ContractError("recompute_every must be at least 1")
        if self.epochs < 0:
            raise ContractError("epochs must be non-negative")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float  # before the step of this epoch
    grad_norm: float
    learning_rate: float  # NaN on the final record, where no step is taken


@dataclass
class TrainingTrace:
    records: list[EpochRecord] = field(default_factory=list)
    params: np.ndarray | None = None
    snapshots: list[tuple[int, Spectrum]] = field(default_factory=list)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    @property
    def final_loss(self) -> float:
        return self.records[-1].loss

    def epochs_to_reach(self, threshold: float) -> int | None:
        """First epoch whose recorded loss is below ``threshold``."""
        for r in self.records:
            if r.loss < threshold:
                return r.epoch
        return None

    def rows(self):
        return [(r.epoch, r.loss, r.grad_norm, r.learning_rate) for r in self.records]


# --------------------------------------------------------------------------
# single steps


def gd_step(params, grad, eta: float) -> np.ndarray:
    if eta <= 0:
        raise ContractError("learning rate must be positive")
    return np.asarray(params, dtype=np.float64) - eta * np.asarray(grad, dtype=np.float64)


def power_iteration_lambda_max(h, tol: float = 1e-8, max_iter: int = 10000) -> float:
    """Largest signed eigenvalue of a symmetric matrix.

    Iterates on ``H + sigma I`` with ``sigma = ||H||_inf`` so the wanted
    eigenvalue dominates, and stops once the residual ``||H v - rho v||`` is
    below ``tol * max(1, ||H||_inf)``. Falls back to Jacobi on non-convergence.
    """
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[0]
    sigma = float(np.max(np.sum(np.abs(h), axis=1))) if n else 0.0
    if sigma == 0.0:
        return 0.0
    shifted = h + sigma * np.eye(n)
    # fixed, generic start vector
    v = 1.0 + 0.5 * np.sin(np.arange(1, n + 1) * 1.618)
    v /= np.linalg.norm(v)
    target = tol * max(1.0, sigma)
    for _ in range(max_iter):
        hv = h @ v
        rho = float(v @ hv)
        if np.linalg.norm(hv - rho * v) < target:
            return rho
        w = shifted @ v
        v = w / np.linalg.norm(w)
    vals, _, _ = jacobi_eigh(h)
    return float(np.max(vals))


def hessian_lr(lambda_max: float, eta_cap: float, delta: float = 1e-8) -> float:
    """``min(1 / lambda_max, eta_cap)``; ``eta_cap`` when the curvature is flat or negative."""
    if lambda_max <= delta:
        return eta_cap
    return min(1.0 / lambda_max, eta_cap)


@dataclass(frozen=True)
class HlrCache:
    lambda_max: float
    epoch: int


def hessian_lr_step(objective, params, epoch: int, cache: HlrCache | None,
                    config: OptimizerConfig):
    """One H-LR step. Returns ``(new_params, cache, eta, loss, grad)``.

    The Hessian is recomputed when ``epoch % recompute_every == 0`` (or with no
    cache yet); otherwise the cached lambda_max is reused.
    """
    if cache is None or epoch % config.recompute_every == 0:
        gh = objective.hessian(params)
        cache = HlrCache(power_iteration_lambda_max(gh.hessian), epoch)
        loss, grad = gh.value, gh.gradient
    else:
        loss, grad = objective.value_and_gradient(params)
    eta = hessian_lr(cache.lambda_max, config.eta_cap, config.delta)
    return gd_step(params, grad, eta), cache, eta, loss, grad


def fubini_study_metric(circuit: Circuit, params, data=None) -> np.ndarray:
    """``g_ij = Re[<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>]``."""
    psi = qsim.run_circuit(circuit, params, data).amplitudes
    jac = qsim.state_jacobian(circuit, params, data)
    overlaps = jac.conj() @ psi  # <d_i psi|psi>
    g = (jac.conj() @ jac.T - np.outer(overlaps, overlaps.conj())).real
    return 0.5 * (g + g.T)


def natural_gradient_direction(metric, grad, lambda_reg: float) -> np.ndarray:
    metric = np.asarray(metric, dtype=np.float64)
    reg = metric + lambda_reg * np.eye(metric.shape[0])
    try:
        return np.linalg.solve(reg, np.asarray(grad, dtype=np.float64))
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"QNG linear solve failed: {exc}") from exc


def qng_step(objective, params, eta: float, lambda_reg: float):
    """One QNG step on a data-free circuit objective. Returns ``(new_params, loss, grad)``."""
    if getattr(objective, "has_data", False) or not hasattr(objective, "circuit"):
        raise ContractError("QNG is defined here for data-free circuit objectives only")
    loss, grad = objective.value_and_gradient(params)
    g = fubini_study_metric(objective.circuit, params)
    step = natural_gradient_direction(g, grad, lambda_reg)
    return np.asarray(params, dtype=np.float64) - eta * step, loss, grad


# --------------------------------------------------------------------------


def train(objective, params0, config: OptimizerConfig, snapshot_every: int = 0,
          callback=None) -> TrainingTrace:
    """Full-batch training for ``config.epochs`` steps.

    Records ``epochs + 1`` entries: the loss before each step and the final
    loss. With ``snapshot_every = k > 0`` the Hessian spectrum is stored at
    every k-th epoch and at the final epoch. ``callback(epoch, params, record)``
    runs after each record.
    """
    params = np.array(params0, dtype=np.float64)
    if params.shape != (objective.num_params,):
        raise ContractError(f"expected {objective.num_params} initial parameters")
    trace = TrainingTrace()
    cache = None
    for epoch in range(config.epochs + 1):
        final = epoch == config.epochs
        snap = snapshot_every > 0 and (epoch % snapshot_every == 0 or final)
        gh = None
        if snap:
            gh = objective.hessian(params)
            trace.snapshots.append((epoch, eigendecompose(gh.hessian)))
        if final:
            if gh is not None:
                loss, grad = gh.value, gh.gradient
            else:
                loss, grad = objective.value_and_gradient(params)
            eta = math.nan
        elif config.kind == "gd":
            loss, grad = (gh.value, gh.gradient) if gh is not None else objective.value_and_gradient(params)
            eta = config.eta
            params = gd_step(params, grad, eta)
        elif config.kind == "hlr":
            params, cache, eta, loss, grad = hessian_lr_step(objective, params, epoch, cache, config)
        else:
            params, loss, grad = qng_step(objective, params, config.eta, config.lambda_reg)
            eta = config.eta
        record = EpochRecord(epoch, float(loss), float(np.linalg.norm(grad)), float(eta))
        trace.records.append(record)
        if callback is not None:
            callback(epoch, params, record)
    trace.params = params
    return trace
