"""Independent oracles that gate the build.

Each oracle compares library output against something that does not share its
code path: a closed form, a finite difference, or analytic moments. Run as
``python -m qlandscape.verify`` for report lines plus a JSON summary; the exit
code is nonzero if any oracle fails.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import losses, models, qsim, shiftcalc
from .rng import XorShift64Star

GRAD_TOL = 1e-6
HESS_TOL = 1e-5
VARIANCE_QUBITS = (2, 4, 6, 8)


@dataclass(frozen=True)
class OracleReport:
    name: str
    max_error: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"[{status}] {self.name}: max error {self.max_error:.3e} (tolerance {self.tolerance:.1e})"
        return f"{text} {self.detail}".rstrip()


def toy_closed_form_loss(theta) -> np.ndarray:
    """``1 - prod_i cos^2(theta_i / 2)`` row-wise."""
    theta = np.atleast_2d(theta)
    return 1.0 - np.prod(np.cos(theta / 2.0) ** 2, axis=1)


def oracle_toy_closed_form(num_qubits: int, trials: int = 100, seed: int = 0,
                           tol: float = 1e-10) -> OracleReport:
    if not 1 <= num_qubits <= 10:
        raise ValueError("closed-form oracle covers 1 <= N <= 10")
    rng = XorShift64Star(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, trials * num_qubits).reshape(trials, num_qubits)
    circuit = models.build_toy(num_qubits)
    loss = losses.GlobalFidelity(qsim.StateVector.zero(num_qubits))
    simulated = 1.0 - losses.circuit_outputs(circuit, loss, theta)[:, 0]
    err = float(np.max(np.abs(simulated - toy_closed_form_loss(theta))))
    return OracleReport(f"toy_closed_form[N={num_qubits}]", err, tol, err < tol, f"trials={trials}")


def _oracle_objective(circuit: qsim.Circuit, rng: XorShift64Star):
    if circuit.num_data:
        x = rng.uniform(-1.0, 1.0, circuit.num_data)
        return losses.SquareZ(), x[None, :], np.array([1.0])
    return losses.GlobalFidelity(qsim.uniform_superposition(circuit.num_qubits)), None, None


def oracle_shift_vs_fd(circuit: qsim.Circuit, trials: int = 20, seed: int = 0, name: str = "",
                       grad_tol: float = GRAD_TOL, hess_tol: float = HESS_TOL,
                       eps: float = 1e-5) -> tuple[OracleReport, OracleReport]:
    """Shift-rule gradient/Hessian against central differences at random points.

    Both oracles work from loss values only (a central difference for the
    gradient, a second-order stencil for the Hessian), so no shift-rule code is
    involved on the reference side.
    """
    rng = XorShift64Star(seed)
    loss, X, y = _oracle_objective(circuit, rng)
    objective = shiftcalc.CircuitObjective(circuit, loss, X, y)
    p = circuit.num_params
    g_err = h_err = 0.0
    for _ in range(trials):
        params = rng.uniform(0.0, 2.0 * np.pi, p)
        gh = objective.hessian(params)
        g_fd = shiftcalc.fd_gradient_oracle(objective.losses, params, eps)
        h_fd = fd_hessian_from_values(objective.losses, params, eps=1e-4)
        g_err = max(g_err, float(np.max(np.abs(gh.gradient - g_fd))))
        h_err = max(h_err, float(np.max(np.abs(gh.hessian - h_fd))))
    label = name or f"{circuit.num_qubits}q/{p}p"
    return (
        OracleReport(f"shift_vs_fd_gradient[{label}]", g_err, grad_tol, g_err < grad_tol, f"trials={trials}"),
        OracleReport(f"shift_vs_fd_hessian[{label}]", h_err, hess_tol, h_err < hess_tol, f"trials={trials}"),
    )


def fd_hessian_from_values(f, params, eps: float = 1e-4) -> np.ndarray:
    """Second-order central-difference Hessian from function values only.

    Diagonal: ``[f(+e) - 2 f + f(-e)] / e^2``; off-diagonal: the four-point
    stencil ``[f(++) - f(+-) - f(-+) + f(--)] / 4 e^2``. All points in one batch.
    """
    params = np.asarray(params, dtype=np.float64)
    p = params.shape[0]
    eye = np.eye(p) * eps
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    rows = [params, *(params + eye), *(params - eye)]
    for i, j in pairs:
        rows += [params + eye[i] + eye[j], params + eye[i] - eye[j],
                 params - eye[i] + eye[j], params - eye[i] - eye[j]]
    v = np.asarray(f(np.array(rows)), dtype=np.float64)
    f0 = v[0]
    hess = np.empty((p, p))
    hess[np.arange(p), np.arange(p)] = (v[1 : 1 + p] - 2 * f0 + v[1 + p : 1 + 2 * p]) / eps**2
    base = 1 + 2 * p
    for k, (i, j) in enumerate(pairs):
        a, b, c, d = v[base + 4 * k : base + 4 * k + 4]
        hess[i, j] = hess[j, i] = (a - b - c + d) / (4 * eps**2)
    return hess


def analytic_toy_gradient_variance(num_qubits: int) -> float:
    """Var[d l / d theta_1] over uniform theta for ``l = 1 - prod cos^2(theta_i / 2)``.

    ``dl/dtheta_1 = sin(theta_1)/2 * prod_{i>1} cos^2(theta_i/2)``; with
    E[sin^2] = 1/2 and E[cos^4(t/2)] = 3/8 the variance is (1/8)(3/8)^(N-1).
    """
    return 0.125 * 0.375 ** (num_qubits - 1)


def sample_toy_gradient_variance(num_qubits: int, samples: int, rng: XorShift64Star) -> float:
    """Sample variance of the shift-rule d l / d theta_1 over uniform draws."""
    circuit = models.build_toy(num_qubits)
    loss = losses.GlobalFidelity(qsim.StateVector.zero(num_qubits))
    theta = rng.uniform(0.0, 2.0 * np.pi, samples * num_qubits).reshape(samples, num_qubits)
    g = np.empty(samples)
    for k in range(samples):
        g[k] = shiftcalc.loss_gradient(circuit, theta[k], loss)[0]
    return float(np.var(g, ddof=1))


def oracle_variance_scaling(seed: int = 0, samples: int = 200,
                            qubits=VARIANCE_QUBITS) -> tuple[OracleReport, dict]:
    rng = XorShift64Star(seed)
    variances = {n: sample_toy_gradient_variance(n, samples, rng) for n in qubits}
    ns = np.array(list(variances), dtype=float)
    logv = np.log(np.array(list(variances.values())))
    slope = float(np.polyfit(ns, logv, 1)[0])
    ratio = variances[qubits[-1]] / variances[qubits[0]]
    exact_first = analytic_toy_gradient_variance(qubits[0])
    rel_first = abs(variances[qubits[0]] - exact_first) / exact_first
    monotone = all(a > b for a, b in zip(logv[:-1], logv[1:]))
    passed = slope < math.log(0.5) and ratio < 0.01 and rel_first < 0.25 and monotone
    detail = (f"slope={slope:.3f} ratio={ratio:.4g} (analytic {0.375 ** (qubits[-1] - qubits[0]):.4g}) "
              f"var(N={qubits[0]})={variances[qubits[0]]:.5g} vs {exact_first:.5g} monotone={monotone}")
    info = {"variances": {str(k): v for k, v in variances.items()}, "slope": slope, "ratio": ratio,
            "relative_error_first": rel_first, "monotone": monotone}
    return OracleReport("variance_scaling", rel_first, 0.25, passed, detail), info


def run_all(seed: int = 0, trials: int = 20) -> list[OracleReport]:
    reports = [oracle_toy_closed_form(n, 100, seed + n) for n in range(2, 11)]
    for name, circuit in (
        ("toy N=3", models.build_toy(3)),
        ("layered N=4 L=4", models.build_layered(4, 4)),
        ("reuploading N=4 L=4", models.build_reuploading(4, 4)),
    ):
        reports.extend(oracle_shift_vs_fd(circuit, trials, seed, name))
    reports.append(oracle_variance_scaling(seed)[0])
    return reports


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(prog="python -m qlandscape.verify", description="run the oracles")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trials", type=int, default=20)
    args = parser.parse_args(argv)
    reports = run_all(args.seed, args.trials)
    for r in reports:
        print(r.line())
    summary = {"passed": all(r.passed for r in reports), "reports": [asdict(r) for r in reports]}
    print(json.dumps(summary, indent=2))
    return 0 if summary["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
