"""Hessian eigenspectra: Jacobi eigensolver, stationary-point labels, perturbation scans."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

SYMMETRY_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # column i pairs with eigenvalues[i]
    sweeps: int = 0

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def default_tau(self) -> float:
        return default_tau(self.eigenvalues)


def default_tau(eigenvalues) -> float:
    """Zero threshold relative to the spectral range: 1e-6 * max(1, range)."""
    ev = np.asarray(eigenvalues)
    return 1e-6 * max(1.0, float(ev.max() - ev.min()))


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off**2)))


def jacobi_eigh(h: np.ndarray, tol: float = JACOBI_TOL,
                max_sweeps: int = JACOBI_MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray, int]:
    """Cyclic Jacobi with threshold sweeps.

    Returns unsorted eigenvalues, eigenvector columns and the number of sweeps.
    Stops once the off-diagonal Frobenius norm drops below ``tol * ||H||_F``.
    """
    a = np.array(h, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    if n < 2 or scale == 0.0:
        return np.diag(a).copy(), v, 0
    target = tol * scale
    sweep = 0
    while sweep < max_sweeps:
        off = _off_norm(a)
        if off < target:
            break
        sweep += 1
        # early sweeps skip small elements and rotate the big ones first
        threshold = 0.2 * off / n**2 if sweep < 4 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= threshold or apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweep


def eigendecompose(h) -> Spectrum:
    """Full eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Ties keep the Jacobi column order. Each eigenvector is signed so that its
    largest-magnitude component (first one on ties) is positive.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {h.shape}")
    asym = float(np.max(np.abs(h - h.T))) if h.size else 0.0
    if asym > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(h))) if h.size else 1.0):
        raise ContractError(f"matrix is not symmetric (max |H - H^T| = {asym:.3g})")
    vals, vecs, sweeps = jacobi_eigh(0.5 * (h + h.T))
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    for i in range(vecs.shape[1]):
        k = int(np.argmax(np.abs(vecs[:, i])))
        if vecs[k, i] < 0:
            vecs[:, i] = -vecs[:, i]
    return Spectrum(vals, vecs, sweeps)


# --------------------------------------------------------------------------

LABELS = ("minimum", "maximum", "saddle", "plateau", "non-stationary")


@dataclass(frozen=True)
class StationaryClass:
    label: str
    grad_norm: float
    n_negative: int
    n_zero: int
    n_positive: int
    tau: float


def classify_stationary(grad, spectrum: Spectrum, tau: float | None = None) -> StationaryClass:
    """Label a point from its gradient and Hessian spectrum.

    ``grad_norm`` is the infinity norm. A point whose gradient exceeds ``tau``
    is non-stationary; otherwise the eigenvalue signs beyond ``tau`` decide.
    """
    ev = np.asarray(spectrum.eigenvalues)
    if tau is None:
        tau = default_tau(ev)
    if tau <= 0:
        raise ContractError("tau must be positive")
    grad = np.asarray(grad, dtype=np.float64)
    gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
    neg = int(np.sum(ev < -tau))
    pos = int(np.sum(ev > tau))
    zero = ev.shape[0] - neg - pos
    if gnorm > tau:
        label = "non-stationary"
    elif neg and pos:
        label = "saddle"
    elif pos:
        label = "minimum"
    elif neg:
        label = "maximum"
    else:
        label = "plateau"
    return StationaryClass(label, gnorm, neg, zero, pos, float(tau))


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PerturbationCurve:
    epsilons: np.ndarray
    losses: np.ndarray
    quadratic_model: np.ndarray  # NaN when no eigenvalue was supplied
    eigenvalue: float | None = None

    def rows(self):
        return list(zip(self.epsilons.tolist(), self.losses.tolist(), self.quadratic_model.tolist()))


def perturbation_scan(loss_fn, params, direction, eps_grid, eigenvalue: float | None = None) -> PerturbationCurve:
    """Loss along ``params + eps * direction`` for each eps in the grid.

    ``loss_fn`` maps a (B, P) array of parameter rows to B loss values. With an
    eigenvalue supplied the quadratic model ``l(params) + eigenvalue * eps^2 / 2``
    is returned alongside.
    """
    params = np.asarray(params, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    if abs(float(np.linalg.norm(direction)) - 1.0) > 1e-10:
        raise ContractError("perturbation direction must be a unit vector")
    eps = np.asarray(eps_grid, dtype=np.float64)
    rows = np.concatenate([params[None, :], params[None, :] + eps[:, None] * direction[None, :]])
    values = np.asarray(loss_fn(rows), dtype=np.float64)
    base = values[0]
    losses = values[1:]
    # the eps = 0 row reuses the base evaluation so it is bit-identical to l(params)
    losses = np.where(eps == 0.0, base, losses)
    if eigenvalue is None:
        quad = np.full(eps.shape, np.nan)
    else:
        quad = base + 0.5 * eigenvalue * eps**2
    return PerturbationCurve(eps, losses, quad, eigenvalue)


def spectrum_series(snapshots) -> list[tuple[int, int, float]]:
    """Long-format (epoch, rank, eigenvalue) rows; rank 0 is the smallest eigenvalue."""
    snapshots = list(snapshots)
    if not snapshots:
        raise ContractError("spectrum_series needs at least one snapshot")
    rows = []
    for epoch, spectrum in snapshots:
        for rank, value in enumerate(np.asarray(spectrum.eigenvalues).tolist()):
            rows.append((int(epoch), rank, float(value)))
    return rows
