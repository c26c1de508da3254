"""Circle classification data and prediction-map grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .rng import XorShift64Star

RADIUS_SQ = 2.0 / np.pi  # disk area 2 = half of [-1, 1]^2


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray  # (M, 2)
    labels: np.ndarray  # (M,), entries +-1
    seed: int = 0

    def __len__(self) -> int:
        return self.points.shape[0]

    def balance(self) -> float:
        """Fraction of points labelled -1."""
        return float(np.mean(self.labels < 0)) if len(self) else 0.0


def circle_label(points) -> np.ndarray:
    """-1 strictly inside the disk of radius sqrt(2/pi), +1 on or outside it."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    return np.where(r2 < RADIUS_SQ, -1.0, 1.0)


def generate_circle_dataset(n: int, seed: int) -> Dataset:
    """n points uniform in [-1, 1)^2, drawn (x1, x2) per point from xorshift64*."""
    if n < 1:
        raise ContractError("dataset size must be at least 1")
    rng = XorShift64Star(seed)
    pts = np.empty((n, 2))
    for i in range(n):
        pts[i, 0] = 2.0 * rng.random() - 1.0
        pts[i, 1] = 2.0 * rng.random() - 1.0
    return Dataset(pts, circle_label(pts), seed)


def train_test_split(dataset: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded Fisher-Yates shuffle, then the first ``round(fraction * n)`` points train."""
    if not 0.0 < fraction < 1.0:
        raise ContractError("split fraction must lie in (0, 1)")
    n = len(dataset)
    order = list(range(n))
    rng = XorShift64Star(seed)
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    cut = int(round(fraction * n))
    first, second = np.array(order[:cut], dtype=int), np.array(order[cut:], dtype=int)
    return (
        Dataset(dataset.points[first], dataset.labels[first], dataset.seed),
        Dataset(dataset.points[second], dataset.labels[second], dataset.seed),
    )


@dataclass(frozen=True)
class PredictionGrid:
    axis: np.ndarray  # shared x1 / x2 coordinates
    values: np.ndarray  # values[i, j] at (x1 = axis[i], x2 = axis[j])

    def rows(self):
        """Row-major (x1, x2, value) triples."""
        out = []
        for i, x1 in enumerate(self.axis.tolist()):
            for j, x2 in enumerate(self.axis.tolist()):
                out.append((x1, x2, float(self.values[i, j])))
        return out

    def points(self) -> np.ndarray:
        x1, x2 = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.column_stack([x1.ravel(), x2.ravel()])


def grid_axis(resolution: int) -> np.ndarray:
    if resolution < 2:
        raise ContractError("grid resolution must be at least 2")
    return np.linspace(-1.0, 1.0, resolution)


def prediction_map(evaluator, resolution: int) -> PredictionGrid:
    """Evaluate a model on a uniform grid over [-1, 1]^2.

    ``evaluator`` takes a (K, 2) array of points and returns K values.
    """
    axis = grid_axis(resolution)
    x1, x2 = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([x1.ravel(), x2.ravel()])
    values = np.asarray(evaluator(pts), dtype=np.float64).reshape(resolution, resolution)
    return PredictionGrid(axis, values)


def accuracy(predictions, labels) -> float:
    """Fraction of points where sign(prediction) matches the label (0 counts as +1)."""
    pred = np.where(np.asarray(predictions) >= 0, 1.0, -1.0)
    return float(np.mean(pred == np.asarray(labels)))
