"""k-NN heat-kernel graphs and their Laplacians, one per view."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class ViewGraph:
    S: np.ndarray
    D: np.ndarray
    L: np.ndarray
    k: int
    delta: float

    @property
    def degree(self) -> np.ndarray:
        return np.diag(self.D)


def knn_mask(sqdist: np.ndarray, k: int) -> np.ndarray:
    """Boolean matrix, True where j is among the k nearest of i or vice versa.

    Self-matches are excluded. Ties at equal distance go to the smaller
    sample index (stable sort).
    """
    n = sqdist.shape[0]
    d = sqdist.copy()
    np.fill_diagonal(d, np.inf)
    nearest = np.argsort(d, axis=1, kind="stable")[:, :k]
    mask = np.zeros((n, n), dtype=bool)
    mask[np.repeat(np.arange(n), k), nearest.ravel()] = True
    return mask | mask.T


def median_delta(sqdist: np.ndarray, mask: np.ndarray) -> float:
    dist = np.sqrt(sqdist[np.triu(mask, 1)])
    dist = dist[dist > 0]
    if dist.size == 0:
        return 1.0
    return float(np.median(dist))


def build_view_graph(X: np.ndarray, k: int, delta: Optional[float] = None) -> ViewGraph:
    """Graph over the columns of ``X``.

    ``delta=None`` selects the median of the nonzero k-NN edge lengths.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[1]
    if k < 1 or k >= n:
        raise GraphError(f"need 1 <= k < n, got k={k}, n={n}")
    if delta is not None and not delta > 0:
        raise GraphError(f"delta must be positive, got {delta}")
    sqdist = cdist(X.T, X.T, "sqeuclidean")
    mask = knn_mask(sqdist, k)
    if delta is None:
        delta = median_delta(sqdist, mask)
    S = np.where(mask, np.exp(-sqdist / (2.0 * delta**2)), 0.0)
    # cdist is symmetric up to round-off; force exact symmetry
    S = np.triu(S, 1)
    S = S + S.T
    D = np.diag(S.sum(axis=1))
    return ViewGraph(S=S, D=D, L=D - S, k=k, delta=float(delta))
