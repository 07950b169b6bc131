"""Clustering of the learned representation and AC / NMI scoring."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .constraints import LabelConstraint, merge_rows
from .factorization import FactorizationState


@dataclass
class ClusteringResult:
    assignments: np.ndarray
    matched_permutation: np.ndarray
    AC: float
    NMI: float


@dataclass
class KMeansResult:
    assignments: np.ndarray
    centers: np.ndarray
    sse: float
    # within-cluster SSE after every Lloyd iteration of the winning restart
    history: List[float] = field(default_factory=list)
    restart: int = 0


@dataclass
class RunScores:
    AC: np.ndarray
    NMI: np.ndarray
    seeds: list

    @property
    def AC_mean(self) -> float:
        return float(np.mean(self.AC))

    @property
    def NMI_mean(self) -> float:
        return float(np.mean(self.NMI))

    @property
    def AC_std(self) -> float:
        return _sample_std(self.AC)

    @property
    def NMI_std(self) -> float:
        return _sample_std(self.NMI)

    def format(self) -> str:
        """Table-style percentages, e.g. ``'61.03±3.57 / 63.35±2.18'``."""
        return (f"{100 * self.AC_mean:.2f}±{100 * self.AC_std:.2f} / "
                f"{100 * self.NMI_mean:.2f}±{100 * self.NMI_std:.2f}")


def _sample_std(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.std(x, ddof=1)) if x.size > 1 else 0.0


def extract_representation(state: FactorizationState, constraint: LabelConstraint) -> np.ndarray:
    """Consensus representation ``A Z_c``, one row per sample."""
    return merge_rows(constraint, state.Z_c)


def _sq_dists(points, centers):
    d = (np.sum(points**2, axis=1)[:, None] - 2.0 * points @ centers.T
         + np.sum(centers**2, axis=1)[None, :])
    return np.maximum(d, 0.0)


def farthest_point_seeds(points: np.ndarray, c: int, first: int) -> np.ndarray:
    """Greedy seeding: start at ``first``, then repeatedly take the point
    farthest from every chosen center (lowest index on ties)."""
    chosen = [first]
    closest = np.sum((points - points[first]) ** 2, axis=1)
    for _ in range(1, c):
        nxt = int(np.argmax(closest))
        chosen.append(nxt)
        closest = np.minimum(closest, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[chosen].copy()


def lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int = 300):
    """Lloyd iterations from given centers.

    An emptied cluster takes the point of the largest cluster that lies
    farthest from its center. Returns (assignments, centers, sse_history).
    """
    centers = centers.copy()
    c = centers.shape[0]
    history = []
    assign = None
    for _ in range(max_iter):
        d = _sq_dists(points, centers)
        new_assign = np.argmin(d, axis=1)
        counts = np.bincount(new_assign, minlength=c)
        for empty in np.flatnonzero(counts == 0):
            big = int(np.argmax(counts))
            members = np.flatnonzero(new_assign == big)
            far = members[np.argmax(d[members, big])]
            new_assign[far] = empty
            counts = np.bincount(new_assign, minlength=c)
        for k in range(c):
            centers[k] = points[new_assign == k].mean(axis=0)
        sse = float(np.sum((points - centers[new_assign]) ** 2))
        history.append(sse)
        if assign is not None and np.array_equal(assign, new_assign):
            break
        assign = new_assign
    return new_assign, centers, history


def kmeans(points: np.ndarray, c: int, seed: int, restarts: int = 20,
           max_iter: int = 300) -> KMeansResult:
    """Best of ``restarts`` Lloyd runs by SSE (earliest restart on ties)."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if c > n:
        raise ValueError(f"cannot form {c} clusters from {n} points")
    rng = np.random.default_rng(seed)
    firsts = rng.integers(0, n, size=restarts)
    best = None
    for r, first in enumerate(firsts):
        assign, centers, history = lloyd(points, farthest_point_seeds(points, c, int(first)),
                                         max_iter)
        if best is None or history[-1] < best.sse:
            best = KMeansResult(assign, centers, history[-1], history, r)
    return best


def contingency(pred, truth, n_pred: Optional[int] = None, n_true: Optional[int] = None):
    pred, truth = np.asarray(pred), np.asarray(truth)
    n_pred = n_pred or int(pred.max()) + 1
    n_true = n_true or int(truth.max()) + 1
    M = np.zeros((n_pred, n_true), dtype=np.int64)
    np.add.at(M, (pred, truth), 1)
    return M


def hungarian_match(confusion: np.ndarray):
    """Permutation ``perm`` maximizing ``sum_i confusion[i, perm[i]]``.

    Returns (perm, matched_count).
    """
    confusion = np.asarray(confusion)
    if confusion.ndim != 2 or confusion.shape[0] != confusion.shape[1]:
        raise ValueError("confusion matrix must be square")
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    perm = np.empty(confusion.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm, int(confusion[rows, cols].sum())


def _check_pair(pred, truth):
    pred, truth = np.asarray(pred, dtype=np.int64), np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    return pred, truth


def accuracy(pred, truth, c: Optional[int] = None) -> float:
    pred, truth = _check_pair(pred, truth)
    size = max(c or 0, int(pred.max()) + 1, int(truth.max()) + 1)
    _, matched = hungarian_match(contingency(pred, truth, size, size))
    return matched / pred.size


def _entropy(counts) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth) -> float:
    """Mutual information over the geometric mean of the two entropies."""
    pred, truth = _check_pair(pred, truth)
    _, pred = np.unique(pred, return_inverse=True)
    _, truth = np.unique(truth, return_inverse=True)
    # fixed argument order makes the float sums, and so the result, exactly symmetric
    if pred.tobytes() > truth.tobytes():
        pred, truth = truth, pred
    M = contingency(pred, truth)
    h_pred = _entropy(M.sum(axis=1))
    h_true = _entropy(M.sum(axis=0))
    if h_pred == 0.0 or h_true == 0.0:
        return 1.0 if h_pred == h_true else 0.0
    P = M / M.sum()
    outer = np.outer(P.sum(axis=1), P.sum(axis=0))
    nz = P > 0
    mi = float(np.sum(P[nz] * np.log(P[nz] / outer[nz])))
    return float(min(1.0, max(0.0, mi / np.sqrt(h_pred * h_true))))


def score(pred, truth, c: int) -> ClusteringResult:
    pred, truth = _check_pair(pred, truth)
    size = max(c, int(pred.max()) + 1, int(truth.max()) + 1)
    perm, matched = hungarian_match(contingency(pred, truth, size, size))
    return ClusteringResult(pred, perm, matched / pred.size, nmi(pred, truth))


def cluster(representation: np.ndarray, c: int, seed: int, assign: str = "kmeans",
            restarts: int = 20) -> np.ndarray:
    if assign == "kmeans":
        return kmeans(representation, c, seed, restarts).assignments
    if assign == "argmax":
        # d = c * m_s: sum each class block, then take the heaviest
        blocks = representation.reshape(representation.shape[0], c, -1).sum(axis=2)
        return np.argmax(blocks, axis=1)
    raise ValueError(f"unknown assignment rule {assign!r}")


def evaluate_representation(representation: np.ndarray, truth, c: int,
                            seeds: Sequence[int], assign: str = "kmeans",
                            restarts: int = 20) -> RunScores:
    ac, nm = [], []
    for s in seeds:
        pred = cluster(representation, c, int(s), assign, restarts)
        ac.append(accuracy(pred, truth, c))
        nm.append(nmi(pred, truth))
    return RunScores(np.array(ac), np.array(nm), [int(s) for s in seeds])


def evaluate_run(state: FactorizationState, dataset, constraint: LabelConstraint,
                 repeats: int = 10, seeds: Optional[Sequence[int]] = None,
                 assign: str = "kmeans", restarts: int = 20) -> RunScores:
    """Cluster ``A Z_c`` once per seed and score against the held-out truth."""
    if dataset.truth is None:
        raise ValueError("dataset carries no ground truth")
    if seeds is None:
        seeds = range(repeats)
    H = extract_representation(state, constraint)
    return evaluate_representation(H, dataset.truth, dataset.n_classes, seeds, assign,
                                   restarts)
