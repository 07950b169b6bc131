"""Multi-view datasets: loading, synthetic generation and label masking.

Views are stored features x samples. Every dataset keeps its labeled
samples in the leading columns; the column permutation back to the
original sample order is carried along in ``permutation``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

UNLABELED = -1


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class MultiViewDataset:
    views: tuple
    labels: np.ndarray
    n_classes: int
    permutation: np.ndarray
    # complete ground truth in internal column order, when known
    truth: Optional[np.ndarray] = None

    def __post_init__(self):
        views = tuple(np.array(v, dtype=np.float64) for v in self.views)
        labels = np.asarray(self.labels, dtype=np.int64)
        perm = np.asarray(self.permutation, dtype=np.int64)
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "permutation", perm)
        if self.truth is not None:
            object.__setattr__(self, "truth", np.asarray(self.truth, dtype=np.int64))
        for arr in (labels, perm, *views) + ((self.truth,) if self.truth is not None else ()):
            arr.setflags(write=False)
        self.validate()

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def n_labeled(self) -> int:
        return int(np.count_nonzero(self.labels != UNLABELED))

    @property
    def view_dims(self) -> tuple:
        return tuple(v.shape[0] for v in self.views)

    def validate(self) -> None:
        n = self.n
        if not self.views:
            raise DatasetError("dataset has no views")
        for i, v in enumerate(self.views):
            if v.ndim != 2:
                raise DatasetError(f"view {i} is not a matrix")
            if v.shape[1] != n:
                raise DatasetError(
                    f"view {i} has {v.shape[1]} columns, expected {n} (one per sample)"
                )
            if not np.all(np.isfinite(v)):
                raise DatasetError(f"view {i} contains non-finite entries")
            if np.any(v < 0):
                raise DatasetError(f"view {i} contains negative entries")
        known = self.labels[self.labels != UNLABELED]
        if np.any(known < 0) or np.any(known >= self.n_classes):
            raise DatasetError("label id outside [0, n_classes)")
        l = self.n_labeled
        if np.any(self.labels[:l] == UNLABELED):
            raise DatasetError("labeled samples must precede unlabeled ones")
        if l > 0:
            missing = np.setdiff1d(np.arange(self.n_classes), self.labels[:l])
            if missing.size:
                raise DatasetError(f"classes without a labeled sample: {missing.tolist()}")
        if sorted(self.permutation.tolist()) != list(range(n)):
            raise DatasetError("permutation is not a bijection on [0, n)")
        if self.truth is not None:
            if self.truth.shape != (n,) or np.any(self.truth < 0) or np.any(
                self.truth >= self.n_classes
            ):
                raise DatasetError("ground truth must hold a class id for every sample")
            known = self.labels != UNLABELED
            if np.any(self.truth[known] != self.labels[known]):
                raise DatasetError("labels disagree with ground truth")


def from_arrays(views: Sequence[np.ndarray], labels: Sequence[int],
                n_classes: Optional[int] = None) -> MultiViewDataset:
    """Build a dataset from original-order arrays, reordering labeled-first."""
    labels = np.asarray(labels, dtype=np.int64)
    views = [np.asarray(v, dtype=np.float64) for v in views]
    ncols = {v.shape[1] for v in views}
    if len(ncols) != 1:
        raise DatasetError(f"views disagree on sample count: {sorted(ncols)}")
    if ncols.pop() != labels.shape[0]:
        raise DatasetError("label count does not match sample count")
    if np.any(labels < UNLABELED):
        raise DatasetError("label ids must be >= 0 or -1 for unlabeled")
    known = labels[labels != UNLABELED]
    inferred = int(known.max()) + 1 if known.size else 0
    if n_classes is None:
        n_classes = inferred
    elif inferred > n_classes:
        raise DatasetError(f"label id {inferred - 1} >= declared class count {n_classes}")
    order = np.concatenate([np.flatnonzero(labels != UNLABELED),
                            np.flatnonzero(labels == UNLABELED)])
    truth = labels[order] if known.size == labels.size else None
    return MultiViewDataset(
        views=tuple(v[:, order] for v in views),
        labels=labels[order],
        n_classes=n_classes,
        permutation=order,
        truth=truth,
    )


def load_dataset(view_paths: Sequence[str], label_path: str,
                 n_classes: Optional[int] = None) -> MultiViewDataset:
    views = []
    for p in view_paths:
        arr = np.loadtxt(p, delimiter=",", dtype=np.float64, ndmin=2)
        views.append(arr)
    labels = np.loadtxt(label_path, dtype=np.int64, ndmin=1)
    return from_arrays(views, labels, n_classes)


def save_dataset(dataset: MultiViewDataset, directory: str, original_order: bool = True):
    """Write views as ``view_<v>.csv`` and labels as ``labels.txt``.

    With ``original_order`` the columns are put back through the
    permutation. Ground truth is written when known, so a synthetic
    dataset round-trips with its labels.
    """
    os.makedirs(directory, exist_ok=True)
    inv = np.argsort(dataset.permutation) if original_order else np.arange(dataset.n)
    labels = dataset.truth if dataset.truth is not None else dataset.labels
    paths = []
    for i, v in enumerate(dataset.views):
        path = os.path.join(directory, f"view_{i}.csv")
        # 17 significant digits make the text round-trip exact
        np.savetxt(path, v[:, inv], delimiter=",", fmt="%.17g")
        paths.append(path)
    label_path = os.path.join(directory, "labels.txt")
    np.savetxt(label_path, labels[inv], fmt="%d")
    return paths, label_path


def mask_labels(dataset: MultiViewDataset, ratio: float, seed: int) -> MultiViewDataset:
    """Keep about ``ratio * n`` labels, stratified by class (at least one each).

    Hidden labels stay available as ``truth``. The result is reordered so
    the retained labels come first.
    """
    if not 0 < ratio <= 1:
        raise DatasetError(f"ratio must lie in (0, 1], got {ratio}")
    truth = dataset.truth if dataset.truth is not None else dataset.labels
    if np.any(truth == UNLABELED):
        raise DatasetError("mask_labels needs complete ground-truth labels")
    n, c = dataset.n, dataset.n_classes
    total = int(round(ratio * n))
    if total < c:
        raise DatasetError(
            f"ratio {ratio} keeps {total} labels, fewer than the {c} classes"
        )
    counts = np.bincount(truth, minlength=c)
    if np.any(counts == 0):
        raise DatasetError("every class needs at least one sample")
    # largest-remainder apportionment with a floor of one label per class
    exact = ratio * counts
    quota = np.maximum(1, np.floor(exact).astype(np.int64))
    quota = np.minimum(quota, counts)
    spare = total - int(quota.sum())
    if spare > 0:
        remainder = exact - np.floor(exact)
        remainder[quota >= counts] = -np.inf
        for k in np.argsort(-remainder, kind="stable"):
            if spare == 0:
                break
            if quota[k] < counts[k]:
                quota[k] += 1
                spare -= 1

    rng = np.random.default_rng(seed)
    keep = np.zeros(n, dtype=bool)
    for k in range(c):
        members = np.flatnonzero(truth == k)
        keep[rng.choice(members, size=quota[k], replace=False)] = True

    order = np.concatenate([np.flatnonzero(keep), np.flatnonzero(~keep)])
    labels = np.where(keep, truth, UNLABELED)[order]
    return MultiViewDataset(
        views=tuple(v[:, order] for v in dataset.views),
        labels=labels,
        n_classes=c,
        permutation=dataset.permutation[order],
        truth=truth[order],
    )


@dataclass
class SyntheticSpec:
    n_classes: int = 3
    samples_per_class: int = 50
    view_dims: tuple = (30, 20)
    separation: float = 1.0
    noise: float = 0.5
    seed: int = 0

    @property
    def n_views(self) -> int:
        return len(self.view_dims)


def generate_synthetic(spec: SyntheticSpec) -> MultiViewDataset:
    """Gaussian blobs around nonnegative class centers, one set per view.

    Each view gets its own centers; a sample keeps its class in every
    view. Sample order is shuffled so labels are not sorted by class.
    """
    if spec.n_classes < 1 or spec.samples_per_class < 1 or spec.n_views < 1:
        raise DatasetError("class, sample and view counts must be >= 1")
    if any(int(m) < 1 for m in spec.view_dims):
        raise DatasetError("view dimensions must be >= 1")
    if spec.noise < 0 or spec.separation < 0:
        raise DatasetError("noise and separation must be >= 0")

    rng = np.random.default_rng(spec.seed)
    c, per = spec.n_classes, spec.samples_per_class
    n = c * per
    labels = rng.permutation(np.repeat(np.arange(c), per))
    views = []
    for m in spec.view_dims:
        centers = spec.separation * rng.uniform(0.0, 1.0, size=(int(m), c))
        X = centers[:, labels]
        if spec.noise > 0:
            X = np.clip(X + spec.noise * rng.standard_normal((int(m), n)), 0.0, None)
        views.append(X)
    return from_arrays(views, labels, c)
