"""Label-constraint matrix and discriminative mask."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import UNLABELED


class ConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class LabelConstraint:
    """Block matrices derived from a labeled-first label vector.

    ``A`` maps the reduced coefficient rows onto samples: labeled samples
    point at the row of their class, unlabeled samples get a private row.
    ``I_disc`` is zero on each class row's own ``m_s`` latent columns and
    one elsewhere, and zero on the rows of unlabeled samples.
    """

    A: np.ndarray
    C: np.ndarray
    I_disc: np.ndarray
    n_classes: int
    m_s: int
    # row of the reduced matrix each sample reads from
    row_index: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_rows(self) -> int:
        return self.A.shape[1]

    @property
    def d(self) -> int:
        return self.n_classes * self.m_s

    @property
    def n_labeled(self) -> int:
        return self.C.shape[0]


def build_label_constraint(labels, n_classes: int, m_s: int = 1) -> LabelConstraint:
    labels = np.asarray(labels, dtype=np.int64)
    if m_s < 1:
        raise ConstraintError("m_s must be a positive integer")
    if n_classes < 1:
        raise ConstraintError("n_classes must be >= 1")
    known = labels != UNLABELED
    l = int(known.sum())
    n = labels.shape[0]
    if np.any(~known[:l]):
        raise ConstraintError("labeled sample found after an unlabeled one")
    if np.any((labels[:l] < 0) | (labels[:l] >= n_classes)) or np.any(labels < UNLABELED):
        raise ConstraintError("label id out of range")
    d = n_classes * m_s

    if l == 0:
        # unsupervised: A is the identity and there are no class rows
        A = np.eye(n)
        return LabelConstraint(A=A, C=np.zeros((0, n_classes)), I_disc=np.zeros((n, d)),
                               n_classes=n_classes, m_s=m_s, row_index=np.arange(n))

    present = np.unique(labels[:l])
    if present.size != n_classes:
        missing = np.setdiff1d(np.arange(n_classes), present)
        raise ConstraintError(f"classes without a labeled sample: {missing.tolist()}")

    C = np.zeros((l, n_classes))
    C[np.arange(l), labels[:l]] = 1.0
    n_rows = n - l + n_classes
    A = np.zeros((n, n_rows))
    A[:l, :n_classes] = C
    A[l:, n_classes:] = np.eye(n - l)

    I_disc = np.zeros((n_rows, d))
    I_disc[:n_classes] = 1.0
    for r in range(n_classes):
        I_disc[r, r * m_s:(r + 1) * m_s] = 0.0

    row_index = np.concatenate([labels[:l], n_classes + np.arange(n - l)])
    return LabelConstraint(A=A, C=C, I_disc=I_disc, n_classes=n_classes, m_s=m_s,
                           row_index=row_index)


def merge_rows(constraint: LabelConstraint, Z: np.ndarray) -> np.ndarray:
    """Per-sample representation ``H = A Z``."""
    Z = np.asarray(Z)
    if Z.ndim != 2 or Z.shape[0] != constraint.n_rows:
        raise ConstraintError(
            f"Z has shape {Z.shape}, expected ({constraint.n_rows}, d)"
        )
    return constraint.A @ Z
