"""Semi-supervised multi-view NMF with a discriminative mask, graph
regularization and basis-norm normalization."""

from .constraints import LabelConstraint, build_label_constraint, merge_rows
from .dataset import (UNLABELED, MultiViewDataset, SyntheticSpec, generate_synthetic,
                      load_dataset, mask_labels, save_dataset)
from .evaluation import accuracy, evaluate_run, extract_representation, kmeans, nmi
from .factorization import (VARIANTS, FactorizationState, SolverConfig, fit, initialize,
                            objective)
from .graph import ViewGraph, build_view_graph

__version__ = "0.1.0"

__all__ = [
    "UNLABELED", "MultiViewDataset", "SyntheticSpec", "generate_synthetic", "load_dataset",
    "mask_labels", "save_dataset", "LabelConstraint", "build_label_constraint", "merge_rows",
    "ViewGraph", "build_view_graph", "VARIANTS", "SolverConfig", "FactorizationState",
    "initialize", "objective", "fit", "accuracy", "nmi", "kmeans", "extract_representation",
    "evaluate_run",
]
