import numpy as np
import pytest

from dcs2mvnmf.constraints import build_label_constraint
from dcs2mvnmf.dataset import (UNLABELED, MultiViewDataset, SyntheticSpec, generate_synthetic,
                               mask_labels)
from dcs2mvnmf.graph import build_view_graph


def make_problem(seed, n_classes=3, per_class=10, view_dims=(8, 6), ratio=0.2, k=3,
                 noise=0.5):
    """Small synthetic problem with its constraint and graphs.

    ``ratio=None`` hides every label (unsupervised case).
    """
    ds = generate_synthetic(SyntheticSpec(n_classes=n_classes, samples_per_class=per_class,
                                          view_dims=view_dims, noise=noise, seed=seed))
    if ratio is None:
        masked = MultiViewDataset(views=ds.views, labels=np.full(ds.n, UNLABELED),
                                  n_classes=ds.n_classes, permutation=ds.permutation,
                                  truth=ds.truth)
    else:
        masked = mask_labels(ds, ratio, seed)
    constraint = build_label_constraint(masked.labels, masked.n_classes)
    graphs = [build_view_graph(X, k) for X in masked.views]
    return masked, constraint, graphs


@pytest.fixture
def problem():
    return make_problem(0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# filled by the acceptance suite, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
