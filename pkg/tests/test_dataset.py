import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcs2mvnmf.dataset import (UNLABELED, DatasetError, MultiViewDataset, SyntheticSpec,
                               from_arrays, generate_synthetic, load_dataset, mask_labels,
                               save_dataset)


def _write(tmp_path, views, labels):
    paths = []
    for i, v in enumerate(views):
        p = tmp_path / f"v{i}.csv"
        np.savetxt(p, np.asarray(v, dtype=float), delimiter=",")
        paths.append(str(p))
    lp = tmp_path / "labels.txt"
    lp.write_text("\n".join(str(x) for x in labels) + "\n")
    return paths, str(lp)


def test_load_reorders_labeled_first(tmp_path):
    v0 = np.arange(12, dtype=float).reshape(3, 4)
    v1 = np.arange(8, dtype=float).reshape(2, 4)
    paths, lp = _write(tmp_path, [v0, v1], [1, -1, 0, -1])
    ds = load_dataset(paths, lp)
    assert (ds.n, ds.n_labeled, ds.n_classes) == (4, 2, 2)
    assert ds.permutation.tolist() == [0, 2, 1, 3]
    assert ds.labels.tolist() == [1, 0, UNLABELED, UNLABELED]
    np.testing.assert_array_equal(ds.views[0], v0[:, [0, 2, 1, 3]])
    assert ds.truth is None


def test_load_dimension_mismatch(tmp_path):
    paths, lp = _write(tmp_path, [np.ones((2, 4)), np.ones((2, 5))], [0, 0, 0, 0])
    with pytest.raises(DatasetError, match="sample count"):
        load_dataset(paths, lp)


def test_load_all_unlabeled(tmp_path):
    paths, lp = _write(tmp_path, [np.ones((2, 3))], [-1, -1, -1])
    ds = load_dataset(paths, lp)
    assert ds.n_labeled == 0
    assert ds.permutation.tolist() == [0, 1, 2]


@pytest.mark.parametrize("bad", [-1.0, np.nan, np.inf])
def test_load_rejects_negative_and_nonfinite(tmp_path, bad):
    v = np.ones((2, 3))
    v[1, 1] = bad
    paths, lp = _write(tmp_path, [v], [0, 1, 0])
    with pytest.raises(DatasetError):
        load_dataset(paths, lp)


def test_declared_class_count_and_empty_class(tmp_path):
    paths, lp = _write(tmp_path, [np.ones((2, 3))], [0, 3, 0])
    with pytest.raises(DatasetError, match="declared"):
        load_dataset(paths, lp, n_classes=2)
    # class 1 and 2 never labeled
    with pytest.raises(DatasetError, match="without a labeled"):
        load_dataset(paths, lp)


def test_mask_labels_stratified():
    ds = generate_synthetic(SyntheticSpec(n_classes=4, samples_per_class=25, seed=1))
    m = mask_labels(ds, 0.10, seed=7)
    assert m.n_labeled == 10
    counts = np.bincount(m.labels[: m.n_labeled], minlength=4)
    assert set(counts.tolist()) <= {2, 3}
    assert np.all(m.labels[m.n_labeled:] == UNLABELED)
    np.testing.assert_array_equal(m.truth[: m.n_labeled], m.labels[: m.n_labeled])


def test_mask_ratio_one_is_identity():
    ds = generate_synthetic(SyntheticSpec(seed=2))
    m = mask_labels(ds, 1.0, seed=3)
    assert m.n_labeled == m.n
    np.testing.assert_array_equal(m.labels, ds.labels)
    np.testing.assert_array_equal(m.permutation, ds.permutation)


def test_mask_too_few_labels():
    ds = generate_synthetic(SyntheticSpec(n_classes=10, samples_per_class=2, seed=0))
    with pytest.raises(DatasetError, match="fewer than"):
        mask_labels(ds, 0.05, seed=0)


def test_remask_known_labels_changes_nothing():
    ds = generate_synthetic(SyntheticSpec(seed=4))
    m = mask_labels(ds, 0.2, seed=5)
    l = m.n_labeled
    known = MultiViewDataset(views=tuple(v[:, :l] for v in m.views), labels=m.labels[:l],
                             n_classes=m.n_classes, permutation=np.arange(l),
                             truth=m.truth[:l])
    again = mask_labels(known, 1.0, seed=99)
    assert again.n_labeled == l
    np.testing.assert_array_equal(again.labels, known.labels)
    for a, b in zip(again.views, known.views):
        np.testing.assert_array_equal(a, b)


def test_mask_maps_back_to_original_samples():
    ds = generate_synthetic(SyntheticSpec(seed=6))
    m = mask_labels(ds, 0.3, seed=1)
    # original-order truth is the same however the columns were shuffled
    orig = np.empty(ds.n, dtype=int)
    orig[ds.permutation] = ds.truth
    np.testing.assert_array_equal(orig[m.permutation], m.truth)
    np.testing.assert_array_equal(
        m.views[0][:, np.argsort(m.permutation)], ds.views[0][:, np.argsort(ds.permutation)]
    )


def test_synthetic_zero_noise_hits_centers():
    ds = generate_synthetic(SyntheticSpec(noise=0.0, seed=11))
    for X in ds.views:
        for k in range(ds.n_classes):
            cols = X[:, ds.truth == k]
            np.testing.assert_array_equal(cols, cols[:, [0]] * np.ones((1, cols.shape[1])))


def test_synthetic_deterministic_and_counts():
    spec = SyntheticSpec(n_classes=3, samples_per_class=50, view_dims=(5, 4), seed=8)
    a, b = generate_synthetic(spec), generate_synthetic(spec)
    for x, y in zip(a.views, b.views):
        assert x.tobytes() == y.tobytes()
    assert (a.n, a.n_views) == (150, 2)
    assert np.bincount(a.truth).tolist() == [50, 50, 50]


def test_round_trip_bit_exact(tmp_path):
    ds = mask_labels(generate_synthetic(SyntheticSpec(seed=9)), 1.0, 0)
    paths, lp = save_dataset(ds, str(tmp_path))
    back = load_dataset(paths, lp)
    for a, b in zip(ds.views, back.views):
        assert a[:, np.argsort(ds.permutation)].tobytes() == b.tobytes()
    np.testing.assert_array_equal(back.labels, ds.truth[np.argsort(ds.permutation)])


def test_dataset_is_read_only():
    ds = generate_synthetic(SyntheticSpec(seed=0))
    with pytest.raises(ValueError):
        ds.views[0][0, 0] = 1.0


@settings(max_examples=40, deadline=None)
@given(labels=st.lists(st.integers(-1, 3), min_size=1, max_size=25), seed=st.integers(0, 99))
def test_from_arrays_invariants(labels, seed):
    rng = np.random.default_rng(seed)
    present = sorted({x for x in labels if x >= 0})
    # compact ids so no class is empty
    remap = {c: i for i, c in enumerate(present)}
    labels = [remap.get(x, -1) for x in labels]
    views = [rng.uniform(0, 1, (3, len(labels))), rng.uniform(0, 1, (2, len(labels)))]
    ds = from_arrays(views, labels)
    l = ds.n_labeled
    assert np.all(ds.labels[:l] >= 0) and np.all(ds.labels[l:] == UNLABELED)
    assert sorted(ds.permutation.tolist()) == list(range(len(labels)))
    np.testing.assert_array_equal(np.asarray(labels)[ds.permutation], ds.labels)
    for X, V in zip(ds.views, views):
        np.testing.assert_array_equal(X, V[:, ds.permutation])
