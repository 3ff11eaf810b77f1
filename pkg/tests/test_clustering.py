"""Subspace assignment, clustering metrics and label correction."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cohpca.clustering import (
    ace,
    assign_to_subspaces,
    clustering_error,
    correct_clustering,
)
from cohpca.errors import DataError, NumericalError
from cohpca.models import gen_union, gen_unstructured
from cohpca.pursuit import CopConfig, TopFraction, cop, residual_outliers
from cohpca.rng import stream

from oracles import brute_assign, brute_clustering_error


def random_bases(m, dims, seed):
    rng = np.random.default_rng(seed)
    return [np.linalg.qr(rng.standard_normal((m, r)))[0] for r in dims]


# ---- pin the assignment oracle on a hand case ----


def test_assign_oracle_hand_case():
    e = np.eye(3)
    bases = [e[:, :1], e[:, 1:2]]  # span(e1) and span(e2)
    d = np.column_stack([e[:, 0], e[:, 1], (2 * e[:, 0] + e[:, 1])])
    assert brute_assign(d, bases).tolist() == [0, 1, 0]


def test_assign_matches_oracle_on_random_cases():
    for seed in range(25):
        rng = np.random.default_rng(1000 + seed)
        bases = random_bases(8, (2, 3, 2), seed)
        d = rng.standard_normal((8, 15))
        got = assign_to_subspaces(d, bases)
        np.testing.assert_array_equal(got, brute_assign(d, bases))


def test_assign_ties_go_to_the_lowest_cluster():
    e = np.eye(3)
    bases = [e[:, :1], e[:, :1]]  # identical subspaces: every score ties
    d = np.column_stack([e[:, 0], e[:, 0] * 2.0])
    assert assign_to_subspaces(d, bases).tolist() == [0, 0]


def test_assign_zero_columns_strict_and_lenient():
    e = np.eye(3)
    bases = [e[:, :1], e[:, 1:2]]
    d = np.column_stack([e[:, 0], np.zeros(3)])
    with pytest.raises(DataError, match="column 1"):
        assign_to_subspaces(d, bases)
    got = assign_to_subspaces(d, bases, strict=False, fallback=np.array([1, 1]))
    assert got.tolist() == [0, 1]
    with pytest.raises(DataError, match="fallback"):
        assign_to_subspaces(d, bases, strict=False)
    with pytest.raises(DataError):
        assign_to_subspaces(d, [])


# ---- clustering error ----


def test_clustering_error_hand_cases():
    truth = np.array([0, 0, 0, 1, 1])
    assert clustering_error(truth, truth) == 0.0
    assert clustering_error(1 - truth, truth) == 0.0  # swap is free
    pred = np.array([0, 0, 1, 1, 1])
    assert clustering_error(pred, truth) == pytest.approx(0.2)


def test_clustering_error_matches_oracle():
    rng = stream(77)
    for _ in range(20):
        L = int(rng.integers(2, 5))
        truth = rng.integers(0, L, 30)
        truth[: L] = np.arange(L)  # every cluster present
        pred = rng.integers(0, L, 30)
        got = clustering_error(pred, truth)
        assert got == pytest.approx(brute_clustering_error(pred, truth, L))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_clustering_error_is_relabeling_invariant(seed):
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, 3, 24)
    truth[:3] = [0, 1, 2]
    pred = rng.integers(0, 3, 24)
    table = rng.permutation(3)
    assert clustering_error(table[pred], truth) == clustering_error(pred, truth)


def test_clustering_error_validation():
    with pytest.raises(DataError):
        clustering_error(np.array([0, 1]), np.array([0, 1, 1]))
    with pytest.raises(DataError):
        clustering_error(np.array([0, 5]), np.array([0, 1]))
    with pytest.raises(DataError):
        clustering_error(np.arange(9), np.arange(9))  # 9 clusters > 8


# ---- average classification error ----


def test_ace_hand_cases():
    truth = np.array([0, 0, 1, 1, 1])
    assert ace(truth, truth) == 0.0
    assert ace(1 - truth, truth) == 1.0
    assert ace(np.zeros(5, dtype=int), truth) == 0.5
    # one inlier missed (1/2), one outlier missed (1/3)
    pred = np.array([0, 1, 1, 1, 0])
    assert ace(pred, truth) == pytest.approx(0.5 * (0.5 + 1.0 / 3.0))
    with pytest.raises(DataError):
        ace(truth, np.zeros(5, dtype=int))


def test_ace_of_recovered_labels_is_small():
    ds = gen_unstructured(100, 5, 100, 300, seed=13)
    basis = cop(ds.d, CopConfig(r=5)).basis
    assert ace(residual_outliers(ds.d, basis), ds.labels) <= 0.05


# ---- correction loop ----


def corrupted_union(seed, m=30, dims=(3, 3), sizes=(90, 90), frac=0.15):
    ds = gen_union(m, dims, sizes, seed=seed)
    rng = stream(seed, 1)
    n = ds.d.shape[1]
    flip = rng.choice(n, int(round(frac * n)), replace=False)
    labels = ds.labels.copy()
    labels[flip] = 1 - labels[flip]
    return ds, labels


def test_correction_fixes_corrupted_labels():
    ds, labels = corrupted_union(21)
    res = correct_clustering(ds.d, labels, r=3, iterations=4, truth=ds.labels)
    assert res.trajectory[0] == pytest.approx(0.15)
    assert res.trajectory[-1] <= 0.02
    assert len(res.bases) == 2


def test_correction_reaches_a_fixed_point():
    ds, labels = corrupted_union(22)
    res = correct_clustering(ds.d, labels, r=3, iterations=8, truth=ds.labels)
    assert res.converged_at is not None
    # the final labels reproduce themselves under one more reassignment
    again = correct_clustering(ds.d, res.labels, r=3, iterations=1)
    np.testing.assert_array_equal(again.labels, res.labels)
    assert again.converged_at == 1


def test_correction_without_truth_has_no_trajectory():
    ds, labels = corrupted_union(23)
    res = correct_clustering(ds.d, labels, r=3, iterations=2)
    assert res.trajectory is None


def test_correction_names_the_starved_cluster_and_round():
    ds = gen_union(20, (3, 3), (50, 50), seed=24)
    labels = np.zeros(100, dtype=int)
    labels[:2] = 1  # cluster 1 starts with 2 < r columns
    with pytest.raises(NumericalError, match=r"cluster 1 has 2 columns.*iteration 1"):
        correct_clustering(ds.d, labels, r=3, iterations=3)


def test_correction_validation():
    ds = gen_union(20, (2, 2), (30, 30), seed=25)
    with pytest.raises(DataError):
        correct_clustering(ds.d, ds.labels[:10], r=2, iterations=2)
    with pytest.raises(DataError):
        correct_clustering(ds.d, ds.labels, r=2, iterations=0)
    with pytest.raises(DataError):
        correct_clustering(ds.d, ds.labels - 1, r=2, iterations=2)


def test_correction_accepts_custom_config():
    ds, labels = corrupted_union(26)
    cfg = CopConfig(r=3, strategy=TopFraction(0.4))
    res = correct_clustering(ds.d, labels, r=3, iterations=3, cfg=cfg, truth=ds.labels)
    assert res.trajectory[-1] <= res.trajectory[0]
