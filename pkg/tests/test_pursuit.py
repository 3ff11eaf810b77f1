"""Sampling strategies and the full recovery pipeline."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cohpca.errors import DataError, NumericalError
from cohpca.linalg import CoherenceProfile, coherence, normalize_columns, recovery_error
from cohpca.models import gen_noisy, gen_unstructured, sigma_for_tau
from cohpca.pursuit import (
    Adaptive,
    CopConfig,
    FixedCount,
    GreedyRank,
    TopFraction,
    adaptive_sampling,
    cop,
    cop_multipass,
    greedy_rank_sampling,
    residual_outliers,
    spca,
    top_fraction_sampling,
    with_strategy,
)


def profile(values):
    return CoherenceProfile(np.asarray(values, dtype=np.float64), 2)


E = np.eye(4)


# ---- greedy rank sampling ----


def test_greedy_skips_linearly_dependent_duplicates():
    x = np.column_stack([E[:, 0], E[:, 0], E[:, 1], E[:, 2]])
    picks = greedy_rank_sampling(x, profile([4.0, 3.0, 2.0, 1.0]), r=2)
    assert picks.tolist() == [0, 2]


def test_greedy_breaks_ties_toward_lower_index():
    x = np.column_stack([E[:, 0], E[:, 1], E[:, 2]])
    picks = greedy_rank_sampling(x, profile([1.0, 1.0, 1.0]), r=2)
    assert picks.tolist() == [0, 1]


def test_greedy_follows_coherence_order():
    x = np.column_stack([E[:, 0], E[:, 1], E[:, 2]])
    picks = greedy_rank_sampling(x, profile([1.0, 5.0, 3.0]), r=2)
    assert picks.tolist() == [1, 2]


def test_greedy_raises_when_candidates_run_out():
    x = np.column_stack([E[:, 0], E[:, 0]])
    with pytest.raises(NumericalError, match="need r=2"):
        greedy_rank_sampling(x, profile([2.0, 1.0]), r=2)


def test_greedy_rank_tol_controls_near_duplicates():
    near = E[:, 0] + 1e-12 * E[:, 1]
    near /= np.linalg.norm(near)
    x = np.column_stack([E[:, 0], near, E[:, 1]])
    prof = profile([3.0, 2.0, 1.0])
    assert greedy_rank_sampling(x, prof, r=2, rank_tol=1e-10).tolist() == [0, 2]
    assert greedy_rank_sampling(x, prof, r=2, rank_tol=1e-14).tolist() == [0, 1]


def test_greedy_validates_input():
    x = np.column_stack([E[:, 0], E[:, 1]])
    with pytest.raises(DataError):
        greedy_rank_sampling(x, profile([1.0]), r=1)
    with pytest.raises(DataError):
        greedy_rank_sampling(x, profile([1.0, 2.0]), r=5)


# ---- top fraction / fixed count ----


def test_top_fraction_keeps_the_ceiling():
    prof = profile([5.0, 4.0, 3.0, 2.0, 1.0])
    assert top_fraction_sampling(prof, 0.5).tolist() == [0, 1, 2]
    assert top_fraction_sampling(prof, 0.2).tolist() == [0, 1, 2, 3]
    assert top_fraction_sampling(prof, 0.9).tolist() == [0]


def test_top_fraction_orders_by_value_with_stable_ties():
    prof = profile([1.0, 3.0, 3.0, 2.0])
    assert top_fraction_sampling(prof, 0.25).tolist() == [1, 2, 3]
    with pytest.raises(DataError):
        top_fraction_sampling(prof, 0.0)
    with pytest.raises(DataError):
        top_fraction_sampling(prof, 1.0)


def test_fixed_count_via_cop_caps_at_n():
    ds = gen_unstructured(20, 2, 10, 0, seed=0)
    res = cop(ds.d, CopConfig(r=2, strategy=FixedCount(count=50)))
    assert len(res.sampled) == 10
    with pytest.raises(DataError):
        cop(ds.d, CopConfig(r=2, strategy=FixedCount(count=0)))


# ---- adaptive sampling ----


def test_adaptive_retires_deflated_duplicates():
    x = np.column_stack([E[:, 0], E[:, 0], E[:, 1]])
    prof = profile([3.0, 2.0, 1.0])
    picks = adaptive_sampling(x, prof, r=2, upsilon=1e-8, phi=np.eye(4))
    assert picks.tolist() == [0, 2]


def test_adaptive_spans_the_subspace_like_greedy():
    ds = gen_unstructured(50, 4, 30, 100, seed=1)
    x, _ = normalize_columns(ds.d)
    prof = coherence(x, 2)
    a = adaptive_sampling(x, prof, r=4, upsilon=0.0, seed=7)
    g = greedy_rank_sampling(x, prof, r=4)
    basis_a = np.linalg.qr(x[:, a])[0]
    basis_g = np.linalg.qr(x[:, g])[0]
    assert recovery_error(ds.basis, basis_a) < 1e-9
    assert recovery_error(ds.basis, basis_g) < 1e-9


def test_adaptive_exhausts_when_threshold_eats_everything():
    x = np.column_stack([E[:, 0], E[:, 1]])
    with pytest.raises(NumericalError, match="exhausted after 0 of 1"):
        adaptive_sampling(
            x, profile([2.0, 1.0]), r=1, k=2, upsilon=100.0, phi=np.eye(4)[:2]
        )


def test_adaptive_auto_threshold_and_validation():
    ds = gen_unstructured(30, 3, 20, 40, seed=2)
    x, _ = normalize_columns(ds.d)
    prof = coherence(x, 2)
    picks = adaptive_sampling(x, prof, r=3, upsilon=None, seed=0)
    assert len(picks) == 3
    with pytest.raises(DataError):
        adaptive_sampling(x, prof, r=3, k=0)
    with pytest.raises(DataError):
        adaptive_sampling(x, prof, r=3, upsilon=-1.0)


def test_adaptive_is_deterministic_per_seed():
    ds = gen_unstructured(40, 3, 25, 80, seed=3)
    x, _ = normalize_columns(ds.d)
    prof = coherence(x, 2)
    a = adaptive_sampling(x, prof, r=3, seed=5)
    b = adaptive_sampling(x, prof, r=3, seed=5)
    np.testing.assert_array_equal(a, b)


# ---- the full pipeline ----


def test_cop_recovers_with_every_strategy():
    ds = gen_unstructured(80, 4, 40, 400, seed=4)
    for strategy in (
        GreedyRank(),
        FixedCount(count=20),
        Adaptive(k=2),
        TopFraction(q=0.95),
    ):
        res = cop(ds.d, CopConfig(r=4, strategy=strategy))
        assert res.basis.shape == (80, 4)
        err = recovery_error(ds.basis, res.basis)
        assert err < 1e-9, (strategy, err)


def test_cop_maps_indices_past_dropped_columns():
    ds = gen_unstructured(30, 3, 15, 30, seed=5)
    d = np.insert(ds.d, [2, 7], 0.0, axis=1)  # zero columns at 2 and 8
    res = cop(d, CopConfig(r=3))
    assert res.dropped.tolist() == [2, 8]
    assert not set(res.sampled) & {2, 8}
    clean = cop(ds.d, CopConfig(r=3))
    assert recovery_error(clean.basis, res.basis) < 1e-12
    # sampled indices address the original matrix, zero columns included
    back = [j - (j > 2) - (j > 8) for j in res.sampled]
    assert back == clean.sampled.tolist()


def test_cop_rejects_unusable_setups():
    ds = gen_unstructured(10, 2, 5, 0, seed=6)
    with pytest.raises(DataError):
        cop(ds.d, CopConfig(r=0))
    with pytest.raises(NumericalError, match="usable columns"):
        cop(ds.d, CopConfig(r=6))
    with pytest.raises(DataError, match="strategy"):
        cop(ds.d, CopConfig(r=2, strategy="greedy"))


def test_cop_flags_non_unique_svd_truncation():
    # two orthogonal columns with equal weight: sigma_1 = sigma_2, so a
    # rank-1 truncation is not determined by the data
    d = np.column_stack([E[:, 0], E[:, 1]])
    res = cop(d, CopConfig(r=1, strategy=TopFraction(q=0.4)))
    assert not res.unique
    assert cop(d, CopConfig(r=1)).unique  # greedy route is exact


def test_cop_profile_matches_direct_computation():
    ds = gen_unstructured(25, 3, 12, 30, seed=7)
    res = cop(ds.d, CopConfig(r=3, p=1))
    x, _ = normalize_columns(ds.d)
    np.testing.assert_allclose(res.profile.values, coherence(x, 1).values, atol=1e-12)
    assert res.profile.p == 1


def test_with_strategy_replaces_only_the_strategy():
    cfg = CopConfig(r=5, p=1, seed=9)
    new = with_strategy(cfg, FixedCount(count=3))
    assert new.strategy == FixedCount(count=3)
    assert (new.r, new.p, new.seed) == (5, 1, 9)
    assert cfg.strategy == GreedyRank()


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 5_000))
def test_cop_basis_invariant_to_scale_sign_and_order(seed):
    rng = np.random.default_rng(seed)
    ds = gen_unstructured(30, 3, 15, 45, seed=seed)
    scales = rng.uniform(0.5, 2.0, 60) * rng.choice([-1.0, 1.0], 60)
    perm = rng.permutation(60)
    base = cop(ds.d, CopConfig(r=3))
    moved = cop((ds.d * scales)[:, perm], CopConfig(r=3))
    assert recovery_error(base.basis, moved.basis) < 1e-9
    # column j of the transformed matrix is column perm[j] of the original
    assert sorted(perm[moved.sampled].tolist()) == sorted(base.sampled.tolist())


# ---- multipass ----


def test_multipass_requires_adaptive_and_enough_columns():
    ds = gen_unstructured(20, 2, 8, 0, seed=8)
    with pytest.raises(DataError, match="Adaptive"):
        cop_multipass(ds.d, CopConfig(r=2), h=2)
    cfg = CopConfig(r=2, strategy=Adaptive())
    with pytest.raises(NumericalError, match="h\\*r"):
        cop_multipass(ds.d, cfg, h=5)
    with pytest.raises(DataError):
        cop_multipass(ds.d, cfg, h=0)


def test_multipass_single_round_recovers_clean_data():
    ds = gen_unstructured(50, 4, 30, 90, seed=9)
    cfg = CopConfig(r=4, strategy=Adaptive(k=2), seed=3)
    res = cop_multipass(ds.d, cfg, h=1)
    assert recovery_error(ds.basis, res.basis) < 1e-9
    again = cop_multipass(ds.d, cfg, h=1)
    np.testing.assert_array_equal(res.sampled, again.sampled)


def test_multipass_rounds_pick_disjoint_columns():
    ds = gen_unstructured(40, 3, 30, 60, seed=10)
    cfg = CopConfig(r=3, strategy=Adaptive(k=2), seed=1)
    res = cop_multipass(ds.d, cfg, h=4)
    assert len(res.sampled) == 12
    assert len(set(res.sampled.tolist())) == 12


def test_multipass_beats_single_pass_on_noisy_data():
    wins, med1, med3 = 0, [], []
    for s in range(20):
        ds = gen_noisy(100, 5, 60, 200, sigma_for_tau(0.5), seed=(900, s))
        cfg = CopConfig(r=5, strategy=Adaptive(k=2, upsilon=None), seed=s)
        e1 = recovery_error(ds.basis, cop_multipass(ds.d, cfg, 1).basis)
        e3 = recovery_error(ds.basis, cop_multipass(ds.d, cfg, 3).basis)
        wins += e3 < e1
        med1.append(e1)
        med3.append(e3)
    assert wins >= 16
    assert np.median(med3) < 0.5 * np.median(med1)


# ---- baselines and outlier flagging ----


def test_spca_fails_where_cop_succeeds():
    ds = gen_unstructured(60, 3, 30, 300, seed=11)
    assert recovery_error(ds.basis, cop(ds.d, CopConfig(r=3)).basis) < 1e-8
    assert recovery_error(ds.basis, spca(ds.d, 3)) > 0.05
    with pytest.raises(NumericalError):
        spca(ds.d[:, :2], 3)


def test_residual_outliers_frozen_case():
    basis = E[:, :2]
    mixed = (E[:, 0] + E[:, 2]) / np.sqrt(2.0)
    d = np.column_stack([E[:, 0], E[:, 1], mixed, np.zeros(4)])
    assert residual_outliers(d, basis).tolist() == [0, 0, 1, 1]
    # relative residual of the mixed column is sqrt(1/2) = 0.707...
    assert residual_outliers(d, basis, threshold=0.8).tolist() == [0, 0, 0, 1]
    with pytest.raises(DataError):
        residual_outliers(d, basis, threshold=-0.1)


def test_residual_outliers_recovers_model_labels():
    ds = gen_unstructured(50, 4, 25, 75, seed=12)
    res = cop(ds.d, CopConfig(r=4))
    np.testing.assert_array_equal(residual_outliers(ds.d, res.basis), ds.labels)
