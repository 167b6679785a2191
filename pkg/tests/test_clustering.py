import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repdays.clustering import (ClusteringError, MkmPreconditionError, assign, cluster_days, derive_seed,
                                factor_k, history_days, mkm, read_repdays_csv, recompute_centroids, tkm,
                                write_repdays_csv)
from repdays.synthetic import bundled_year
from repdays.timeseries import build_day_observations, day_vectors


def brute_sse_best_3(X):
    """Smallest SSE over every labelling of X into exactly three nonempty groups."""
    n = X.shape[0]
    labels = np.array(list(itertools.product(range(3), repeat=n)), dtype=np.int8)
    best = np.inf
    for chunk in np.array_split(labels, 16):
        sse = np.zeros(len(chunk))
        ok = np.ones(len(chunk), dtype=bool)
        for j in range(3):
            mask = chunk == j
            cnt = mask.sum(axis=1)
            ok &= cnt > 0
            s1 = mask.astype(float) @ X
            s2 = mask.astype(float) @ (X ** 2).sum(axis=1)
            sse += s2 - (s1 ** 2).sum(axis=1) / np.maximum(cnt, 1)
        best = min(best, sse[ok].min())
    return best


# -- assignment ---------------------------------------------------------------

def test_assign_exact_hit_and_tie():
    C = np.array([[0.0, 0.0], [2.0, 0.0], [5.0, 5.0]])
    assert assign([[5.0, 5.0]], C).tolist() == [2]
    assert assign([[1.0, 0.0]], C).tolist() == [0]     # equidistant: lowest index


def test_assign_matches_scan():
    rng = np.random.default_rng(11)
    X = rng.random((10, 4))
    C = rng.random((3, 4))
    expected = [min(range(3), key=lambda j: sum((X[i] - C[j]) ** 2)) for i in range(10)]
    assert assign(X, C).tolist() == expected


# -- centroids ----------------------------------------------------------------

def test_centroids_member_means():
    rng = np.random.default_rng(5)
    X = rng.random((20, 3))
    a = rng.integers(0, 4, size=20)
    a[:4] = [0, 1, 2, 3]
    C = recompute_centroids(X, a, 4)
    for j in range(4):
        np.testing.assert_allclose(C[j], X[a == j].mean(axis=0), atol=1e-15)
    assert np.allclose(recompute_centroids(X, np.zeros(20, int), 1)[0], X.mean(axis=0))
    two = recompute_centroids(X[:2], [0, 1], 2)
    np.testing.assert_array_equal(two, X[:2])


# -- tkm ----------------------------------------------------------------------

def test_tkm_k_equals_n():
    X = np.random.default_rng(0).random((9, 2))
    res = tkm(X, 9, seed=3)
    assert res.sse == 0.0
    assert sorted(res.counts.tolist()) == [1] * 9


def test_tkm_single_cluster():
    X = np.random.default_rng(1).random((15, 4))
    res = tkm(X, 1)
    np.testing.assert_allclose(res.centroids[0], X.mean(axis=0))
    assert res.counts.tolist() == [15]


@pytest.mark.parametrize("k", [0, -1, 6])
def test_tkm_bad_k(k):
    with pytest.raises(ClusteringError):
        tkm(np.zeros((5, 2)), k)


def test_tkm_planted_partition_is_globally_optimal():
    rng = np.random.default_rng(4)
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    X = np.vstack([c + rng.uniform(-1, 1, size=(4, 2)) for c in centers])
    res = tkm(X, 3, seed=2)
    groups = {tuple(np.flatnonzero(res.assignment == j)) for j in range(3)}
    assert groups == {(0, 1, 2, 3), (4, 5, 6, 7), (8, 9, 10, 11)}
    assert res.sse == pytest.approx(brute_sse_best_3(X), rel=1e-9)


def test_tkm_deterministic():
    X = np.random.default_rng(9).random((30, 5))
    a, b = tkm(X, 4, seed=17), tkm(X, 4, seed=17)
    np.testing.assert_array_equal(a.assignment, b.assignment)
    np.testing.assert_array_equal(a.centroids, b.centroids)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 40), dim=st.integers(1, 8), data=st.data())
def test_tkm_properties(n, dim, data):
    k = data.draw(st.integers(1, n))
    seed = data.draw(st.integers(0, 2**31))
    X = np.random.default_rng(seed).normal(size=(n, dim))
    res = tkm(X, k, seed=seed)
    assert np.all(np.diff(res.sse_trace) <= 1e-12 * max(1.0, res.sse_trace[0]))
    assert res.counts.sum() == n and (res.counts > 0).all()
    for j in range(k):
        assert np.abs(res.centroids[j] - X[res.assignment == j].mean(axis=0)).max() <= 1e-9


# -- mkm ----------------------------------------------------------------------

def test_mkm_counts_and_labels():
    X = np.random.default_rng(2).random((60, 3))
    res = mkm(X, 5, 2, seed=1)
    assert res.k == 10
    assert res.counts.sum() == 60 and (res.counts > 0).all()


@pytest.mark.parametrize("seed", range(5))
def test_mkm_degenerate_cases(seed):
    X = np.random.default_rng(100 + seed).random((25, 4))
    np.testing.assert_array_equal(mkm(X, 1, 4, seed).assignment, tkm(X, 4, derive_seed(seed, 0)).assignment)
    np.testing.assert_array_equal(mkm(X, 4, 1, seed).assignment, tkm(X, 4, seed).assignment)


def test_mkm_precondition_names_cluster():
    X = np.array([[0.0], [0.1], [0.2], [10.0]])
    with pytest.raises(MkmPreconditionError, match=r"cluster 2 has 1 member") as info:
        mkm(X, 2, 2, seed=0)
    assert (info.value.cluster, info.value.size, info.value.k2) == (1, 1, 2)


def test_factor_k():
    assert factor_k(10) == (5, 2)
    assert factor_k(9) == (3, 3)
    assert factor_k(7) == (1, 7)
    assert factor_k(1) == (1, 1)


# -- representative days ------------------------------------------------------

def test_singleton_recovers_original_profile():
    rec = bundled_year().subset(range(8))
    obs = build_day_observations(rec)
    res, rd = cluster_days(obs, "tkm", k=8, seed=0)
    raw = day_vectors(rec)
    lp, wp = rec.peaks()
    for r, day in enumerate(rd.days):
        d = int(np.flatnonzero(res.assignment == r)[0])
        np.testing.assert_allclose(day.beta["west"] * lp["west"], raw[d, :24], atol=1e-9)
        np.testing.assert_allclose(day.alpha["south"] * wp["south"], raw[d, 72:96], atol=1e-9)


def test_bundled_year_k10():
    obs = build_day_observations(bundled_year())
    res, rd = cluster_days(obs, "tkm", k=10, seed=0)
    assert len(rd) == 10 and rd.total_weight == 366
    for day in rd.days:
        for prof in list(day.beta.values()) + list(day.alpha.values()):
            assert prof.shape == (24,)
            assert prof.min() >= 0.0 and prof.max() <= 1.0
    _, rd2 = cluster_days(obs, "mkm", k1=5, k2=2, seed=0)
    assert len(rd2) == 10 and rd2.total_weight == 366


def test_repdays_csv_round_trip(tmp_path):
    rd = history_days(bundled_year().subset(range(3)))
    write_repdays_csv(rd, str(tmp_path / "rd.csv"))
    back = read_repdays_csv(str(tmp_path / "rd.csv"))
    assert [d.weight for d in back.days] == [1, 1, 1]
    np.testing.assert_allclose(back.days[2].beta["east"], rd.days[2].beta["east"], rtol=1e-8)
