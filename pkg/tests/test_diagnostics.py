import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radonspline import diagnostics as dg
from radonspline.network import SplineParams


def _planes(rng, H):
    th = rng.uniform(0, 2 * np.pi, H)
    return SplineParams(np.column_stack([np.cos(th), np.sin(th)]), rng.uniform(-1, 1, H), rng.standard_normal(H))


def test_similarity_example():
    s = SplineParams([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0])
    S = dg.similarity(s).S
    np.testing.assert_allclose(np.diag(S), 1.0)
    assert S[0, 1] == pytest.approx(0.0, abs=1e-16)
    assert S[0, 2] == pytest.approx(np.exp(-1.0))


def test_similarity_antipodes_not_identified():
    s = SplineParams([[1.0, 0.0], [-1.0, 0.0]], [0.0, 0.0], [1.0, 1.0])
    assert dg.similarity(s).S[0, 1] == -1.0


def test_similarity_needs_two():
    with pytest.raises(ValueError):
        dg.similarity(SplineParams([[1.0, 0.0]], [0.0], [1.0]))


def test_similarity_order_groups_clusters():
    # two tight bundles listed interleaved
    xi = np.array([[1.0, 0.0], [0.0, 1.0]] * 4)
    s = SplineParams(xi, np.zeros(8), np.ones(8))
    sim = dg.similarity(s)
    groups = np.arange(8)[sim.order] % 2
    assert np.count_nonzero(np.diff(groups)) == 1
    assert sorted(sim.order) == list(range(8))


def _auc_oracle(S):
    # mean of the cumulative curve with the right endpoint halved, from the origin
    lam = np.sort(np.abs(np.linalg.eigvalsh(S)))[::-1]
    c = np.cumsum(lam) / lam.sum()
    return (c.sum() - 0.5 * c[-1]) / len(c)


@pytest.mark.parametrize("H", [2, 5, 40])
def test_auc_rank_one(H):
    u = np.ones(H)
    assert dg.cluster_auc(np.outer(u, u)) == pytest.approx((2 * H - 1) / (2 * H), rel=1e-12)


@pytest.mark.parametrize("H", [2, 5, 40])
def test_auc_identity(H):
    assert dg.cluster_auc(np.eye(H)) == pytest.approx(0.5, rel=1e-12)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.integers(2, 30))
def test_auc_between_bounds(seed, H):
    s = _planes(np.random.default_rng(seed), H)
    S = dg.similarity(s).S
    a = dg.cluster_auc(S)
    assert 0.5 - 1e-12 <= a <= (2 * H - 1) / (2 * H) + 1e-12
    assert a == pytest.approx(_auc_oracle(S), rel=1e-12)
    assert dg.cluster_auc(dg.similarity(s)) == a


def test_auc_zero_matrix():
    assert dg.cluster_auc(np.zeros((3, 3))) == 0.5


# step distance


def test_step_distance_zero_and_permutation(rng):
    s = _planes(rng, 12)
    assert dg.step_distance(s, s) == 0.0
    p = rng.permutation(12)
    assert dg.step_distance(s, SplineParams(s.xi[p], s.gamma[p], s.mu[p])) == pytest.approx(0.0, abs=1e-15)


def test_step_distance_offset_shift(rng):
    s = _planes(rng, 6)
    moved = SplineParams(s.xi, s.gamma + 1e-3, s.mu)
    assert dg.step_distance(s, moved) == pytest.approx(1e-3, rel=1e-9)


def test_step_distance_needs_same_size(rng):
    with pytest.raises(ValueError):
        dg.step_distance(_planes(rng, 3), _planes(rng, 4))


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_step_distance_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (_planes(rng, 5) for _ in range(3))
    ab, ba = dg.step_distance(a, b), dg.step_distance(b, a)
    assert ab >= 0 and ab == pytest.approx(ba, rel=1e-12)
    assert dg.step_distance(a, c) <= ab + dg.step_distance(b, c) + 1e-12


def test_step_distance_optimal_beats_greedy(rng):
    a, b = _planes(rng, 30), _planes(rng, 30)
    opt, m1 = dg.step_distance_details(a, b)
    gr, m2 = dg.step_distance_details(a, b, greedy_above=10)
    assert (m1, m2) == ("optimal", "greedy")
    assert opt <= gr + 1e-12


def test_greedy_exact_for_small_motion(rng):
    a = _planes(rng, 20)
    b = SplineParams(a.xi, a.gamma + 1e-6 * rng.standard_normal(20), a.mu)
    assert dg.step_distance(a, b, greedy_above=1) == pytest.approx(dg.step_distance(a, b), rel=1e-12)


# fit comparison


def test_hull_mask_square():
    X = np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]])
    m = dg.hull_mask(X, [[0.5, 0.5], [1.5, 0.5], [1.0, 1.0]])
    np.testing.assert_array_equal(m, [True, False, True])


def test_relative_error_example():
    assert dg.relative_error([2.0, -4.0, 1.0], [2.0, -3.0, 0.0], [True, True, False]) == pytest.approx(0.125)


@given(st.floats(1e-3, 1e3))
def test_relative_error_scale_invariant(c):
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal((2, 20))
    m = rng.random(20) > 0.3
    assert dg.relative_error(c * a, c * b, m) == pytest.approx(dg.relative_error(a, b, m), rel=1e-12)


def test_relative_error_errors():
    with pytest.raises(ValueError):
        dg.relative_error([1.0], [1.0], [False])
    with pytest.raises(ValueError):
        dg.relative_error([0.0, 0.0], [1.0, 1.0], [True, True])


def test_runlog(tmp_path):
    p = tmp_path / "log.jsonl"
    log = dg.RunLog(p)
    log.log(0, "loss", 2.0)
    log.log(1, "auc", 0.6)
    log.log(2, "loss", 1.0)
    np.testing.assert_array_equal(log.series("loss"), [[0, 2.0], [2, 1.0]])
    recs = dg.RunLog.read(p)
    assert recs[1] == {"step": 1, "metric": "auc", "value": 0.6}
    assert json.loads(p.read_text().splitlines()[0])["metric"] == "loss"
    assert dg.RunLog().series("missing").shape == (0, 2)


def test_similarity_csv(tmp_path, rng):
    sim = dg.similarity(_planes(rng, 6))
    p = tmp_path / "S.csv"
    dg.save_similarity_csv(p, sim)
    np.testing.assert_allclose(np.loadtxt(p, delimiter=","), sim.sorted(), rtol=1e-9)
    dg.save_similarity_csv(p, sim, sort=False)
    np.testing.assert_allclose(np.loadtxt(p, delimiter=","), sim.S, rtol=1e-9)
