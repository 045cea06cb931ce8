import math

import numpy as np
import pytest

import dampe


def test_cost_matrix_hand_value():
    e_struc = np.array([[0.0, 1.0], [0.0, 2.0]])
    e_seq = np.array([[3.0, 1.0], [4.0, 2.0]])
    c = dampe.build_cost(e_struc, e_seq)
    assert c.shape == (2, 2)
    assert c[1, 1] == 0.0
    assert c[0, 0] == pytest.approx(math.sqrt((9 + 16) / 2), rel=1e-12)


def test_sinkhorn_marginals_and_uniform_limit():
    rng = np.random.default_rng(0)
    cost = np.abs(rng.normal(size=(5, 7)))
    plan, meta = dampe.sinkhorn(cost, epsilon=0.05)
    assert plan.shape == (5, 7)
    assert meta["marginal_error"] < 1e-6
    np.testing.assert_allclose(plan.sum(axis=1), np.full(5, 1 / 5), atol=1e-6)
    np.testing.assert_allclose(plan.sum(axis=0), np.full(7, 1 / 7), atol=1e-6)

    flat, _ = dampe.sinkhorn(np.zeros((3, 4)), epsilon=0.1)
    np.testing.assert_allclose(flat, np.full((3, 4), 1 / 12), atol=1e-9)


def test_projection_and_concat_round_trip():
    rng = np.random.default_rng(1)
    e_struc = rng.normal(size=(6, 4))
    plan = np.abs(rng.normal(size=(4, 3)))
    projected = dampe.barycentric_project(e_struc, plan)
    np.testing.assert_allclose(projected, e_struc @ plan, atol=1e-12)

    e_seq = rng.normal(size=(6, 3))
    h = dampe.concat_intrinsic(e_seq, projected)
    assert h.shape == (6, 6)
    np.testing.assert_array_equal(h[:, :3], e_seq)
    np.testing.assert_array_equal(h[:, 3:], projected)


def test_cosine_schedule_and_kernels():
    alpha, alpha_bar = dampe.cosine_schedule(50)
    assert alpha.shape == (50,)
    assert np.all(np.diff(alpha_bar) < 0)
    np.testing.assert_allclose(np.cumprod(alpha), alpha_bar, atol=1e-12)
    assert alpha_bar[-1] < 0.05

    m = [0.1, 0.2, 0.3, 0.4]
    q = dampe.transition_matrix(50, 10, m)
    np.testing.assert_allclose(q.sum(axis=1), np.ones(4), atol=1e-12)
    qbar = dampe.cumulative_transition(50, 50, m)
    np.testing.assert_allclose(qbar, np.tile(m, (4, 1)), atol=0.05)

    post = dampe.posterior_distribution(0, 0, 50, 10, m)
    assert sum(post) == pytest.approx(1.0, abs=1e-12)
    assert post[0] == max(post)


def test_metrics_and_propagation():
    labels = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    f, tau = dampe.fmax(labels, labels)
    assert f == pytest.approx(1.0)
    assert dampe.aupr(labels, labels) == pytest.approx(1.0)

    # Single positive ranked last among four pairs.
    preds = np.array([[0.9, 0.8, 0.7, 0.1]])
    one = np.array([[0.0, 0.0, 0.0, 1.0]])
    assert dampe.aupr(preds, one) == pytest.approx(0.25)

    # Chain DAG 1 -> 0 (child -> parent): parent takes the child's score.
    scores = np.array([[0.2, 0.9]])
    prop = dampe.true_path_propagate(scores, 2, [(1, 0)])
    np.testing.assert_allclose(prop, [[0.9, 0.9]])
    np.testing.assert_array_equal(dampe.true_path_propagate(prop, 2, [(1, 0)]), prop)


def test_generate_dataset(tmp_path):
    info = dampe.generate_dataset(str(tmp_path), n_proteins=300, n_terms=40, seed=11)
    assert info["noedge_fraction"] >= 0.98
    for name in [
        "e_seq.mat",
        "e_struc.mat",
        "z.mat",
        "edges.tsv",
        "nodes.tsv",
        "splits.tsv",
        "labels.tsv",
        "manifest.json",
    ]:
        assert (tmp_path / name).exists()
