import numpy as np
import pytest
import scipy.sparse as sp

from graphaug import autodiff as ad
from graphaug.attention import AttentionReport, attention_scores, fuse, init_attention
from graphaug.errors import ShapeError
from graphaug.gcn import channel_forward, glorot, init_channel
from graphaug.graph import normalize_adjacency

from helpers import central_diff, rel_err


def random_a_hat(n, p, rng):
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return normalize_adjacency(sp.csr_matrix((upper | upper.T).astype(float)))


# -- channel encoder -------------------------------------------------------------

def test_identity_propagation_is_relu(rng):
    attrs = rng.normal(size=(4, 4))
    out = channel_forward([np.eye(4), np.eye(4)], sp.identity(4, format="csr"), attrs)
    np.testing.assert_array_equal(out.value, np.maximum(attrs, 0))


def test_edgeless_locality(rng):
    a_hat = normalize_adjacency(sp.csr_matrix((5, 5)))
    params = init_channel(3, 6, 2, rng)
    attrs = rng.normal(size=(5, 3))
    base = channel_forward(params.weights, a_hat, attrs).value
    attrs[2] += 10.0
    moved = channel_forward(params.weights, a_hat, attrs).value
    np.testing.assert_array_equal(np.delete(base, 2, axis=0), np.delete(moved, 2, axis=0))
    assert not np.allclose(base[2], moved[2])


def test_matches_dense_oracle(rng):
    a_hat = random_a_hat(12, 0.3, rng)
    params = init_channel(7, 5, 3, rng)
    attrs = rng.normal(size=(12, 7))
    dense = a_hat.toarray()
    expected = dense @ np.maximum(dense @ attrs @ params.w0, 0) @ params.w1
    out = channel_forward(params.weights, a_hat, attrs).value
    np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12)


def test_final_layer_linear(rng):
    a_hat = random_a_hat(8, 0.4, rng)
    params = init_channel(4, 5, 3, rng)
    attrs = rng.normal(size=(8, 4))
    z1 = channel_forward([params.w0, params.w1], a_hat, attrs).value
    z2 = channel_forward([params.w0, 2 * params.w1], a_hat, attrs).value
    np.testing.assert_array_equal(z2, 2 * z1)


def test_final_activation_flag(rng):
    a_hat = random_a_hat(8, 0.4, rng)
    params = init_channel(4, 5, 3, rng)
    out = channel_forward(params.weights, a_hat, rng.normal(size=(8, 4)), final_activation=True).value
    assert (out >= 0).all()


def test_train_mode_deterministic_given_seed(rng):
    a_hat = random_a_hat(10, 0.3, rng)
    params = init_channel(4, 6, 3, rng)
    attrs = rng.normal(size=(10, 4))
    runs = [
        channel_forward(params.weights, a_hat, attrs, True, 0.5, np.random.default_rng(9)).value
        for _ in range(2)
    ]
    np.testing.assert_array_equal(*runs)
    assert not np.array_equal(runs[0], channel_forward(params.weights, a_hat, attrs).value)


def test_shape_mismatch(rng):
    params = init_channel(4, 6, 3, rng)
    with pytest.raises(ShapeError):
        channel_forward(params.weights, sp.identity(5, format="csr"), np.ones((5, 3)))
    with pytest.raises(ShapeError):
        channel_forward(params.weights, sp.identity(5, format="csr"), np.ones((4, 4)))


def test_channel_gradients_finite_difference(rng):
    a_hat = random_a_hat(9, 0.3, rng)
    attrs = rng.uniform(-1, 1, size=(9, 4))
    params = init_channel(4, 5, 3, rng)
    target = rng.normal(size=(9, 3))

    def loss(ws):
        return ad.sumsq(ad.sub(channel_forward(ws, a_hat, attrs), target))

    tape = ad.Tape()
    grads = tape.backward(loss([tape.watch(w) for w in params.weights]))
    for w, g in zip(params.weights, grads):
        fd = central_diff(lambda: float(loss(params.weights).value), w)
        assert rel_err(g, fd) < 1e-4


def test_init_shapes_default_sizes():
    rng = np.random.default_rng(0)
    p = init_channel(3703, 512, 256, rng)
    assert p.w0.shape == (3703, 512) and p.w1.shape == (512, 256)
    p = init_channel(3067, 256, 128, rng)
    assert p.w0.shape == (3067, 256) and p.w1.shape == (256, 128)


def test_glorot_bounds_and_mean():
    w = glorot((400, 250), np.random.default_rng(1))
    bound = np.sqrt(6 / 650)
    assert np.abs(w).max() <= bound
    # uniform(-b, b) has sd b/sqrt(3); mean of 1e5 draws within 3 standard errors
    assert abs(w.mean()) < 3 * (bound / np.sqrt(3)) / np.sqrt(w.size)


# -- attention -----------------------------------------------------------------

def _random_setup(rng, n=6, h=4, h_att=3, c=9):
    z = [rng.normal(size=(n, h)) for _ in range(c)]
    params = init_attention(c, h, h_att, rng)
    params.b = [rng.normal(size=(1, h_att)) for _ in range(c)]
    return z, params


def test_zero_query_zero_scores(rng):
    z, p = _random_setup(rng)
    np.testing.assert_array_equal(attention_scores(p.w, p.b, np.zeros((3, 1)), z).value, 0.0)


def test_zero_transform_node_independent(rng):
    z, p = _random_setup(rng)
    w = [np.zeros_like(wi) for wi in p.w]
    scores = attention_scores(w, p.b, p.q, z).value
    expected = [(np.tanh(bi) @ p.q).item() for bi in p.b]
    np.testing.assert_allclose(scores, np.tile(expected, (6, 1)), atol=1e-15)


def test_scores_match_per_node_loop(rng):
    z, p = _random_setup(rng)
    scores = attention_scores(p.w, p.b, p.q, z).value
    oracle = np.zeros((6, 9))
    for node in range(6):
        for i in range(9):
            oracle[node, i] = p.q[:, 0] @ np.tanh(p.w[i] @ z[i][node] + p.b[i][0])
    np.testing.assert_allclose(scores, oracle, rtol=0, atol=1e-12)


def test_scores_shape_mismatch(rng):
    z, p = _random_setup(rng)
    z[3] = z[3][:, :2]
    with pytest.raises(ShapeError):
        attention_scores(p.w, p.b, p.q, z)
    with pytest.raises(ShapeError):
        attention_scores(p.w[:8], p.b, p.q, z)


def test_equal_scores_average(rng):
    z, _ = _random_setup(rng)
    fused, alpha = fuse(np.zeros((6, 9)), z)
    np.testing.assert_allclose(alpha.value, 1 / 9)
    np.testing.assert_allclose(fused.value, np.mean(z, axis=0), atol=1e-14)


def test_saturated_score_selects_channel(rng):
    z, _ = _random_setup(rng)
    scores = np.zeros((6, 9))
    scores[:, 4] = 50.0
    fused, _ = fuse(scores, z)
    assert np.linalg.norm(fused.value - z[4]) <= 1e-15 * np.linalg.norm(z[4])


def test_fuse_matches_weighted_sum(rng):
    z, _ = _random_setup(rng)
    scores = rng.normal(size=(6, 9))
    fused, alpha = fuse(scores, z)
    e = np.exp(scores)
    w = e / e.sum(axis=1, keepdims=True)
    oracle = np.zeros_like(z[0])
    for node in range(6):
        for i in range(9):
            oracle[node] += w[node, i] * z[i][node]
    np.testing.assert_allclose(alpha.value, w, atol=1e-15)
    np.testing.assert_allclose(fused.value, oracle, rtol=0, atol=1e-12)


def test_alpha_rows_stochastic(rng):
    for scale in (0.1, 10, 1000):
        _, alpha = fuse(rng.normal(size=(20, 9)) * scale, [np.ones((20, 2))] * 9)
        np.testing.assert_allclose(alpha.value.sum(axis=1), 1.0, atol=1e-9)
        assert (alpha.value >= 0).all()


def test_shift_invariance(rng):
    scores = rng.normal(size=(5, 9))
    z = [rng.normal(size=(5, 2)) for _ in range(9)]
    _, a1 = fuse(scores, z)
    _, a2 = fuse(scores + 3.7, z)
    np.testing.assert_allclose(a1.value, a2.value, atol=1e-15)


def test_permutation_equivariance(rng):
    z, p = _random_setup(rng)
    perm = rng.permutation(9)
    s1 = attention_scores(p.w, p.b, p.q, z)
    f1, a1 = fuse(s1, z)
    zp = [z[i] for i in perm]
    s2 = attention_scores([p.w[i] for i in perm], [p.b[i] for i in perm], p.q, zp)
    f2, a2 = fuse(s2, zp)
    np.testing.assert_allclose(a2.value, a1.value[:, perm], atol=1e-15)
    np.testing.assert_allclose(f2.value, f1.value, atol=1e-12)


def test_attention_gradients_finite_difference(rng):
    z, p = _random_setup(rng, n=5, h=3, h_att=2, c=3)
    target = rng.normal(size=(5, 3))

    def loss(ws, bs, q, zs):
        fused, _ = fuse(attention_scores(ws, bs, q, zs), zs)
        return ad.sumsq(ad.sub(fused, target))

    tape = ad.Tape()
    tw = [tape.watch(w) for w in p.w]
    tb = [tape.watch(b) for b in p.b]
    tq = tape.watch(p.q)
    tz = [tape.watch(x) for x in z]
    grads = tape.backward(loss(tw, tb, tq, tz))
    leaves = p.w + p.b + [p.q] + z
    for arr, g in zip(leaves, grads):
        fd = central_diff(lambda: float(loss(p.w, p.b, p.q, z).value), arr)
        assert rel_err(g, fd) < 1e-4


def test_attention_report_stats():
    alpha = np.array([[0.2, 0.8], [0.4, 0.6], [0.6, 0.4]])
    rep = AttentionReport(alpha)
    np.testing.assert_allclose(rep.mean, [0.4, 0.6])
    np.testing.assert_allclose(rep.quartiles[1], [0.4, 0.6])
    assert rep.quartiles.shape == (3, 2)
