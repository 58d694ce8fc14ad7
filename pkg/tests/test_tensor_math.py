import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from graphaug import autodiff as ad
from graphaug.errors import ContractError, ShapeError
from graphaug.optim import AdamState, adam_step

from helpers import central_diff, rel_err


def naive_matmul(a, b):
    n, k = a.shape
    m = b.shape[1]
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


# -- matmul -------------------------------------------------------------------

def test_matmul_identity(rng):
    m = rng.normal(size=(3, 5))
    np.testing.assert_array_equal(ad.matmul(np.eye(3), m).value, m)


def test_matmul_hand_example():
    out = ad.matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[1.0], [1.0]]))
    np.testing.assert_array_equal(out.value, [[3.0], [7.0]])


def test_matmul_matches_triple_loop(rng):
    a, b = rng.normal(size=(7, 5)), rng.normal(size=(5, 4))
    np.testing.assert_allclose(ad.matmul(a, b).value, naive_matmul(a, b), rtol=0, atol=1e-12)


def test_matmul_shape_error():
    with pytest.raises(ShapeError):
        ad.matmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(ShapeError):
        ad.matmul(sp.identity(3, format="csr"), np.ones((2, 3)))


def test_sparse_matmul_equals_dense(rng):
    for _ in range(5):
        dense = rng.random((20, 20)) * (rng.random((20, 20)) < 0.2)
        b = rng.normal(size=(20, 6))
        out = ad.matmul(sp.csr_matrix(dense), b).value
        np.testing.assert_allclose(out, dense @ b, rtol=0, atol=1e-12)


# -- elementwise ----------------------------------------------------------------

def test_softmax_symmetric():
    np.testing.assert_array_equal(ad.softmax_rows(np.zeros((1, 2))).value, [[0.5, 0.5]])


def test_relu():
    np.testing.assert_array_equal(ad.relu(np.array([[-1.0, 2.0]])).value, [[0.0, 2.0]])


def test_elementwise_dispatch(rng):
    m = rng.normal(size=(3, 4))
    np.testing.assert_array_equal(ad.elementwise("tanh", m).value, np.tanh(m))
    np.testing.assert_array_equal(ad.elementwise("dropout", m, p=0.3, training=False).value, m)
    with pytest.raises(ContractError):
        ad.elementwise("gelu", m)


def test_dropout_mean_preserved():
    out = ad.dropout(np.ones((1000, 1000)), 0.5, np.random.default_rng(0)).value
    assert abs(out.mean() - 1.0) < 0.01
    assert set(np.unique(out)) == {0.0, 2.0}


def test_dropout_seeded_reproducible():
    a = ad.dropout(np.ones((10, 10)), 0.5, np.random.default_rng(3)).value
    b = ad.dropout(np.ones((10, 10)), 0.5, np.random.default_rng(3)).value
    np.testing.assert_array_equal(a, b)


def test_dropout_rejects_bad_rate():
    with pytest.raises(ContractError):
        ad.dropout(np.ones((2, 2)), 1.0, np.random.default_rng(0))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (4, 5), elements=st.floats(-50, 50)))
def test_softmax_rows_stochastic(m):
    y = ad.softmax_rows(m).value
    np.testing.assert_allclose(y.sum(axis=1), 1.0, atol=1e-9)
    assert (y >= 0).all() and (y <= 1).all()


def test_softmax_entries_strictly_inside_unit_interval(rng):
    y = ad.softmax_rows(rng.uniform(-1, 1, size=(6, 5))).value
    assert ((y > 0) & (y < 1)).all()


# -- backward -------------------------------------------------------------------

def test_grad_of_sum_is_ones(rng):
    tape = ad.Tape()
    w = tape.watch(rng.normal(size=(3, 4)))
    (g,) = tape.backward(ad.sum(w))
    np.testing.assert_array_equal(g, np.ones((3, 4)))


def test_grad_of_squared_norm(rng):
    tape = ad.Tape()
    w0 = rng.normal(size=(3, 2))
    w = tape.watch(w0)
    (g,) = tape.backward(ad.sumsq(w))
    np.testing.assert_allclose(g, 2 * w0)


def test_backward_requires_scalar(rng):
    tape = ad.Tape()
    w = tape.watch(rng.normal(size=(2, 2)))
    with pytest.raises(ContractError):
        tape.backward(ad.relu(w))


def test_constant_has_zero_gradient(rng):
    tape = ad.Tape()
    w = tape.watch(rng.normal(size=(2, 2)))
    unused = tape.watch(rng.normal(size=(2, 2)))
    grads = tape.backward(ad.sum(ad.tanh(w)))
    np.testing.assert_array_equal(grads[1], np.zeros((2, 2)))
    assert unused.grad is grads[1]


def test_mixing_tapes_rejected(rng):
    a = ad.Tape().watch(np.ones((2, 2)))
    b = ad.Tape().watch(np.ones((2, 2)))
    with pytest.raises(ContractError):
        ad.add(a, b)


def test_operator_overloads(rng):
    a, b = rng.normal(size=(2, 3)), rng.normal(size=(3, 2))
    ta = ad.Tensor(a)
    np.testing.assert_allclose((ta @ b).value, a @ b)
    np.testing.assert_allclose((ta * 2.0).value, a * 2)
    np.testing.assert_allclose((1.0 - ta).value, 1 - a)
    np.testing.assert_allclose(ta.T.value, a.T)


def _check(build, *shapes, seed=0):
    """Finite-difference check of every input of scalar-valued ``build``."""
    rng = np.random.default_rng(seed)
    values = [rng.uniform(-1, 1, size=s) for s in shapes]
    tape = ad.Tape()
    leaves = [tape.watch(v) for v in values]
    grads = tape.backward(build(*leaves))
    for v, g in zip(values, grads):
        fd = central_diff(lambda: float(build(*values).value), v)
        assert rel_err(g, fd) < 1e-4


def test_gradcheck_matmul_chain():
    _check(lambda a, b: ad.sumsq(ad.matmul(a, b)), (4, 3), (3, 5))


def test_gradcheck_sparse_left_operand():
    s = sp.random(6, 6, density=0.4, random_state=1, format="csr")
    _check(lambda b: ad.sum(ad.tanh(ad.matmul(s, b))), (6, 3))


def test_gradcheck_broadcast_add_mul():
    _check(lambda a, b, c: ad.sumsq(ad.mul(ad.add(a, b), c)), (5, 3), (1, 3), (5, 1))


def test_gradcheck_sub_scale_transpose():
    _check(lambda a, b: ad.sumsq(ad.scale(ad.sub(ad.transpose(a), b), 1.7)), (3, 4), (4, 3))


def test_gradcheck_relu():
    # values near the kink are vanishingly unlikely with this seed
    _check(lambda a: ad.sumsq(ad.relu(a)), (6, 4), seed=4)


def test_gradcheck_softmax_nll():
    rows, cols = np.array([0, 2, 3]), np.array([1, 0, 2])
    _check(lambda a: ad.nll(ad.softmax_rows(a), rows, cols), (4, 3))


def test_gradcheck_center_column_hstack():
    _check(
        lambda a: ad.sumsq(ad.center_rows(ad.hstack([ad.column(a, 2), ad.column(a, 0), a]))),
        (5, 3),
    )


def test_nll_clamp_blocks_infinity():
    probs = np.array([[1.0, 0.0]])
    out = ad.nll(probs, np.array([0]), np.array([1]), eps=1e-12)
    assert np.isclose(float(out.value), -np.log(1e-12))


# -- adam ----------------------------------------------------------------------

def test_adam_zero_gradient_no_decay_is_noop(rng):
    p = [rng.normal(size=(3, 2))]
    state = AdamState.for_params(p, lr=0.1, weight_decay=0.0)
    (out,) = adam_step(state, p, [np.zeros((3, 2))])
    np.testing.assert_array_equal(out, p[0])
    assert state.step == 1


def test_adam_first_step_sign():
    state = AdamState.for_params([np.array(1.0)], lr=0.1, weight_decay=0.0)
    (out,) = adam_step(state, [np.array(1.0)], [np.array(1.0)])
    assert out < 1.0
    # bias correction makes the first step exactly lr * g/|g|
    assert np.isclose(out, 0.9, atol=1e-6)


def test_adam_minimizes_quadratic():
    p = np.array(0.0)
    state = AdamState.for_params([p], lr=0.1, weight_decay=0.0)
    for _ in range(200):
        (p,) = adam_step(state, [p], [2 * (p - 3.0)])
    assert abs(p - 3.0) < 1e-2
    assert state.step == 200


def test_adam_decoupled_weight_decay():
    p = np.array([2.0])
    state = AdamState.for_params([p], lr=0.1, weight_decay=0.5)
    (out,) = adam_step(state, [p], [np.zeros(1)])
    # moments stay zero; only the decay term moves the parameter
    np.testing.assert_allclose(out, p - 0.1 * 0.5 * p)
    np.testing.assert_array_equal(state.m[0], 0.0)


def test_adam_deterministic(rng):
    p, g = [rng.normal(size=(4,))], [rng.normal(size=(4,))]
    s1, s2 = AdamState.for_params(p), AdamState.for_params(p)
    np.testing.assert_array_equal(adam_step(s1, p, g)[0], adam_step(s2, p, g)[0])


def test_adam_shape_mismatch():
    state = AdamState.for_params([np.zeros((2, 2))])
    with pytest.raises(ShapeError):
        adam_step(state, [np.zeros((2, 2))], [np.zeros((3, 2))])
