import numpy as np
import pytest

from fedrgl import numeric as nm
from fedrgl.model import classify, encode, init_params, predict_logits, project
from fedrgl.numeric import ParamSet, Tape

from oracles import gcn_forward


def random_graph(rng, n):
    A = np.triu((rng.random((n, n)) < 0.4).astype(float), 1)
    A = A + A.T + np.eye(n)
    d = A.sum(1)
    return A / np.sqrt(np.outer(d, d))


def test_init_deterministic_and_seed_sensitive():
    a, b, c = init_params(5, 4, 3, 0), init_params(5, 4, 3, 0), init_params(5, 4, 3, 1)
    assert a.allclose(b, atol=0.0)
    assert not a.allclose(c)


def test_init_glorot_bound_and_zero_bias():
    p = init_params(1, 1, 2, 3)
    for name in ("enc_w1", "enc_w2", "proj_w1", "proj_w2"):
        assert np.all(np.abs(p[name]) <= np.sqrt(6 / 2))
    assert np.all(np.abs(p["cls_w"]) <= np.sqrt(6 / 3))
    for name in ("enc_b1", "enc_b2", "cls_b", "proj_b1", "proj_b2"):
        assert not p[name].any()


def test_shapes():
    p = init_params(7, 5, 3, 0)
    assert p["enc_w1"].shape == (7, 5) and p["enc_w2"].shape == (5, 5) and p["cls_w"].shape == (5, 3)
    logits = predict_logits(p, np.eye(4), np.ones((4, 7)))
    assert logits.shape == (4, 3)


def zero_params(d_in, d_hid, C, rng):
    p = init_params(d_in, d_hid, C, 0)
    biased = ("enc_b2", "cls_b", "proj_b2")
    return ParamSet({k: rng.normal(size=v.shape) if k in biased else np.zeros_like(v) for k, v in p.items()})


def test_zero_weights_give_broadcast_biases():
    rng = np.random.default_rng(0)
    p = zero_params(3, 4, 2, rng)
    tape = Tape()
    v = p.attach(tape)
    H = encode(tape, random_graph(rng, 5), rng.normal(size=(5, 3)), v)
    np.testing.assert_array_equal(H.data, np.repeat(p["enc_b2"], 5, axis=0))
    np.testing.assert_array_equal(project(H, v).data, np.repeat(p["proj_b2"], 5, axis=0))


def test_zero_classifier_gives_uniform_softmax():
    tape = Tape()
    v = ParamSet({"cls_w": np.zeros((3, 4)), "cls_b": np.zeros((1, 4))}).attach(tape)
    probs = nm.softmax_rows(classify(tape.constant(np.ones((2, 3))), v)).data
    np.testing.assert_allclose(probs, 0.25)


def test_hand_checked_logits():
    tape = Tape()
    v = ParamSet({"cls_w": [[1.0, -1.0], [2.0, 0.5]], "cls_b": [[0.1, 0.2]]}).attach(tape)
    out = classify(tape.constant([[1.0, 2.0]]), v).data
    np.testing.assert_allclose(out, [[1 + 4 + 0.1, -1 + 1 + 0.2]])


def test_identity_adjacency_is_two_layer_mlp():
    rng = np.random.default_rng(1)
    p = init_params(3, 4, 2, 5)
    X = rng.normal(size=(6, 3))
    tape = Tape()
    H = encode(tape, np.eye(6), X, p.attach(tape)).data
    mlp = np.maximum(X @ p["enc_w1"] + p["enc_b1"], 0) @ p["enc_w2"] + p["enc_b2"]
    np.testing.assert_allclose(H, mlp, atol=1e-12)


def test_identity_projector_is_relu():
    tape = Tape()
    d = 3
    v = ParamSet(
        {"proj_w1": np.eye(d), "proj_b1": np.zeros((1, d)), "proj_w2": np.eye(d), "proj_b2": np.zeros((1, d))}
    ).attach(tape)
    H = np.array([[-1.0, 0.5, 2.0], [3.0, -0.1, 0.0]])
    np.testing.assert_array_equal(project(tape.constant(H), v).data, np.maximum(H, 0))


@pytest.mark.parametrize("seed", range(5))
def test_forward_matches_recompute(seed):
    rng = np.random.default_rng(seed)
    n, d, h, C = 6, 4, 5, 3
    A = random_graph(rng, n)
    X = rng.normal(size=(n, d))
    p = init_params(d, h, C, seed)
    p = ParamSet({k: v + 0.1 * rng.normal(size=v.shape) for k, v in p.items()})
    tape = Tape()
    v = p.attach(tape)
    H = encode(tape, A, X, v)
    H_ref, logits_ref, Z_ref = gcn_forward(A, X, p)
    np.testing.assert_allclose(H.data, H_ref, atol=1e-12)
    np.testing.assert_allclose(classify(H, v).data, logits_ref, atol=1e-12)
    np.testing.assert_allclose(project(H, v).data, Z_ref, atol=1e-12)


def test_encode_rejects_mismatched_adjacency():
    tape = Tape()
    p = init_params(3, 2, 2, 0).attach(tape)
    with pytest.raises(nm.DimensionError):
        encode(tape, np.eye(4), np.ones((5, 3)), p)


@pytest.mark.parametrize("seed", range(3))
def test_pipeline_gradient_check(seed):
    rng = np.random.default_rng(seed)
    n = 6
    A = random_graph(rng, n)
    X = rng.normal(size=(n, 3))
    labels = rng.integers(0, 2, size=n)
    params = init_params(3, 4, 2, seed)

    def loss(tape, v):
        return nm.cross_entropy(classify(encode(tape, A, X, v), v), np.arange(n), labels)

    _, ad = nm.value_and_grad(loss, params)
    fd = nm.finite_difference_gradient(lambda q: nm.value_and_grad(loss, q)[0], params)
    # projector weights do not reach this loss
    assert not ad["proj_w1"].any()
    assert nm.relative_error(ad, fd) < 1e-4
