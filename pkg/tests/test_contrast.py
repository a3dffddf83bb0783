import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedrgl import numeric as nm
from fedrgl.contrast import PseudoLabelSet, augment, contrastive_loss, js_loss, pseudo_labels, pseudo_loss
from fedrgl.graph import validate_record
from fedrgl.numeric import ParamSet, Tape

from oracles import contrastive_oracle, js3_oracle


def const(*xs):
    tape = Tape()
    out = tuple(tape.constant(x) for x in xs)
    return out[0] if len(out) == 1 else out


def ps(nodes, labels):
    return PseudoLabelSet(np.asarray(nodes), np.asarray(labels), np.ones(len(nodes)))


def small_bundle():
    rng = np.random.default_rng(0)
    n = 12
    edges = [[i, j] for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4]
    return validate_record(
        {
            "n_nodes": n,
            "n_classes": 2,
            "features": rng.normal(size=(n, 6)).tolist(),
            "labels": [0] * n,
            "edges": edges,
            "split": ["train"] * n,
        }
    )


def test_augment_identity_and_forced_cases():
    b = small_bundle()
    v = augment(b, 0.0, 0.0, seed=1)
    assert np.array_equal(v.edges, b.edges) and np.array_equal(v.features, b.features)
    assert augment(b, 1.0, 0.0, seed=1).edges.shape[0] == 0
    assert not augment(b, 0.0, 1.0, seed=1).features.any()


def test_augment_deterministic_and_subset():
    b = small_bundle()
    v1, v2 = augment(b, 0.5, 0.5, seed=9), augment(b, 0.5, 0.5, seed=9)
    assert np.array_equal(v1.edges, v2.edges) and np.array_equal(v1.features, v2.features)
    original = set(map(tuple, b.edges.tolist()))
    assert set(map(tuple, v1.edges.tolist())) <= original
    assert not v1.features[:, v1.masked_columns].any()
    np.testing.assert_array_equal(v1.features[:, ~v1.masked_columns], b.features[:, ~v1.masked_columns])


def test_augment_rejects_bad_probability():
    with pytest.raises(ValueError):
        augment(small_bundle(), 1.5, 0.0, seed=0)


def test_contrastive_orthogonal_example():
    Z = np.eye(2)
    loss = contrastive_loss(*const(Z, Z), 0.5).item()
    assert loss == pytest.approx(-math.log(math.e**2 / (math.e**2 + 2)), abs=1e-12)
    assert loss == pytest.approx(0.23954, abs=1e-5)


def test_contrastive_identical_embeddings_is_log3():
    Z = np.ones((2, 3))
    assert contrastive_loss(*const(Z, Z), 0.5).item() == pytest.approx(math.log(3), abs=1e-12)


def test_contrastive_single_node_is_zero(caplog):
    assert contrastive_loss(*const([[1.0, 2.0]], [[3.0, 1.0]])).item() == 0.0
    assert "at least two nodes" in caplog.text


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.floats(0.01, 100.0), st.floats(0.1, 2.0))
def test_contrastive_matches_oracle_and_is_scale_invariant(seed, n, c, tau):
    rng = np.random.default_rng(seed)
    Z1, Z2 = rng.normal(size=(n, 4)), rng.normal(size=(n, 4))
    loss = contrastive_loss(*const(Z1, Z2), tau).item()
    assert loss == pytest.approx(contrastive_oracle(Z1, Z2, tau), rel=1e-9)
    assert contrastive_loss(*const(c * Z1, c * Z2), tau).item() == pytest.approx(loss, rel=1e-9)


def test_pseudo_label_selection():
    # logits chosen so the averaged softmax is [0.9, 0.1] for node 0 and [0.5, 0.5] for node 1
    P = np.array([[math.log(9.0), 0.0], [0.0, 0.0], [5.0, 0.0]])
    out = pseudo_labels(P, P, [0, 1], gamma=0.5)
    assert out.nodes.tolist() == [0] and out.labels.tolist() == [0]
    assert out.confidence[0] == pytest.approx(0.9)
    assert len(pseudo_labels(P, P, [], 0.5)) == 0


def test_pseudo_labels_only_from_noisy_set():
    P = np.array([[9.0, 0.0], [0.0, 9.0], [9.0, 0.0]])
    out = pseudo_labels(P, P, [1], gamma=0.7)
    assert out.nodes.tolist() == [1] and out.labels.tolist() == [1]


def test_pseudo_loss_examples():
    assert pseudo_loss(*const(np.zeros((2, 2)), np.zeros((2, 2))), ps([], [])).item() == 0.0
    sure = np.array([[50.0, 0.0]])
    assert pseudo_loss(*const(sure, sure), ps([0], [0])).item() < 1e-12
    flat = np.zeros((1, 2))
    assert pseudo_loss(*const(flat, flat), ps([0], [1])).item() == pytest.approx(math.log(2))


def test_pseudo_loss_averages_views():
    P1 = np.array([[math.log(3.0), 0.0]])
    P2 = np.zeros((1, 2))
    expected = 0.5 * (-math.log(0.75) - math.log(0.5))
    assert pseudo_loss(*const(P1, P2), ps([0], [0])).item() == pytest.approx(expected)


def test_js_examples():
    P = const(np.array([[0.3, 0.7], [0.5, 0.5]]))
    assert js_loss(P, P, P, ps([0, 1], [1, 1])).item() == pytest.approx(0.0, abs=1e-15)
    assert js_loss(P, P, P, ps([], [])).item() == 0.0
    P0, P1, P2 = np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), np.array([[0.5, 0.5]])
    value = js_loss(*const(P0, P1, P2), ps([0], [0])).item()
    assert value == pytest.approx(js3_oracle(P0, P1, P2, [0]), abs=1e-12)
    # closed form: entropy of the mixture [1/2, 1/2] minus the mean entropy (ln 2)/3
    assert value == pytest.approx(math.log(2) - math.log(2) / 3, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(2, 4))
def test_js_matches_oracle(seed, n, C):
    rng = np.random.default_rng(seed)
    Ps = [rng.dirichlet(np.ones(C), size=n) for _ in range(3)]
    rows = sorted(set(rng.integers(0, n, size=n).tolist()))
    value = js_loss(*const(*Ps), ps(rows, [0] * len(rows))).item()
    assert value == pytest.approx(js3_oracle(*Ps, rows), abs=1e-12)
    assert value >= -1e-15


@pytest.mark.parametrize("seed", range(4))
def test_loss_gradients(seed):
    rng = np.random.default_rng(seed)
    n, C = 5, 3
    params = ParamSet({"a": rng.normal(size=(n, C)), "b": rng.normal(size=(n, C)), "c": rng.normal(size=(n, C))})
    pseudo = ps([0, 2, 3], [1, 0, 2])

    def loss(tape, v):
        cl = contrastive_loss(v["a"], v["b"], 0.5)
        p = pseudo_loss(v["a"], v["b"], pseudo)
        js = js_loss(*(nm.softmax_rows(v[k]) for k in "abc"), pseudo)
        return nm.add(nm.add(cl, p), js)

    _, ad = nm.value_and_grad(loss, params)
    fd = nm.finite_difference_gradient(lambda q: nm.value_and_grad(loss, q)[0], params)
    assert nm.relative_error(ad, fd) < 1e-4
