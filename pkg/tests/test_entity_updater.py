import math

import numpy as np
import pytest

from hogrn import autodiff as ad
from hogrn.autodiff import Tensor
from hogrn.entity_updater import aggregate, attention, compose
from hogrn.kgdata import ExtendedGraph, extend_triples

from conftest import make_store

TANH_2 = 0.9640275800758169


def loop_aggregate(h, z, train, num_entities, num_raw):
    """Scalar reference: builds the extended edge list from scratch and applies
    the update rule edge by edge. Shares no code with the library."""
    edges = []
    for s, r, t in train.tolist():
        edges.append((s, r, t))
        edges.append((t, r + num_raw, s))
    for e in range(num_entities):
        edges.append((e, 2 * num_raw, e))
    in_deg = [0] * num_entities
    for _, _, t in edges:
        in_deg[t] += 1
    dim = h.shape[1]
    out = np.zeros((num_entities, dim))
    for s, r, t in edges:
        msg = [h[s, i] * z[r, i] for i in range(dim)]
        proj_t = [h[t, i] * z[r, i] for i in range(dim)]
        alpha = math.tanh(sum(m * p for m, p in zip(msg, proj_t)))
        coeff = alpha / math.sqrt(in_deg[s] * in_deg[t])
        for i in range(dim):
            out[t, i] += coeff * msg[i]
    return out


def test_compose_is_elementwise_product():
    np.testing.assert_array_equal(compose([1.0, 2.0, 3.0], [2.0, 0.0, 1.0]), [2.0, 0.0, 3.0])


def test_compose_rejects_mismatched_shapes():
    with pytest.raises(ValueError, match="compose dimension mismatch"):
        compose([1.0, 2.0], [1.0, 2.0, 3.0])


def test_attention_all_ones_is_tanh_two():
    ones = np.ones(2)
    assert attention(ones, ones, ones) == pytest.approx(TANH_2, abs=1e-12)


def test_attention_zero_tail_is_zero():
    assert attention(np.ones(3), np.ones(3), np.zeros(3)) == 0.0


def test_attention_symmetric_under_endpoint_swap():
    rng = np.random.default_rng(0)
    h_s, z_r, h_t = rng.normal(size=(3, 4))
    assert attention(h_s, z_r, h_t) == pytest.approx(attention(h_t, z_r, h_s), abs=1e-15)


def test_attention_bounded_below_one():
    # strict in exact arithmetic; float64 tanh only reaches 1.0 when the
    # pre-activation passes ~19, far outside these draws
    rng = np.random.default_rng(1)
    for _ in range(50):
        h_s, z_r, h_t = rng.normal(size=(3, 6))
        assert abs(attention(h_s, z_r, h_t)) < 1.0


def test_isolated_entity_keeps_scaled_self_message():
    # entity c has only its self-loop; with h_c = z_self = [1, 1] and degree 1
    # the update is tanh(2) * [1, 1]
    store, vocab = make_store([("a", "r", "b")], valid=[("a", "r", "c")])
    graph = extend_triples(store, vocab)
    c = vocab.entity_id("c")
    h = np.zeros((3, 2))
    h[c] = 1.0
    z = np.zeros((3, 2))
    z[graph.self_loop_id] = 1.0
    h_next, _ = aggregate(Tensor(h), Tensor(z), graph)
    np.testing.assert_allclose(h_next.data[c], [TANH_2, TANH_2], atol=1e-12)


def test_zero_relations_give_zero_update(six_graph):
    rng = np.random.default_rng(2)
    h = Tensor(rng.normal(size=(six_graph.num_entities, 3)))
    z = Tensor(np.zeros((six_graph.num_relations, 3)))
    h_next, alpha = aggregate(h, z, six_graph)
    np.testing.assert_array_equal(h_next.data, 0.0)
    np.testing.assert_array_equal(alpha, 0.0)


def test_aggregate_matches_scalar_loop_oracle():
    store, vocab = make_store([("a", "r", "b"), ("b", "r", "c")])
    graph = extend_triples(store, vocab)
    rng = np.random.default_rng(3)
    h = rng.normal(size=(3, 4))
    z = rng.normal(size=(3, 4))
    h_next, _ = aggregate(Tensor(h.copy()), Tensor(z.copy()), graph)
    expect = loop_aggregate(h, z, store.train, 3, vocab.num_relations)
    np.testing.assert_allclose(h_next.data, expect, atol=1e-12)


def test_aggregate_oracle_on_larger_graph(six_dataset, six_graph):
    store, vocab = six_dataset
    rng = np.random.default_rng(4)
    h = rng.normal(size=(6, 5))
    z = rng.normal(size=(7, 5))
    h_next, _ = aggregate(Tensor(h.copy()), Tensor(z.copy()), six_graph)
    expect = loop_aggregate(h, z, store.train, 6, vocab.num_relations)
    np.testing.assert_allclose(h_next.data, expect, atol=1e-12)


def test_aggregate_invariant_to_edge_order(six_dataset):
    store, vocab = six_dataset
    rng = np.random.default_rng(5)
    h = rng.normal(size=(6, 3))
    z = rng.normal(size=(7, 3))
    base = ExtendedGraph(store.train, 6, 3)
    perm = rng.permutation(store.train.shape[0])
    shuffled = ExtendedGraph(store.train[perm], 6, 3)
    out_a, _ = aggregate(Tensor(h.copy()), Tensor(z.copy()), base)
    out_b, _ = aggregate(Tensor(h.copy()), Tensor(z.copy()), shuffled)
    np.testing.assert_allclose(out_a.data, out_b.data, atol=1e-12)


def test_aggregate_records_attention_per_edge(six_graph):
    rng = np.random.default_rng(6)
    h = Tensor(rng.normal(size=(6, 3)))
    z = Tensor(rng.normal(size=(7, 3)))
    _, alpha = aggregate(h, z, six_graph)
    assert alpha.shape == (six_graph.num_edges,)
    assert np.all(np.abs(alpha) < 1.0)


def test_aggregate_rejects_mismatched_states(six_graph):
    with pytest.raises(ValueError, match="state/graph mismatch"):
        aggregate(Tensor(np.ones((5, 3))), Tensor(np.ones((7, 3))), six_graph)


def test_aggregate_consumes_only_the_two_state_tensors(six_graph):
    # weight-free: gradients flow to H and Z and nowhere else
    rng = np.random.default_rng(7)
    h = Tensor(rng.normal(size=(6, 3)))
    z = Tensor(rng.normal(size=(7, 3)))
    h_next, _ = aggregate(h, z, six_graph)
    ad.sum_all(h_next).backward()
    assert h.grad is not None and np.any(h.grad != 0.0)
    assert z.grad is not None and np.any(z.grad != 0.0)


def test_aggregate_gradients_match_finite_differences(six_graph):
    rng = np.random.default_rng(8)
    h0 = rng.normal(size=(6, 4))
    z0 = rng.normal(size=(7, 4))
    c = rng.normal(size=(6, 4))

    def loss_value(h_arr, z_arr):
        out, _ = aggregate(Tensor(h_arr), Tensor(z_arr), six_graph)
        return ad.sum_all(out * c)

    h, z = Tensor(h0.copy()), Tensor(z0.copy())
    out, _ = aggregate(h, z, six_graph)
    ad.sum_all(out * c).backward()

    eps = 1e-6
    for leaf, arr in ((h, h0), (z, z0)):
        flat = arr.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = loss_value(h0, z0).item()
            flat[i] = orig - eps
            f_minus = loss_value(h0, z0).item()
            flat[i] = orig
            numeric[i] = (f_plus - f_minus) / (2 * eps)
        np.testing.assert_allclose(leaf.grad.reshape(-1), numeric, atol=1e-6, rtol=1e-5)
