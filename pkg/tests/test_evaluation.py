import numpy as np
import pytest

from hogrn.evaluation import (
    EvalReport,
    build_filter_index,
    constant_baseline_mrr,
    evaluate_split,
    filtered_rank,
    num_candidates,
    oracle_rank,
)
from hogrn.scoring import score_all_tails

from conftest import make_store

EMPTY = np.empty(0, dtype=np.int64)


def test_filtered_rank_hand_example():
    # scores [0.9, 0.5, 0.7, 0.2], gold = 1, entity 0 is a known answer:
    # candidates {1, 2, 3}, one better (0.7) -> rank 2
    scores = np.array([0.9, 0.5, 0.7, 0.2])
    assert filtered_rank(scores, gold=1, known=np.array([0])) == 2.0


def test_filtered_rank_strictly_highest_is_one():
    assert filtered_rank(np.array([0.1, 0.9, 0.3]), gold=1, known=EMPTY) == 1.0


def test_filtered_rank_all_ties_share_the_middle():
    for c in (1, 2, 5, 50):
        scores = np.zeros(c)
        assert filtered_rank(scores, gold=0, known=EMPTY) == (c + 1) / 2.0


def test_filtered_rank_never_filters_the_gold():
    scores = np.array([1.0, 2.0, 3.0])
    assert filtered_rank(scores, gold=2, known=np.array([0, 1, 2])) == 1.0


def test_filtered_rank_full_filter_degenerate():
    scores = np.array([5.0, 1.0, 2.0, 3.0])
    # every other entity filtered away: rank 1 regardless of the scores
    assert filtered_rank(scores, gold=1, known=np.array([0, 2, 3])) == 1.0


def test_filtered_rank_invariant_under_monotone_transforms():
    rng = np.random.default_rng(0)
    scores = rng.choice([0.1, 0.4, 0.7], size=20)  # ties included
    known = np.array([3, 7])
    base = filtered_rank(scores, 5, known)
    assert filtered_rank(3.0 * scores + 2.0, 5, known) == base
    assert filtered_rank(np.exp(scores), 5, known) == base


def test_filtered_rank_validates_gold():
    with pytest.raises(IndexError):
        filtered_rank(np.zeros(3), gold=3, known=EMPTY)


def test_num_candidates_counts_allowed_entities():
    assert num_candidates(10, gold=0, known=np.array([1, 2, 3])) == 7
    assert num_candidates(4, gold=1, known=np.array([0, 1, 2, 3])) == 1


def test_build_filter_index_spans_all_splits_and_inverses():
    store, vocab = make_store(
        train=[("a", "r", "b")], valid=[("a", "r", "c")], test=[("b", "r", "a")])
    index = build_filter_index(store, vocab)
    a, b, c = (vocab.entity_id(e) for e in "abc")
    r, m = vocab.relation_id("r"), vocab.num_relations
    np.testing.assert_array_equal(index[(a, r)], sorted([b, c]))
    np.testing.assert_array_equal(index[(b, r + m)], [a])
    np.testing.assert_array_equal(index[(c, r + m)], [a])
    np.testing.assert_array_equal(index[(b, r)], [a])


def ranks_124_setup():
    """Three tail queries engineered to rank 1, 2 and 4 (no filtering, no ties)."""
    h = np.array([[4.0], [3.0], [2.0], [1.0], [0.5]])
    z = np.array([[1.0]])
    # ordering of tails by score is h-descending for every positive source
    triples = np.array([[0, 0, 0], [1, 0, 1], [2, 0, 3]])
    return h, z, triples


def test_mrr_and_hits_from_known_ranks():
    h, z, triples = ranks_124_setup()
    report = evaluate_split("distmult", h, z, triples, {}, num_raw_relations=1,
                            direction="tail", keep_ranks=True)
    np.testing.assert_array_equal(report.ranks, [1.0, 2.0, 4.0])
    assert report.mrr == pytest.approx((1.0 + 0.5 + 0.25) / 3.0, abs=1e-12)
    assert report.mrr == pytest.approx(0.58333, abs=5e-6)
    assert report.hits1 == pytest.approx(1.0 / 3.0)
    assert report.hits3 == pytest.approx(2.0 / 3.0)
    assert report.hits10 == pytest.approx(1.0)
    assert report.num_queries == 3


def test_hits_are_monotone_and_mrr_bounded():
    rng = np.random.default_rng(1)
    h = rng.normal(size=(12, 4))
    z = rng.normal(size=(5, 4))
    triples = np.stack([rng.integers(0, 12, 20), rng.integers(0, 2, 20),
                        rng.integers(0, 12, 20)], axis=1)
    report = evaluate_split("distmult", h, z, triples, {}, num_raw_relations=2)
    assert report.hits1 <= report.hits3 <= report.hits10
    assert 0.0 < report.mrr <= 1.0
    assert report.num_queries == 40  # both directions


def test_constant_scorer_equals_analytic_baseline():
    store, vocab = make_store(
        train=[("a", "r", "b"), ("b", "r", "c"), ("c", "r", "a")],
        valid=[("a", "r", "c")],
        test=[("b", "r", "a"), ("c", "r", "b")],
    )
    index = build_filter_index(store, vocab)
    n = vocab.num_entities
    h = np.ones((n, 3))
    z = np.ones((3, 3))
    report = evaluate_split("distmult", h, z, store.test, index, vocab.num_relations)
    expect = constant_baseline_mrr(store.test, index, n, vocab.num_relations)
    assert report.mrr == pytest.approx(expect, abs=1e-12)


def test_empty_split_raises():
    with pytest.raises(ValueError, match="empty split"):
        evaluate_split("distmult", np.ones((2, 2)), np.ones((3, 2)),
                       np.empty((0, 3), dtype=np.int64), {}, 1)


def test_direction_validation():
    with pytest.raises(ValueError, match="direction"):
        evaluate_split("distmult", np.ones((2, 2)), np.ones((3, 2)),
                       np.array([[0, 0, 1]]), {}, 1, direction="head")
    with pytest.raises(ValueError, match="score head"):
        evaluate_split("complex", np.ones((2, 2)), np.ones((3, 2)),
                       np.array([[0, 0, 1]]), {}, 1)


def test_report_lines_scale_by_one_hundred():
    report = EvalReport(mrr=1.0, hits1=0.5, hits3=2.0 / 3.0, hits10=1.0,
                        num_queries=6, direction="tail")
    lines = "\n".join(report.lines())
    assert "MRR:      100.00" in lines
    assert "Hits@1:   50.00" in lines
    assert "Hits@3:   66.67" in lines


def test_oracle_rank_agrees_on_dyadic_instances():
    rng = np.random.default_rng(2)
    for _ in range(25):
        n = int(rng.integers(2, 20))
        d = int(rng.integers(1, 4))
        h = rng.integers(-8, 9, size=(n, d)) / 8.0
        z = rng.integers(-8, 9, size=(3, d)) / 8.0
        src, rel, gold = int(rng.integers(n)), int(rng.integers(3)), int(rng.integers(n))
        known = rng.choice(n, size=int(rng.integers(0, n)), replace=False)
        for head in ("transe", "distmult"):
            scores = score_all_tails(head, h, z, src, rel)
            assert filtered_rank(scores, gold, known) == oracle_rank(
                head, h, z, src, rel, gold, known)


def test_oracle_rank_rejects_unknown_head():
    with pytest.raises(ValueError, match="score head"):
        oracle_rank("complex", np.ones((2, 2)), np.ones((2, 2)), 0, 0, 0, EMPTY)
