"""Synthetic KG with a planted two-hop rule, for controlled experiments.

Entities come in three tiers x, y, z. Relation r1 links each x to a few y,
r2 links each y to a few z (every z is guaranteed at least one incoming r2
edge), and r3 holds exactly the compositions: (x, r3, z) iff some y has
(x, r1, y) and (y, r2, z). Part of r3 is held out as valid/test, so ranking
those triples well requires propagating along the two-hop structure rather
than memorising. All x and z appear in training via r1/r2 even when their
r3 edges are held out.
"""
from __future__ import annotations

import numpy as np

from .kgdata import TripleStore, Vocabulary
from .seeding import substream


def rule_composition_kg(
    num_entities: int = 200,
    branching: int = 2,
    seed: int = 0,
    valid_fraction: float = 0.1,
    test_fraction: float = 0.2,
) -> tuple[TripleStore, Vocabulary]:
    if num_entities < 10:
        raise ValueError(f"num_entities must be at least 10, got {num_entities}")
    if branching < 1:
        raise ValueError(f"branching must be positive, got {branching}")
    if not 0.0 < valid_fraction + test_fraction < 1.0:
        raise ValueError("valid_fraction + test_fraction must be in (0, 1)")
    rng = substream(seed, "synthetic")

    n_x = int(round(0.4 * num_entities))
    n_y = int(round(0.3 * num_entities))
    n_z = num_entities - n_x - n_y
    vocab = Vocabulary()
    xs = [vocab.add_entity(f"x{i}") for i in range(n_x)]
    ys = [vocab.add_entity(f"y{i}") for i in range(n_y)]
    zs = [vocab.add_entity(f"z{i}") for i in range(n_z)]
    r1 = vocab.add_relation("r1")
    r2 = vocab.add_relation("r2")
    r3 = vocab.add_relation("r3")

    k_y = min(branching, n_y)
    k_z = min(branching, n_z)
    r1_edges = [(x, r1, ys[j]) for x in xs
                for j in sorted(rng.choice(n_y, size=k_y, replace=False))]
    r2_edges = [(y, r2, zs[j]) for y in ys
                for j in sorted(rng.choice(n_z, size=k_z, replace=False))]
    covered = {t for _, _, t in r2_edges}
    for z in zs:
        if z not in covered:
            r2_edges.append((ys[int(rng.integers(n_y))], r2, z))

    succ_y = {x: sorted({t for s, _, t in r1_edges if s == x}) for x in xs}
    succ_z = {y: sorted({t for s, _, t in r2_edges if s == y}) for y in ys}
    compositions = sorted({(x, r3, z) for x in xs for y in succ_y[x] for z in succ_z[y]})

    k = len(compositions)
    n_test = max(1, int(round(test_fraction * k)))
    n_valid = max(1, int(round(valid_fraction * k)))
    if n_test + n_valid >= k:
        raise ValueError(f"not enough composition triples to split: {k}")
    order = rng.permutation(k)
    test_idx = set(order[:n_test].tolist())
    valid_idx = set(order[n_test:n_test + n_valid].tolist())
    r3_train = [compositions[i] for i in range(k) if i not in test_idx and i not in valid_idx]
    r3_valid = [compositions[i] for i in sorted(valid_idx)]
    r3_test = [compositions[i] for i in sorted(test_idx)]

    train = np.asarray(r1_edges + r2_edges + r3_train, dtype=np.int64)
    valid = np.asarray(r3_valid, dtype=np.int64)
    test = np.asarray(r3_test, dtype=np.int64)
    return TripleStore(train=train, valid=valid, test=test), vocab
