import numpy as np
import pytest

from hogrn.kgdata import ExtendedGraph, TripleStore, Vocabulary


def make_store(train, valid=(), test=()):
    """Build (TripleStore, Vocabulary) from name triples, ids by first occurrence."""
    vocab = Vocabulary()

    def to_ids(rows):
        ids = [(vocab.add_entity(h), vocab.add_relation(r), vocab.add_entity(t))
               for h, r, t in rows]
        return np.asarray(ids, dtype=np.int64).reshape(-1, 3)

    return TripleStore(to_ids(train), to_ids(valid), to_ids(test)), vocab


@pytest.fixture
def six_dataset():
    """6 entities, 3 raw relations, all present in train; used for FD and invariants."""
    return make_store(
        train=[
            ("a", "r1", "b"),
            ("b", "r2", "c"),
            ("c", "r3", "d"),
            ("d", "r1", "e"),
            ("e", "r2", "f"),
            ("a", "r3", "c"),
            ("b", "r1", "d"),
            ("f", "r3", "a"),
        ],
        valid=[("a", "r2", "d"), ("b", "r3", "e")],
        test=[("c", "r1", "f"), ("d", "r2", "a")],
    )


@pytest.fixture
def six_graph(six_dataset):
    store, vocab = six_dataset
    return ExtendedGraph(store.train, vocab.num_entities, vocab.num_relations)


@pytest.fixture
def write_dataset(tmp_path):
    """Writes name triples as a dataset directory and returns its path."""

    def _write(train, valid, test, name="data"):
        directory = tmp_path / name
        directory.mkdir(parents=True, exist_ok=True)
        for fname, rows in (("train.txt", train), ("valid.txt", valid), ("test.txt", test)):
            with (directory / fname).open("w", encoding="utf-8") as fh:
                for h, r, t in rows:
                    fh.write(f"{h}\t{r}\t{t}\n")
        return directory

    return _write
