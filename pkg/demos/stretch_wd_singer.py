"""Stretch run: full training on WD-singer, reporting MRR across seeds.

This is the long-haul benchmark script, expect hours on CPU. It is not part
of the test suite; the reference MRR for this dataset is 37.50 on the 0-100
scale and a healthy run should land within a few points of it, with seed
variance reported rather than asserted.

Usage: python3 demos/stretch_wd_singer.py [seed ...]   (default seeds: 0 1 2)

Expects the dataset at data/WD-singer/{train,valid,test}.txt relative to the
repository root (see README, Datasets).
"""
import statistics
import sys
import time
from pathlib import Path

from hogrn.evaluation import build_filter_index, evaluate_split
from hogrn.kgdata import extend_triples, load_dataset
from hogrn.training import TrainConfig, fit

data_dir = Path(__file__).resolve().parents[1] / "data" / "WD-singer"
if not data_dir.is_dir():
    sys.exit(f"dataset not found at {data_dir}; download WD-singer first (README, Datasets)")

seeds = [int(a) for a in sys.argv[1:]] or [0, 1, 2]
store, vocab = load_dataset(data_dir)
graph = extend_triples(store, vocab)
filter_index = build_filter_index(store, vocab)
print(f"WD-singer: {vocab.num_entities} entities, {vocab.num_relations} relations, "
      f"{store.train.shape[0]} train triples; seeds {seeds}")

scores = []
for seed in seeds:
    config = TrainConfig(dim=100, num_layers=2, head="distmult", lr=1e-3,
                         batch_size=256, max_epochs=500, patience=50,
                         mask_ratio=0.1, lambda_rel=0.1, seed=seed)
    model = config.build_model(graph)
    started = time.perf_counter()
    result, _ = fit(model, store, vocab, config,
                    log_fn=lambda line: print(f"  seed {seed}  {line}"))
    h, z, _ = model.eval_states()
    report = evaluate_split(model.head, h, z, store.test, filter_index,
                            graph.num_raw_relations, "both")
    scores.append(100.0 * report.mrr)
    print(f"seed {seed}: test MRR {scores[-1]:.2f} "
          f"(best epoch {result.best_epoch}, {time.perf_counter() - started:.0f}s)")

print()
print(f"test MRR over seeds: {' '.join(f'{s:.2f}' for s in scores)}")
if len(scores) > 1:
    print(f"mean {statistics.mean(scores):.2f}  stdev {statistics.stdev(scores):.2f}")
print("reference point: 37.50 +/- 3.0")
