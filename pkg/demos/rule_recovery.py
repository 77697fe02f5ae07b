"""Train on a KG with a planted two-hop rule and read the model's reasons.

r3 holds exactly the compositions r1 then r2, and a fifth of those facts are
hidden from training. Ranking them well therefore requires the encoder to
move evidence along the two-hop structure. We train the full model and the
ablation without relation reasoning under the same budget, compare test MRR
against the analytic all-ties baseline, and finish by asking the attention
weights which paths carried a specific held-out prediction.
"""
from hogrn.evaluation import build_filter_index, constant_baseline_mrr, evaluate_split
from hogrn.explain import explain
from hogrn.kgdata import extend_triples
from hogrn.synthetic import rule_composition_kg
from hogrn.training import TrainConfig, fit

store, vocab = rule_composition_kg(num_entities=100, seed=5)
graph = extend_triples(store, vocab)
filter_index = build_filter_index(store, vocab)
chance = constant_baseline_mrr(store.test, filter_index,
                               vocab.num_entities, vocab.num_relations, "both")
print(f"{store.train.shape[0]} train / {store.valid.shape[0]} valid / "
      f"{store.test.shape[0]} test triples, all-ties baseline MRR {chance:.4f}")

models = {}
for name, use_reasoning in (("HoGRN", True), ("HoGRN-R (no reasoning)", False)):
    config = TrainConfig(dim=32, num_layers=2, head="distmult", lr=1e-2,
                         batch_size=128, max_epochs=150, patience=50,
                         mask_ratio=0.1 if use_reasoning else 0.0,
                         use_reasoning=use_reasoning, seed=0)
    model = config.build_model(graph)
    result, _ = fit(model, store, vocab, config, log_fn=None)
    h, z, _ = model.eval_states()
    report = evaluate_split(model.head, h, z, store.test, filter_index,
                            graph.num_raw_relations, "both")
    models[name] = model
    print(f"{name:24s} best epoch {result.best_epoch:3d}  "
          f"test MRR {report.mrr:.4f} ({report.mrr / chance:.1f}x baseline)")

# Explanations: take one held-out r3 fact and list the attention-weighted
# simple paths from its head to its tail. The planted rule shows up as a
# two-hop chain r1 then r2 with most of the weight.
model = models["HoGRN"]
_, _, attentions = model.eval_states()
src, _, tgt = (int(v) for v in store.test[0])
print()
print(f"paths behind the held-out fact ({vocab.entities[src]}, r3, {vocab.entities[tgt]}):")
for path in explain(model.graph, attentions, src, tgt, top_k=5):
    chain = vocab.entities[src]
    for hop in path.hops:
        chain += f" -[{vocab.extended_relation_name(hop.rel)}:{hop.weight:.2f}]-> "
        chain += vocab.entities[hop.tgt]
    print(f"  {path.score:.4f}  {chain}")
