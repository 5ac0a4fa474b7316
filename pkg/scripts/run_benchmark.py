#!/usr/bin/env python3
"""Synthetic retrieval benchmark over all three contrastive objectives.

Trains each objective on the committed 200-formula corpus, then reports
per-objective loss curves, self-retrieval, and mean bpref/nDCG against the
template qrels, next to the averaging baseline and the random-embedding
chance level. tests/test_acceptance.py asserts the same quantities; this
script exists for interactive runs and prints the full table.
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from mathgcl.graphs import latex_to_graph, read_corpus
from mathgcl.index import build_index, query_topk
from mathgcl.metrics import bpref, ndcg, read_qrels
from mathgcl.subword import SkipgramConfig, train_subword_skipgram
from mathgcl.training import (FormulaEmbedding, TrainConfig, embed_formula,
                              node_features, train)
from mathgcl.walks import corpus_for_graphs

ROOT = Path(__file__).resolve().parent.parent


def load_benchmark_config():
    return json.loads((ROOT / "configs" / "benchmark.json").read_text())


def prepare(cfg):
    corpus = read_corpus(ROOT / cfg["corpus"])
    layout = cfg["layout"].upper()
    ids = [formula_id for formula_id, _ in corpus]
    graphs = [latex_to_graph(latex, layout) for _, latex in corpus]
    walks = corpus_for_graphs(graphs, cfg["tokens"]["walks_per_node"],
                              cfg["tokens"]["walk_length"], cfg["seed"])
    table = train_subword_skipgram(
        walks, SkipgramConfig(epochs=cfg["tokens"]["epochs"], seed=cfg["seed"]))
    feats = [node_features(table, g) for g in graphs]
    qrels = read_qrels(ROOT / cfg["qrels"])
    return ids, graphs, table, feats, qrels


def retrieval_scores(ids, embeddings, qrels):
    index = build_index(embeddings)
    bprefs, ndcgs, self_hits = [], [], 0
    for formula_id, emb in zip(ids, embeddings):
        ranked = query_topk(index, emb.vector, 1000, formula_id)
        docs = [d for d, _ in ranked.items]
        judged = qrels.for_query(formula_id)
        bprefs.append(bpref(docs, judged))
        ndcgs.append(ndcg(docs, judged))
        top_id, top_score = ranked.items[0]
        if top_id == formula_id and abs(top_score - 1.0) <= 1e-6:
            self_hits += 1
    return float(np.mean(bprefs)), float(np.mean(ndcgs)), self_hits


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=None, help="write the report JSON here")
    args = parser.parse_args()

    cfg = load_benchmark_config()
    t0 = time.time()
    ids, graphs, table, feats, qrels = prepare(cfg)
    layout = cfg["layout"].upper()
    print(f"prepared corpus + token table in {time.time() - t0:.1f}s")

    report = {"config": cfg, "results": {}}

    base_embs = [embed_formula(None, g, table, i) for i, g in zip(ids, graphs)]
    b, n, hits = retrieval_scores(ids, base_embs, qrels)
    report["results"]["baseline"] = {"bpref": b, "ndcg": n, "self_retrieval": hits}
    print(f"baseline          bpref={b:.4f} ndcg={n:.4f} self={hits}/{len(ids)}")

    chance_vals = []
    for seed in cfg["chance_seeds"]:
        rng = np.random.default_rng(seed)
        rand = [FormulaEmbedding(i, rng.normal(size=100), "GCL", layout) for i in ids]
        chance_vals.append(retrieval_scores(ids, rand, qrels)[0])
    chance = float(np.mean(chance_vals))
    report["results"]["chance"] = {"bpref": chance, "seeds": cfg["chance_seeds"]}
    print(f"chance            bpref={chance:.4f} (mean over {len(chance_vals)} seeds)")

    for objective, overrides in cfg["objectives"].items():
        t1 = time.time()
        train_cfg = TrainConfig(objective=objective, epochs=cfg["gcl_epochs"],
                                seed=cfg["seed"], **overrides)
        result = train(graphs, feats, train_cfg)
        embs = [embed_formula(result.params, g, table, i) for i, g in zip(ids, graphs)]
        b, n, hits = retrieval_scores(ids, embs, qrels)
        ratio = result.loss_curve[-1] / result.loss_curve[0]
        report["results"][objective] = {
            "bpref": b, "ndcg": n, "self_retrieval": hits,
            "first_loss": result.loss_curve[0], "last_loss": result.loss_curve[-1],
            "loss_ratio": ratio, "overrides": overrides,
            "counters": {"augmentations": result.counters.augmentations,
                         "negative_pairs": result.counters.negative_pairs,
                         "ema_updates": result.counters.ema_updates},
        }
        print(f"{objective:<17} bpref={b:.4f} ndcg={n:.4f} self={hits}/{len(ids)} "
              f"loss {result.loss_curve[0]:.3f}->{result.loss_curve[-1]:.3f} "
              f"({time.time() - t1:.1f}s)")

    report["elapsed_seconds"] = round(time.time() - t0, 1)
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True))
        print(f"report -> {args.out}")


if __name__ == "__main__":
    main()
