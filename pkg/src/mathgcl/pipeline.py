"""Offline pipeline: parse -> train tokens -> train encoder -> build index.

Every stage is seeded from the config's single seed and every artifact
header records the config hash, so two runs of the same config produce
byte-identical files.
"""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .graphs import FormulaGraph, latex_to_graph, read_corpus, write_graph_file
from .index import build_index, query_topk, save_index
from .subword import save_table, train_subword_skipgram
from .training import (FormulaEmbedding, embed_formula, node_features,
                       save_checkpoint, train)
from .walks import corpus_for_graphs

log = logging.getLogger(__name__)


def log_event(event: str, **fields):
    log.info(json.dumps({"event": event, **fields}, sort_keys=True, default=str))


def parse_corpus(corpus_path, layout: str) -> list[tuple[str, FormulaGraph]]:
    items = []
    for formula_id, latex in read_corpus(corpus_path):
        items.append((formula_id, latex_to_graph(latex, layout)))
    return items


def write_embeddings(path, embeddings: list[FormulaEmbedding], config_hash: str):
    with open(path, "w", encoding="utf-8") as fh:
        for e in embeddings:
            fh.write(json.dumps({
                "id": e.id, "layout": e.layout, "provenance": e.provenance,
                "config_hash": config_hash,
                "vector": [float(np.float32(x)) for x in e.vector],
            }, sort_keys=True) + "\n")


def read_embeddings(path) -> list[FormulaEmbedding]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw:
                continue
            rec = json.loads(raw)
            out.append(FormulaEmbedding(rec["id"], np.array(rec["vector"], dtype=np.float64),
                                        rec.get("provenance", "GCL"), rec.get("layout", "")))
    return out


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every offline stage; returns the smoke report dict."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config_hash = cfg.hash()
    layout = cfg.layout.upper()
    started = time.time()

    log_event("parse.start", corpus=cfg.corpus, layout=layout)
    parsed = parse_corpus(cfg.corpus, layout)
    graphs_path = out_dir / f"graphs_{cfg.layout}.jsonl"
    write_graph_file(graphs_path, parsed)
    ids = [formula_id for formula_id, _ in parsed]
    graphs = [g for _, g in parsed]
    log_event("parse.done", formulas=len(parsed))

    walks = corpus_for_graphs(graphs, cfg.tokens.walks_per_node,
                              cfg.tokens.walk_length, cfg.seed)
    table = train_subword_skipgram(walks, cfg.tokens.skipgram(cfg.seed))
    table.meta["config_hash"] = config_hash
    table_path = out_dir / "tokens.mgte"
    save_table(table, table_path)
    log_event("tokens.done", vocab=len(table.vocab), sequences=len(walks.sequences))

    feats = [node_features(table, g) for g in graphs]
    model = cfg.model.lower()
    ckpt_path = None
    params = None
    if model != "baseline":
        result = train(graphs, feats, cfg.gcl.train_config(model, cfg.seed))
        params = result.params
        ckpt_path = out_dir / f"ckpt_{model}_{cfg.layout}.mgcp"
        save_checkpoint(params, ckpt_path, meta={
            "config_hash": config_hash,
            "loss_curve": [round(x, 10) for x in result.loss_curve],
        })
        log_event("gcl.done", objective=model,
                  first_loss=result.loss_curve[0], last_loss=result.loss_curve[-1])

    embeddings = [embed_formula(params, g, table, formula_id)
                  for (formula_id, g) in zip(ids, graphs)]
    emb_path = out_dir / f"embeddings_{model}_{cfg.layout}.jsonl"
    write_embeddings(emb_path, embeddings, config_hash)
    index = build_index(embeddings, meta={"config_hash": config_hash, "model": model})
    index_path = out_dir / f"index_{model}_{cfg.layout}.mgri"
    save_index(index, index_path)
    log_event("index.done", rows=len(index))

    # self-retrieval smoke check: every corpus formula must find itself first
    failures = []
    for e in embeddings:
        ranked = query_topk(index, e.vector, 1, e.id)
        top_id, score = ranked.items[0]
        if top_id != e.id or abs(score - 1.0) > 1e-6:
            failures.append({"id": e.id, "top": top_id, "score": score})
    report = {
        "config_hash": config_hash,
        "layout": layout,
        "model": model,
        "formulas": len(ids),
        "self_retrieval_failures": failures,
        "self_retrieval_ok": not failures,
        "artifacts": {
            "graphs": str(graphs_path),
            "tokens": str(table_path),
            "checkpoint": str(ckpt_path) if ckpt_path else None,
            "embeddings": str(emb_path),
            "index": str(index_path),
        },
        "elapsed_seconds": round(time.time() - started, 3),
    }
    report_path = out_dir / "smoke_report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    log_event("pipeline.done", ok=report["self_retrieval_ok"])
    return report
