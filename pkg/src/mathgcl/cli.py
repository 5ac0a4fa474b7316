"""Command-line entry points for the full pipeline.

Subcommands: parse, train-tokens, train-gcl, index, query, eval, serve,
pipeline. Failures exit nonzero after printing a machine-readable JSON
error report to stderr; logs are line-delimited JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import ArtifactMismatch, ConfigError, MathGclError
from .graphs import latex_to_graph, read_corpus, read_graph_file, write_graph_file
from .index import build_index, load_index, query_pipeline, save_index, write_run_file
from .metrics import evaluate_run, f1_combine, read_qrels, read_run, report_to_json
from .pipeline import read_embeddings, run_pipeline
from .subword import SkipgramConfig, load_table, save_table, train_subword_skipgram
from .training import (TrainConfig, load_checkpoint, node_features,
                       save_checkpoint, train)
from .walks import corpus_for_graphs


class _JsonLogHandler(logging.StreamHandler):
    def emit(self, record):
        msg = record.getMessage()
        try:
            json.loads(msg)
            line = msg
        except (ValueError, TypeError):
            line = json.dumps({"event": "log", "level": record.levelname.lower(),
                               "message": msg})
        self.stream.write(line + "\n")


def _setup_logging(verbose: bool):
    handler = _JsonLogHandler(sys.stderr)
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        handlers=[handler])


def cmd_parse(args) -> int:
    layouts = ["SLT", "OPT"] if args.layout == "both" else [args.layout.upper()]
    corpus = read_corpus(args.corpus)
    out = Path(args.out)
    for layout in layouts:
        items = [(formula_id, latex_to_graph(latex, layout))
                 for formula_id, latex in corpus]
        path = out if len(layouts) == 1 else out.with_name(
            out.stem + f"_{layout.lower()}" + out.suffix)
        write_graph_file(path, items)
        print(f"wrote {len(items)} {layout} graphs to {path}")
    return 0


def cmd_train_tokens(args) -> int:
    items = read_graph_file(args.graphs)
    graphs = [g for _, g in items]
    walks = corpus_for_graphs(graphs, args.walks, args.walk_length, args.seed)
    cfg = SkipgramConfig(dim=args.dim, window=args.window, negatives=args.negatives,
                         epochs=args.epochs, learning_rate=args.lr,
                         min_count=args.min_count, seed=args.seed)
    table = train_subword_skipgram(walks, cfg)
    save_table(table, args.out)
    print(f"trained {len(table.vocab)} token vectors (dim {table.dim}) -> {args.out}")
    return 0


def cmd_train_gcl(args) -> int:
    items = read_graph_file(args.graphs)
    graphs = [g for _, g in items]
    layouts = {g.layout for g in graphs}
    if layouts != {args.layout.upper()}:
        raise ArtifactMismatch(f"graph file holds {sorted(layouts)}, asked for {args.layout.upper()}")
    table = load_table(args.tokens)
    feats = [node_features(table, g) for g in graphs]
    cfg = TrainConfig(objective=args.model, epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.lr, tau=args.tau, ema_decay=args.ema_decay,
                      node_drop_ratio=args.node_drop, edge_perturb_ratio=args.edge_perturb,
                      seed=args.seed)
    result = train(graphs, feats, cfg)
    save_checkpoint(result.params, args.out,
                    meta={"loss_curve": [round(x, 10) for x in result.loss_curve]})
    print(f"{args.model}: epoch losses {result.loss_curve[0]:.4f} -> "
          f"{result.loss_curve[-1]:.4f}, checkpoint -> {args.out}")
    return 0


def cmd_index(args) -> int:
    embeddings = read_embeddings(args.embeddings)
    index = build_index(embeddings)
    save_index(index, args.out)
    print(f"indexed {len(index)} embeddings -> {args.out}")
    return 0


def cmd_query(args) -> int:
    index = load_index(args.index)
    table = load_table(args.tokens)
    params = None
    if args.ckpt:
        params, _ = load_checkpoint(args.ckpt)
    layout = args.layout or index.layout
    ranked = query_pipeline(args.latex, layout, table, params, index, args.k)
    for rank, (formula_id, score) in enumerate(ranked.items, 1):
        print(f"{rank}\t{formula_id}\t{score:.6f}")
    if args.run_out:
        write_run_file(args.run_out, [ranked])
    return 0


def cmd_eval(args) -> int:
    qrels = read_qrels(args.qrels)
    runs = [read_run(p) for p in args.run.split(",")]
    report = evaluate_run(runs, qrels, args.k)
    extras = {}
    if args.slt_score is not None and args.opt_score is not None:
        extras["f1"] = f1_combine(args.slt_score, args.opt_score)
    text = report_to_json(report, extras)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text)
    return 0


def cmd_pipeline(args) -> int:
    overrides = {"out_dir": args.out_dir, "layout": args.layout,
                 "model": args.model, "seed": args.seed}
    cfg = load_config(args.config, overrides)
    report = run_pipeline(cfg)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["self_retrieval_ok"] else 1


def cmd_serve(args) -> int:
    from .server import build_state, serve_forever

    cfg = load_config(args.config)
    out = Path(cfg.out_dir)
    model = cfg.model.lower()
    entry = {"layout": cfg.layout, "model": model,
             "index": str(out / f"index_{model}_{cfg.layout}.mgri")}
    if model != "baseline":
        entry["checkpoint"] = str(out / f"ckpt_{model}_{cfg.layout}.mgcp")
    corpus = read_corpus(cfg.corpus)
    state = build_state(out / "tokens.mgte", [entry], corpus, cfg.serve.default_k)
    port = args.port if args.port is not None else cfg.serve.port
    serve_forever(state, cfg.serve.host, port)
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mathgcl",
                                     description="formula retrieval pipeline")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="corpus latex -> formula graphs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--layout", choices=["slt", "opt", "both"], default="both")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("train-tokens", help="train subword token embeddings")
    p.add_argument("--graphs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--walks", type=int, default=10)
    p.add_argument("--walk-length", type=int, default=8)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_tokens)

    p = sub.add_parser("train-gcl", help="train a contrastive encoder")
    p.add_argument("--model", choices=["infograph", "graphcl", "bgrl"], required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--tokens", required=True)
    p.add_argument("--layout", choices=["slt", "opt"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--ema-decay", type=float, default=0.99)
    p.add_argument("--node-drop", type=float, default=0.2)
    p.add_argument("--edge-perturb", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_gcl)

    p = sub.add_parser("index", help="build a retrieval index from embeddings")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="rank corpus formulas against a query")
    p.add_argument("--index", required=True)
    p.add_argument("--latex", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--tokens", required=True)
    p.add_argument("--ckpt", default=None, help="encoder checkpoint; omit for the baseline")
    p.add_argument("--layout", choices=["slt", "opt"], default=None)
    p.add_argument("--run-out", default=None, help="also write a TREC-style run file")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="score runs against graded judgments")
    p.add_argument("--run", required=True, help="run file, or comma-separated trials")
    p.add_argument("--qrels", required=True)
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--out", default=None)
    p.add_argument("--slt-score", type=float, default=None)
    p.add_argument("--opt-score", type=float, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run all offline stages from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--layout", choices=["slt", "opt"], default=None)
    p.add_argument("--model", choices=["infograph", "graphcl", "bgrl", "baseline"],
                   default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("serve", help="HTTP query service over built artifacts")
    p.add_argument("--config", required=True)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": {"type": "ConfigError", "message": str(exc)}}),
              file=sys.stderr)
        return 1
    except MathGclError as exc:
        payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        if hasattr(exc, "stage"):
            payload["error"]["stage"] = exc.stage
        print(json.dumps(payload), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
