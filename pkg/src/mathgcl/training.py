"""Training loop for the contrastive objectives, plus formula embedding.

Adam updates (beta1=0.9, beta2=0.999), deterministic under a fixed seed in
single-threaded mode. Per Table-1-style conformance, the loop applies
augmentation only for graphcl/bgrl, evaluates negative pairs only for
infograph/graphcl, and runs EMA target updates only for bgrl; the
Counters record exposes all of this for assertion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .augment import drop_nodes, perturb_edges
from .binio import (check_magic, read_f32_array, read_str, read_u32,
                    write_f32_array, write_str, write_u32)
from .encoder import EncoderCore, EncoderParams, encode, init_params, relation_vocabulary
from .errors import (BatchTooSmall, EmptyGraph, MalformedRecord, NonFiniteLoss)
from .graphs import FormulaGraph
from .objectives import (Counters, View, bgrl_batch, ema_update,
                         graphcl_batch, infograph_batch)
from .subword import EmbeddingTable

OBJECTIVES = ("infograph", "graphcl", "bgrl")

MAGIC = b"MGCP"
FORMAT_VERSION = 1


@dataclass
class TrainConfig:
    objective: str = "graphcl"
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 1e-3
    tau: float = 0.5
    ema_decay: float = 0.99
    node_drop_ratio: float = 0.2
    edge_perturb_ratio: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not (0.0 <= self.ema_decay < 1.0):
            raise ValueError("ema decay must lie in [0, 1)")


class Adam:
    def __init__(self, params: EncoderParams, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.step_count = 0
        self.m = {name: np.zeros_like(arr) for name, arr in params.tensors()}
        self.v = {name: np.zeros_like(arr) for name, arr in params.tensors()}

    def step(self, params: EncoderParams, grads: dict[str, np.ndarray]):
        self.step_count += 1
        bc1 = 1.0 - self.beta1 ** self.step_count
        bc2 = 1.0 - self.beta2 ** self.step_count
        for name, arr in params.tensors():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            arr -= self.lr * (self.m[name] / bc1) / (np.sqrt(self.v[name] / bc2) + self.eps)


def node_features(table: EmbeddingTable, g: FormulaGraph) -> np.ndarray:
    if not g.nodes:
        raise EmptyGraph("formula graph has no nodes")
    return np.stack([table.embed(tok.encoded()) for tok in g.nodes])


def _augment_once(g: FormulaGraph, cfg: TrainConfig, rng: np.random.Generator,
                  counters: Counters) -> FormulaGraph:
    # one augmentation drawn uniformly from {node drop, edge perturb} per view
    counters.augmentations += 1
    seed = int(rng.integers(0, 2 ** 31 - 1))
    if rng.random() < 0.5:
        return drop_nodes(g, cfg.node_drop_ratio, seed)
    return perturb_edges(g, cfg.edge_perturb_ratio, seed)


def _view(base: FormulaGraph, base_feats: np.ndarray, aug: FormulaGraph) -> View:
    rows = aug.source_indices if aug.source_indices is not None else range(len(aug.nodes))
    return View(aug, base_feats[np.array(list(rows), dtype=np.int64)])


@dataclass
class TrainResult:
    params: EncoderParams
    loss_curve: list[float]
    counters: Counters = field(default_factory=Counters)


def train(graphs: list[FormulaGraph], features: list[np.ndarray],
          config: TrainConfig, dim: int = 100) -> TrainResult:
    """Train the chosen objective; returns params, per-epoch mean losses,
    and conformance counters."""
    if config.objective in ("infograph", "graphcl") and len(graphs) < 2:
        raise BatchTooSmall(f"{config.objective} needs >= 2 graphs")
    if not graphs:
        raise BatchTooSmall("no graphs to train on")
    layouts = {g.layout for g in graphs}
    if len(layouts) != 1:
        raise ValueError("graphs mix layouts")
    layout = layouts.pop()
    relations = relation_vocabulary(layout, graphs)

    rng = np.random.default_rng(config.seed)
    params = init_params(dim, relations, config.objective, rng)
    params.layout = layout
    opt = Adam(params, config.learning_rate)
    counters = Counters()
    curve: list[float] = []

    for _ in range(config.epochs):
        order = rng.permutation(len(graphs))
        epoch_losses: list[float] = []
        for start in range(0, len(order), config.batch_size):
            batch = [int(i) for i in order[start:start + config.batch_size]]
            if config.objective in ("infograph", "graphcl") and len(batch) < 2:
                continue  # a trailing singleton cannot form negative pairs
            if config.objective == "infograph":
                loss, grads = infograph_batch(params, [graphs[i] for i in batch],
                                              [features[i] for i in batch], counters)
            elif config.objective == "graphcl":
                view_graphs, view_feats = [], []
                for i in batch:
                    counters.views_per_graph.add(2)
                    for _ in range(2):
                        aug = _augment_once(graphs[i], config, rng, counters)
                        view = _view(graphs[i], features[i], aug)
                        view_graphs.append(view.graph)
                        view_feats.append(view.features)
                loss, grads = graphcl_batch(params, view_graphs, view_feats,
                                            config.tau, counters)
            else:
                pairs = []
                for i in batch:
                    counters.views_per_graph.add(2)
                    v1 = _view(graphs[i], features[i],
                               _augment_once(graphs[i], config, rng, counters))
                    v2 = _view(graphs[i], features[i],
                               _augment_once(graphs[i], config, rng, counters))
                    pairs.append((v1, v2))
                loss, grads = bgrl_batch(params, pairs, counters)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} at adam step {opt.step_count + 1}")
            opt.step(params, grads)
            if config.objective == "bgrl":
                ema_update(params.target, params.core, config.ema_decay)
                counters.ema_updates += 1
            epoch_losses.append(loss)
        curve.append(float(np.mean(epoch_losses)) if epoch_losses else float("nan"))
    return TrainResult(params, curve, counters)


# --------------------------------------------------------------------------
# Formula embeddings
# --------------------------------------------------------------------------

GCL_PROVENANCE = "GCL"
BASELINE_PROVENANCE = "AVERAGE_BASELINE"


@dataclass
class FormulaEmbedding:
    id: str
    vector: np.ndarray
    provenance: str
    layout: str


def embed_formula(params: EncoderParams | None, g: FormulaGraph,
                  table: EmbeddingTable, formula_id: str = "") -> FormulaEmbedding:
    """Graph embedding: encoder readout when params are given, otherwise the
    unweighted mean of node feature vectors (the averaging baseline)."""
    feats = node_features(table, g)
    if params is None:
        return FormulaEmbedding(formula_id, feats.mean(axis=0), BASELINE_PROVENANCE, g.layout)
    _, z, _ = encode(params, g, feats)
    return FormulaEmbedding(formula_id, z, GCL_PROVENANCE, g.layout)


# --------------------------------------------------------------------------
# Checkpoints: magic "MGCP", version, objective tag, layout tag, meta JSON,
# relation list, then named float32 tensors with a shape directory.
# --------------------------------------------------------------------------

def save_checkpoint(params: EncoderParams, path, meta: dict | None = None):
    entries = params.tensors()
    if params.target is not None:
        entries = entries + params.target.tensors("target_")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        write_u32(fh, FORMAT_VERSION)
        write_str(fh, params.objective)
        write_str(fh, getattr(params, "layout", ""))
        write_str(fh, json.dumps(meta or {}, sort_keys=True))
        write_u32(fh, params.dim)
        write_u32(fh, len(params.relations))
        for rel in params.relations:
            write_str(fh, rel)
        write_u32(fh, len(entries))
        for name, arr in entries:
            write_str(fh, name)
            write_u32(fh, arr.ndim)
            for d in arr.shape:
                write_u32(fh, d)
            write_f32_array(fh, arr)


def load_checkpoint(path) -> tuple[EncoderParams, dict]:
    with open(path, "rb") as fh:
        check_magic(fh, MAGIC, "checkpoint")
        version = read_u32(fh)
        if version != FORMAT_VERSION:
            raise MalformedRecord(f"unsupported checkpoint version {version}")
        objective = read_str(fh)
        layout = read_str(fh)
        meta = json.loads(read_str(fh))
        dim = read_u32(fh)
        relations = [read_str(fh) for _ in range(read_u32(fh))]
        tensors: dict[str, np.ndarray] = {}
        for _ in range(read_u32(fh)):
            name = read_str(fh)
            ndim = read_u32(fh)
            shape = tuple(read_u32(fh) for _ in range(ndim))
            count = 1
            for d in shape:
                count *= d
            tensors[name] = read_f32_array(fh, count).reshape(shape)

    def pick(name):
        if name not in tensors:
            raise MalformedRecord(f"checkpoint missing tensor {name}", field=name)
        return tensors[name]

    core = EncoderCore(pick("w1"), pick("b1"), pick("w2"), pick("b2"), pick("rel_emb"))
    params = EncoderParams(dim, relations, core, objective=objective)
    params.layout = layout
    if objective == "infograph":
        params.disc = pick("disc")
    elif objective == "graphcl":
        params.proj = [pick(f"proj_{n}") for n in ("w1", "b1", "w2", "b2")]
    elif objective == "bgrl":
        params.pred = [pick(f"pred_{n}") for n in ("w1", "b1", "w2", "b2")]
        params.target = EncoderCore(pick("target_w1"), pick("target_b1"),
                                    pick("target_w2"), pick("target_b2"),
                                    pick("target_rel_emb"))
    return params, meta
