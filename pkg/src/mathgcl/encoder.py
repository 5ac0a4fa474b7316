"""Relation-aware message-passing encoder with hand-derived gradients.

Two rounds of message passing over the undirected tree:

    m_i = h_i + sum_{j in N(i)} (h_j + r_{rel(i,j)})
    h_i <- relu(W m_i + b)

followed by a mean readout over node embeddings. All arithmetic is
float64; gradients are computed analytically and validated against finite
differences (see gradcheck).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ShapeMismatch
from .graphs import SLT_RELATIONS, FormulaGraph, arg_relation


@dataclass
class EncoderCore:
    """The message-passing trunk: two layers plus relation embeddings."""
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    rel_emb: np.ndarray     # (n_relations, dim), rows aligned with the relation list

    def tensors(self, prefix: str = "") -> list[tuple[str, np.ndarray]]:
        return [(prefix + "w1", self.w1), (prefix + "b1", self.b1),
                (prefix + "w2", self.w2), (prefix + "b2", self.b2),
                (prefix + "rel_emb", self.rel_emb)]

    def copy(self) -> "EncoderCore":
        return EncoderCore(self.w1.copy(), self.b1.copy(), self.w2.copy(),
                           self.b2.copy(), self.rel_emb.copy())


@dataclass
class EncoderParams:
    """Encoder trunk plus per-objective heads.

    `target` is BGRL's second encoder: same shapes as the online trunk,
    never touched by gradients, updated only through ema_update.
    """
    dim: int
    relations: list[str]
    core: EncoderCore
    objective: str = "none"
    layout: str = ""
    disc: np.ndarray | None = None                  # infograph bilinear critic
    proj: list[np.ndarray] | None = None            # graphcl projector [w1,b1,w2,b2]
    pred: list[np.ndarray] | None = None            # bgrl predictor  [w1,b1,w2,b2]
    target: EncoderCore | None = None
    rel_index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.rel_index:
            self.rel_index = {r: i for i, r in enumerate(self.relations)}

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        """Trainable tensors in a fixed order; excludes the EMA target."""
        out = self.core.tensors()
        if self.disc is not None:
            out.append(("disc", self.disc))
        if self.proj is not None:
            out.extend(zip(("proj_w1", "proj_b1", "proj_w2", "proj_b2"), self.proj))
        if self.pred is not None:
            out.extend(zip(("pred_w1", "pred_b1", "pred_w2", "pred_b2"), self.pred))
        return out

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(arr) for name, arr in self.tensors()}

    def flatten(self) -> np.ndarray:
        return np.concatenate([arr.ravel() for _, arr in self.tensors()])

    def unflatten(self, vec: np.ndarray):
        pos = 0
        for _, arr in self.tensors():
            arr[...] = vec[pos:pos + arr.size].reshape(arr.shape)
            pos += arr.size
        if pos != vec.size:
            raise ShapeMismatch(f"vector has {vec.size} entries, expected {pos}")


def relation_vocabulary(layout: str, graphs: list[FormulaGraph] | None = None) -> list[str]:
    """Fixed relation list for a layout.

    SLT uses its full 9-relation alphabet. OPT enumerates ARG0..ARGk for
    the largest child ordinal seen in `graphs`; unseen relations at
    inference contribute a zero vector.
    """
    if layout.upper() == "SLT":
        return list(SLT_RELATIONS)
    max_arity = 1
    for g in graphs or []:
        counts: dict[int, int] = {}
        for src, _, _ in g.edges:
            counts[src] = counts.get(src, 0) + 1
        if counts:
            max_arity = max(max_arity, max(counts.values()))
    return [arg_relation(i) for i in range(max_arity)]


def init_params(dim: int, relations: list[str], objective: str,
                rng: np.random.Generator) -> EncoderParams:
    scale = 1.0 / np.sqrt(dim)

    def linear():
        return rng.normal(0.0, scale, size=(dim, dim)), np.zeros(dim)

    w1, b1 = linear()
    w2, b2 = linear()
    rel = rng.normal(0.0, scale, size=(len(relations), dim))
    params = EncoderParams(dim, list(relations), EncoderCore(w1, b1, w2, b2, rel),
                           objective=objective)
    if objective == "infograph":
        params.disc = rng.normal(0.0, scale, size=(dim, dim))
    elif objective == "graphcl":
        pw1, pb1 = linear()
        pw2, pb2 = linear()
        params.proj = [pw1, pb1, pw2, pb2]
    elif objective == "bgrl":
        qw1, qb1 = linear()
        qw2, qb2 = linear()
        params.pred = [qw1, qb1, qw2, qb2]
        params.target = params.core.copy()
    elif objective != "none":
        raise ValueError(f"unknown objective {objective!r}")
    return params


@dataclass
class EncodeCache:
    feats: np.ndarray
    ends_a: np.ndarray       # edge endpoints, both directions
    ends_b: np.ndarray
    rel_rows: np.ndarray     # relation row per directed endpoint, -1 if unknown
    m1: np.ndarray
    p1: np.ndarray
    h1: np.ndarray
    m2: np.ndarray
    p2: np.ndarray
    h2: np.ndarray


def _edge_arrays(g: FormulaGraph, rel_index: dict[str, int]):
    if g.edges:
        src = np.array([e[0] for e in g.edges], dtype=np.int64)
        dst = np.array([e[1] for e in g.edges], dtype=np.int64)
        rel = np.array([rel_index.get(e[2], -1) for e in g.edges], dtype=np.int64)
    else:
        src = dst = rel = np.zeros(0, dtype=np.int64)
    ends_a = np.concatenate([src, dst])
    ends_b = np.concatenate([dst, src])
    rel_rows = np.concatenate([rel, rel])
    return ends_a, ends_b, rel_rows


def _aggregate(h: np.ndarray, ends_a, ends_b, rel_rows, rel_emb) -> np.ndarray:
    m = h.copy()
    if ends_a.size:
        np.add.at(m, ends_a, h[ends_b])
        known = rel_rows >= 0
        if known.any():
            np.add.at(m, ends_a[known], rel_emb[rel_rows[known]])
    return m


def encode(params: EncoderParams, g: FormulaGraph, feats: np.ndarray,
           core: EncoderCore | None = None) -> tuple[np.ndarray, np.ndarray, EncodeCache]:
    """Forward pass; returns (node embeddings H, graph embedding z, cache)."""
    core = core or params.core
    n = len(g.nodes)
    feats = np.asarray(feats, dtype=np.float64)
    if feats.shape != (n, params.dim):
        raise DimensionMismatch(f"features are {feats.shape}, expected ({n}, {params.dim})")
    ends_a, ends_b, rel_rows = _edge_arrays(g, params.rel_index)
    m1 = _aggregate(feats, ends_a, ends_b, rel_rows, core.rel_emb)
    p1 = m1 @ core.w1.T + core.b1
    h1 = np.maximum(p1, 0.0)
    m2 = _aggregate(h1, ends_a, ends_b, rel_rows, core.rel_emb)
    p2 = m2 @ core.w2.T + core.b2
    h2 = np.maximum(p2, 0.0)
    z = h2.mean(axis=0)
    return h2, z, EncodeCache(feats, ends_a, ends_b, rel_rows, m1, p1, h1, m2, p2, h2)


def encode_backward(params: EncoderParams, cache: EncodeCache,
                    d_h: np.ndarray | None, d_z: np.ndarray | None,
                    grads: dict[str, np.ndarray], prefix: str = ""):
    """Accumulate encoder gradients given upstream d_h and/or d_z."""
    core = params.core
    n = cache.h2.shape[0]
    g_h2 = np.zeros_like(cache.h2)
    if d_h is not None:
        g_h2 += d_h
    if d_z is not None:
        g_h2 += d_z[None, :] / n

    g_p2 = g_h2 * (cache.p2 > 0)
    grads[prefix + "w2"] += g_p2.T @ cache.m2
    grads[prefix + "b2"] += g_p2.sum(axis=0)
    g_m2 = g_p2 @ core.w2

    g_h1 = g_m2.copy()
    if cache.ends_a.size:
        np.add.at(g_h1, cache.ends_b, g_m2[cache.ends_a])
        known = cache.rel_rows >= 0
        if known.any():
            np.add.at(grads[prefix + "rel_emb"], cache.rel_rows[known], g_m2[cache.ends_a[known]])

    g_p1 = g_h1 * (cache.p1 > 0)
    grads[prefix + "w1"] += g_p1.T @ cache.m1
    grads[prefix + "b1"] += g_p1.sum(axis=0)
    g_m1 = g_p1 @ core.w1
    if cache.ends_a.size:
        known = cache.rel_rows >= 0
        if known.any():
            np.add.at(grads[prefix + "rel_emb"], cache.rel_rows[known], g_m1[cache.ends_a[known]])


def mlp_forward(z: np.ndarray, weights: list[np.ndarray]):
    """Two-layer relu MLP used by the GraphCL projector and BGRL predictor."""
    w1, b1, w2, b2 = weights
    pre = z @ w1.T + b1
    hid = np.maximum(pre, 0.0)
    out = hid @ w2.T + b2
    return out, (z, pre, hid)


def mlp_backward(d_out: np.ndarray, cache, weights: list[np.ndarray],
                 grads: dict[str, np.ndarray], prefix: str) -> np.ndarray:
    z, pre, hid = cache
    w1, b1, w2, b2 = weights
    grads[prefix + "_w2"] += d_out.T @ hid
    grads[prefix + "_b2"] += d_out.sum(axis=0)
    d_hid = d_out @ w2
    d_pre = d_hid * (pre > 0)
    grads[prefix + "_w1"] += d_pre.T @ z
    grads[prefix + "_b1"] += d_pre.sum(axis=0)
    return d_pre @ w1
