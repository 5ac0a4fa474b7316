"""Contrastive objectives: InfoGraph, GraphCL (NT-Xent), and BGRL.

Each objective exposes a pure loss function matching its mathematical
definition plus a *_batch function that encodes a batch, evaluates the
loss, and accumulates analytic gradients for every trainable tensor.
finite-difference validation lives in gradcheck.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoder import (EncodeCache, EncoderParams, encode, encode_backward,
                      mlp_backward, mlp_forward)
from .errors import BatchTooSmall, NoSharedNodes, ShapeMismatch
from .graphs import FormulaGraph


@dataclass
class Counters:
    """Instrumentation for the conformance checks on objective behavior."""
    augmentations: int = 0
    negative_pairs: int = 0
    views_per_graph: set = field(default_factory=set)
    ema_updates: int = 0


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# --------------------------------------------------------------------------
# InfoGraph: graph-to-node mutual information with a bilinear critic
# --------------------------------------------------------------------------

def infograph_loss(node_embeddings: list[np.ndarray], graph_embeddings: list[np.ndarray],
                   discriminator: np.ndarray,
                   counters: Counters | None = None) -> float:
    """Jensen-Shannon MI estimator with critic D(h, z) = h^T M z.

    Positive pairs are (node, its own graph); negatives pair every node
    with every other graph in the batch. Loss is
    mean softplus(-D_pos) + mean softplus(D_neg), strictly positive.
    """
    batch = len(node_embeddings)
    if batch < 2:
        raise BatchTooSmall("infograph needs >= 2 graphs for negative pairs")
    z_mat = np.stack(graph_embeddings)                       # (B, d)
    pos_terms, neg_terms = [], []
    for gi, h in enumerate(node_embeddings):
        scores = h @ discriminator @ z_mat.T                  # (n_i, B)
        mask = np.ones(batch, dtype=bool)
        mask[gi] = False
        pos_terms.append(_softplus(-scores[:, gi]))
        neg_terms.append(_softplus(scores[:, mask]).ravel())
        if counters is not None:
            counters.negative_pairs += h.shape[0] * (batch - 1)
    return float(np.concatenate(pos_terms).mean() + np.concatenate(neg_terms).mean())


def infograph_batch(params: EncoderParams, graphs: list[FormulaGraph],
                    features: list[np.ndarray], counters: Counters | None = None
                    ) -> tuple[float, dict[str, np.ndarray]]:
    batch = len(graphs)
    if batch < 2:
        raise BatchTooSmall("infograph needs >= 2 graphs for negative pairs")
    encoded = [encode(params, g, f) for g, f in zip(graphs, features)]
    h_list = [h for h, _, _ in encoded]
    z_mat = np.stack([z for _, z, _ in encoded])
    disc = params.disc
    n_pos = sum(h.shape[0] for h in h_list)
    n_neg = n_pos * (batch - 1)

    grads = params.zero_grads()
    d_z = np.zeros_like(z_mat)
    loss = 0.0
    d_h_list = []
    for gi, h in enumerate(h_list):
        scores = h @ disc @ z_mat.T
        sig = _sigmoid(scores)
        pos = scores[:, gi]
        loss += _softplus(-pos).sum() / n_pos
        mask = np.ones(batch, dtype=bool)
        mask[gi] = False
        loss += _softplus(scores[:, mask]).sum() / n_neg
        # d loss / d scores
        d_scores = sig / n_neg
        d_scores[:, gi] = (sig[:, gi] - 1.0) / n_pos
        d_h_list.append(d_scores @ z_mat @ disc.T)
        d_z += d_scores.T @ (h @ disc)
        grads["disc"] += h.T @ d_scores @ z_mat
        if counters is not None:
            counters.negative_pairs += h.shape[0] * (batch - 1)
    for gi, (h, z, cache) in enumerate(encoded):
        encode_backward(params, cache, d_h_list[gi], d_z[gi], grads)
    return float(loss), grads


# --------------------------------------------------------------------------
# GraphCL: graph-to-graph NT-Xent over two augmented views per graph
# --------------------------------------------------------------------------

def _normalize_rows(p: np.ndarray):
    norms = np.linalg.norm(p, axis=1, keepdims=True)
    norms = np.where(norms == 0.0, 1.0, norms)
    return p / norms, norms


def graphcl_loss(view_embeddings: np.ndarray, tau: float,
                 counters: Counters | None = None) -> float:
    """NT-Xent over 2N view embeddings ordered [g0v0, g0v1, g1v0, g1v1, ...].

    For anchor i with partner p:
        l_i = -log exp(cos(z_i,z_p)/tau) / sum_{k != i} exp(cos(z_i,z_k)/tau)
    averaged over all 2N anchors.
    """
    z = np.asarray(view_embeddings, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] % 2 != 0:
        raise ShapeMismatch("expected a (2N, d) array of view embeddings")
    two_n = z.shape[0]
    if two_n < 4:
        raise BatchTooSmall("graphcl needs >= 2 graphs (4 views) for negatives")
    if tau <= 0:
        raise ValueError("temperature must be positive")
    zn, _ = _normalize_rows(z)
    sims = zn @ zn.T / tau
    losses = []
    for i in range(two_n):
        partner = i + 1 if i % 2 == 0 else i - 1
        others = np.delete(sims[i], i)
        m = others.max()
        logsum = m + np.log(np.exp(others - m).sum())
        losses.append(logsum - sims[i, partner])
        if counters is not None:
            counters.negative_pairs += two_n - 2
    return float(np.mean(losses))


def graphcl_batch(params: EncoderParams, view_graphs: list[FormulaGraph],
                  view_features: list[np.ndarray], tau: float,
                  counters: Counters | None = None) -> tuple[float, dict[str, np.ndarray]]:
    """Encode 2N views, project, and apply NT-Xent; returns (loss, grads)."""
    two_n = len(view_graphs)
    if two_n < 4 or two_n % 2 != 0:
        raise BatchTooSmall("graphcl needs >= 2 graphs, two views each")
    encoded = [encode(params, g, f) for g, f in zip(view_graphs, view_features)]
    z = np.stack([zi for _, zi, _ in encoded])
    proj, mlp_cache = mlp_forward(z, params.proj)
    pn, norms = _normalize_rows(proj)
    sims = pn @ pn.T

    grads = params.zero_grads()
    d_sims = np.zeros_like(sims)
    loss = 0.0
    for i in range(two_n):
        partner = i + 1 if i % 2 == 0 else i - 1
        row = sims[i] / tau
        mask = np.ones(two_n, dtype=bool)
        mask[i] = False
        m = row[mask].max()
        expd = np.where(mask, np.exp(row - m), 0.0)
        logsum = m + np.log(expd.sum())
        loss += (logsum - row[partner]) / two_n
        softmax = expd / expd.sum()
        d_sims[i] += softmax / tau / two_n
        d_sims[i, partner] -= 1.0 / tau / two_n
        if counters is not None:
            counters.negative_pairs += two_n - 2
    # sims = pn pn^T with both occurrences of pn
    d_pn = (d_sims + d_sims.T) @ pn
    d_proj = (d_pn - (d_pn * pn).sum(axis=1, keepdims=True) * pn) / norms
    d_z = mlp_backward(d_proj, mlp_cache, params.proj, grads, "proj")
    for gi, (_, _, cache) in enumerate(encoded):
        encode_backward(params, cache, None, d_z[gi], grads)
    return float(loss), grads


# --------------------------------------------------------------------------
# BGRL: node-to-node bootstrap without negatives
# --------------------------------------------------------------------------

@dataclass
class View:
    graph: FormulaGraph
    features: np.ndarray

    def base_rows(self) -> dict[int, int]:
        src = self.graph.source_indices
        if src is None:
            src = list(range(len(self.graph.nodes)))
        return {orig: row for row, orig in enumerate(src)}


def _cosine_rows(a: np.ndarray, b: np.ndarray):
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    na = np.where(na == 0.0, 1.0, na)
    nb = np.where(nb == 0.0, 1.0, nb)
    return (a * b).sum(axis=1) / (na * nb), na, nb


def _shared_rows(v1: View, v2: View) -> tuple[np.ndarray, np.ndarray]:
    r1, r2 = v1.base_rows(), v2.base_rows()
    common = sorted(set(r1) & set(r2))
    if not common:
        raise NoSharedNodes("augmented views share no nodes")
    return (np.array([r1[i] for i in common], dtype=np.int64),
            np.array([r2[i] for i in common], dtype=np.int64))


def bgrl_loss(params: EncoderParams, view1: View, view2: View) -> float:
    """Symmetrized node-level bootstrap loss in [0, 8].

    L = [2 - 2 mean_i cos(q(h_i^on,v1), h_i^tg,v2)]
      + [2 - 2 mean_i cos(q(h_i^on,v2), h_i^tg,v1)]

    over nodes surviving in both views; gradients flow only through the
    online encoder and predictor (the target is encoded without grads).
    """
    loss, _ = _bgrl_pair(params, view1, view2, grads=None)
    return loss


def _bgrl_pair(params: EncoderParams, view1: View, view2: View,
               grads: dict[str, np.ndarray] | None) -> tuple[float, int]:
    rows1, rows2 = _shared_rows(view1, view2)
    h_on = []
    caches: list[EncodeCache] = []
    for view in (view1, view2):
        h, _, cache = encode(params, view.graph, view.features)
        h_on.append(h)
        caches.append(cache)
    h_tg = [encode(params, v.graph, v.features, core=params.target)[0]
            for v in (view1, view2)]

    loss = 0.0
    d_h_on = [np.zeros_like(h) for h in h_on] if grads is not None else None
    for (on_idx, on_rows), (tg_idx, tg_rows) in (((0, rows1), (1, rows2)),
                                                 ((1, rows2), (0, rows1))):
        q_in = h_on[on_idx][on_rows]
        q, mlp_cache = mlp_forward(q_in, params.pred)
        t = h_tg[tg_idx][tg_rows]
        cosines, nq, nt = _cosine_rows(q, t)
        count = len(cosines)
        loss += 2.0 - 2.0 * cosines.mean()
        if grads is not None:
            d_cos = np.full(count, -2.0 / count)
            d_q = d_cos[:, None] * (t / (nq * nt)[:, None]
                                    - (cosines / nq ** 2)[:, None] * q)
            d_q_in = mlp_backward(d_q, mlp_cache, params.pred, grads, "pred")
            np.add.at(d_h_on[on_idx], on_rows, d_q_in)
    if grads is not None:
        for idx in (0, 1):
            encode_backward(params, caches[idx], d_h_on[idx], None, grads)
    return float(loss), len(rows1)


def bgrl_batch(params: EncoderParams, view_pairs: list[tuple[View, View]],
               counters: Counters | None = None) -> tuple[float, dict[str, np.ndarray]]:
    """Mean BGRL loss over a batch of (view1, view2) pairs."""
    if not view_pairs:
        raise BatchTooSmall("empty batch")
    grads = params.zero_grads()
    total = 0.0
    for v1, v2 in view_pairs:
        pair_grads = params.zero_grads()
        pair_loss, _ = _bgrl_pair(params, v1, v2, pair_grads)
        total += pair_loss
        for name in grads:
            grads[name] += pair_grads[name] / len(view_pairs)
    return total / len(view_pairs), grads


def ema_update(target, online, decay: float):
    """theta_target <- decay * theta_target + (1 - decay) * theta_online."""
    if not (0.0 <= decay < 1.0):
        raise ValueError("decay must lie in [0, 1)")
    t_tensors = target.tensors("t_") if hasattr(target, "tensors") else [("t", target)]
    o_tensors = online.tensors("o_") if hasattr(online, "tensors") else [("o", online)]
    if len(t_tensors) != len(o_tensors):
        raise ShapeMismatch("target and online parameter sets differ")
    for (_, t), (_, o) in zip(t_tensors, o_tensors):
        if t.shape != o.shape:
            raise ShapeMismatch(f"shape {t.shape} vs {o.shape}")
        t *= decay
        t += (1.0 - decay) * o
