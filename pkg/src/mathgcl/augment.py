"""Stochastic graph augmentations: node dropping and edge perturbation.

Both keep the rooted-tree invariant. Augmented graphs carry
`source_indices` mapping their nodes back to the base graph, which BGRL
uses for node-level correspondence across views.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .encoder import relation_vocabulary
from .graphs import FormulaGraph


@dataclass
class AugmentConfig:
    node_drop_ratio: float = 0.2
    edge_perturb_ratio: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.node_drop_ratio < 1.0 and 0.0 <= self.edge_perturb_ratio < 1.0):
            raise ValueError("augmentation ratios must lie in [0, 1)")


def _parent_map(g: FormulaGraph) -> dict[int, tuple[int, str]]:
    return {dst: (src, rel) for src, dst, rel in g.edges}


def drop_nodes(g: FormulaGraph, ratio: float, seed: int) -> FormulaGraph:
    """Remove floor(ratio * n) non-root nodes chosen uniformly.

    Children of a dropped node re-attach to its nearest surviving ancestor
    keeping their relation labels, so the result stays a rooted tree.
    """
    if not (0.0 <= ratio < 1.0):
        raise ValueError("ratio must lie in [0, 1)")
    n = len(g.nodes)
    k = int(ratio * n)
    if k == 0:
        out = FormulaGraph(g.layout, list(g.nodes), list(g.edges), g.root)
        out.source_indices = (list(g.source_indices) if g.source_indices is not None
                              else list(range(n)))
        return out
    rng = random.Random(seed)
    candidates = [i for i in range(n) if i != g.root]
    dropped = set(rng.sample(candidates, k))
    parent = _parent_map(g)

    def surviving_ancestor(i: int) -> int:
        while i in dropped:
            i = parent[i][0]
        return i

    keep = [i for i in range(n) if i not in dropped]
    remap = {old: new for new, old in enumerate(keep)}
    nodes = [g.nodes[i] for i in keep]
    edges = []
    for src, dst, rel in g.edges:
        if dst in dropped:
            continue
        edges.append((remap[surviving_ancestor(src)], remap[dst], rel))
    base = g.source_indices if g.source_indices is not None else list(range(n))
    out = FormulaGraph(g.layout, nodes, edges, remap[g.root])
    out.source_indices = [base[i] for i in keep]
    return out


def perturb_edges(g: FormulaGraph, ratio: float, seed: int) -> FormulaGraph:
    """Rewire floor(ratio * |edges|) edges chosen uniformly.

    Each selected edge's destination subtree re-attaches under a node
    outside that subtree (cycle-free by construction) and the edge is
    relabeled from the layout's relation alphabet. The rewired edge differs
    from the original whenever the candidate set or alphabet allows, which
    fails only for single-relation chains. Nodes are untouched.
    """
    if not (0.0 <= ratio < 1.0):
        raise ValueError("ratio must lie in [0, 1)")
    n = len(g.nodes)
    edges = list(g.edges)
    k = int(ratio * len(edges))
    out = FormulaGraph(g.layout, list(g.nodes), edges, g.root)
    out.source_indices = (list(g.source_indices) if g.source_indices is not None
                          else list(range(n)))
    if k == 0:
        return out
    rng = random.Random(seed)
    alphabet = relation_vocabulary(g.layout, [g])
    chosen = rng.sample(range(len(edges)), k)
    for idx in chosen:
        src, dst, rel = edges[idx]
        children = [[] for _ in range(n)]
        for s, d, _ in edges:
            children[s].append(d)
        subtree = {dst}
        stack = [dst]
        while stack:
            u = stack.pop()
            for v in children[u]:
                if v not in subtree:
                    subtree.add(v)
                    stack.append(v)
        candidates = [i for i in range(n) if i not in subtree]
        new_src = rng.choice(candidates)
        new_rel = rng.choice(alphabet)
        if new_src == src and new_rel == rel:
            others = [r for r in alphabet if r != rel]
            new_rel = rng.choice(others) if others else rel
        edges[idx] = (new_src, dst, new_rel)
    return out
