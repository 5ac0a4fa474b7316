"""Random-walk corpus generation over formula graphs.

Walks treat tree edges as undirected and interleave relation tokens
between node tokens, so edge labels reach the embedding space: a walk
visiting a --NEXT--> b yields ["V!a", "REL!NEXT", "V!b"].
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .graphs import FormulaGraph


def relation_token(rel: str) -> str:
    return f"REL!{rel}"


@dataclass
class WalkCorpus:
    sequences: list[list[str]]
    walk_length: int
    walks_per_node: int
    seed: int

    def __len__(self) -> int:
        return len(self.sequences)


def _undirected_neighbors(g: FormulaGraph) -> list[list[tuple[int, str]]]:
    nbrs: list[list[tuple[int, str]]] = [[] for _ in g.nodes]
    for src, dst, rel in g.edges:
        nbrs[src].append((dst, rel))
        nbrs[dst].append((src, rel))
    return nbrs


def sample_walks(g: FormulaGraph, walks_per_node: int, walk_length: int, seed: int) -> WalkCorpus:
    """Sample walks_per_node walks starting from every node.

    Each walk visits up to walk_length nodes, stepping uniformly among
    undirected neighbors; sequences interleave node and relation tokens,
    so their length is at most 2 * walk_length - 1.
    """
    if walks_per_node < 1 or walk_length < 1:
        raise ValueError("walks_per_node and walk_length must be >= 1")
    rng = random.Random(seed)
    nbrs = _undirected_neighbors(g)
    labels = [t.encoded() for t in g.nodes]
    sequences: list[list[str]] = []
    for _ in range(walks_per_node):
        for start in range(len(g.nodes)):
            seq = [labels[start]]
            cur = start
            for _ in range(walk_length - 1):
                if not nbrs[cur]:
                    break
                nxt, rel = rng.choice(nbrs[cur])
                seq.append(relation_token(rel))
                seq.append(labels[nxt])
                cur = nxt
            sequences.append(seq)
    return WalkCorpus(sequences, walk_length, walks_per_node, seed)


def corpus_for_graphs(graphs: list[FormulaGraph], walks_per_node: int,
                      walk_length: int, seed: int) -> WalkCorpus:
    """Concatenate per-graph walk corpora, one derived seed per graph."""
    sequences: list[list[str]] = []
    for i, g in enumerate(graphs):
        sub = sample_walks(g, walks_per_node, walk_length, seed + i)
        sequences.extend(sub.sequences)
    return WalkCorpus(sequences, walk_length, walks_per_node, seed)
