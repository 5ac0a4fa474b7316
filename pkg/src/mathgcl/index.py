"""Exact cosine-similarity retrieval over unit-normalized embeddings.

Rows are L2-normalized once at build time so a query reduces to one dense
dot product against the matrix; ranking is a full scan (no approximation),
ordered by score descending with ties broken by ascending id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .binio import (check_magic, read_f32_array, read_str, read_u32,
                    write_f32_array, write_str, write_u32)
from .errors import (ArtifactMismatch, DuplicateId, MalformedRecord,
                     PipelineStageError, ZeroQueryVector, ZeroVector)
from .training import FormulaEmbedding

MAGIC = b"MGRI"
FORMAT_VERSION = 1

_NORM_EPS = 1e-12


@dataclass
class RankedList:
    query_id: str
    items: list[tuple[str, float]]      # (formula id, score), scores non-increasing


@dataclass
class EmbeddingIndex:
    ids: list[str]
    matrix: np.ndarray                  # (n, dim) float32, unit rows
    layout: str
    provenance: str
    meta: dict

    def __len__(self):
        return len(self.ids)


def build_index(embeddings: list[FormulaEmbedding], meta: dict | None = None) -> EmbeddingIndex:
    if not embeddings:
        raise ValueError("no embeddings to index")
    seen = set()
    for e in embeddings:
        if e.id in seen:
            raise DuplicateId(f"duplicate formula id {e.id!r}")
        seen.add(e.id)
    layouts = {e.layout for e in embeddings}
    provs = {e.provenance for e in embeddings}
    if len(layouts) != 1 or len(provs) != 1:
        raise ArtifactMismatch("embeddings mix layouts or provenances")
    rows = []
    for e in embeddings:
        v = np.asarray(e.vector, dtype=np.float64)
        norm = np.linalg.norm(v)
        if norm < _NORM_EPS:
            raise ZeroVector(f"formula {e.id!r} has a zero embedding")
        rows.append(v / norm)
    matrix = np.stack(rows).astype(np.float32)
    return EmbeddingIndex([e.id for e in embeddings], matrix,
                          layouts.pop(), provs.pop(), meta or {})


def query_topk(index: EmbeddingIndex, query: np.ndarray, k: int,
               query_id: str = "query") -> RankedList:
    """Exact top-k by cosine similarity; k is capped at the corpus size."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(query, dtype=np.float64)
    norm = np.linalg.norm(q)
    if norm < _NORM_EPS:
        raise ZeroQueryVector("query embedding is zero")
    scores = index.matrix.astype(np.float64) @ (q / norm)
    np.clip(scores, -1.0, 1.0, out=scores)  # float32 rows can overshoot by ~1e-7
    ids = np.array(index.ids)
    order = np.lexsort((ids, -scores))
    top = order[:min(k, len(index.ids))]
    return RankedList(query_id, [(str(ids[i]), float(scores[i])) for i in top])


def query_pipeline(latex: str, layout: str, table, params, index: EmbeddingIndex,
                   k: int, query_id: str = "query") -> RankedList:
    """parse -> build graph -> embed -> rank; errors carry stage labels."""
    from .errors import ParseError
    from .graphs import latex_to_graph
    from .training import embed_formula

    if index.layout.upper() != layout.upper():
        raise ArtifactMismatch(
            f"index holds {index.layout} embeddings, query asked for {layout.upper()}")
    if params is not None and getattr(params, "layout", "").upper() not in ("", layout.upper()):
        raise ArtifactMismatch(
            f"checkpoint was trained on {params.layout}, query asked for {layout.upper()}")
    try:
        g = latex_to_graph(latex, layout)
    except ParseError as exc:
        raise PipelineStageError("parse", exc) from exc
    try:
        emb = embed_formula(params, g, table, query_id)
    except Exception as exc:
        raise PipelineStageError("embed", exc) from exc
    try:
        return query_topk(index, emb.vector, k, query_id)
    except ZeroQueryVector as exc:
        raise PipelineStageError("query", exc) from exc


# --------------------------------------------------------------------------
# Persistence: magic "MGRI", version, count, dim, layout tag, provenance
# tag, meta JSON; then length-prefixed ids and row-major float32 rows.
# --------------------------------------------------------------------------

def save_index(index: EmbeddingIndex, path):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        write_u32(fh, FORMAT_VERSION)
        write_u32(fh, len(index.ids))
        write_u32(fh, index.matrix.shape[1])
        write_str(fh, index.layout)
        write_str(fh, index.provenance)
        write_str(fh, json.dumps(index.meta, sort_keys=True))
        for formula_id in index.ids:
            write_str(fh, formula_id)
        write_f32_array(fh, index.matrix)


def load_index(path) -> EmbeddingIndex:
    with open(path, "rb") as fh:
        check_magic(fh, MAGIC, "retrieval index")
        version = read_u32(fh)
        if version != FORMAT_VERSION:
            raise MalformedRecord(f"unsupported index version {version}")
        count = read_u32(fh)
        dim = read_u32(fh)
        layout = read_str(fh)
        provenance = read_str(fh)
        meta = json.loads(read_str(fh))
        ids = [read_str(fh) for _ in range(count)]
        matrix = read_f32_array(fh, count * dim).reshape(count, dim).astype(np.float32)
    return EmbeddingIndex(ids, matrix, layout, provenance, meta)


def write_run_file(path, ranked_lists: list[RankedList]):
    """TREC-style run lines: query_id formula_id rank score."""
    with open(path, "w", encoding="utf-8") as fh:
        for ranked in ranked_lists:
            for rank, (formula_id, score) in enumerate(ranked.items, 1):
                fh.write(f"{ranked.query_id} {formula_id} {rank} {score:.6f}\n")
