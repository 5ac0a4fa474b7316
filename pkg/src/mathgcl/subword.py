"""Subword-augmented skip-gram token embeddings.

Trains 100-dimensional vectors for walk-corpus tokens with skip-gram and
negative sampling. Every vocabulary token also owns hashed character
n-grams (range 3..6 over the "<token>" padded form), which compose vectors
for out-of-vocabulary tokens at lookup time.

Single-threaded and fully seeded: identical corpus + config gives a
bit-identical table.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .binio import (check_magic, read_f32_array, read_str, read_u32,
                    write_f32_array, write_str, write_u32)
from .errors import EmptyCorpus, MalformedRecord
from .walks import WalkCorpus

log = logging.getLogger(__name__)

MAGIC = b"MGTE"
FORMAT_VERSION = 1

NGRAM_MIN = 3
NGRAM_MAX = 6


def fnv1a(data: bytes) -> int:
    h = 0x811C9DC5
    for byte in data:
        h = ((h ^ byte) * 0x01000193) & 0xFFFFFFFF
    return h


def token_ngrams(token: str, bucket_space: int) -> list[int]:
    """Hashed character n-gram bucket ids for a token, boundary-padded."""
    padded = f"<{token}>"
    grams = []
    for size in range(NGRAM_MIN, NGRAM_MAX + 1):
        for start in range(len(padded) - size + 1):
            grams.append(fnv1a(padded[start:start + size].encode("utf-8")) % bucket_space)
    return grams


@dataclass
class SkipgramConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.05
    min_count: int = 1
    bucket_space: int = 2_000_000
    seed: int = 0


class NegativeSampler:
    """Draws vocabulary indices with probability proportional to count^0.75."""

    def __init__(self, counts: np.ndarray):
        weights = np.asarray(counts, dtype=np.float64) ** 0.75
        self.cdf = np.cumsum(weights / weights.sum())

    def draw(self, rng: np.random.Generator, k: int) -> np.ndarray:
        return np.searchsorted(self.cdf, rng.random(k), side="right")


@dataclass
class EmbeddingTable:
    dim: int
    vocab: dict[str, np.ndarray]            # token -> final composed vector
    buckets: dict[int, np.ndarray]          # materialized n-gram bucket rows
    bucket_space: int
    meta: dict = field(default_factory=dict)

    def embed(self, token: str) -> np.ndarray:
        """Vector for any token string; never fails, never non-finite.

        In-vocabulary tokens return their stored vector. Unknown tokens
        return the mean of their n-gram bucket vectors (buckets that were
        never trained count as zero). A token yielding no n-grams gets a
        zero vector and a logged warning.
        """
        hit = self.vocab.get(token)
        if hit is not None:
            return hit.copy()
        grams = token_ngrams(token, self.bucket_space)
        if not grams:
            log.warning("token %r has no character n-grams; embedding as zeros", token)
            return np.zeros(self.dim)
        acc = np.zeros(self.dim)
        for gid in grams:
            row = self.buckets.get(gid)
            if row is not None:
                acc += row
        return acc / len(grams)


def embed_token(table: EmbeddingTable, token: str) -> np.ndarray:
    return table.embed(token)


def train_subword_skipgram(corpus: WalkCorpus, config: SkipgramConfig | None = None) -> EmbeddingTable:
    """Train skip-gram with negative sampling on a walk corpus.

    The input representation of a center token is its word vector plus the
    sum of its n-gram vectors; both sides receive the same gradient.
    Updates are applied once per center occurrence, aggregated over that
    occurrence's context window and negatives. The learning rate decays
    linearly over the planned number of token visits.
    """
    cfg = config or SkipgramConfig()
    if not corpus.sequences or all(len(s) == 0 for s in corpus.sequences):
        raise EmptyCorpus("walk corpus has no sequences")

    def sigmoid(x):
        return 1.0 / (1.0 + np.exp(-np.clip(x, -30.0, 30.0)))

    counts = Counter(tok for seq in corpus.sequences for tok in seq)
    vocab_tokens = sorted(t for t, c in counts.items() if c >= cfg.min_count)
    if not vocab_tokens:
        raise EmptyCorpus(f"no token reaches min_count={cfg.min_count}")
    tok2id = {t: i for i, t in enumerate(vocab_tokens)}
    vsize = len(vocab_tokens)

    # materialize only the buckets reachable from the training vocabulary;
    # everything else in the 2e6-bucket space stays implicitly zero
    gram_ids_per_token = [token_ngrams(t, cfg.bucket_space) for t in vocab_tokens]
    used_buckets = sorted({g for grams in gram_ids_per_token for g in grams})
    bucket_row = {b: i for i, b in enumerate(used_buckets)}
    gram_rows = [np.array([bucket_row[g] for g in grams], dtype=np.int64)
                 for grams in gram_ids_per_token]

    rng = np.random.default_rng(cfg.seed)
    bound = 0.5 / cfg.dim
    w_in = rng.uniform(-bound, bound, size=(vsize, cfg.dim))
    g_in = rng.uniform(-bound, bound, size=(len(used_buckets), cfg.dim))
    w_out = np.zeros((vsize, cfg.dim))

    sampler = NegativeSampler(np.array([counts[t] for t in vocab_tokens]))

    encoded = [np.array([tok2id[t] for t in seq if t in tok2id], dtype=np.int64)
               for seq in corpus.sequences]
    encoded = [seq for seq in encoded if len(seq) > 0]
    tokens_per_epoch = sum(len(seq) for seq in encoded)
    total_tokens = max(1, tokens_per_epoch * cfg.epochs)

    done = 0
    for _ in range(cfg.epochs):
        spans = rng.integers(1, cfg.window + 1, size=tokens_per_epoch)
        visit = 0
        for seq in encoded:
            n = len(seq)
            for pos in range(n):
                lr = cfg.learning_rate * max(1.0 - done / total_tokens, 1e-4)
                done += 1
                span = int(spans[visit])
                visit += 1
                if n == 1:
                    continue
                lo, hi = max(0, pos - span), min(n, pos + span + 1)
                ctx = np.concatenate([seq[lo:pos], seq[pos + 1:hi]])
                if ctx.size == 0:
                    continue
                center = seq[pos]
                rows = gram_rows[center]
                h = w_in[center] + g_in[rows].sum(axis=0)

                negs = sampler.draw(rng, ctx.size * cfg.negatives)
                negs = negs[negs != center]
                out_ids = np.concatenate([ctx, negs])
                labels = np.zeros(out_ids.size)
                labels[:ctx.size] = 1.0

                u = w_out[out_ids]
                scores = sigmoid(u @ h)
                g = (scores - labels) * lr
                # normalize the input-side step by the component count so
                # the composed vector moves at the same rate as a plain
                # word vector would (fastText's update convention)
                dh = (g @ u) / (1 + rows.size)
                np.subtract.at(w_out, out_ids, g[:, None] * h[None, :])
                w_in[center] -= dh
                np.subtract.at(g_in, rows, dh)

    vocab = {}
    for i, tok in enumerate(vocab_tokens):
        vocab[tok] = w_in[i] + g_in[gram_rows[i]].sum(axis=0)
    buckets = {b: g_in[bucket_row[b]] for b in used_buckets}
    meta = {"window": cfg.window, "negatives": cfg.negatives, "epochs": cfg.epochs,
            "learning_rate": cfg.learning_rate, "min_count": cfg.min_count, "seed": cfg.seed}
    return EmbeddingTable(cfg.dim, vocab, buckets, cfg.bucket_space, meta)


# --------------------------------------------------------------------------
# Persistence: magic "MGTE", version, dim, vocab size, bucket space; then
# a meta JSON string, length-prefixed token strings with their float32 rows,
# and the materialized (bucket id, row) pairs.
# --------------------------------------------------------------------------

def save_table(table: EmbeddingTable, path):
    import json

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        write_u32(fh, FORMAT_VERSION)
        write_u32(fh, table.dim)
        write_u32(fh, len(table.vocab))
        write_u32(fh, table.bucket_space)
        write_str(fh, json.dumps(table.meta, sort_keys=True))
        for tok in sorted(table.vocab):
            write_str(fh, tok)
            write_f32_array(fh, table.vocab[tok])
        write_u32(fh, len(table.buckets))
        for bid in sorted(table.buckets):
            write_u32(fh, bid)
            write_f32_array(fh, table.buckets[bid])


def load_table(path) -> EmbeddingTable:
    import json

    with open(path, "rb") as fh:
        check_magic(fh, MAGIC, "token table")
        version = read_u32(fh)
        if version != FORMAT_VERSION:
            raise MalformedRecord(f"unsupported token table version {version}")
        dim = read_u32(fh)
        vocab_size = read_u32(fh)
        bucket_space = read_u32(fh)
        meta = json.loads(read_str(fh))
        vocab = {}
        for _ in range(vocab_size):
            tok = read_str(fh)
            vocab[tok] = read_f32_array(fh, dim)
        buckets = {}
        for _ in range(read_u32(fh)):
            bid = read_u32(fh)
            buckets[bid] = read_f32_array(fh, dim)
    return EmbeddingTable(dim, vocab, buckets, bucket_space, meta)
