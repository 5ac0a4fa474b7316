import json
from pathlib import Path

import numpy as np
import pytest

from mathgcl.graphs import latex_to_graph, read_corpus
from mathgcl.subword import SkipgramConfig, train_subword_skipgram
from mathgcl.training import node_features
from mathgcl.walks import corpus_for_graphs

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
CONFIGS = ROOT / "configs"


@pytest.fixture(scope="session")
def benchmark_config():
    return json.loads((CONFIGS / "benchmark.json").read_text())


@pytest.fixture(scope="session")
def synthetic_corpus():
    return read_corpus(DATA / "synthetic" / "corpus.jsonl")


@pytest.fixture(scope="session")
def synthetic_graphs(synthetic_corpus, benchmark_config):
    layout = benchmark_config["layout"].upper()
    return [(formula_id, latex_to_graph(latex, layout))
            for formula_id, latex in synthetic_corpus]


@pytest.fixture(scope="session")
def token_table(synthetic_graphs, benchmark_config):
    """The benchmark token table; trained once per session (~30 s)."""
    cfg = benchmark_config
    graphs = [g for _, g in synthetic_graphs]
    walks = corpus_for_graphs(graphs, cfg["tokens"]["walks_per_node"],
                              cfg["tokens"]["walk_length"], cfg["seed"])
    return train_subword_skipgram(
        walks, SkipgramConfig(epochs=cfg["tokens"]["epochs"], seed=cfg["seed"]))


@pytest.fixture(scope="session")
def synthetic_features(synthetic_graphs, token_table):
    return [node_features(token_table, g) for _, g in synthetic_graphs]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_corpus_file(tmp_path):
    """A 12-formula corpus, enough for end-to-end CLI runs."""
    formulas = [
        ("q00", "a^2+b^2=c^2"), ("q01", "x^2+y^2=z^2"), ("q02", "p^2+q^2=r^2"),
        ("q03", "\\frac{a}{b}=c"), ("q04", "\\frac{x}{y}=z"), ("q05", "\\frac{p}{q}=r"),
        ("q06", "O(m \\log n)"), ("q07", "O(k \\log k)"), ("q08", "O(a \\log b)"),
        ("q09", "\\sqrt{x+y}"), ("q10", "\\sqrt{a+b}"), ("q11", "\\sqrt{p+q}"),
    ]
    path = tmp_path / "corpus.jsonl"
    with open(path, "w") as fh:
        for formula_id, latex in formulas:
            fh.write(json.dumps({"id": formula_id, "latex": latex}) + "\n")
    return path
