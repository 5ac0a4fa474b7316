import numpy as np
import pytest

from mathgcl.errors import BatchTooSmall, EmptyGraph
from mathgcl.graphs import FormulaGraph, latex_to_graph
from mathgcl.training import (BASELINE_PROVENANCE, GCL_PROVENANCE, TrainConfig,
                              embed_formula, load_checkpoint, node_features,
                              save_checkpoint, train)

SOURCES = ["a+b", "x^2=y", "\\frac{p}{q}", "\\sqrt{u+v}=w", "O(n \\log n)",
           "c \\cdot d + e", "m_1+m_2", "\\alpha^2"]


@pytest.fixture(scope="module")
def small_problem(token_table_small):
    graphs = [latex_to_graph(s, "SLT") for s in SOURCES]
    feats = [node_features(token_table_small, g) for g in graphs]
    return graphs, feats


@pytest.fixture(scope="module")
def token_table_small():
    from mathgcl.subword import SkipgramConfig, train_subword_skipgram
    from mathgcl.walks import corpus_for_graphs
    graphs = [latex_to_graph(s, "SLT") for s in SOURCES]
    walks = corpus_for_graphs(graphs, 3, 4, seed=0)
    return train_subword_skipgram(walks, SkipgramConfig(epochs=2, seed=0))


def _cfg(objective, **kw):
    defaults = dict(objective=objective, epochs=3, batch_size=4, seed=5)
    defaults.update(kw)
    return TrainConfig(**defaults)


@pytest.mark.parametrize("objective", ["infograph", "graphcl", "bgrl"])
def test_training_runs_and_records_losses(small_problem, objective):
    graphs, feats = small_problem
    result = train(graphs, feats, _cfg(objective))
    assert len(result.loss_curve) == 3
    assert all(np.isfinite(x) for x in result.loss_curve)


@pytest.mark.parametrize("objective", ["infograph", "graphcl", "bgrl"])
def test_seeded_determinism(small_problem, objective):
    graphs, feats = small_problem
    first = train(graphs, feats, _cfg(objective))
    second = train(graphs, feats, _cfg(objective))
    assert first.loss_curve == second.loss_curve
    for (_, a), (_, b) in zip(first.params.tensors(), second.params.tensors()):
        assert np.array_equal(a, b)


def test_conformance_counters(small_problem):
    graphs, feats = small_problem
    info = train(graphs, feats, _cfg("infograph")).counters
    assert info.augmentations == 0
    assert info.negative_pairs > 0
    assert info.ema_updates == 0

    gcl = train(graphs, feats, _cfg("graphcl")).counters
    assert gcl.views_per_graph == {2}
    assert gcl.negative_pairs > 0
    assert gcl.ema_updates == 0
    # two augmentations per graph per epoch pass
    assert gcl.augmentations == 2 * len(graphs) * 3

    bgrl = train(graphs, feats, _cfg("bgrl")).counters
    assert bgrl.negative_pairs == 0
    assert bgrl.augmentations > 0
    assert bgrl.ema_updates > 0


def test_single_graph_needs_negatives(small_problem):
    graphs, feats = small_problem
    with pytest.raises(BatchTooSmall):
        train(graphs[:1], feats[:1], _cfg("infograph"))
    with pytest.raises(BatchTooSmall):
        train(graphs[:1], feats[:1], _cfg("graphcl"))


def test_non_finite_loss_aborts(small_problem, monkeypatch):
    import mathgcl.training as training_mod
    from mathgcl.errors import NonFiniteLoss

    graphs, feats = small_problem

    def poisoned(params, gs, fs, counters=None):
        return float("nan"), params.zero_grads()

    monkeypatch.setattr(training_mod, "infograph_batch", poisoned)
    with pytest.raises(NonFiniteLoss):
        train(graphs, feats, _cfg("infograph"))


def test_bgrl_ema_update_per_step(small_problem):
    graphs, feats = small_problem
    result = train(graphs, feats, _cfg("bgrl", batch_size=3))
    # 8 graphs / batch 3 -> 3 optimizer steps per epoch, 3 epochs
    assert result.counters.ema_updates == 9


def test_baseline_embedding_is_feature_mean(token_table_small):
    g = latex_to_graph("a_b", "SLT")
    feats = node_features(token_table_small, g)
    emb = embed_formula(None, g, token_table_small, "f0")
    assert np.allclose(emb.vector, feats.mean(axis=0), atol=0)
    assert emb.provenance == BASELINE_PROVENANCE
    assert emb.vector.shape == (100,)


def test_gcl_embedding_deterministic(small_problem, token_table_small):
    graphs, feats = small_problem
    result = train(graphs, feats, _cfg("graphcl"))
    e1 = embed_formula(result.params, graphs[0], token_table_small, "f0")
    e2 = embed_formula(result.params, graphs[0], token_table_small, "f0")
    assert np.array_equal(e1.vector, e2.vector)
    assert e1.provenance == GCL_PROVENANCE
    assert e1.vector.shape == (100,)


def test_empty_graph_rejected(token_table_small):
    g = FormulaGraph("SLT", [], [], 0)
    with pytest.raises(EmptyGraph):
        embed_formula(None, g, token_table_small)


@pytest.mark.parametrize("objective", ["infograph", "graphcl", "bgrl"])
def test_checkpoint_roundtrip(tmp_path, small_problem, objective):
    graphs, feats = small_problem
    result = train(graphs, feats, _cfg(objective))
    path = tmp_path / "model.mgcp"
    save_checkpoint(result.params, path, meta={"note": "test"})
    loaded, meta = load_checkpoint(path)
    assert meta == {"note": "test"}
    assert loaded.objective == objective
    assert loaded.layout == "SLT"
    assert loaded.relations == result.params.relations
    for (name_a, a), (name_b, b) in zip(result.params.tensors(), loaded.tensors()):
        assert name_a == name_b
        assert np.allclose(a, b, atol=1e-6)       # float32 round-trip
    if objective == "bgrl":
        assert loaded.target is not None
    assert path.read_bytes()[:4] == b"MGCP"


def test_checkpoint_bytes_deterministic(tmp_path, small_problem):
    graphs, feats = small_problem
    result = train(graphs, feats, _cfg("infograph"))
    p1, p2 = tmp_path / "a.mgcp", tmp_path / "b.mgcp"
    save_checkpoint(result.params, p1)
    save_checkpoint(result.params, p2)
    assert p1.read_bytes() == p2.read_bytes()
