import math

import numpy as np
import pytest

from mathgcl.augment import drop_nodes, perturb_edges
from mathgcl.encoder import EncoderCore, init_params, relation_vocabulary
from mathgcl.errors import BatchTooSmall, NoSharedNodes, ShapeMismatch
from mathgcl.graphs import latex_to_graph
from mathgcl.objectives import (Counters, View, bgrl_batch, bgrl_loss,
                                ema_update, graphcl_batch, graphcl_loss,
                                infograph_batch, infograph_loss)

DIM = 100


# --------------------------------------------------------------------------
# InfoGraph
# --------------------------------------------------------------------------

def test_infograph_zero_scores_fixture(rng):
    h = [np.zeros((3, DIM)), np.zeros((5, DIM))]
    z = [np.zeros(DIM), np.zeros(DIM)]
    value = infograph_loss(h, z, rng.normal(size=(DIM, DIM)))
    assert abs(value - 2 * math.log(2)) < 1e-12


def test_infograph_separation_limit():
    # strongly positive scores on positives, strongly negative on negatives
    h = [np.full((2, 2), 40.0), np.full((2, 2), -40.0)]
    z = [np.array([1.0, 0.0]), np.array([-1.0, 0.0])]
    disc = np.eye(2)
    # D(h, own z) = +40 for both graphs; D(h, other z) = -40
    value = infograph_loss(h, z, disc)
    assert value < 1e-12
    assert value > 0.0  # softplus never reaches zero exactly


def test_infograph_batch_too_small(rng):
    g = latex_to_graph("a+b", "SLT")
    params = init_params(DIM, relation_vocabulary("SLT"), "infograph",
                         np.random.default_rng(0))
    with pytest.raises(BatchTooSmall):
        infograph_batch(params, [g], [rng.normal(size=(len(g.nodes), DIM))])
    with pytest.raises(BatchTooSmall):
        infograph_loss([np.zeros((2, DIM))], [np.zeros(DIM)], np.eye(DIM))


def test_infograph_counts_negative_pairs(rng):
    counters = Counters()
    h = [np.zeros((3, DIM)), np.zeros((4, DIM))]
    z = [np.zeros(DIM), np.zeros(DIM)]
    infograph_loss(h, z, np.eye(DIM), counters)
    assert counters.negative_pairs == 3 + 4


# --------------------------------------------------------------------------
# GraphCL
# --------------------------------------------------------------------------

def unit(i):
    v = np.zeros(DIM)
    v[i] = 1.0
    return v


def test_graphcl_handderived_fixture():
    views = np.stack([unit(0), unit(0), unit(1), unit(1)])
    value = graphcl_loss(views, tau=0.5)
    assert abs(value - math.log(1 + 2 * math.exp(-2))) < 1e-12


def test_graphcl_identical_views():
    views = np.stack([unit(0)] * 4)
    assert abs(graphcl_loss(views, 0.5) - math.log(3)) < 1e-12


def test_graphcl_high_temperature_limit(rng):
    views = rng.normal(size=(4, DIM))
    assert abs(graphcl_loss(views, 1e9) - math.log(3)) < 1e-6


def test_graphcl_nonnegative(rng):
    for _ in range(10):
        views = rng.normal(size=(8, DIM))
        assert graphcl_loss(views, 0.5) >= 0.0


def test_graphcl_batch_too_small(rng):
    with pytest.raises(BatchTooSmall):
        graphcl_loss(rng.normal(size=(2, DIM)), 0.5)
    g = latex_to_graph("a+b", "SLT")
    params = init_params(DIM, relation_vocabulary("SLT"), "graphcl",
                         np.random.default_rng(0))
    with pytest.raises(BatchTooSmall):
        graphcl_batch(params, [g, g], [rng.normal(size=(len(g.nodes), DIM))] * 2, 0.5)


def test_graphcl_rejects_bad_tau(rng):
    with pytest.raises(ValueError):
        graphcl_loss(rng.normal(size=(4, DIM)), 0.0)


# --------------------------------------------------------------------------
# BGRL
# --------------------------------------------------------------------------

def _bgrl_setup(seed=0):
    g = latex_to_graph("\\frac{a+b}{c^2}=d", "SLT")
    rng = np.random.default_rng(seed)
    feats = rng.normal(size=(len(g.nodes), DIM))
    params = init_params(DIM, relation_vocabulary("SLT"), "bgrl",
                         np.random.default_rng(seed))
    dropped = drop_nodes(g, 0.2, 1)
    v1 = View(dropped, feats[np.array(dropped.source_indices)])
    v2 = View(perturb_edges(g, 0.2, 2), feats)
    return params, v1, v2


def test_bgrl_range():
    params, v1, v2 = _bgrl_setup()
    value = bgrl_loss(params, v1, v2)
    assert 0.0 <= value <= 8.0


def test_bgrl_perfect_alignment_is_zero():
    # identity-ish setup: make predictor the identity and target equal online
    params, v1, v2 = _bgrl_setup()
    params.target = params.core.copy()
    params.pred = [np.eye(DIM), np.zeros(DIM), np.eye(DIM), np.zeros(DIM)]
    # q(h) = relu(h) then identity; force positive embeddings via abs features
    v1 = View(v1.graph, np.abs(v1.features) + 0.1)
    v2 = View(v1.graph, v1.features)  # identical views
    value = bgrl_loss(params, v1, v2)
    assert value < 1e-9


def test_bgrl_orthogonal_is_four_per_direction():
    params, _, _ = _bgrl_setup()
    g = latex_to_graph("x", "SLT")
    # one node; cos(q, t) = 0 in both directions -> loss = 2 + 2 = 4
    v = View(g, np.ones((1, DIM)))
    # rig the online encoder to emit e0 and the target to emit e1
    params.core.w1[:] = 0.0
    params.core.w2[:] = 0.0
    params.core.b1[:] = 0.0
    params.core.b2[:] = 0.0
    params.core.b2[0] = 1.0
    params.target = params.core.copy()
    params.target.b2[0] = 0.0
    params.target.b2[1] = 1.0
    params.pred = [np.eye(DIM), np.zeros(DIM), np.eye(DIM), np.zeros(DIM)]
    value = bgrl_loss(params, v, v)
    assert abs(value - 4.0) < 1e-12


def test_bgrl_no_shared_nodes():
    params, v1, v2 = _bgrl_setup()
    v1.graph.source_indices = [100 + i for i in range(len(v1.graph.nodes))]
    with pytest.raises(NoSharedNodes):
        bgrl_loss(params, v1, v2)


def test_bgrl_stop_gradient_contract():
    # gradients flow only through the online encoder and predictor: the
    # gradient structure carries no target entries, and optimizer steps
    # leave the target bitwise unchanged (only ema_update moves it)
    params, v1, v2 = _bgrl_setup()
    _, grads = bgrl_batch(params, [(v1, v2)])
    assert not any(name.startswith("target") for name in grads)
    assert not any(name.startswith("target") for name, _ in params.tensors())

    from mathgcl.training import Adam
    before = [arr.copy() for _, arr in params.target.tensors()]
    opt = Adam(params, lr=0.1)
    opt.step(params, grads)
    after = [arr for _, arr in params.target.tensors()]
    for a, b in zip(before, after):
        assert np.array_equal(a, b)
    # while the online trunk did move
    assert any(not np.array_equal(a, b)
               for (_, a), (_, b) in zip(params.core.tensors(),
                                         params.target.tensors()))
    ema_update(params.target, params.core, 0.5)
    assert any(not np.array_equal(a, b) for a, b in zip(before, after))


# --------------------------------------------------------------------------
# EMA
# --------------------------------------------------------------------------

def test_ema_fixtures():
    target = np.zeros(4)
    online = np.ones(4)
    ema_update(target, online, 0.99)
    assert np.allclose(target, 0.01, atol=1e-15)
    target2 = np.full(4, 0.37)
    ema_update(target2, online, 0.0)
    assert np.array_equal(target2, online)


def test_ema_closed_form_trajectory():
    for c, decay, steps in ((1.0, 0.99, 50), (3.5, 0.9, 20), (-2.0, 0.5, 10),
                            (0.25, 0.999, 100), (7.0, 0.0, 3)):
        target = np.zeros(6)
        online = np.full(6, c)
        for _ in range(steps):
            ema_update(target, online, decay)
        expected = c * (1.0 - decay ** steps)
        assert np.abs(target - expected).max() <= 1e-12


def test_ema_contraction_of_cores():
    rng = np.random.default_rng(4)
    online = init_params(10, ["NEXT"], "none", rng).core
    target = EncoderCore(*(np.zeros_like(arr) for _, arr in online.tensors()))
    decay = 0.9

    def gap():
        return sum(float(np.sum((t - o) ** 2))
                   for (_, t), (_, o) in zip(target.tensors(), online.tensors())) ** 0.5

    g0 = gap()
    for k in range(1, 6):
        ema_update(target, online, decay)
        assert abs(gap() - decay ** k * g0) < 1e-9


def test_ema_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        ema_update(np.zeros(3), np.zeros(4), 0.5)
    with pytest.raises(ValueError):
        ema_update(np.zeros(3), np.zeros(3), 1.0)
