import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mathgcl.errors import MalformedRecord
from mathgcl.graphs import (FormulaGraph, MathToken, TokenKind,
                            deserialize_graph, graph_to_record, graphs_equal,
                            latex_to_graph, record_to_graph, serialize_graph,
                            validate_tree)


def slt(src):
    return latex_to_graph(src, "SLT")


def opt(src):
    return latex_to_graph(src, "OPT")


def test_single_leaf():
    g = slt("x")
    assert [t.encoded() for t in g.nodes] == ["V!x"] and g.edges == []
    g2 = opt("x")
    assert [t.encoded() for t in g2.nodes] == ["V!x"]


def test_cubic_identity_slt_structure():
    rec = graph_to_record(slt("a^3+b^2=0"))
    assert rec["nodes"] == ["V!a", "N!3", "O!plus", "V!b", "N!2", "U!eq", "N!0"]
    assert rec["edges"] == [[0, 1, "SUP"], [0, 2, "NEXT"], [2, 3, "NEXT"],
                            [3, 4, "SUP"], [3, 5, "NEXT"], [5, 6, "NEXT"]]
    assert rec["root"] == 0


def test_cubic_identity_opt_structure():
    rec = graph_to_record(opt("a^3+b^2=0"))
    assert rec["nodes"][0] == "U!eq"
    assert rec["nodes"][1] == "O!plus"
    # eq orders the plus subtree before the bare zero
    arg1 = next(dst for src, dst, rel in rec["edges"] if src == 0 and rel == "ARG1")
    assert rec["nodes"][arg1] == "N!0"
    pow_nodes = [i for i, n in enumerate(rec["nodes"]) if n == "O!pow"]
    assert len(pow_nodes) == 2


def test_fraction_relations():
    rec = graph_to_record(slt("\\frac{a}{b}"))
    assert rec["nodes"] == ["F!frac", "V!a", "V!b"]
    assert sorted(rel for _, _, rel in rec["edges"]) == ["OVER", "UNDER"]


def test_script_discrimination():
    up = graph_to_record(slt("a^b"))
    down = graph_to_record(slt("a_b"))
    assert up["nodes"] == down["nodes"]
    rels_up = [rel for _, _, rel in up["edges"]]
    rels_down = [rel for _, _, rel in down["edges"]]
    assert rels_up.count("SUP") == 1 and rels_down.count("SUB") == 1
    assert [r for r in rels_up if r != "SUP"] == [r for r in rels_down if r != "SUB"]


def test_opt_commutative_pairs():
    assert serialize_graph(opt("a+b")) == serialize_graph(opt("b+a"))
    assert serialize_graph(opt("xy")) == serialize_graph(opt("yx"))
    assert serialize_graph(opt("u=v")) == serialize_graph(opt("v=u"))
    assert serialize_graph(slt("a+b")) != serialize_graph(slt("b+a"))


def test_opt_noncommutative_pairs():
    assert serialize_graph(opt("a-b")) != serialize_graph(opt("b-a"))
    assert serialize_graph(opt("a/b")) != serialize_graph(opt("b/a"))
    assert serialize_graph(opt("a<b")) != serialize_graph(opt("b<a"))


def test_opt_associativity_collapse():
    assert serialize_graph(opt("(ab)c")) == serialize_graph(opt("a(bc)"))
    assert serialize_graph(opt("(a+b)+c")) == serialize_graph(opt("a+b+c"))


def test_frac_and_slash_share_opt():
    assert serialize_graph(opt("\\frac{a}{b}")) == serialize_graph(opt("a/b"))
    assert serialize_graph(slt("\\frac{a}{b}")) != serialize_graph(slt("a/b"))


def test_matrix_slt_layout():
    rec = graph_to_record(slt("\\begin{bmatrix} a & b \\\\ c & d \\end{bmatrix}"))
    assert rec["nodes"][0] == "M!2x2"
    rels = [rel for _, _, rel in rec["edges"]]
    assert rels.count("ELEMENT") == 2 and rels.count("NEXT") == 2


def test_every_build_is_a_valid_tree():
    sources = ["x", "a+b", "a^3+b^2=0", "\\frac{x+1}{y}", "\\sqrt{a^2+b^2}=c",
               "O(mn \\log m)", "-x", "\\begin{pmatrix} 1 \\\\ 2 \\end{pmatrix}"]
    for src in sources:
        validate_tree(slt(src))
        validate_tree(opt(src))


def test_roundtrip_identity():
    for src in ["x", "a^3+b^2=0", "\\frac{a}{b}", "O(mn \\log m)"]:
        for layout in ("SLT", "OPT"):
            g = latex_to_graph(src, layout)
            back = deserialize_graph(serialize_graph(g, "f1"))
            assert graphs_equal(g, back)


def test_serialization_canonical_under_relabeling():
    g = slt("a^3+b^2=0")
    rng = random.Random(5)
    perm = list(range(len(g.nodes)))
    rng.shuffle(perm)
    inv = {old: new for new, old in enumerate(perm)}
    relabeled = FormulaGraph(
        g.layout,
        [g.nodes[old] for old in perm],
        [(inv[src], inv[dst], rel) for src, dst, rel in g.edges],
        inv[g.root],
    )
    assert serialize_graph(relabeled) == serialize_graph(g)


def test_dangling_edge_rejected():
    record = {"id": "bad", "layout": "SLT", "nodes": ["V!x"],
              "edges": [[0, 5, "NEXT"]], "root": 0}
    with pytest.raises(MalformedRecord):
        record_to_graph(record)


def test_malformed_records():
    with pytest.raises(MalformedRecord):
        deserialize_graph("not json")
    with pytest.raises(MalformedRecord):
        deserialize_graph(json.dumps({"layout": "SLT", "nodes": ["V!x"], "root": 0}))
    with pytest.raises(MalformedRecord):
        deserialize_graph(json.dumps({"layout": "XXX", "nodes": ["V!x"],
                                      "edges": [], "root": 0}))
    with pytest.raises(MalformedRecord):
        deserialize_graph(json.dumps({"layout": "SLT", "nodes": ["garbage"],
                                      "edges": [], "root": 0}))
    # cycle
    with pytest.raises(MalformedRecord):
        deserialize_graph(json.dumps({"layout": "SLT", "nodes": ["V!x", "V!y"],
                                      "edges": [[0, 1, "NEXT"], [1, 0, "NEXT"]],
                                      "root": 0}))


def test_token_invariants():
    tok = MathToken(TokenKind.VARIABLE, "alpha")
    assert tok.encoded() == "V!alpha"
    assert MathToken.decode("V!alpha") == tok
    with pytest.raises(ValueError):
        MathToken(TokenKind.VARIABLE, "a!b")
    with pytest.raises(ValueError):
        MathToken(TokenKind.VARIABLE, "")
    with pytest.raises(ValueError):
        MathToken.decode("Q!x")


_ATOMS = st.sampled_from(list("abcdexyz") + ["1", "2", "42"])


@st.composite
def commutative_pair(draw):
    """Two formulas differing only by swapping operands of + * or =."""
    op = draw(st.sampled_from(["+", " ", "="]))
    left = draw(_ATOMS)
    right = draw(_ATOMS.filter(lambda a: True))
    if left == right:
        right = "w" if left != "w" else "v"
    if op == " ":
        # juxtaposition needs letter operands
        if left.isdigit():
            left = "a"
        if right.isdigit() or right == left:
            right = "b" if left != "b" else "c"
    return f"{left}{op}{right}", f"{right}{op}{left}"


@settings(max_examples=60, deadline=None)
@given(commutative_pair())
def test_commutative_invariance_property(pair):
    first, second = pair
    assert serialize_graph(opt(first)) == serialize_graph(opt(second))
    assert serialize_graph(slt(first)) != serialize_graph(slt(second))
