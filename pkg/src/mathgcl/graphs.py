"""Formula graphs: symbol layout trees (SLT) and operator trees (OPT).

Both layouts are rooted labeled trees over math tokens. The SLT follows
the written arrangement (baseline chains, script and fraction positions);
the OPT makes operators internal nodes over ordered operand children, with
commutative operands canonicalized so reordered but equivalent formulas
yield byte-identical serializations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import MalformedRecord
from .latex import ExprNode, parse_latex


class TokenKind(Enum):
    VARIABLE = "V"
    NUMBER = "N"
    OPERATOR = "O"
    FUNCTION = "A"
    FRACTION = "F"
    RADICAL = "R"
    MATRIX = "M"
    RELATION = "U"
    GROUP = "G"


_KIND_BY_LETTER = {k.value: k for k in TokenKind}


@dataclass(frozen=True)
class MathToken:
    kind: TokenKind
    value: str

    def __post_init__(self):
        if not self.value or "!" in self.value or any(c.isspace() for c in self.value):
            raise ValueError(f"bad token value {self.value!r}")

    def encoded(self) -> str:
        return f"{self.kind.value}!{self.value}"

    @staticmethod
    def decode(text: str) -> "MathToken":
        letter, sep, value = text.partition("!")
        if sep != "!" or letter not in _KIND_BY_LETTER or not value:
            raise ValueError(f"bad token string {text!r}")
        return MathToken(_KIND_BY_LETTER[letter], value)


SLT_RELATIONS = (
    "NEXT", "SUP", "SUB", "OVER", "UNDER", "WITHIN", "PRE_SUP", "PRE_SUB", "ELEMENT",
)


def arg_relation(i: int) -> str:
    return f"ARG{i}"


@dataclass
class FormulaGraph:
    layout: str                      # "SLT" or "OPT"
    nodes: list[MathToken]
    edges: list[tuple[int, int, str]]
    root: int
    # set by augmentations: source_indices[i] = index of node i in the base
    # graph, for node-level correspondence across views; not serialized
    source_indices: list[int] | None = field(default=None, compare=False)

    def children(self) -> list[list[tuple[int, str]]]:
        out: list[list[tuple[int, str]]] = [[] for _ in self.nodes]
        for src, dst, rel in self.edges:
            out[src].append((dst, rel))
        return out


def validate_tree(g: FormulaGraph) -> None:
    """Check the rooted-tree invariant by traversal; raises on violation."""
    n = len(g.nodes)
    if n == 0:
        raise MalformedRecord("graph has no nodes")
    if not (0 <= g.root < n):
        raise MalformedRecord(f"root {g.root} out of range")
    indeg = [0] * n
    for src, dst, rel in g.edges:
        if not (0 <= src < n and 0 <= dst < n):
            raise MalformedRecord(f"edge ({src},{dst},{rel}) references a missing node", field="edges")
        indeg[dst] += 1
    if indeg[g.root] != 0:
        raise MalformedRecord("root has an incoming edge")
    for i, d in enumerate(indeg):
        if i != g.root and d != 1:
            raise MalformedRecord(f"node {i} has in-degree {d}, expected 1")
    # in-degree checks above make reachability equivalent to acyclicity
    seen = [False] * n
    stack = [g.root]
    adj = g.children()
    while stack:
        u = stack.pop()
        if seen[u]:
            raise MalformedRecord("cycle detected")
        seen[u] = True
        stack.extend(dst for dst, _ in adj[u])
    if not all(seen):
        raise MalformedRecord("graph is not connected")


# --------------------------------------------------------------------------
# SLT construction
# --------------------------------------------------------------------------

class _Builder:
    def __init__(self, layout: str):
        self.layout = layout
        self.nodes: list[MathToken] = []
        self.edges: list[tuple[int, int, str]] = []

    def add(self, kind: TokenKind, value: str) -> int:
        self.nodes.append(MathToken(kind, value))
        return len(self.nodes) - 1

    def link(self, src: int, dst: int, rel: str):
        self.edges.append((src, dst, rel))

    def graph(self, root: int) -> FormulaGraph:
        return FormulaGraph(self.layout, self.nodes, self.edges, root)


_MUL_SYMBOL = {"cdot": "cdot", "times": "times", "ast": "ast"}


def _slt_emit(b: _Builder, node: ExprNode) -> tuple[int, int]:
    """Emit `node` as a baseline chain; returns (first, last) node indices."""
    kind = node.kind
    if kind == "var":
        i = b.add(TokenKind.VARIABLE, node.value)
        return i, i
    if kind == "num":
        i = b.add(TokenKind.NUMBER, node.value)
        return i, i
    if kind in ("plus", "minus", "divide"):
        lf, ll = _slt_emit(b, node.children[0])
        op = b.add(TokenKind.OPERATOR, node.value)
        b.link(ll, op, "NEXT")
        rf, rl = _slt_emit(b, node.children[1])
        b.link(op, rf, "NEXT")
        return lf, rl
    if kind == "relop":
        lf, ll = _slt_emit(b, node.children[0])
        op = b.add(TokenKind.RELATION, node.value)
        b.link(ll, op, "NEXT")
        rf, rl = _slt_emit(b, node.children[1])
        b.link(op, rf, "NEXT")
        return lf, rl
    if kind == "mul":
        lf, ll = _slt_emit(b, node.children[0])
        if node.value == "juxt":
            rf, rl = _slt_emit(b, node.children[1])
            b.link(ll, rf, "NEXT")
        else:
            op = b.add(TokenKind.OPERATOR, _MUL_SYMBOL[node.value])
            b.link(ll, op, "NEXT")
            rf, rl = _slt_emit(b, node.children[1])
            b.link(op, rf, "NEXT")
        return lf, rl
    if kind == "neg":
        op = b.add(TokenKind.OPERATOR, "minus")
        rf, rl = _slt_emit(b, node.children[0])
        b.link(op, rf, "NEXT")
        return op, rl
    if kind == "script":
        base_first, base_last = _slt_emit(b, node.children[0])
        rest = node.children[1:]
        if node.value in ("sub", "subsup"):
            sf, _ = _slt_emit(b, rest[0])
            b.link(base_last, sf, "SUB")
            rest = rest[1:]
        if node.value in ("sup", "subsup"):
            sf, _ = _slt_emit(b, rest[0])
            b.link(base_last, sf, "SUP")
        return base_first, base_last
    if kind == "func":
        f = b.add(TokenKind.FUNCTION, node.value)
        af, al = _slt_emit(b, node.children[0])
        b.link(f, af, "NEXT")
        return f, al
    if kind == "frac":
        fr = b.add(TokenKind.FRACTION, "frac")
        nf, _ = _slt_emit(b, node.children[0])
        b.link(fr, nf, "OVER")
        df, _ = _slt_emit(b, node.children[1])
        b.link(fr, df, "UNDER")
        return fr, fr
    if kind == "sqrt":
        r = b.add(TokenKind.RADICAL, "sqrt")
        cf, _ = _slt_emit(b, node.children[0])
        b.link(r, cf, "WITHIN")
        return r, r
    if kind == "group":
        g = b.add(TokenKind.GROUP, node.value)
        cf, _ = _slt_emit(b, node.children[0])
        b.link(g, cf, "WITHIN")
        return g, g
    if kind == "matrix":
        rows, cols = (int(x) for x in node.value.split("x"))
        m = b.add(TokenKind.MATRIX, node.value)
        for r in range(rows):
            prev_last = None
            for c in range(cols):
                cf, cl = _slt_emit(b, node.children[r * cols + c])
                if c == 0:
                    b.link(m, cf, "ELEMENT")
                else:
                    b.link(prev_last, cf, "NEXT")
                prev_last = cl
        return m, m
    raise AssertionError(f"unhandled AST node {kind}")


def build_slt(tree: ExprNode) -> FormulaGraph:
    b = _Builder("SLT")
    first, _ = _slt_emit(b, tree)
    return b.graph(first)


# --------------------------------------------------------------------------
# OPT construction
# --------------------------------------------------------------------------

# operators whose operands are interchangeable; chains of plus and of any
# multiplication style are flattened first, then children sorted by
# (subtree size descending, serialized bytes ascending)
_COMMUTATIVE = {"plus", "times", "eq"}


@dataclass
class _OptNode:
    token: MathToken
    children: list["_OptNode"] = field(default_factory=list)
    size: int = 1
    serial: str = ""

    def finish(self) -> "_OptNode":
        self.size = 1 + sum(c.size for c in self.children)
        inner = ",".join(c.serial for c in self.children)
        self.serial = self.token.encoded() + (f"({inner})" if inner else "")
        return self


def _opt_op(kind: TokenKind, value: str, children: list[_OptNode]) -> _OptNode:
    if kind is TokenKind.OPERATOR and value in ("plus", "times"):
        # associativity: absorb same-operator children (groups are already
        # transparent, so a(bc) and (ab)c collapse to one n-ary times)
        flat: list[_OptNode] = []
        for child in children:
            if child.token.kind is TokenKind.OPERATOR and child.token.value == value:
                flat.extend(child.children)
            else:
                flat.append(child)
        children = flat
    if value in _COMMUTATIVE and kind in (TokenKind.OPERATOR, TokenKind.RELATION):
        children = sorted(children, key=lambda c: (-c.size, c.serial))
    node = _OptNode(MathToken(kind, value), children)
    return node.finish()


def _opt_build(node: ExprNode) -> _OptNode:
    kind = node.kind
    if kind == "var":
        return _OptNode(MathToken(TokenKind.VARIABLE, node.value)).finish()
    if kind == "num":
        return _OptNode(MathToken(TokenKind.NUMBER, node.value)).finish()
    if kind == "plus":
        return _opt_op(TokenKind.OPERATOR, "plus", [_opt_build(c) for c in node.children])
    if kind == "mul":
        return _opt_op(TokenKind.OPERATOR, "times", [_opt_build(c) for c in node.children])
    if kind == "minus":
        return _opt_op(TokenKind.OPERATOR, "minus", [_opt_build(c) for c in node.children])
    if kind == "divide" or kind == "frac":
        return _opt_op(TokenKind.OPERATOR, "divide", [_opt_build(c) for c in node.children])
    if kind == "relop":
        return _opt_op(TokenKind.RELATION, node.value, [_opt_build(c) for c in node.children])
    if kind == "neg":
        return _opt_op(TokenKind.OPERATOR, "neg", [_opt_build(node.children[0])])
    if kind == "script":
        base = _opt_build(node.children[0])
        rest = node.children[1:]
        if node.value in ("sub", "subsup"):
            base = _opt_op(TokenKind.OPERATOR, "sub", [base, _opt_build(rest[0])])
            rest = rest[1:]
        if node.value in ("sup", "subsup"):
            base = _opt_op(TokenKind.OPERATOR, "pow", [base, _opt_build(rest[0])])
        return base
    if kind == "func":
        return _opt_op(TokenKind.FUNCTION, node.value, [_opt_build(node.children[0])])
    if kind == "sqrt":
        return _opt_op(TokenKind.RADICAL, "sqrt", [_opt_build(node.children[0])])
    if kind == "group":
        return _opt_build(node.children[0])  # grouping is purely visual
    if kind == "matrix":
        return _opt_op(TokenKind.MATRIX, node.value, [_opt_build(c) for c in node.children])
    raise AssertionError(f"unhandled AST node {kind}")


def build_opt(tree: ExprNode) -> FormulaGraph:
    b = _Builder("OPT")

    def emit(node: _OptNode) -> int:
        idx = b.add(node.token.kind, node.token.value)
        for i, child in enumerate(node.children):
            cidx = emit(child)
            b.link(idx, cidx, arg_relation(i))
        return idx

    root = emit(_opt_build(tree))
    return b.graph(root)


def latex_to_graph(source: str, layout: str) -> FormulaGraph:
    tree = parse_latex(source)
    if layout.upper() == "SLT":
        return build_slt(tree)
    if layout.upper() == "OPT":
        return build_opt(tree)
    raise ValueError(f"unknown layout {layout!r}")


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def canonicalize(g: FormulaGraph) -> FormulaGraph:
    """Reindex nodes in pre-order so equal graphs serialize identically.

    Children keep their per-parent edge order, which the builders fix
    (writing order for SLT, ARG order for OPT).
    """
    validate_tree(g)
    adj = g.children()
    order: list[int] = []
    stack = [g.root]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(dst for dst, _ in reversed(adj[u]))
    remap = {old: new for new, old in enumerate(order)}
    nodes = [g.nodes[old] for old in order]
    edges: list[tuple[int, int, str]] = []
    for old in order:
        for dst, rel in adj[old]:
            edges.append((remap[old], remap[dst], rel))
    return FormulaGraph(g.layout, nodes, edges, 0)


def graph_to_record(g: FormulaGraph, formula_id: str = "") -> dict:
    c = canonicalize(g)
    return {
        "id": formula_id,
        "layout": c.layout,
        "nodes": [t.encoded() for t in c.nodes],
        "edges": [[src, dst, rel] for src, dst, rel in c.edges],
        "root": c.root,
    }


def serialize_graph(g: FormulaGraph, formula_id: str = "") -> str:
    return json.dumps(graph_to_record(g, formula_id), separators=(",", ":"), sort_keys=True)


def record_to_graph(record: dict, line: int | None = None) -> tuple[str, FormulaGraph]:
    for key in ("layout", "nodes", "edges", "root"):
        if key not in record:
            raise MalformedRecord("missing field", field=key, line=line)
    if record["layout"] not in ("SLT", "OPT"):
        raise MalformedRecord(f"unknown layout {record['layout']!r}", field="layout", line=line)
    try:
        nodes = [MathToken.decode(t) for t in record["nodes"]]
    except (ValueError, TypeError) as exc:
        raise MalformedRecord(str(exc), field="nodes", line=line) from exc
    edges = []
    for e in record["edges"]:
        if not (isinstance(e, (list, tuple)) and len(e) == 3):
            raise MalformedRecord(f"bad edge entry {e!r}", field="edges", line=line)
        src, dst, rel = e
        if not (isinstance(src, int) and isinstance(dst, int) and isinstance(rel, str)):
            raise MalformedRecord(f"bad edge entry {e!r}", field="edges", line=line)
        edges.append((src, dst, rel))
    if not isinstance(record["root"], int):
        raise MalformedRecord("root must be an integer", field="root", line=line)
    g = FormulaGraph(record["layout"], nodes, edges, record["root"])
    try:
        validate_tree(g)
    except MalformedRecord as exc:
        raise MalformedRecord(str(exc), field="edges", line=line) from exc
    return str(record.get("id", "")), g


def deserialize_graph(text: str, line: int | None = None) -> FormulaGraph:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON: {exc}", line=line) from exc
    if not isinstance(record, dict):
        raise MalformedRecord("record is not a JSON object", line=line)
    return record_to_graph(record, line=line)[1]


def graphs_equal(a: FormulaGraph, b: FormulaGraph) -> bool:
    return serialize_graph(a) == serialize_graph(b)


# --------------------------------------------------------------------------
# Corpus files: one JSON object per line
# --------------------------------------------------------------------------

def read_corpus(path) -> list[tuple[str, str]]:
    """Read a formula corpus of {"id", "latex"} JSON lines."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON: {exc}", line=lineno) from exc
            if "id" not in rec or "latex" not in rec:
                raise MalformedRecord("corpus record needs id and latex", line=lineno)
            out.append((str(rec["id"]), str(rec["latex"])))
    return out


def read_graph_file(path) -> list[tuple[str, FormulaGraph]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON: {exc}", line=lineno) from exc
            out.append(record_to_graph(rec, line=lineno))
    return out


def write_graph_file(path, items: list[tuple[str, FormulaGraph]]):
    with open(path, "w", encoding="utf-8") as fh:
        for formula_id, g in items:
            fh.write(serialize_graph(g, formula_id) + "\n")
