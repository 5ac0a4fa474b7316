"""Synthetic benchmark corpus: 200 formulas drawn from 5 templates.

Formulas within a template share structure and differ only in symbols;
the derived qrels grade same-template pairs 4 and cross-template pairs 0,
so every corpus formula is judged for every query.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .metrics import QrelSet

LETTERS = list("abcdefghkmnpqrstuvwxyz")
GREEKS = ["alpha", "beta", "gamma", "delta", "lambda", "mu", "sigma", "tau", "phi", "omega"]


@dataclass
class SyntheticFormula:
    id: str
    latex: str
    template: int


def _sym(rng: random.Random) -> str:
    if rng.random() < 0.25:
        return "\\" + rng.choice(GREEKS)
    return rng.choice(LETTERS)


def _distinct_syms(rng: random.Random, count: int) -> list[str]:
    out: list[str] = []
    while len(out) < count:
        s = _sym(rng)
        if s not in out:
            out.append(s)
    return out


def _quadratic(rng):
    # spaces keep greek commands from swallowing the following letter
    a, b, c, x = _distinct_syms(rng, 4)
    return f"{a} {x}^2+{b} {x}+{c}=0"


def _fraction_eq(rng):
    p, q, r, s = _distinct_syms(rng, 4)
    return f"\\frac{{{p}}}{{{q}}}=\\frac{{{r}}}{{{s}}}"


def _big_o(rng):
    m, n = _distinct_syms(rng, 2)
    return f"O({m} {n} \\log {m})"


def _root_identity(rng):
    a, b, c = _distinct_syms(rng, 3)
    return f"\\sqrt{{{a}^2+{b}^2}}={c}"


def _matrix_system(rng):
    a, b, c, d, x, y, u, v = _distinct_syms(rng, 8)
    return (f"\\begin{{bmatrix}} {a} & {b} \\\\ {c} & {d} \\end{{bmatrix}}"
            f"\\begin{{bmatrix}} {x} \\\\ {y} \\end{{bmatrix}}="
            f"\\begin{{bmatrix}} {u} \\\\ {v} \\end{{bmatrix}}")


TEMPLATES = [_quadratic, _fraction_eq, _big_o, _root_identity, _matrix_system]


def make_corpus(per_template: int = 40, seed: int = 20240501) -> list[SyntheticFormula]:
    rng = random.Random(seed)
    formulas: list[SyntheticFormula] = []
    seen: set[str] = set()
    for t, template in enumerate(TEMPLATES):
        made = 0
        while made < per_template:
            latex = template(rng)
            if latex in seen:
                continue
            seen.add(latex)
            formulas.append(SyntheticFormula(f"f{t}{made:03d}", latex, t))
            made += 1
    return formulas


def make_qrels(formulas: list[SyntheticFormula]) -> QrelSet:
    """Every formula judges every formula: grade 4 iff same template."""
    qrels = QrelSet()
    for query in formulas:
        for doc in formulas:
            qrels.add(query.id, doc.id, 4 if doc.template == query.template else 0)
    return qrels


def write_corpus(path, formulas: list[SyntheticFormula]):
    with open(path, "w", encoding="utf-8") as fh:
        for f in formulas:
            fh.write(json.dumps({"id": f.id, "latex": f.latex}, sort_keys=True) + "\n")
