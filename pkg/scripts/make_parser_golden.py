#!/usr/bin/env python3
"""Regenerate the committed parser golden file.

Each entry freezes the byte-exact SLT and OPT serializations of one
formula. Inspect the diff carefully when regenerating: these records are
the parser's committed contract.
"""

import json
from pathlib import Path

from mathgcl.graphs import latex_to_graph, serialize_graph

ROOT = Path(__file__).resolve().parent.parent

FORMULAS = [
    "x",
    "a^3+b^2=0",
    "a_i",
    "a^b",
    "a_b",
    "\\frac{a}{b}",
    "\\frac{x+1}{y-1}",
    "\\sqrt{2}",
    "\\sqrt{a^2+b^2}=c",
    "a+b",
    "a-b",
    "-a+b",
    "a \\cdot b",
    "a \\times b",
    "a/b",
    "ab",
    "2x",
    "3.14r^2",
    "x=y",
    "x<y",
    "x>y",
    "x \\in S",
    "O(mn \\log m)",
    "O(n \\log n)",
    "\\log(x+1)",
    "\\sin x + \\cos y",
    "e^{i \\pi}+1=0",
    "\\alpha \\theta^2 + \\beta \\theta + \\gamma = 0",
    "(a+b)^2",
    "x_1^2+x_2^2",
    "\\frac{\\alpha}{\\beta}=\\frac{\\gamma}{\\delta}",
    "\\begin{bmatrix} a & b \\\\ c & d \\end{bmatrix}",
    "\\begin{pmatrix} x \\\\ y \\end{pmatrix}",
    "\\begin{bmatrix} V_1 \\\\ I_2 \\end{bmatrix} = \\begin{bmatrix} h_{11} & h_{12} \\\\ h_{21} & h_{22} \\end{bmatrix} \\begin{bmatrix} I_1 \\\\ V_2 \\end{bmatrix}",
    "\\begin{vmatrix} a & b \\\\ c & d \\end{vmatrix} = ad-bc",
    "\\lambda_{max}",
]


def main():
    out = ROOT / "data" / "golden" / "parser_golden.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for latex in FORMULAS:
            record = {
                "latex": latex,
                "slt": serialize_graph(latex_to_graph(latex, "SLT")),
                "opt": serialize_graph(latex_to_graph(latex, "OPT")),
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"wrote {len(FORMULAS)} golden records to {out}")


if __name__ == "__main__":
    main()
