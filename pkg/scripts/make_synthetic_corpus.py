#!/usr/bin/env python3
"""Regenerate the committed synthetic corpus, qrels, and demo config.

The corpus is deterministic (fixed seed), so rerunning this script must
leave the committed files unchanged.
"""

import json
from pathlib import Path

from mathgcl.metrics import write_qrels
from mathgcl.synthetic import make_corpus, make_qrels, write_corpus

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data" / "synthetic"


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    formulas = make_corpus()
    write_corpus(DATA / "corpus.jsonl", formulas)
    write_qrels(DATA / "qrels.txt", make_qrels(formulas))
    manifest = {
        "formulas": len(formulas),
        "templates": sorted({f.template for f in formulas}),
        "per_template": len(formulas) // len({f.template for f in formulas}),
    }
    (DATA / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    print(f"wrote {len(formulas)} formulas to {DATA}")


if __name__ == "__main__":
    main()
