#!/usr/bin/env python3
"""Sweep retrieval models and query reductions over a topic corpus.

Runs the full pipeline once per (model, query method) combination and
prints a TSV of the macro evaluation numbers. Defaults to the test
fixture corpus so the sweep works out of the box:

    python3 scripts/run_model_sweep.py
    python3 scripts/run_model_sweep.py --corpus data/topics --out out/sweep
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from citectx.cli import main as cli_main  # noqa: E402

FIXTURES = REPO / "tests" / "fixtures"

MODELS = ["vsm", "bm25", "lmd", "embedding", "interpolated"]
QUERY_METHODS = ["full", "kw", "np"]


def run_one(args, model: str, query_method: str, out_dir: Path) -> dict | None:
    argv = [
        "pipeline",
        "--corpus", args.corpus,
        "--model", model,
        "--query-method", query_method,
        "--seed", str(args.seed),
        "--out", str(out_dir),
    ]
    if args.embeddings:
        argv += ["--embeddings", args.embeddings]
    if args.lexicon:
        argv += ["--lexicon", args.lexicon]
    if cli_main(argv) != 0:
        return None
    reports = list(out_dir.rglob("evaluation/report.json"))
    if not reports:
        return None
    return json.loads(reports[-1].read_text())["macro"]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--corpus", default=str(FIXTURES / "corpus"))
    parser.add_argument("--embeddings", default=str(FIXTURES / "vectors.txt"))
    parser.add_argument("--lexicon", default=str(FIXTURES / "lexicon.txt"))
    parser.add_argument("--out", default="", help="artifact root (default: temp dir)")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(args.out) if args.out else Path(tmp)
        for model in MODELS:
            if model in ("embedding", "interpolated") and not args.embeddings:
                continue
            for method in QUERY_METHODS:
                out_dir = root / f"{model}_{method}"
                macro = run_one(args, model, method, out_dir)
                if macro is None:
                    print(f"skipped {model}/{method} (stage failed)", file=sys.stderr)
                    continue
                char = macro.get("char", {})
                sent = macro.get("sentence", {})
                rows.append(
                    (
                        model,
                        method,
                        char.get("f1", 0.0),
                        sent.get("f1", 0.0),
                        macro.get("facet_weighted_accuracy", 0.0),
                        macro.get("rouge", {}).get("SU4", {}).get("f1", 0.0),
                    )
                )

    print("model\tquery\tchar_f1\tsent_f1\tfacet_acc\trouge_su4_f1")
    for model, method, cf, sf, fa, rf in rows:
        print(f"{model}\t{method}\t{cf:.4f}\t{sf:.4f}\t{fa:.4f}\t{rf:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
