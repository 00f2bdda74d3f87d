"""Command-line surface: the serving loop, one-shot evaluation, and a
self-check that exercises the full path on a minimal document."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import EvaluatorError
from .documents import parse_document
from .server import serve
from .training import EvalBudget, evaluate_once

# minimal chain cell per stage at the CIFAR stage layout
SELFCHECK_DOC = {
    "version": 1,
    "cells": [
        {"num_vertices": 3, "ops": ["conv1x1"], "edges": [[0, 1]]}
        for _ in range(3)
    ],
    "stages": [
        {"base_channels": 16, "repeats": 1, "height": 32, "width": 32},
        {"base_channels": 32, "repeats": 1, "height": 16, "width": 16},
        {"base_channels": 64, "repeats": 1, "height": 8, "width": 8},
    ],
}


def cmd_serve(args) -> int:
    return serve(args.data_dir, device=args.device)


def cmd_eval(args) -> int:
    doc = json.loads(Path(args.meta).read_text())
    budget = EvalBudget(
        epochs=args.epochs,
        data_fraction=args.data_fraction,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
    )
    result = evaluate_once(parse_document(doc), budget, seed=args.seed,
                           data_dir=args.data_dir, device=args.device)
    print(repr(result.score))
    return 0


def cmd_selfcheck(args) -> int:
    budget = EvalBudget(epochs=1, data_fraction=0.02)
    result = evaluate_once(parse_document(SELFCHECK_DOC), budget, seed=0,
                           data_dir=args.data_dir, device=args.device)
    print(f"selfcheck score {result.score!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="densewire-evaluator",
        description="Train small CIFAR-10 networks from graph documents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="serve scores over stdin/stdout")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval", help="score one meta-graph document")
    p.add_argument("--meta", required=True)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--data-fraction", type=float, default=0.02)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("selfcheck", help="end-to-end run on a minimal document")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EvaluatorError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
