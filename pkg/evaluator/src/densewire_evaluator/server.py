"""Newline-delimited JSON serving loop.

Request: {"id": int, "meta": <document>, "budget": {"epochs", "data_fraction"}}
Reply:   {"id": int, "score": float in [0,1]} or {"id": int, "error": str}
One request at a time, replies in request order, unknown fields ignored,
exit 0 when the input stream closes.
"""

from __future__ import annotations

import json
import sys

from .documents import parse_document
from .training import EvalBudget, evaluate_once


def _budget_from(req: dict) -> EvalBudget:
    raw = req.get("budget", {})
    if not isinstance(raw, dict):
        raise ValueError("budget is not an object")
    kwargs = {}
    for field in ("epochs", "data_fraction", "batch_size", "learning_rate"):
        if field in raw:
            kwargs[field] = raw[field]
    return EvalBudget(**kwargs)


def serve(data_dir, device: str = "cpu", stdin=None, stdout=None) -> int:
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout

    def reply(payload: dict) -> None:
        stdout.write(json.dumps(payload, sort_keys=True) + "\n")
        stdout.flush()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
        except json.JSONDecodeError as exc:
            reply({"id": -1, "error": f"malformed request: {exc}"})
            continue
        rid = req.get("id") if isinstance(req, dict) else None
        if not isinstance(rid, int):
            reply({"id": -1, "error": "request has no integer id"})
            continue
        try:
            meta = parse_document(req["meta"])
            budget = _budget_from(req)
            result = evaluate_once(meta, budget, seed=rid, data_dir=data_dir,
                                   device=device)
            reply({"id": rid, "score": result.score})
        except KeyError as exc:
            reply({"id": rid, "error": f"missing field {exc}"})
        except Exception as exc:
            reply({"id": rid, "error": str(exc)})
    return 0
