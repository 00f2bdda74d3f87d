"""JSONL persistence for architecture-performance records."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import graphs, isomorphism
from .errors import SchemaError
from .graphs import MetaGraph

SOURCES = ("measured", "augmented")


@dataclass(frozen=True)
class ArchRecord:
    """One scored architecture plus provenance."""

    meta: MetaGraph
    perf: float
    source: str
    canon: str
    seed: int

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}")
        if not 0.0 <= self.perf <= 1.0:
            raise ValueError("perf must lie in [0, 1]")


def make_record(meta: MetaGraph, perf: float, source: str, seed: int) -> ArchRecord:
    return ArchRecord(meta, float(perf), source, isomorphism.canonical_key(meta).hex(), seed)


def dump_record(rec: ArchRecord) -> str:
    doc = {
        "meta": graphs.to_document(rec.meta),
        "perf": rec.perf,
        "source": rec.source,
        "canon": rec.canon,
        "seed": rec.seed,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def append_records(path: str | Path, records: Iterable[ArchRecord]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dump_record(rec) + "\n")


def load_records(path: str | Path, verify_canon: bool = True) -> list[ArchRecord]:
    """Parse a record store; any malformed line rejects the whole file."""
    out: list[ArchRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                raise SchemaError("blank line in record store", line=lineno)
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"not valid JSON: {exc}", line=lineno) from exc
            if not isinstance(doc, dict):
                raise SchemaError("record must be an object", line=lineno)
            missing = {"meta", "perf", "source", "canon", "seed"} - doc.keys()
            if missing:
                raise SchemaError(f"missing fields: {sorted(missing)}", line=lineno)
            try:
                meta = graphs.from_document(doc["meta"])
            except SchemaError as exc:
                raise SchemaError(f"bad meta document: {exc}", line=lineno) from exc
            perf = doc["perf"]
            if not isinstance(perf, (int, float)) or isinstance(perf, bool):
                raise SchemaError("perf must be a number", line=lineno)
            if not isinstance(doc["canon"], str) or not isinstance(doc["seed"], int):
                raise SchemaError("canon must be a string and seed an integer", line=lineno)
            try:
                rec = ArchRecord(meta, float(perf), doc["source"], doc["canon"], doc["seed"])
            except ValueError as exc:
                raise SchemaError(str(exc), line=lineno) from exc
            if verify_canon and rec.canon != isomorphism.canonical_key(meta).hex():
                raise SchemaError("canonical key does not match the stored graph", line=lineno)
            out.append(rec)
    return out


def summarize(records: Sequence[ArchRecord]) -> dict:
    perfs = [r.perf for r in records]
    return {
        "records": len(records),
        "measured": sum(1 for r in records if r.source == "measured"),
        "augmented": sum(1 for r in records if r.source == "augmented"),
        "classes": len({r.canon for r in records}),
        "perf_min": min(perfs) if perfs else None,
        "perf_mean": sum(perfs) / len(perfs) if perfs else None,
        "perf_max": max(perfs) if perfs else None,
    }
