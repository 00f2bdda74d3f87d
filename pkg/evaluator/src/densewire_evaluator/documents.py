"""Document-side graph semantics.

Parses the JSON meta-graph document and re-derives the pieces the network
builder needs: the active vertex set, the output feeders, and the channel
widths implied by concatenation. Kept import-free of the search side on
purpose; agreement is pinned by the cross-implementation parameter check.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SchemaError

OP_NAMES = ("conv1x1", "dw3", "dw5", "dw7")
KERNEL_SIZE = {"conv1x1": 1, "dw3": 3, "dw5": 5, "dw7": 7}
DOCUMENT_VERSION = 1


@dataclass(frozen=True)
class CellSpec:
    num_vertices: int
    ops: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class StageSpec:
    base_channels: int
    repeats: int
    height: int
    width: int


@dataclass(frozen=True)
class MetaSpec:
    cells: tuple[CellSpec, ...]
    stages: tuple[StageSpec, ...]


@dataclass(frozen=True)
class ChannelPlan:
    in_channels: dict[int, int]
    out_channels: dict[int, int]
    feeders: tuple[int, ...]
    output_width: int


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaError(message)


def _parse_cell(doc: dict, index: int) -> CellSpec:
    tag = f"cell {index}"
    _expect(isinstance(doc, dict), f"{tag}: not an object")
    n = doc.get("num_vertices")
    _expect(isinstance(n, int) and n >= 2, f"{tag}: bad num_vertices")
    ops = doc.get("ops")
    _expect(isinstance(ops, list) and len(ops) == n - 2, f"{tag}: bad ops length")
    for op in ops:
        _expect(op in OP_NAMES, f"{tag}: unknown op {op!r}")
    edges = doc.get("edges")
    _expect(isinstance(edges, list), f"{tag}: bad edges")
    seen = set()
    for e in edges:
        _expect(
            isinstance(e, list) and len(e) == 2
            and all(isinstance(x, int) for x in e),
            f"{tag}: bad edge {e!r}",
        )
        u, v = e
        _expect(0 <= u < v <= n - 1, f"{tag}: edge ({u},{v}) out of order")
        _expect((u, v) not in seen, f"{tag}: duplicate edge ({u},{v})")
        seen.add((u, v))
    return CellSpec(n, tuple(ops), tuple(sorted(seen)))


def _parse_stage(doc: dict, index: int) -> StageSpec:
    tag = f"stage {index}"
    _expect(isinstance(doc, dict), f"{tag}: not an object")
    fields = {}
    for name in ("base_channels", "repeats", "height", "width"):
        value = doc.get(name)
        _expect(isinstance(value, int) and value >= 1, f"{tag}: bad {name}")
        fields[name] = value
    return StageSpec(**fields)


def parse_document(doc: object) -> MetaSpec:
    _expect(isinstance(doc, dict), "document is not an object")
    _expect(doc.get("version") == DOCUMENT_VERSION,
            f"unsupported document version {doc.get('version')!r}")
    cells = doc.get("cells")
    stages = doc.get("stages")
    _expect(isinstance(cells, list) and cells, "missing cells")
    _expect(isinstance(stages, list) and stages, "missing stages")
    _expect(len(cells) == len(stages), "cells and stages length mismatch")
    meta = MetaSpec(
        cells=tuple(_parse_cell(c, i) for i, c in enumerate(cells)),
        stages=tuple(_parse_stage(s, i) for i, s in enumerate(stages)),
    )
    for i, cell in enumerate(meta.cells):
        _expect(bool(active_set(cell)),
                f"cell {i}: no intermediate vertex is reachable from vertex 0")
    return meta


def active_set(cell: CellSpec) -> set[int]:
    """Intermediate vertices reachable from vertex 0."""
    succ: dict[int, list[int]] = {}
    for u, v in cell.edges:
        succ.setdefault(u, []).append(v)
    last = cell.num_vertices - 1
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in succ.get(u, ()):
            if v != last and v not in seen:
                seen.add(v)
                stack.append(v)
    seen.discard(0)
    return seen


def output_feeders(cell: CellSpec) -> tuple[int, ...]:
    """Vertices concatenated into the cell output: explicit edges into the
    last vertex plus active intermediates with no active out-edge."""
    active = active_set(cell)
    last = cell.num_vertices - 1
    keep = active | {0}
    feeders = set()
    for u, v in cell.edges:
        if v == last and u in keep:
            feeders.add(u)
    for v in active:
        if not any(u == v and w in keep | {last} for u, w in cell.edges):
            feeders.add(v)
    return tuple(sorted(feeders))


def channel_plan(cell: CellSpec, base_channels: int, input_width: int) -> ChannelPlan:
    """Widths under concatenation semantics: conv1x1 projects to the stage
    width, depthwise ops preserve their input width."""
    active = active_set(cell)
    keep = active | {0}
    out_ch: dict[int, int] = {0: input_width}
    in_ch: dict[int, int] = {}
    for v in sorted(active):
        total = sum(out_ch[u] for u, w in cell.edges if w == v and u in keep)
        in_ch[v] = total
        op = cell.ops[v - 1]
        out_ch[v] = base_channels if op == "conv1x1" else total
    feeders = output_feeders(cell)
    output_width = sum(out_ch[v] for v in feeders)
    in_ch[cell.num_vertices - 1] = output_width
    return ChannelPlan(in_ch, out_ch, feeders, output_width)
