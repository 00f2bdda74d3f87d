"""Dense-connectivity search space: cells, meta-graphs, and derived-network accounting.

A meta-graph is an ordered list of per-stage cells. Each cell is a DAG on
vertices 0..N-1 where vertex 0 is the stage input, vertex N-1 is the stage
output, and every edge (u, v) satisfies u < v. Intermediate vertices carry a
fixed operator; the output vertex concatenates the representations of every
vertex that feeds it (explicit edges into N-1 plus active leaves).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BudgetTooSmall,
    DimensionMismatch,
    EmptyDerivation,
    SchemaError,
    UnknownPreset,
)

DOCUMENT_VERSION = 1


class OperatorKind(Enum):
    """Atomic building operators; each one is a conv + batch norm + ReLU."""

    CONV1X1 = "conv1x1"
    DW3 = "dw3"
    DW5 = "dw5"
    DW7 = "dw7"

    @property
    def kernel_size(self) -> int:
        return {"conv1x1": 1, "dw3": 3, "dw5": 5, "dw7": 7}[self.value]

    @property
    def is_depthwise(self) -> bool:
        return self is not OperatorKind.CONV1X1


# Operator assignment used by the presets: intermediates cycle through the
# four kinds in blocks, vertex 1 starting with the channel-projecting conv.
OP_CYCLE = (OperatorKind.CONV1X1, OperatorKind.DW3, OperatorKind.DW5, OperatorKind.DW7)


def cyclic_ops(num_vertices: int) -> tuple[OperatorKind, ...]:
    """Default operator assignment for vertices 1..N-2."""
    return tuple(OP_CYCLE[(v - 1) % len(OP_CYCLE)] for v in range(1, num_vertices - 1))


@dataclass(frozen=True)
class CellGraph:
    """One stage's wiring DAG. Immutable and hashable."""

    num_vertices: int
    ops: tuple[OperatorKind, ...]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "edges", frozenset((int(u), int(v)) for u, v in self.edges))
        if self.num_vertices < 2:
            raise ValueError("a cell needs at least input and output vertices")
        if len(self.ops) != self.num_vertices - 2:
            raise ValueError("need one operator per intermediate vertex")
        for op in self.ops:
            if not isinstance(op, OperatorKind):
                raise TypeError(f"not an operator: {op!r}")

    @property
    def intermediates(self) -> range:
        return range(1, self.num_vertices - 1)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


@dataclass(frozen=True)
class StageConfig:
    """Width, depth and spatial size of one stage."""

    base_channels: int
    repeats: int
    height: int
    width: int

    def __post_init__(self):
        if self.base_channels < 1 or self.repeats < 1:
            raise ValueError("channels and repeats must be positive")
        if self.height < 1 or self.width < 1:
            raise ValueError("spatial size must be positive")


@dataclass(frozen=True)
class MetaGraph:
    """Ordered cells plus their stage configurations."""

    cells: tuple[CellGraph, ...]
    stages: tuple[StageConfig, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "stages", tuple(self.stages))
        if len(self.cells) != len(self.stages):
            raise ValueError("one stage config per cell")
        if not self.cells:
            raise ValueError("meta-graph needs at least one stage")


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    problems: tuple[str, ...]


@dataclass(frozen=True)
class ArchStats:
    """Multiply-accumulate and parameter counts of the derived network body.

    Stem, stage transitions and the classifier head are excluded; only the
    searched cells are counted, once per stage repeat.
    """

    macs: int
    params: int
    active_vertices: tuple[int, ...]


@dataclass(frozen=True)
class ChannelPlan:
    """Per-vertex channel widths for one cell at a given stage width."""

    in_channels: dict[int, int]
    out_channels: dict[int, int]
    feeders: tuple[int, ...]
    output_width: int


@dataclass(frozen=True)
class CellTemplate:
    num_vertices: int
    ops: tuple[OperatorKind, ...]

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if len(self.ops) != max(self.num_vertices - 2, 0):
            raise ValueError("need one operator per intermediate vertex")


@dataclass(frozen=True)
class SpaceTemplate:
    """Shape of a search space: cell skeletons plus stage configs."""

    cells: tuple[CellTemplate, ...]
    stages: tuple[StageConfig, ...]
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "stages", tuple(self.stages))
        if len(self.cells) != len(self.stages):
            raise ValueError("one stage config per cell")

    @property
    def encode_dim(self) -> int:
        return sum(n * (n - 1) // 2 for n in (c.num_vertices for c in self.cells))

    def meta_from_edges(self, edge_sets: Sequence[Iterable[tuple[int, int]]]) -> MetaGraph:
        if len(edge_sets) != len(self.cells):
            raise ValueError("one edge set per cell")
        cells = tuple(
            CellGraph(t.num_vertices, t.ops, frozenset(es))
            for t, es in zip(self.cells, edge_sets)
        )
        return MetaGraph(cells, self.stages)


def template_of(meta: MetaGraph) -> SpaceTemplate:
    cells = tuple(CellTemplate(c.num_vertices, c.ops) for c in meta.cells)
    return SpaceTemplate(cells, meta.stages)


def single_cell_template(
    num_vertices: int,
    ops: Sequence[OperatorKind] | None = None,
    base_channels: int = 16,
    repeats: int = 1,
    height: int = 8,
    width: int = 8,
) -> SpaceTemplate:
    """Convenience template for desk-scale studies on one cell."""
    if ops is None:
        ops = cyclic_ops(num_vertices)
    cell = CellTemplate(num_vertices, tuple(ops))
    stage = StageConfig(base_channels, repeats, height, width)
    return SpaceTemplate((cell,), (stage,))


def preset_space(name: str) -> SpaceTemplate:
    """Named search spaces with the fixed 18-vertex operator pattern."""
    if name == "imagenet":
        channels = (16, 32, 64, 128)
        spatial = ((56, 56), (28, 28), (14, 14), (7, 7))
        repeats = (1, 1, 1, 1)
    elif name == "cifar10":
        channels = (16, 32, 64)
        spatial = ((32, 32), (16, 16), (8, 8))
        repeats = (3, 3, 3)
    else:
        raise UnknownPreset(f"unknown preset: {name!r}")
    ops = cyclic_ops(18)
    cells = tuple(CellTemplate(18, ops) for _ in channels)
    stages = tuple(
        StageConfig(c, d, h, w) for c, d, (h, w) in zip(channels, repeats, spatial)
    )
    return SpaceTemplate(cells, stages, name=name)


# ---------------------------------------------------------------------------
# validity and derivation


def _structural_problems(cell: CellGraph) -> list[str]:
    problems = []
    n = cell.num_vertices
    if n < 3:
        problems.append("fewer than 3 vertices: no intermediate vertex exists")
    for u, v in cell.sorted_edges():
        if not (0 <= u < v <= n - 1):
            problems.append(f"edge ({u},{v}) violates 0 <= u < v <= {n - 1}")
    return problems


def _require_structural(cell: CellGraph) -> None:
    problems = _structural_problems(cell)
    if problems:
        raise ValueError("; ".join(problems))


def _successors(cell: CellGraph) -> list[list[int]]:
    succ: list[list[int]] = [[] for _ in range(cell.num_vertices)]
    for u, v in cell.sorted_edges():
        succ[u].append(v)
    return succ


def _active_set(cell: CellGraph) -> set[int]:
    """Intermediate vertices reachable from vertex 0."""
    succ = _successors(cell)
    last = cell.num_vertices - 1
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in succ[u]:
            if v != last and v not in seen:
                seen.add(v)
                stack.append(v)
    seen.discard(0)
    return seen


def validate(cell: CellGraph) -> ValidityReport:
    """Structural checks plus the reachability requirement."""
    problems = _structural_problems(cell)
    if not problems and not _active_set(cell):
        problems.append("no intermediate vertex is reachable from vertex 0")
    return ValidityReport(not problems, tuple(problems))


def validate_meta(meta: MetaGraph) -> ValidityReport:
    problems = []
    for i, cell in enumerate(meta.cells):
        for p in validate(cell).problems:
            problems.append(f"cell {i}: {p}")
    return ValidityReport(not problems, tuple(problems))


def is_valid_cell(cell: CellGraph) -> bool:
    """Fast validity check for cells built from well-formed slots."""
    return bool(_active_set(cell))


def is_valid_meta(meta: MetaGraph) -> bool:
    return all(is_valid_cell(c) for c in meta.cells)


def active_vertices(cell: CellGraph) -> tuple[int, ...]:
    _require_structural(cell)
    return tuple(sorted(_active_set(cell)))


def active_subgraph(cell: CellGraph) -> CellGraph:
    """Cell restricted to vertices reachable from the input.

    Edges touching pruned intermediates are removed; vertex numbering is kept
    so operators stay attached to their vertices.
    """
    _require_structural(cell)
    active = _active_set(cell)
    if not active:
        raise EmptyDerivation("no intermediate vertex is reachable from vertex 0")
    keep = active | {0, cell.num_vertices - 1}
    edges = frozenset(e for e in cell.edges if e[0] in keep and e[1] in keep)
    return CellGraph(cell.num_vertices, cell.ops, edges)


def output_feeders(cell: CellGraph) -> tuple[int, ...]:
    """Vertices whose representations the output vertex concatenates.

    That is every vertex with an explicit edge into the output plus every
    active intermediate without an outgoing edge in the active subgraph.
    """
    _require_structural(cell)
    active = _active_set(cell)
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


def infer_channels(
    cell: CellGraph, stage: StageConfig, input_width: int | None = None
) -> ChannelPlan:
    """Channel widths implied by concatenation semantics.

    Conv1x1 projects to the stage width; depthwise ops preserve their input
    width; a vertex's input width is the sum over its active predecessors.
    Vertex 0 contributes ``input_width`` (the stage width by default).
    """
    _require_structural(cell)
    active = _active_set(cell)
    if not active:
        raise EmptyDerivation("no intermediate vertex is reachable from vertex 0")
    width_in = stage.base_channels if input_width is None else int(input_width)
    keep = active | {0}
    out_ch: dict[int, int] = {0: width_in}
    in_ch: dict[int, int] = {}
    for v in sorted(active):
        total = sum(out_ch[u] for u, w in cell.edges if w == v and u in keep)
        in_ch[v] = total
        op = cell.ops[v - 1]
        out_ch[v] = stage.base_channels if op is OperatorKind.CONV1X1 else total
    feeders = output_feeders(cell)
    output_width = sum(out_ch[v] for v in feeders)
    last = cell.num_vertices - 1
    in_ch[last] = output_width
    return ChannelPlan(in_ch, out_ch, feeders, output_width)


def arch_stats(meta: MetaGraph) -> ArchStats:
    """MAC and parameter counts over all searched cells.

    Conv1x1: macs = H*W*Cin*Cout, params = Cin*Cout + 2*Cout.
    Depthwise k: macs = H*W*Cin*k*k, params = Cin*k*k + 2*Cin.
    The 2*C terms are the batch norm scale and shift.
    """
    total_macs = 0
    total_params = 0
    actives = []
    for cell, stage in zip(meta.cells, meta.stages):
        plan = infer_channels(cell, stage)
        area = stage.height * stage.width
        macs = 0
        params = 0
        for v in sorted(_active_set(cell)):
            op = cell.ops[v - 1]
            cin = plan.in_channels[v]
            cout = plan.out_channels[v]
            if op is OperatorKind.CONV1X1:
                macs += area * cin * cout
                params += cin * cout + 2 * cout
            else:
                k = op.kernel_size
                macs += area * cin * k * k
                params += cin * k * k + 2 * cin
        total_macs += macs * stage.repeats
        total_params += params * stage.repeats
        actives.append(len(_active_set(cell)))
    return ArchStats(total_macs, total_params, tuple(actives))


# ---------------------------------------------------------------------------
# budget scaling


def _round8(x: float) -> int:
    return max(8, int(x / 8.0 + 0.5) * 8)


def _scaled_meta(meta: MetaGraph, multiplier: float, spatial: list[tuple[int, int]]) -> MetaGraph:
    stages = tuple(
        StageConfig(_round8(s.base_channels * multiplier), s.repeats, h, w)
        for s, (h, w) in zip(meta.stages, spatial)
    )
    return MetaGraph(meta.cells, stages)


def scale_to_budget(
    meta: MetaGraph,
    target_macs: int,
    resolution: tuple[int, int] | None = None,
) -> tuple[float, MetaGraph]:
    """Largest width multiplier whose scaled meta-graph fits the MAC budget.

    Base channels are rounded to the nearest multiple of 8 with a floor of 8.
    ``resolution`` optionally overrides the first stage's spatial size; later
    stages are scaled by the same factor.
    """
    if target_macs < 1:
        raise BudgetTooSmall("target budget must be positive")
    if resolution is None:
        spatial = [(s.height, s.width) for s in meta.stages]
    else:
        rh = resolution[0] / meta.stages[0].height
        rw = resolution[1] / meta.stages[0].width
        spatial = [
            (max(1, int(s.height * rh + 0.5)), max(1, int(s.width * rw + 0.5)))
            for s in meta.stages
        ]

    def macs_at(m: float) -> int:
        return arch_stats(_scaled_meta(meta, m, spatial)).macs

    if macs_at(0.0) > target_macs:
        raise BudgetTooSmall(
            f"minimum-width network needs {macs_at(0.0)} MACs, budget is {target_macs}"
        )
    lo, hi = 0.0, 1.0
    for _ in range(80):
        if macs_at(hi) > target_macs:
            break
        lo, hi = hi, hi * 2.0
    else:
        return hi, _scaled_meta(meta, hi, spatial)
    # macs_at is a nondecreasing step function of the multiplier; bisect to
    # the feasibility threshold and return the largest feasible multiplier.
    for _ in range(64):
        mid = (lo + hi) / 2.0
        if macs_at(mid) <= target_macs:
            lo = mid
        else:
            hi = mid
    return lo, _scaled_meta(meta, lo, spatial)


# ---------------------------------------------------------------------------
# flat encoding


def edge_slots(num_vertices: int) -> list[tuple[int, int]]:
    """Row-major upper-triangular slot order shared by encode and mutation."""
    return [(u, v) for u in range(num_vertices - 1) for v in range(u + 1, num_vertices)]


def encode(meta: MetaGraph) -> np.ndarray:
    """Concatenated 0/1 adjacency vector, one block per cell."""
    blocks = []
    for cell in meta.cells:
        slots = edge_slots(cell.num_vertices)
        bits = np.zeros(len(slots), dtype=np.float64)
        for i, slot in enumerate(slots):
            if slot in cell.edges:
                bits[i] = 1.0
        blocks.append(bits)
    return np.concatenate(blocks)


def decode(template: SpaceTemplate, vector: np.ndarray) -> MetaGraph:
    """Inverse of encode for a given space template."""
    vec = np.asarray(vector, dtype=np.float64).ravel()
    if vec.shape[0] != template.encode_dim:
        raise DimensionMismatch(
            f"vector has {vec.shape[0]} entries, template expects {template.encode_dim}"
        )
    edge_sets = []
    offset = 0
    for tcell in template.cells:
        slots = edge_slots(tcell.num_vertices)
        block = vec[offset : offset + len(slots)]
        offset += len(slots)
        edge_sets.append({slot for slot, bit in zip(slots, block) if bit > 0.5})
    return template.meta_from_edges(edge_sets)


# ---------------------------------------------------------------------------
# serialization


def to_document(meta: MetaGraph) -> dict:
    return {
        "version": DOCUMENT_VERSION,
        "stages": [
            {
                "base_channels": s.base_channels,
                "repeats": s.repeats,
                "height": s.height,
                "width": s.width,
            }
            for s in meta.stages
        ],
        "cells": [
            {
                "num_vertices": c.num_vertices,
                "ops": [op.value for op in c.ops],
                "edges": [[u, v] for u, v in c.sorted_edges()],
            }
            for c in meta.cells
        ],
    }


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaError(message)


def from_document(doc: dict) -> MetaGraph:
    _expect(isinstance(doc, dict), "document must be an object")
    _expect(doc.get("version") == DOCUMENT_VERSION, "unsupported document version")
    stages_doc = doc.get("stages")
    cells_doc = doc.get("cells")
    _expect(isinstance(stages_doc, list) and stages_doc, "stages must be a non-empty list")
    _expect(isinstance(cells_doc, list) and cells_doc, "cells must be a non-empty list")
    _expect(len(stages_doc) == len(cells_doc), "stages and cells must align")
    stages = []
    for s in stages_doc:
        _expect(isinstance(s, dict), "stage must be an object")
        try:
            stages.append(
                StageConfig(
                    int(s["base_channels"]), int(s["repeats"]), int(s["height"]), int(s["width"])
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad stage config: {exc}") from exc
    cells = []
    by_value = {op.value: op for op in OperatorKind}
    for c in cells_doc:
        _expect(isinstance(c, dict), "cell must be an object")
        try:
            n = int(c["num_vertices"])
            ops_doc = c["ops"]
            edges_doc = c["edges"]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad cell document: {exc}") from exc
        _expect(isinstance(ops_doc, list), "ops must be a list")
        _expect(all(isinstance(o, str) and o in by_value for o in ops_doc), "unknown operator")
        _expect(isinstance(edges_doc, list), "edges must be a list")
        edges = set()
        for e in edges_doc:
            _expect(
                isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e),
                "edge must be a pair of integers",
            )
            edges.add((e[0], e[1]))
        try:
            cells.append(CellGraph(n, tuple(by_value[o] for o in ops_doc), frozenset(edges)))
        except (TypeError, ValueError) as exc:
            raise SchemaError(str(exc)) from exc
    return MetaGraph(tuple(cells), tuple(stages))


def dumps(meta: MetaGraph) -> str:
    """Canonical serialization: equal meta-graphs produce identical bytes."""
    return json.dumps(to_document(meta), sort_keys=True, separators=(",", ":"))


def loads(text: str) -> MetaGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return from_document(doc)


# ---------------------------------------------------------------------------
# visualization


def to_dot(meta: MetaGraph) -> str:
    """Graphviz rendering of the active subgraph, one cluster per stage."""
    lines = ["digraph meta {", "  rankdir=LR;", "  node [shape=box, fontsize=10];"]
    for i, (cell, stage) in enumerate(zip(meta.cells, meta.stages)):
        pruned = active_subgraph(cell)
        active = _active_set(cell)
        feeders = set(output_feeders(cell))
        last = cell.num_vertices - 1
        lines.append(f"  subgraph cluster_{i} {{")
        label = f"stage {i}: C={stage.base_channels} D={stage.repeats} {stage.height}x{stage.width}"
        lines.append(f'    label="{label}";')
        lines.append(f'    s{i}v0 [label="in"];')
        for v in sorted(active):
            lines.append(f'    s{i}v{v} [label="v{v}\\n{cell.ops[v - 1].value}"];')
        lines.append(f'    s{i}v{last} [label="concat"];')
        for u, v in sorted(pruned.edges):
            lines.append(f"    s{i}v{u} -> s{i}v{v};")
        for v in sorted(feeders):
            if (v, last) not in cell.edges:
                lines.append(f"    s{i}v{v} -> s{i}v{last} [style=dashed];")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
