"""Mutation kernel and the four search strategies over meta-graph space.

mh-es anneals a Metropolis acceptance rule over a cosine temperature
schedule; es and ls are its infinite- and zero-temperature specializations
and run through the identical code path, so equal seeds give byte-identical
traces; rs replaces mutation with fresh sampling at the same oracle budget.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import graphs, oracles, sampling
from .errors import OracleFailure
from .graphs import CellGraph, MetaGraph, SpaceTemplate

STRATEGIES = ("mh-es", "es", "ls", "rs")
MAX_MUTATION_ATTEMPTS = 16
ACCEPT_STREAM = 1_000_003

TRACE_HEADER = "round,temperature,best_child_score,accepted,parent_score,best_ever_score"


class MutationKind(enum.Enum):
    RESAMPLE_EDGE = "resample-edge"
    ADD_EDGE = "add-edge"
    REMOVE_EDGE = "remove-edge"


_KINDS = tuple(MutationKind)


@dataclass
class SearchConfig:
    rounds: int = 10_000
    population: int = 96
    init_population: int = 4096
    t0: float = 0.001
    seed: int = 0
    strategy: str = "mh-es"

    def __post_init__(self):
        if self.rounds < 1 or self.population < 1 or self.init_population < 1:
            raise ValueError("rounds, population and init_population must be >= 1")
        if math.isnan(self.t0) or self.t0 < 0.0:
            raise ValueError("t0 must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")


@dataclass
class TraceRow:
    round_index: int
    temperature: float
    best_child_score: float
    accepted: bool
    parent_score: float
    best_ever_score: float
    identity_children: int = 0


@dataclass
class SearchTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [TRACE_HEADER]
        for r in self.rows:
            accepted = "true" if r.accepted else "false"
            lines.append(
                f"{r.round_index},{r.temperature!r},{r.best_child_score!r},"
                f"{accepted},{r.parent_score!r},{r.best_ever_score!r}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())


class SearchResult(NamedTuple):
    best_meta: MetaGraph
    best_score: float
    trace: SearchTrace


def temperature(r: int, cfg: SearchConfig) -> float:
    """Cosine-annealed temperature at round r.

    The ratio r/rounds is formed first so the endpoints and midpoint are
    exact in floating point: r=0 gives t0, r=rounds gives 0.0, and an even
    round count gives exactly t0/2 at the midpoint.
    """
    if not 0 <= r <= cfg.rounds:
        raise ValueError(f"round {r} outside [0, {cfg.rounds}]")
    if math.isinf(cfg.t0):
        return math.inf
    return cfg.t0 * (1.0 + math.cos(math.pi * (r / cfg.rounds))) / 2.0


def mh_accept(score_child: float, score_parent: float, temperature: float, rng) -> bool:
    """Metropolis rule: always take improvements, otherwise Bernoulli(exp(d/T)).

    T=0 accepts only strict improvements; T=inf accepts everything. No RNG
    draw is consumed when the outcome is certain.
    """
    if temperature < 0.0:
        raise ValueError("temperature must be >= 0")
    if score_child > score_parent:
        return True
    if temperature == 0.0:
        return False
    p = math.exp((score_child - score_parent) / temperature)
    if p >= 1.0:
        return True
    return bool(rng.random() < p)


def _mutate_cell(cell: CellGraph, kind: MutationKind, rng) -> CellGraph | None:
    slots = graphs.edge_slots(cell.num_vertices)
    present = sorted(cell.edges)
    new = set(cell.edges)
    if kind is MutationKind.ADD_EDGE:
        absent = [s for s in slots if s not in cell.edges]
        if not absent:
            return None
        new.add(absent[rng.integers(len(absent))])
    elif kind is MutationKind.REMOVE_EDGE:
        if not present:
            return None
        new.remove(present[rng.integers(len(present))])
    else:
        if not present:
            return None
        new.remove(present[rng.integers(len(present))])
        absent = [s for s in slots if s not in new]
        new.add(absent[rng.integers(len(absent))])
    return CellGraph(cell.num_vertices, cell.ops, frozenset(new))


def _mutate_tracked(meta: MetaGraph, rng) -> tuple[MetaGraph, bool]:
    """One mutation; the flag reports an identity fallback."""
    for _ in range(MAX_MUTATION_ATTEMPTS):
        cell_idx = int(rng.integers(len(meta.cells)))
        kind = _KINDS[rng.integers(len(_KINDS))]
        new_cell = _mutate_cell(meta.cells[cell_idx], kind, rng)
        if new_cell is None or not graphs.is_valid_cell(new_cell):
            continue
        cells = list(meta.cells)
        cells[cell_idx] = new_cell
        return MetaGraph(tuple(cells), meta.stages), False
    return meta, True


def mutate(meta: MetaGraph, rng) -> MetaGraph:
    """Mutate one uniformly chosen cell with one uniformly chosen kind.

    Invalid results are redrawn up to 16 times, then the input is returned
    unchanged so the kernel is total.
    """
    return _mutate_tracked(meta, rng)[0]


def _effective_t0(cfg: SearchConfig) -> float:
    if cfg.strategy == "es":
        return math.inf
    if cfg.strategy in ("ls", "rs"):
        return 0.0
    return cfg.t0


def _score(oracle, meta: MetaGraph, context: str) -> float:
    try:
        return oracles.evaluate(oracle, meta)
    except OracleFailure as exc:
        raise type(exc)(f"{context}: {exc}") from exc


def run_search(cfg: SearchConfig, oracle, template: SpaceTemplate) -> SearchResult:
    """Seeded search loop; returns the best-ever graph, score, and trace.

    All strategies spend the same oracle budget: init_population calls up
    front plus population calls per round. Child RNG streams are derived
    from (seed, round, child index), so results do not depend on evaluation
    order.
    """
    cfg = replace(cfg, t0=_effective_t0(cfg))

    parent = None
    parent_score = -math.inf
    for i in range(cfg.init_population):
        rng = np.random.default_rng((cfg.seed, 0, i))
        meta = sampling.sample_meta(template, rng)
        score = _score(oracle, meta, f"initial sample {i}")
        if score > parent_score:
            parent, parent_score = meta, score

    best_meta, best_score = parent, parent_score
    trace = SearchTrace()
    fresh = cfg.strategy == "rs"
    for r in range(1, cfg.rounds + 1):
        t = temperature(r, cfg)
        children = []
        identity_count = 0
        for i in range(cfg.population):
            rng = np.random.default_rng((cfg.seed, r, i))
            if fresh:
                children.append(sampling.sample_meta(template, rng))
            else:
                child, identity = _mutate_tracked(parent, rng)
                identity_count += identity
                children.append(child)
        scores = [
            _score(oracle, child, f"round {r} child {i}")
            for i, child in enumerate(children)
        ]
        best_idx = max(range(len(scores)), key=scores.__getitem__)
        child_score = scores[best_idx]
        accept_rng = np.random.default_rng((cfg.seed, r, ACCEPT_STREAM))
        accepted = mh_accept(child_score, parent_score, t, accept_rng)
        if accepted:
            parent, parent_score = children[best_idx], child_score
        if child_score > best_score:
            best_meta, best_score = children[best_idx], child_score
        trace.rows.append(
            TraceRow(r, t, child_score, accepted, parent_score, best_score, identity_count)
        )
    return SearchResult(best_meta, best_score, trace)
