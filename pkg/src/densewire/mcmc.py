"""Exact-chain verification on enumerable spaces.

The proposal flips one uniformly chosen edge slot; flips that leave the
valid space are taken as self-loops. Proposing j from i and i from j both
use the same slot, so the kernel is exactly symmetric and the Metropolis
chain has the Boltzmann stationary law over performance values.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import graphs, oracles, sampling
from .errors import DisconnectedSpace, NonPositiveTemperature
from .graphs import MetaGraph, SpaceTemplate


@dataclass
class StateSpace:
    """Every valid meta-graph of a tiny template plus its performance."""

    states: list[MetaGraph]
    perfs: np.ndarray

    def __post_init__(self):
        self.perfs = np.asarray(self.perfs, dtype=np.float64)
        if len(self.states) != self.perfs.shape[0]:
            raise ValueError("one performance value per state required")
        if not np.isfinite(self.perfs).all():
            raise ValueError("performances must be finite")
        keys = {graphs.encode(m).tobytes() for m in self.states}
        if len(keys) != len(self.states):
            raise ValueError("states must be pairwise distinct under encode")

    def __len__(self) -> int:
        return len(self.states)

    @classmethod
    def from_template(cls, template: SpaceTemplate, oracle) -> "StateSpace":
        states = sampling.enumerate_space(template)
        perfs = np.array([oracles.evaluate(oracle, m) for m in states])
        return cls(states, perfs)


@dataclass
class ChainSpec:
    temperature: float
    steps: int
    burn_in: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise NonPositiveTemperature(f"temperature must be > 0, got {self.temperature}")
        if self.steps < 1 or not 0 <= self.burn_in < self.steps:
            raise ValueError("need steps >= 1 and 0 <= burn_in < steps")


@dataclass
class ChainDiagnostics:
    tv_distance: float
    spectral_gap: float
    stationary_gap: float
    detailed_balance_gap: float
    pi: np.ndarray
    frequencies: np.ndarray


def stationary_distribution(space: StateSpace, temperature: float) -> np.ndarray:
    """Boltzmann law over performances, max-shifted before exponentiation."""
    if temperature <= 0.0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature}")
    logits = space.perfs / temperature
    weights = np.exp(logits - logits.max())
    return weights / weights.sum()


def _slot_count(meta: MetaGraph) -> int:
    return sum(len(graphs.edge_slots(c.num_vertices)) for c in meta.cells)


def _flip_slot(meta: MetaGraph, slot: int) -> MetaGraph:
    for idx, cell in enumerate(meta.cells):
        slots = graphs.edge_slots(cell.num_vertices)
        if slot < len(slots):
            edge = slots[slot]
            edges = set(cell.edges)
            if edge in edges:
                edges.remove(edge)
            else:
                edges.add(edge)
            cells = list(meta.cells)
            cells[idx] = graphs.CellGraph(cell.num_vertices, cell.ops, frozenset(edges))
            return MetaGraph(tuple(cells), meta.stages)
        slot -= len(slots)
    raise IndexError("slot out of range")


def neighbor_table(space: StateSpace) -> np.ndarray:
    """(n_states, n_slots) array: resulting state index, or self on invalid."""
    index = {graphs.encode(m).tobytes(): i for i, m in enumerate(space.states)}
    n_slots = _slot_count(space.states[0])
    table = np.empty((len(space), n_slots), dtype=np.int64)
    for i, meta in enumerate(space.states):
        for s in range(n_slots):
            flipped = _flip_slot(meta, s)
            table[i, s] = index.get(graphs.encode(flipped).tobytes(), i)
    return table


def _check_connected(table: np.ndarray) -> None:
    n = table.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in table[i]:
            if not seen[j]:
                seen[j] = True
                queue.append(int(j))
    if not seen.all():
        raise DisconnectedSpace(
            f"single-flip proposal reaches only {int(seen.sum())} of {n} states"
        )


def _acceptance_table(space: StateSpace, table: np.ndarray, temperature: float) -> np.ndarray:
    """min(1, exp(dPerf/T)) per (state, slot); 1.0 on self-loops."""
    delta = space.perfs[table] - space.perfs[:, None]
    return np.minimum(1.0, np.exp(delta / temperature))


def run_metropolis_chain(space: StateSpace, spec: ChainSpec) -> np.ndarray:
    """Simulate the chain; returns post-burn-in visit frequencies."""
    table = neighbor_table(space)
    _check_connected(table)
    accept = _acceptance_table(space, table, spec.temperature)
    rng = np.random.default_rng(spec.seed)
    n, n_slots = table.shape
    state = int(rng.integers(n))
    slots = rng.integers(n_slots, size=spec.steps).tolist()
    draws = rng.random(spec.steps).tolist()
    nbr = table.tolist()
    acc = accept.tolist()
    counts = [0] * n
    burn = spec.burn_in
    for step in range(spec.steps):
        s = slots[step]
        if draws[step] < acc[state][s]:
            state = nbr[state][s]
        if step >= burn:
            counts[state] += 1
    freqs = np.array(counts, dtype=np.float64)
    return freqs / freqs.sum()


def transition_matrix(space: StateSpace, temperature: float) -> np.ndarray:
    """Exact Metropolis kernel: off-diagonal q*A, diagonal completion."""
    table = neighbor_table(space)
    _check_connected(table)
    accept = _acceptance_table(space, table, temperature)
    n, n_slots = table.shape
    p = np.zeros((n, n))
    q = 1.0 / n_slots
    for i in range(n):
        for s in range(n_slots):
            j = table[i, s]
            if j != i:
                p[i, j] += q * accept[i, s]
    p[np.arange(n), np.arange(n)] = 1.0 - p.sum(axis=1)
    return p


def total_variation(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(a) - np.asarray(b)).sum())


def chain_diagnostics(space: StateSpace, spec: ChainSpec) -> ChainDiagnostics:
    """Exact stationarity, detailed balance, spectral gap, and empirical TV."""
    if len(space) > 4096:
        raise ValueError("diagnostics need |space| <= 4096")
    pi = stationary_distribution(space, spec.temperature)
    p = transition_matrix(space, spec.temperature)
    stationary_gap = float(np.abs(pi @ p - pi).max())
    flow = pi[:, None] * p
    detailed_balance_gap = float(np.abs(flow - flow.T).max())
    if len(space) == 1:
        spectral_gap = 1.0
    else:
        # pi-reversible P is similar to a symmetric matrix via D^(1/2).
        root = np.sqrt(pi)
        sym = root[:, None] * p / root[None, :]
        eigvals = np.linalg.eigvalsh((sym + sym.T) / 2.0)
        moduli = np.sort(np.abs(eigvals))[::-1]
        spectral_gap = float(1.0 - moduli[1])
    freqs = run_metropolis_chain(space, spec)
    return ChainDiagnostics(
        tv_distance=total_variation(freqs, pi),
        spectral_gap=spectral_gap,
        stationary_gap=stationary_gap,
        detailed_balance_gap=detailed_balance_gap,
        pi=pi,
        frequencies=freqs,
    )
