"""Cell isomorphism: valid relabelings, canonical forms, and data augmentation.

Two cells are isomorphic when a bijection of their vertices fixes the input
and output, maps every intermediate to one with the same operator, and keeps
every edge upper-triangular (u < v). The canonical form is the
lexicographically smallest adjacency bit string reachable by such
permutations; the bit order groups each vertex's in-edges, which lets the
backtracking search prune on exact prefixes.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations
from typing import Sequence

import numpy as np

from .errors import InvalidPermutation, ShapeMismatch
from .graphs import CellGraph, MetaGraph

VertexPermutation = tuple  # maps old vertex index to new vertex index


def check_permutation(cell: CellGraph, perm: Sequence[int]) -> None:
    """Raise InvalidPermutation unless perm is valid for this cell."""
    n = cell.num_vertices
    p = tuple(int(x) for x in perm)
    if len(p) != n or sorted(p) != list(range(n)):
        raise InvalidPermutation("not a bijection on the cell's vertices")
    if p[0] != 0 or p[n - 1] != n - 1:
        raise InvalidPermutation("input and output vertices must stay fixed")
    for v in range(1, n - 1):
        if cell.ops[p[v] - 1] is not cell.ops[v - 1]:
            raise InvalidPermutation(f"vertex {v} maps across operator kinds")
    for u, v in cell.edges:
        if p[u] > p[v]:
            raise InvalidPermutation(f"edge ({u},{v}) loses its ordering under the map")


def apply_permutation(cell: CellGraph, perm: Sequence[int]) -> CellGraph:
    """Relabel a cell's vertices; operators stay attached to positions."""
    check_permutation(cell, perm)
    p = tuple(int(x) for x in perm)
    edges = frozenset((p[u], p[v]) for u, v in cell.edges)
    return CellGraph(cell.num_vertices, cell.ops, edges)


def permute_meta_cell(meta: MetaGraph, cell_index: int, perm: Sequence[int]) -> MetaGraph:
    """Meta-graph with one cell relabeled and all others untouched."""
    cells = list(meta.cells)
    cells[cell_index] = apply_permutation(cells[cell_index], perm)
    return MetaGraph(tuple(cells), meta.stages)


# ---------------------------------------------------------------------------
# canonical form
#
# The search assigns new positions 1..N-2 in order, choosing at each position
# an unused old vertex with the matching operator. Placing old vertex w at
# position j fixes the column of j's in-edges from already-placed positions,
# so the partial bit string is an exact prefix and branches whose prefix
# exceeds the best known string can be cut. Vertices with identical
# neighborhoods (twins) are interchangeable and only tried once per level.


def _adjacency_masks(cell: CellGraph) -> list[int]:
    nbr = [0] * cell.num_vertices
    for u, v in cell.edges:
        nbr[u] |= 1 << v
        nbr[v] |= 1 << u
    return nbr


def _op_groups(cell: CellGraph) -> dict:
    groups: dict = {}
    for v in cell.intermediates:
        groups.setdefault(cell.ops[v - 1], []).append(v)
    return groups


def _twin_classes(cell: CellGraph, nbr: list[int]) -> list[int]:
    """Union-find classes of interchangeable vertices.

    Two same-operator vertices are twins when they are not adjacent, have
    identical neighborhoods, and no shared neighbor sits between them in the
    vertex order (swapping them must preserve edge orientation).
    """
    n = cell.num_vertices
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for members in _op_groups(cell).values():
        for i, u in enumerate(members):
            for v in members[i + 1 :]:
                if nbr[u] >> v & 1:
                    continue
                mu = nbr[u] & ~(1 << v)
                mv = nbr[v] & ~(1 << u)
                if mu != mv:
                    continue
                lo, hi = (u, v) if u < v else (v, u)
                between = ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
                if mu & between:
                    continue
                parent[find(u)] = find(v)
    return [find(v) for v in range(n)]


def _pred_masks(cell: CellGraph) -> list[int]:
    """Per-vertex mask of smaller-indexed intermediate predecessors.

    An old edge (x, w) with x < w forces x to be placed before w, so a vertex
    is placeable only once every such predecessor already holds a position.
    """
    preds = [0] * cell.num_vertices
    for u, v in cell.edges:
        if u >= 1:
            preds[v] |= 1 << u
    return preds


def _canonical_columns(cell: CellGraph) -> tuple[int, ...]:
    n = cell.num_vertices
    nbr = _adjacency_masks(cell)
    preds = _pred_masks(cell)
    twin = _twin_classes(cell, nbr)
    ops = cell.ops
    last = n - 1
    group_members = {}
    for v in cell.intermediates:
        group_members.setdefault(ops[v - 1], []).append(v)
    slot_candidates = [None] + [group_members[ops[j - 1]] for j in range(1, last)]
    inv = [0] * n
    inv[last] = last
    cols = [0] * n
    best: list[int] | None = None

    def dfs(j: int, used: int) -> None:
        nonlocal best
        if j == last:
            col = 0
            m = nbr[last]
            for i in range(last):
                if m >> inv[i] & 1:
                    col |= 1 << (last - 1 - i)
            cols[last] = col
            candidate = cols[1:]
            if best is None or candidate < best:
                best = list(candidate)
            return
        options = []
        for w in slot_candidates[j]:
            bit = 1 << w
            if used & bit or preds[w] & ~used:
                continue
            m = nbr[w]
            col = (m & 1) << (j - 1)
            for i in range(1, j):
                if m >> inv[i] & 1:
                    col |= 1 << (j - 1 - i)
            options.append((col, w))
        options.sort()
        seen_twins = 0
        for col, w in options:
            tbit = 1 << twin[w]
            if seen_twins & tbit:
                continue
            seen_twins |= tbit
            if best is not None:
                cols[j] = col
                bad = False
                for i in range(1, j + 1):
                    ci, bi = cols[i], best[i - 1]
                    if ci != bi:
                        bad = ci > bi
                        break
                if bad:
                    # options are sorted, so once the prefix exceeds the best
                    # string every remaining sibling does too
                    break
            cols[j] = col
            inv[j] = w
            dfs(j + 1, used | (1 << w))

    dfs(1, 0)
    assert best is not None
    return tuple(best)


def _columns_to_bytes(n: int, cols: Sequence[int]) -> bytes:
    total_bits = n * (n - 1) // 2
    acc = 0
    for width, col in enumerate(cols, start=1):
        acc = (acc << width) | col
    return acc.to_bytes((total_bits + 7) // 8 or 1, "big")


@lru_cache(maxsize=1 << 16)
def canonical_form(cell: CellGraph) -> bytes:
    """Packed canonical adjacency bits; equal iff two cells are isomorphic."""
    return _columns_to_bytes(cell.num_vertices, _canonical_columns(cell))


def canonical_key(meta: MetaGraph) -> bytes:
    """Concatenated per-cell canonical forms."""
    return b"".join(canonical_form(c) for c in meta.cells)


def brute_force_canonical(cell: CellGraph) -> bytes:
    """Reference minimum over every valid permutation. Exponential; tests only."""
    n = cell.num_vertices
    groups = _op_groups(cell)
    kinds = list(groups)
    best: list[int] | None = None
    for assignment in _group_permutations([groups[k] for k in kinds]):
        p = list(range(n))
        for kind_members, images in zip((groups[k] for k in kinds), assignment):
            for old, new in zip(kind_members, images):
                p[old] = new
        if any(p[u] > p[v] for u, v in cell.edges):
            continue
        cols = _permuted_columns(cell, p)
        if best is None or cols < best:
            best = cols
    assert best is not None
    return _columns_to_bytes(n, best)


def _group_permutations(groups: list[list[int]]):
    if not groups:
        yield ()
        return
    head, *rest = groups
    for head_perm in permutations(head):
        for rest_perm in _group_permutations(rest):
            yield (head_perm, *rest_perm)


def _permuted_columns(cell: CellGraph, p: Sequence[int]) -> list[int]:
    n = cell.num_vertices
    edges = {(p[u], p[v]) for u, v in cell.edges}
    cols = []
    for b in range(1, n):
        col = 0
        for a in range(b):
            if (a, b) in edges:
                col |= 1 << (b - 1 - a)
        cols.append(col)
    return cols


# ---------------------------------------------------------------------------
# orbit enumeration


def valid_permutations(cell: CellGraph, cap: int = 512) -> list[tuple[int, ...]]:
    """Valid permutations of one cell in deterministic order, up to cap."""
    n = cell.num_vertices
    preds = _pred_masks(cell)
    ops = cell.ops
    last = n - 1
    found: list[tuple[int, ...]] = []
    inv = [0] * n
    inv[last] = last

    def dfs(j: int, used: int) -> bool:
        if len(found) >= cap:
            return True
        if j == last:
            p = [0] * n
            for pos in range(n):
                p[inv[pos]] = pos
            found.append(tuple(p))
            return len(found) >= cap
        want = ops[j - 1]
        for w in cell.intermediates:
            bit = 1 << w
            if used & bit or ops[w - 1] is not want or preds[w] & ~used:
                continue
            inv[j] = w
            if dfs(j + 1, used | bit):
                return True
        return False

    dfs(1, 0)
    return found


def orbit_graphs(cell: CellGraph, cap: int = 512) -> list[CellGraph]:
    """Distinct isomorphic images of a cell (including itself), up to cap."""
    seen = {cell.edges: cell}
    for p in valid_permutations(cell, cap=cap * 8):
        edges = frozenset((p[u], p[v]) for u, v in cell.edges)
        if edges not in seen:
            seen[edges] = CellGraph(cell.num_vertices, cell.ops, edges)
            if len(seen) >= cap:
                break
    return list(seen.values())


def is_isomorphic(a: MetaGraph, b: MetaGraph) -> bool:
    """Per-cell canonical form equality; shapes must match."""
    if len(a.cells) != len(b.cells):
        raise ShapeMismatch("meta-graphs have different stage counts")
    for ca, cb in zip(a.cells, b.cells):
        if ca.num_vertices != cb.num_vertices or ca.ops != cb.ops:
            raise ShapeMismatch("cells differ in vertex count or operator template")
    return all(canonical_form(ca) == canonical_form(cb) for ca, cb in zip(a.cells, b.cells))


def augment(
    meta: MetaGraph, k: int, rng: np.random.Generator
) -> list[MetaGraph]:
    """Up to k distinct isomorphic variants, each relabeling one random cell.

    Variants are deduplicated against the original and each other by their
    exact edge sets; small orbits therefore yield fewer than k variants.
    """
    if k <= 0:
        return []
    orbits = [orbit_graphs(c) for c in meta.cells]
    variants: list[MetaGraph] = []
    seen = {meta.cells}
    attempts = 0
    max_attempts = 20 * k + 20
    while len(variants) < k and attempts < max_attempts:
        attempts += 1
        ci = int(rng.integers(len(meta.cells)))
        orbit = orbits[ci]
        if len(orbit) <= 1:
            continue
        image = orbit[int(rng.integers(len(orbit)))]
        cells = list(meta.cells)
        cells[ci] = image
        key = tuple(cells)
        if key in seen:
            continue
        seen.add(key)
        variants.append(MetaGraph(key, meta.stages))
    return variants
