"""Random sampling, exhaustive enumeration, and dataset assembly."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import graphs, isomorphism, predictor
from .errors import SamplingExhausted, SpaceTooLarge
from .graphs import CellGraph, MetaGraph, SpaceTemplate
from .store import ArchRecord

EDGE_PROBABILITY = 0.25
MAX_CELL_REDRAWS = 64
ENUMERATION_BIT_LIMIT = 20


def sample_cell(template_cell: graphs.CellTemplate, rng: np.random.Generator) -> CellGraph:
    """One valid cell with each edge slot drawn independently."""
    slots = graphs.edge_slots(template_cell.num_vertices)
    for _ in range(MAX_CELL_REDRAWS):
        mask = rng.random(len(slots)) < EDGE_PROBABILITY
        cell = CellGraph(
            template_cell.num_vertices,
            template_cell.ops,
            frozenset(s for s, m in zip(slots, mask) if m),
        )
        if graphs.is_valid_cell(cell):
            return cell
    raise SamplingExhausted(
        f"no valid {template_cell.num_vertices}-vertex cell in {MAX_CELL_REDRAWS} draws"
    )


def sample_meta(template: SpaceTemplate, rng: np.random.Generator) -> MetaGraph:
    cells = tuple(sample_cell(t, rng) for t in template.cells)
    return MetaGraph(cells, template.stages)


def sample_random(template: SpaceTemplate, n: int, seed: int) -> list[MetaGraph]:
    """n meta-graphs with pairwise distinct canonical keys."""
    rng = np.random.default_rng(seed)
    out: list[MetaGraph] = []
    seen: set[bytes] = set()
    stale = 0
    while len(out) < n:
        meta = sample_meta(template, rng)
        key = isomorphism.canonical_key(meta)
        if key in seen:
            stale += 1
            if stale >= 4096:
                raise SamplingExhausted(
                    f"drew {stale} consecutive duplicates after {len(out)} of {n} samples; "
                    "the space has too few isomorphism classes"
                )
            continue
        stale = 0
        seen.add(key)
        out.append(meta)
    return out


def enumerate_space(
    template: SpaceTemplate, group_by_canonical: bool = False
) -> list[MetaGraph] | dict[bytes, list[MetaGraph]]:
    """Every valid meta-graph of a single-cell template.

    Only desk-scale spaces are supported: one cell and at most 2^20 edge
    subsets. With ``group_by_canonical`` the result maps canonical keys to
    their isomorphism classes.
    """
    if len(template.cells) != 1:
        raise SpaceTooLarge("enumeration supports single-cell templates only")
    tcell = template.cells[0]
    slots = graphs.edge_slots(tcell.num_vertices)
    if len(slots) > ENUMERATION_BIT_LIMIT:
        raise SpaceTooLarge(
            f"{tcell.num_vertices} vertices give 2^{len(slots)} subsets; "
            f"the limit is 2^{ENUMERATION_BIT_LIMIT}"
        )
    metas = []
    for mask in range(1 << len(slots)):
        edges = frozenset(s for i, s in enumerate(slots) if mask >> i & 1)
        cell = CellGraph(tcell.num_vertices, tcell.ops, edges)
        if graphs.is_valid_cell(cell):
            metas.append(MetaGraph((cell,), template.stages))
    if not group_by_canonical:
        return metas
    classes: dict[bytes, list[MetaGraph]] = {}
    for meta in metas:
        classes.setdefault(isomorphism.canonical_key(meta), []).append(meta)
    return classes


def build_dataset(
    records: Sequence[ArchRecord],
    augment_factor: int = 11,
    split_seed: int = 0,
) -> tuple[predictor.Dataset, predictor.Dataset]:
    """Train/test datasets split 85/15 by isomorphism class.

    Classes are assigned to a side as whole units, so no test record is
    isomorphic to any training record. Augmentation (stored augmented records
    plus ``augment_factor`` fresh variants per measured record) lands on the
    training side only; the test side keeps measured records untouched.
    """
    if not records:
        raise ValueError("no records to split")
    by_class: dict[str, list[ArchRecord]] = {}
    for rec in records:
        by_class.setdefault(rec.canon, []).append(rec)
    class_keys = sorted(by_class)
    rng = np.random.default_rng(split_seed)
    rng.shuffle(class_keys)
    n_test = max(1, int(round(0.15 * len(class_keys))))
    if n_test >= len(class_keys):
        n_test = len(class_keys) - 1
    test_keys = set(class_keys[:n_test])

    train_x, train_y, test_x, test_y = [], [], [], []
    train_classes: set[bytes] = set()
    test_classes: set[bytes] = set()
    for key in class_keys:
        for rec in by_class[key]:
            if key in test_keys:
                if rec.source == "measured":
                    test_x.append(graphs.encode(rec.meta))
                    test_y.append(rec.perf)
                    test_classes.add(isomorphism.canonical_key(rec.meta))
                continue
            train_x.append(graphs.encode(rec.meta))
            train_y.append(rec.perf)
            train_classes.add(isomorphism.canonical_key(rec.meta))
            if rec.source == "measured" and augment_factor > 0:
                arng = np.random.default_rng((split_seed, _class_tag(key)))
                for variant in isomorphism.augment(rec.meta, augment_factor, arng):
                    train_x.append(graphs.encode(variant))
                    train_y.append(rec.perf)
                    train_classes.add(isomorphism.canonical_key(variant))

    # recomputed from the included graphs, not from the stored labels
    assert not train_classes & test_classes, "isomorphism class leaked across the split"
    train = predictor.Dataset(np.array(train_x), np.array(train_y), split="train")
    test = predictor.Dataset(np.array(test_x), np.array(test_y), split="test")
    return train, test


def _class_tag(canon_hex: str) -> int:
    return int(canon_hex[:15] or "0", 16)
