"""Materializes a runnable CNN from a parsed meta-graph document.

Layout: a fixed 3x3 conv stem, then per stage `repeats` copies of the
stage's cell. Every cell instance receives exactly `base_channels` inputs;
fixed 1x1 projections restore that width between instances (stride 1
within a stage, stride 2 into the next stage). Searched parameters live
under the `cells` attribute only, so the analytic cross-check can count
them in isolation from the stem/projections/head.
"""

from __future__ import annotations

import torch
from torch import nn

from .documents import (
    KERNEL_SIZE,
    CellSpec,
    MetaSpec,
    StageSpec,
    active_set,
    channel_plan,
)
from .errors import UnrealizableGraph


class VertexBlock(nn.Module):
    """Conv/BN/ReLU for one intermediate vertex."""

    def __init__(self, op: str, in_channels: int, out_channels: int):
        super().__init__()
        if op == "conv1x1":
            self.conv = nn.Conv2d(in_channels, out_channels, 1, bias=False)
        else:
            k = KERNEL_SIZE[op]
            if out_channels != in_channels:
                raise UnrealizableGraph(f"depthwise {op} cannot change width")
            self.conv = nn.Conv2d(
                in_channels, in_channels, k,
                padding=k // 2, groups=in_channels, bias=False,
            )
        self.bn = nn.BatchNorm2d(out_channels)
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        return self.act(self.bn(self.conv(x)))


class CellModule(nn.Module):
    """One cell instance: concatenate active predecessors per vertex, apply
    the vertex operator, concatenate the feeders as the output."""

    def __init__(self, cell: CellSpec, stage: StageSpec):
        super().__init__()
        plan = channel_plan(cell, stage.base_channels, stage.base_channels)
        self.active = tuple(sorted(active_set(cell)))
        keep = set(self.active) | {0}
        self.predecessors = {
            v: tuple(u for u, w in cell.edges if w == v and u in keep)
            for v in self.active
        }
        self.feeders = plan.feeders
        self.output_width = plan.output_width
        self.blocks = nn.ModuleDict({
            str(v): VertexBlock(
                cell.ops[v - 1], plan.in_channels[v], plan.out_channels[v]
            )
            for v in self.active
        })

    def forward(self, x):
        outs = {0: x}
        for v in self.active:
            preds = self.predecessors[v]
            feed = outs[preds[0]] if len(preds) == 1 else torch.cat(
                [outs[u] for u in preds], dim=1
            )
            outs[v] = self.blocks[str(v)](feed)
        if len(self.feeders) == 1:
            return outs[self.feeders[0]]
        return torch.cat([outs[v] for v in self.feeders], dim=1)


class _Projection(nn.Module):
    """Fixed 1x1 conv restoring the stage input width; not searched."""

    def __init__(self, in_channels: int, out_channels: int, stride: int):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, 1,
                              stride=stride, bias=False)
        self.bn = nn.BatchNorm2d(out_channels)
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        return self.act(self.bn(self.conv(x)))


class EvalNetwork(nn.Module):
    def __init__(self, meta: MetaSpec, num_classes: int = 10):
        super().__init__()
        first = meta.stages[0]
        self.stem = nn.Sequential(
            nn.Conv2d(3, first.base_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(first.base_channels),
            nn.ReLU(inplace=True),
        )
        cells: list[CellModule] = []
        joins: list[nn.Module] = []
        for si, (cell, stage) in enumerate(zip(meta.cells, meta.stages)):
            for r in range(stage.repeats):
                module = CellModule(cell, stage)
                cells.append(module)
                last_of_stage = r == stage.repeats - 1
                last_overall = last_of_stage and si == len(meta.stages) - 1
                if last_overall:
                    continue
                if last_of_stage:
                    target = meta.stages[si + 1].base_channels
                    joins.append(_Projection(module.output_width, target, 2))
                else:
                    joins.append(
                        _Projection(module.output_width, stage.base_channels, 1)
                    )
        self.cells = nn.ModuleList(cells)
        self.joins = nn.ModuleList(joins)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Linear(cells[-1].output_width, num_classes)

    def forward(self, x):
        x = self.stem(x)
        for i, cell in enumerate(self.cells):
            x = cell(x)
            if i < len(self.joins):
                x = self.joins[i](x)
        x = self.pool(x).flatten(1)
        return self.head(x)


def build_network(meta: MetaSpec, num_classes: int = 10) -> EvalNetwork:
    return EvalNetwork(meta, num_classes)


def searched_parameter_count(net: EvalNetwork) -> int:
    """Parameters of the cell instances only; stem, projections, and the
    classifier head are fixed blocks outside the searched space."""
    return sum(p.numel() for p in net.cells.parameters())
