"""Short proxy training of a materialized network on a CIFAR-10 subset."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from . import data as datalib
from .documents import MetaSpec
from .network import build_network


@dataclass(frozen=True)
class EvalBudget:
    epochs: int = 1
    data_fraction: float = 0.02
    batch_size: int = 128
    learning_rate: float = 0.1
    schedule: str = "cosine"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs {self.epochs} must be >= 1")
        if not 0.0 < self.data_fraction <= 1.0:
            raise ValueError(f"data_fraction {self.data_fraction} outside (0, 1]")
        if self.batch_size < 1:
            raise ValueError(f"batch_size {self.batch_size} must be >= 1")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate {self.learning_rate} must be > 0")
        if self.schedule != "cosine":
            raise ValueError(f"unknown schedule {self.schedule!r}")


@dataclass(frozen=True)
class EvalResult:
    score: float
    diverged: bool


def _accuracy(net: nn.Module, x: torch.Tensor, y: torch.Tensor,
              batch_size: int) -> float:
    net.eval()
    hits = 0
    with torch.no_grad():
        for i in range(0, len(x), batch_size):
            logits = net(x[i:i + batch_size])
            hits += int((logits.argmax(dim=1) == y[i:i + batch_size]).sum())
    return hits / len(x)


def evaluate_once(
    meta: MetaSpec,
    budget: EvalBudget,
    seed: int,
    data_dir,
    device: str = "cpu",
) -> EvalResult:
    """Trains on the seeded stratified subset and returns held-out accuracy."""
    train_x, train_y, test_x, test_y = datalib.load_cifar10(data_dir)
    picked = datalib.stratified_subset(train_y, budget.data_fraction, (seed, 0))
    dev = torch.device(device)

    x = torch.from_numpy(datalib.normalize(train_x[picked])).to(dev)
    y = torch.from_numpy(train_y[picked]).to(dev)
    tx = torch.from_numpy(datalib.normalize(test_x)).to(dev)
    ty = torch.from_numpy(test_y).to(dev)

    torch.manual_seed(seed)
    net = build_network(meta).to(dev)
    opt = torch.optim.SGD(net.parameters(), lr=budget.learning_rate,
                          momentum=0.9)
    loss_fn = nn.CrossEntropyLoss()

    steps_per_epoch = max(1, math.ceil(len(x) / budget.batch_size))
    total_steps = budget.epochs * steps_per_epoch
    step = 0
    diverged = False
    for epoch in range(budget.epochs):
        order = np.random.default_rng((seed, 1, epoch)).permutation(len(x))
        net.train()
        for i in range(0, len(order), budget.batch_size):
            batch = torch.from_numpy(order[i:i + budget.batch_size]).to(dev)
            lr = budget.learning_rate * (1.0 + math.cos(math.pi * step / total_steps)) / 2.0
            for group in opt.param_groups:
                group["lr"] = lr
            opt.zero_grad()
            loss = loss_fn(net(x[batch]), y[batch])
            if not torch.isfinite(loss):
                diverged = True
                break
            loss.backward()
            opt.step()
            step += 1
        if diverged:
            break
    if diverged:
        print("warning: training diverged, scoring the last finite state",
              file=sys.stderr)
    return EvalResult(_accuracy(net, tx, ty, budget.batch_size), diverged)
