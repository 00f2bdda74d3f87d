"""Desk-scale studies: augmentation benefit, strategy comparison, recovery.

The augmentation study measures ranking transfer through isomorphic twins.
On a landscape keyed purely by isomorphism class, a class-disjoint test
split is unlearnable by construction, so the study holds out a slice of
the measured graphs and lets the augmented arm (only) train on relabeled
variants of every class. The plain arm keeps measured graphs alone.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np

from . import graphs, isomorphism, oracles, predictor, sampling, search
from .errors import DegenerateVariance
from .graphs import SpaceTemplate

SAMPLE_STREAM = 11
SPLIT_STREAM = 13
AUGMENT_STREAM = 17


@dataclass
class GIStudyConfig:
    template: SpaceTemplate
    n_samples: int = 200
    augment_factor: int = 8
    test_fraction: float = 0.15
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    salt: int = 0
    epochs: int = 150
    batch_size: int = 128
    learning_rate: float = 0.1
    weight_decay: float = 1e-4


@dataclass
class GIStudyRow:
    seed: int
    tau_plain: float
    tau_augmented: float

    @property
    def improvement(self) -> float:
        return self.tau_augmented - self.tau_plain


@dataclass
class GIStudyResult:
    rows: list[GIStudyRow] = field(default_factory=list)

    @property
    def median_plain(self) -> float:
        return statistics.median(r.tau_plain for r in self.rows)

    @property
    def median_augmented(self) -> float:
        return statistics.median(r.tau_augmented for r in self.rows)

    @property
    def median_improvement(self) -> float:
        return statistics.median(r.improvement for r in self.rows)


def _tau_or_zero(model, x, y) -> float:
    try:
        return predictor.ranking_metrics(model.forward(x), y).kendall
    except DegenerateVariance:
        return 0.0


def gi_augmentation_study(cfg: GIStudyConfig) -> GIStudyResult:
    """Twin-transfer comparison: measured-only vs measured+variants training.

    Test graphs are measured originals; the augmented arm's extra training
    rows are relabelings of every measured graph (never encoding-identical
    to any original). Both arms share the test split, the net architecture,
    and the training seed.
    """
    oracle = oracles.SyntheticLandscapeA(salt=cfg.salt)
    result = GIStudyResult()
    for seed in cfg.seeds:
        metas = sampling.sample_random(cfg.template, cfg.n_samples, seed=(seed, SAMPLE_STREAM))
        perfs = [oracles.evaluate(oracle, m) for m in metas]

        split_rng = np.random.default_rng((seed, SPLIT_STREAM))
        order = split_rng.permutation(cfg.n_samples)
        n_test = max(1, round(cfg.test_fraction * cfg.n_samples))
        test_idx = set(order[:n_test].tolist())

        x_test = np.stack([graphs.encode(metas[i]) for i in sorted(test_idx)])
        y_test = np.array([perfs[i] for i in sorted(test_idx)])

        train_x = [graphs.encode(metas[i]) for i in range(cfg.n_samples) if i not in test_idx]
        train_y = [perfs[i] for i in range(cfg.n_samples) if i not in test_idx]
        plain = predictor.Dataset(np.stack(train_x), np.array(train_y))

        aug_x, aug_y = list(train_x), list(train_y)
        for i, meta in enumerate(metas):
            rng = np.random.default_rng((seed, AUGMENT_STREAM, i))
            for variant in isomorphism.augment(meta, cfg.augment_factor, rng):
                aug_x.append(graphs.encode(variant))
                aug_y.append(perfs[i])
        augmented = predictor.Dataset(np.stack(aug_x), np.array(aug_y))

        train_cfg = predictor.TrainConfig(
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate,
            weight_decay=cfg.weight_decay,
            seed=seed,
        )
        model_plain = predictor.train(plain, train_cfg)
        model_aug = predictor.train(augmented, train_cfg)
        result.rows.append(
            GIStudyRow(
                seed=seed,
                tau_plain=_tau_or_zero(model_plain, x_test, y_test),
                tau_augmented=_tau_or_zero(model_aug, x_test, y_test),
            )
        )
    return result


@dataclass
class StrategyComparisonConfig:
    template: SpaceTemplate
    strategies: tuple[str, ...] = ("mh-es", "es", "rs")
    rounds: int = 500
    population: int = 32
    init_population: int = 256
    t0: float = 0.3
    seeds: tuple[int, ...] = tuple(range(10))
    salt: int = 0


@dataclass
class StrategyComparisonResult:
    scores: dict[str, list[float]]

    def median(self, strategy: str) -> float:
        return statistics.median(self.scores[strategy])


def strategy_comparison(cfg: StrategyComparisonConfig) -> StrategyComparisonResult:
    """Best-ever scores per strategy on the rugged landscape, equal budget."""
    oracle = oracles.SyntheticLandscapeB(salt=cfg.salt)
    scores: dict[str, list[float]] = {s: [] for s in cfg.strategies}
    for strategy in cfg.strategies:
        for seed in cfg.seeds:
            run_cfg = search.SearchConfig(
                rounds=cfg.rounds,
                population=cfg.population,
                init_population=cfg.init_population,
                t0=cfg.t0,
                seed=seed,
                strategy=strategy,
            )
            scores[strategy].append(search.run_search(run_cfg, oracle, cfg.template).best_score)
    return StrategyComparisonResult(scores)


@dataclass
class RecoveryResult:
    hits: int
    total: int
    optimum: float
    best_scores: list[float]


def global_optimum_recovery(
    template: SpaceTemplate,
    rounds: int = 2000,
    population: int = 8,
    init_population: int = 64,
    t0: float = 0.05,
    seeds: tuple[int, ...] = tuple(range(10)),
    salt: int = 0,
) -> RecoveryResult:
    """Fraction of seeds whose best-ever equals the enumerated optimum."""
    oracle = oracles.SyntheticLandscapeB(salt=salt)
    states = sampling.enumerate_space(template)
    optimum = max(oracles.evaluate(oracle, m) for m in states)
    best_scores = []
    for seed in seeds:
        cfg = search.SearchConfig(
            rounds=rounds,
            population=population,
            init_population=init_population,
            t0=t0,
            seed=seed,
            strategy="mh-es",
        )
        best_scores.append(search.run_search(cfg, oracle, template).best_score)
    hits = sum(1 for s in best_scores if s == optimum)
    return RecoveryResult(hits, len(seeds), optimum, best_scores)
