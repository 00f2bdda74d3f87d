"""Small-scale smoke runs of the study drivers; the full-size runs live in
test_acceptance.py."""

from densewire import experiments
from densewire.graphs import single_cell_template


def test_gi_study_produces_one_row_per_seed():
    cfg = experiments.GIStudyConfig(
        template=single_cell_template(10),
        n_samples=40,
        augment_factor=3,
        seeds=(0, 1),
        epochs=20,
        batch_size=16,
    )
    result = experiments.gi_augmentation_study(cfg)
    assert [r.seed for r in result.rows] == [0, 1]
    for row in result.rows:
        assert -1.0 <= row.tau_plain <= 1.0
        assert -1.0 <= row.tau_augmented <= 1.0
        assert row.improvement == row.tau_augmented - row.tau_plain


def test_gi_study_medians_come_from_rows():
    cfg = experiments.GIStudyConfig(
        template=single_cell_template(10),
        n_samples=30,
        augment_factor=2,
        seeds=(0, 1, 2),
        epochs=10,
        batch_size=16,
    )
    result = experiments.gi_augmentation_study(cfg)
    taus = sorted(r.tau_augmented for r in result.rows)
    assert result.median_augmented == taus[1]


def test_gi_study_is_deterministic():
    cfg = experiments.GIStudyConfig(
        template=single_cell_template(8),
        n_samples=25,
        augment_factor=2,
        seeds=(0,),
        epochs=10,
        batch_size=8,
    )
    a = experiments.gi_augmentation_study(cfg)
    b = experiments.gi_augmentation_study(cfg)
    assert a.rows == b.rows


def test_strategy_comparison_runs_each_strategy():
    cfg = experiments.StrategyComparisonConfig(
        template=single_cell_template(6),
        strategies=("mh-es", "rs"),
        rounds=15,
        population=4,
        init_population=8,
        seeds=(0, 1, 2),
    )
    result = experiments.strategy_comparison(cfg)
    assert set(result.scores) == {"mh-es", "rs"}
    assert all(len(v) == 3 for v in result.scores.values())
    assert all(0.0 <= s <= 1.0 for v in result.scores.values() for s in v)
    assert result.median("rs") == sorted(result.scores["rs"])[1]


def test_global_optimum_recovery_on_a_trivial_space():
    # N=4 has 48 states; a short run should find the top one every time
    result = experiments.global_optimum_recovery(
        template=single_cell_template(4),
        rounds=100,
        population=4,
        init_population=16,
        seeds=(0, 1, 2),
    )
    assert result.total == 3
    assert result.hits == 3
    assert all(s <= result.optimum for s in result.best_scores)
