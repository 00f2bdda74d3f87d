import math
import statistics

import numpy as np
import pytest

from densewire import graphs, mcmc, oracles, sampling
from densewire.errors import DisconnectedSpace, NonPositiveTemperature
from densewire.graphs import single_cell_template
from densewire.mcmc import ChainSpec, StateSpace


def _meta(n, edges):
    return single_cell_template(n).meta_from_edges([edges])


def two_state_space():
    # one slot apart, so a single flip moves between them
    states = [_meta(3, {(0, 1)}), _meta(3, {(0, 1), (0, 2)})]
    return StateSpace(tuple(states), (0.0, 1.0))


def test_stationary_two_state_closed_form():
    pi = mcmc.stationary_distribution(two_state_space(), 1.0)
    e = math.e
    np.testing.assert_allclose(pi, [1 / (1 + e), e / (1 + e)], atol=1e-12)
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)


def test_stationary_uniform_for_equal_performance():
    states = sampling.enumerate_space(single_cell_template(4))
    space = StateSpace(tuple(states), tuple(0.5 for _ in states))
    pi = mcmc.stationary_distribution(space, 0.7)
    np.testing.assert_allclose(pi, np.full(len(states), 1 / len(states)), atol=1e-12)


def test_stationary_high_temperature_limit():
    space = two_state_space()
    pi = mcmc.stationary_distribution(space, 1e6)
    np.testing.assert_allclose(pi, [0.5, 0.5], atol=1e-5)


def test_stationary_rejects_non_positive_temperature():
    with pytest.raises(NonPositiveTemperature):
        mcmc.stationary_distribution(two_state_space(), 0.0)
    with pytest.raises(NonPositiveTemperature):
        mcmc.stationary_distribution(two_state_space(), -1.0)


def test_state_space_from_template_scores_every_state():
    space = StateSpace.from_template(single_cell_template(4), oracles.SyntheticLandscapeA())
    assert len(space.states) == 48
    assert all(0.0 <= p <= 1.0 for p in space.perfs)


def test_state_space_rejects_duplicates():
    m = _meta(3, {(0, 1)})
    with pytest.raises(ValueError):
        StateSpace((m, m), (0.1, 0.2))


def test_chain_spec_validation():
    with pytest.raises(NonPositiveTemperature):
        ChainSpec(temperature=0.0, steps=10)
    with pytest.raises(ValueError):
        ChainSpec(temperature=1.0, steps=10, burn_in=10)


# ---------------------------------------------------------------------------
# chain simulation


def test_two_state_chain_approaches_closed_form():
    space = two_state_space()
    spec = ChainSpec(temperature=1.0, steps=100_000, burn_in=1_000, seed=0)
    freq = mcmc.run_metropolis_chain(space, spec)
    pi = mcmc.stationary_distribution(space, 1.0)
    assert mcmc.total_variation(freq, pi) < 0.02


def test_chain_is_deterministic():
    space = two_state_space()
    spec = ChainSpec(temperature=1.0, steps=5_000, burn_in=100, seed=3)
    a = mcmc.run_metropolis_chain(space, spec)
    b = mcmc.run_metropolis_chain(space, spec)
    np.testing.assert_array_equal(a, b)


def test_high_temperature_chain_is_near_uniform():
    states = sampling.enumerate_space(single_cell_template(4))
    rng = np.random.default_rng(0)
    space = StateSpace(tuple(states), tuple(rng.random() for _ in states))
    spec = ChainSpec(temperature=1e6, steps=200_000, burn_in=2_000, seed=1)
    freq = mcmc.run_metropolis_chain(space, spec)
    uniform = np.full(len(states), 1 / len(states))
    assert mcmc.total_variation(freq, uniform) < 0.05


def test_disconnected_space_detected():
    # two slots apart with no intermediate state present
    states = [_meta(3, {(0, 1)}), _meta(3, {(0, 1), (0, 2), (1, 2)})]
    space = StateSpace(tuple(states), (0.2, 0.8))
    spec = ChainSpec(temperature=1.0, steps=100, seed=0)
    with pytest.raises(DisconnectedSpace):
        mcmc.run_metropolis_chain(space, spec)


# ---------------------------------------------------------------------------
# exact diagnostics


def test_transition_matrix_is_stochastic_and_reversible():
    space = StateSpace.from_template(single_cell_template(4), oracles.SyntheticLandscapeA())
    p = mcmc.transition_matrix(space, 0.5)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert (p >= 0).all()
    pi = mcmc.stationary_distribution(space, 0.5)
    flow = pi[:, None] * p
    np.testing.assert_allclose(flow, flow.T, atol=1e-12)


def test_diagnostics_on_a_tiny_space():
    space = StateSpace.from_template(single_cell_template(4), oracles.SyntheticLandscapeA())
    spec = ChainSpec(temperature=0.5, steps=200_000, burn_in=2_000, seed=0)
    diag = mcmc.chain_diagnostics(space, spec)
    assert diag.stationary_gap < 1e-10
    assert diag.detailed_balance_gap < 1e-12
    assert 0.0 < diag.spectral_gap <= 1.0
    assert diag.tv_distance < 0.05
    assert diag.pi.shape == diag.frequencies.shape == (48,)


def test_single_state_space_diagnostics():
    space = StateSpace((_meta(3, {(0, 1)}),), (0.4,))
    spec = ChainSpec(temperature=1.0, steps=500, seed=0)
    diag = mcmc.chain_diagnostics(space, spec)
    assert diag.spectral_gap == 1.0
    assert diag.tv_distance == 0.0


def test_tv_distance_shrinks_with_more_steps():
    space = StateSpace.from_template(single_cell_template(4), oracles.SyntheticLandscapeA())
    pi = mcmc.stationary_distribution(space, 0.5)

    def tv_at(steps, seed):
        spec = ChainSpec(temperature=0.5, steps=steps, burn_in=steps // 100, seed=seed)
        return mcmc.total_variation(mcmc.run_metropolis_chain(space, spec), pi)

    short = statistics.median(tv_at(10_000, s) for s in range(3))
    long = statistics.median(tv_at(1_000_000, s) for s in range(3))
    assert long < short


def test_total_variation_basics():
    assert mcmc.total_variation(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0
    assert mcmc.total_variation(np.array([0.5, 0.5]), np.array([0.5, 0.5])) == 0.0
