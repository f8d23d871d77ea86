import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coopmech.agents.kinds import AgentKind
from coopmech.mechanisms.config import MechanismConfig
from coopmech.metrics import (
    PopulationState,
    ReplicatorConfig,
    fitness_metric,
    fitness_vector,
    mean_metric,
    population_fitness,
    replicator_step,
)
from coopmech.tournament import MetagameTensor, TournamentConfig, run_tournament

from oracles import replicator_loops


def tensor(means, stderr=None, counts=None):
    means = np.asarray(means, dtype=float)
    return MetagameTensor.from_array([f"k{i}" for i in range(means.shape[0])], means, stderr, counts)


def scripted(roster, game="prisoners", variant="no_mechanism"):
    c = TournamentConfig(game, MechanismConfig(variant), tuple(AgentKind.parse(r) for r in roster), repeats=1)
    return run_tournament(c).tensor()


PD_AD_AC = [[[0, 0], [2, -1]], [[-1, 2], [1, 1]]]


def test_uniform_defect_cooperate_fitness():
    t = scripted(["AlwaysDefect", "AlwaysCooperate"])
    pop = PopulationState.uniform(2)
    assert population_fitness(t, pop, "AlwaysDefect") == 1.0
    assert population_fitness(t, pop, "AlwaysCooperate") == 0.0
    values, se = mean_metric(t)
    assert values.tolist() == [1.0, 0.0] and se.tolist() == [0.0, 0.0]


def test_point_mass_gives_self_play():
    t = tensor(PD_AD_AC)
    assert fitness_vector(t, PopulationState(np.array([0.0, 1.0])))[1] == 1.0
    assert fitness_vector(t, PopulationState(np.array([1.0, 0.0])))[0] == 0.0


def test_asymmetric_seats_average():
    # kind 0 earns 4 in seat 0 and 0 in seat 1 against itself
    t = tensor([[[4, 0]]])
    assert population_fitness(t, PopulationState.uniform(1), "k0") == 2.0


def test_population_validation():
    with pytest.raises(ValueError):
        PopulationState(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        PopulationState(np.array([-0.1, 1.1]))
    with pytest.raises(ValueError):
        PopulationState(np.array([]))
    with pytest.raises(ValueError):
        fitness_vector(tensor(PD_AD_AC), PopulationState.uniform(3))
    with pytest.raises(ValueError):
        ReplicatorConfig(steps=0)
    with pytest.raises(ValueError):
        ReplicatorConfig(learning_rate=0.0)


def test_incomplete_tensor_is_refused():
    t = tensor(PD_AD_AC, counts=np.array([[1, 0], [1, 1]]))
    with pytest.raises(ValueError):
        fitness_metric(t)
    with pytest.raises(ValueError):
        mean_metric(t)


def test_replicator_step_examples():
    even = tensor([[[1, 1], [1, 1]], [[1, 1], [1, 1]]])
    p = PopulationState(np.array([0.3, 0.7]))
    assert np.allclose(replicator_step(even, p).probs, [0.3, 0.7], atol=1e-15)
    t = tensor(PD_AD_AC)
    assert replicator_step(t, PopulationState.uniform(2)).probs[0] > 0.5
    corner = PopulationState(np.array([0.0, 1.0]))
    assert replicator_step(t, corner).probs.tolist() == [0.0, 1.0]


def test_dominant_kind_takes_over():
    res = fitness_metric(tensor(PD_AD_AC))
    assert res.final.probs[0] >= 0.99
    assert abs(res.fitness[0] - 0.0) <= 1e-3
    assert res.trajectory.shape == (1001, 2)
    assert res.trajectory[0].tolist() == [0.5, 0.5]


def test_single_kind_is_self_play():
    res = fitness_metric(tensor([[[0.25, 0.75]]]))
    assert res.final.probs.tolist() == [1.0] and res.fitness.tolist() == [0.5]


def test_grim_trigger_repetition_fitness_is_one():
    t = scripted(["GrimTrigger"], variant="repetition")
    assert fitness_metric(t).fitness.tolist() == [1.0]
    assert mean_metric(t)[0].tolist() == [1.0]


@pytest.mark.parametrize("k,seats", [(2, 2), (3, 2), (2, 3)])
def test_replicator_matches_loop_oracle(k, seats):
    rng = np.random.default_rng(k * 10 + seats)
    means = rng.normal(size=(k,) * seats + (seats,))
    res = fitness_metric(tensor(means), ReplicatorConfig(steps=60, learning_rate=0.3))
    ref = replicator_loops(means, 60, 0.3)
    assert np.allclose(res.trajectory, ref, atol=1e-12, rtol=0)


def test_mean_metric_standard_error():
    rng = np.random.default_rng(4)
    means = rng.normal(size=(2, 2, 2))
    se = rng.uniform(0.1, 0.5, size=(2, 2, 2))
    values, err = mean_metric(tensor(means, se))
    # kind i's mean averages its 2 seats x 2 opponents, weight 1/4 each
    for i in range(2):
        cells = [(i, b, 0) for b in range(2)] + [(b, i, 1) for b in range(2)]
        assert values[i] == pytest.approx(np.mean([means[c] for c in cells]), abs=1e-15)
        assert err[i] == pytest.approx(np.sqrt(sum(se[c] ** 2 for c in cells)) / 4, abs=1e-15)


payoffs = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@st.composite
def random_tensors(draw):
    k = draw(st.integers(1, 4))
    seats = draw(st.integers(2, 3)) if k <= 3 else 2
    return draw(arrays(np.float64, (k,) * seats + (seats,), elements=payoffs))


FAST = ReplicatorConfig(steps=50, learning_rate=0.1)


@settings(max_examples=60, deadline=None)
@given(random_tensors())
def test_trajectory_stays_on_simplex(means):
    traj = fitness_metric(tensor(means), FAST).trajectory
    assert np.all(traj >= 0.0)
    assert np.all(np.abs(traj.sum(axis=1) - 1.0) <= 1e-9)


@settings(max_examples=60, deadline=None)
@given(random_tensors(), st.floats(-100, 100, allow_nan=False))
def test_shift_invariance(means, c):
    a = fitness_metric(tensor(means), FAST).trajectory
    b = fitness_metric(tensor(means + c), FAST).trajectory
    assert np.max(np.abs(a - b)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(random_tensors(), st.integers(-64, 64))
def test_shift_invariance_exact_on_integer_payoffs(means, c):
    means = np.round(means)
    a = fitness_metric(tensor(means), FAST).trajectory
    b = fitness_metric(tensor(means + c), FAST).trajectory
    assert np.array_equal(a, b)


@settings(max_examples=30, deadline=None)
@given(random_tensors())
def test_replicator_is_deterministic(means):
    assert np.array_equal(fitness_metric(tensor(means), FAST).trajectory,
                          fitness_metric(tensor(means), FAST).trajectory)


def _better_by(base, margin):
    # kind 0 beats kind 1 by ``margin`` in every seat and against every opponent
    means = np.array(base)
    for s, other in itertools.product(range(2), range(2)):
        idx0 = [other, other]
        idx0[s] = 0
        idx1 = list(idx0)
        idx1[s] = 1
        means[tuple(idx0) + (s,)] = means[tuple(idx1) + (s,)] + margin
    return means


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 3), arrays(np.float64, (2, 2, 2), elements=payoffs))
def test_uniformly_better_kind_dominates(margin, base):
    # Log-odds grow by at least eta * margin per step, so 1000 steps at eta 0.1
    # reach 0.99 once margin exceeds ln(99) / 100 ~ 0.046.
    res = fitness_metric(tensor(_better_by(base, margin)))
    assert res.final.probs[0] >= 0.99


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-4, 3), arrays(np.float64, (2, 2, 2), elements=payoffs))
def test_better_kind_log_odds_bound(margin, base):
    cfg = ReplicatorConfig()
    traj = fitness_metric(tensor(_better_by(base, margin)), cfg).trajectory
    p = traj[-1]
    if p[1] > 0:
        assert np.log(p[0] / p[1]) >= cfg.learning_rate * margin * cfg.steps * (1 - 1e-9)
