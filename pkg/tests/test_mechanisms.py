import itertools
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopmech.agents.base import DecisionResponse
from coopmech.agents.scripted import (
    AlwaysAction,
    AlwaysCooperate,
    AlwaysDefect,
    GrimTrigger,
    StandingNorm,
    TheoremContract,
    TheoremMediator,
    TitForTat,
    UniformRandom,
)
from coopmech.games import GAME_NAMES, GameError, MixedAction, build_game, make_game
from coopmech.mechanisms import (
    ConfigError,
    ContractSpec,
    EpisodeAborted,
    EpisodeRecord,
    HistoryRecord,
    MechanismConfig,
    MediatorSpec,
    apply_contract,
    augment_with_mediator,
    build_history_view,
    repetition_weighted_payoff,
    run_episode,
    run_proposal_vote,
    tail_mass,
)
from coopmech.mechanisms.transforms import (
    contract_transfers,
    proposal_quality,
    resolve_mediated,
    theorem_contract,
    theorem_mediator,
)

from scenarios import PARTNER, VIEWER, reputation_log

DILEMMAS = ("prisoners", "travelers", "public_goods", "trust")


def rng(seed=0):
    return np.random.default_rng(seed)


# config

def test_config_validation():
    MechanismConfig("repetition", delta=0.5, window=1, horizon=1)
    for kw in ({"variant": "auction"}, {"delta": 1.0}, {"delta": 0.0}, {"window": 0},
               {"horizon": 0}, {"window": 1.5}, {"population_size": 0}):
        with pytest.raises(ConfigError):
            MechanismConfig(**kw)
    assert MechanismConfig("repetition").rounds == 15
    assert MechanismConfig("mediation").rounds == 1


# contracts

def test_theorem_contract_on_prisoners():
    g = build_game("prisoners")
    spec = theorem_contract(g)
    assert spec.to_wire() == {"A0": 4, "A1": 0}
    v = apply_contract(g, spec)
    assert tuple(v.payoff((0, 0))) == (2, 2)
    assert v.payoff((0, 1))[0] > v.payoff((1, 1))[0]
    assert v.payoff((0, 0))[0] > v.payoff((1, 0))[0]


def test_identity_contract():
    for name in GAME_NAMES:
        g = build_game(name)
        zero = ContractSpec.from_mapping({a: 0 for a in g.shared_actions})
        assert np.array_equal(apply_contract(g, zero).payoffs, g.payoffs)


def test_two_player_transfer_direction():
    g = build_game("prisoners")
    spec = ContractSpec.from_mapping({"A0": 5, "A1": 0})
    v = apply_contract(g, spec)
    assert tuple(v.payoff((0, 1)) - g.payoff((0, 1))) == (5, -5)


def test_contract_validation():
    g = build_game("prisoners")
    with pytest.raises(GameError):
        apply_contract(g, ContractSpec.from_mapping({"A0": 1}))
    with pytest.raises(GameError):
        ContractSpec.from_mapping({"A0": 1.5, "A1": 0})
    with pytest.raises(GameError):
        ContractSpec.from_mapping({"A0": True, "A1": 0})


def _exact_transfers(n, values):
    own = [Fraction(v) for v in values]
    return [t - (sum(own) - t) / (n - 1) for t in own]


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(GAME_NAMES), st.data())
def test_contract_budget_balance(name, data):
    g = build_game(name)
    values = {a: data.draw(st.integers(-50, 50)) for a in g.shared_actions}
    spec = ContractSpec.from_mapping(values)
    v = apply_contract(g, spec)
    for prof in g.profiles():
        assert sum(_exact_transfers(g.num_players, [values[g.actions[i][a]] for i, a in enumerate(prof)])) == 0
        assert abs(v.payoff(prof).sum() - g.payoff(prof).sum()) <= 1e-9
        assert np.allclose(v.payoff(prof) - g.payoff(prof), contract_transfers(g, spec, prof))


def test_three_player_transfer_split():
    g = build_game("public_goods")
    spec = ContractSpec.from_mapping({"A0": 6, "A1": 0})
    # one contributor collects 6, each of the two others pays 3
    assert tuple(contract_transfers(g, spec, (0, 1, 1))) == (6, -3, -3)
    # two contributors: each gets 6 and pays 3 to the other
    assert tuple(contract_transfers(g, spec, (0, 0, 1))) == (3, 3, -6)


# mediators

def test_mediator_resolution_prisoners():
    g = build_game("prisoners")
    mu = theorem_mediator(g)
    assert mu.to_wire() == {"1": "A1", "2": "A0"}
    aug = augment_with_mediator(g, mu)
    assert aug.actions[0] == ("A0", "A1", "A2")
    assert aug.annotations["A2"] == "Delegate to Mediator"
    assert resolve_mediated(g, mu, (2, 2)) == (0, 0)
    assert tuple(aug.payoff((2, 2))) == (2, 2)
    assert resolve_mediated(g, mu, (2, 1)) == (1, 1)
    assert tuple(aug.payoff((2, 1))) == (1, 1)
    for prof in g.profiles():
        assert np.array_equal(aug.payoff(prof), g.payoff(prof))


def test_mediator_plan_must_be_total():
    g = build_game("public_goods")
    with pytest.raises(GameError):
        augment_with_mediator(g, MediatorSpec.from_mapping({1: "A1", 3: "A0"}))
    with pytest.raises(GameError):
        augment_with_mediator(g, MediatorSpec.from_mapping({1: "A1", 2: "A1", 3: "A9"}))


@pytest.mark.parametrize("name", DILEMMAS)
def test_theorem_proposals_are_good(name):
    g = build_game(name)
    assert proposal_quality(g, theorem_mediator(g))["nash"]
    assert proposal_quality(g, theorem_contract(g)) == {"nash": True, "weakly_dominant": True}
    always_coop = MediatorSpec.from_mapping({d: g.shared_actions[g.coop_profile[0]]
                                             for d in range(1, g.num_players + 1)})
    assert not proposal_quality(g, always_coop)["nash"]


# voting

def test_vote_unique_max():
    for seed in range(20):
        winner, approvals = run_proposal_vote(["a", "b"], [[True, False], [True, True]], rng(seed))
        assert (winner, approvals) == (0, [2, 1])


def test_vote_all_reject_still_picks():
    winner, approvals = run_proposal_vote(["a", "b", "c"], [[False] * 3] * 3, rng(1))
    assert approvals == [0, 0, 0] and winner in (0, 1, 2)


def test_vote_tie_is_uniform():
    trials = 10_000
    wins = sum(run_proposal_vote(["a", "b"], [[True, False], [False, True]], rng(s))[0] for s in range(trials))
    sigma = (trials * 0.25) ** 0.5
    assert abs(wins - trials / 2) <= 3 * sigma


def test_vote_rejects_short_ballot():
    with pytest.raises(ValueError):
        run_proposal_vote(["a", "b"], [[True]], rng())


# weighting

def test_weighted_payoff_examples():
    assert repetition_weighted_payoff([3, 1], 0.8) == pytest.approx(3.8 / 1.8, abs=1e-12)
    for t in (1, 2, 15, 40):
        assert repetition_weighted_payoff([1.0] * t, 0.8) == 1.0
        assert repetition_weighted_payoff([2.0] * t, 0.8) == 2.0
    with pytest.raises(ValueError):
        repetition_weighted_payoff([], 0.8)


def test_tail_mass_bound():
    assert tail_mass(0.8, 15) == pytest.approx(0.0351843720888, abs=1e-12)
    assert tail_mass(0.8, 15) <= 0.042


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=20),
       st.floats(0.01, 0.99))
def test_weighted_payoff_matches_formula(xs, delta):
    w = [delta**t for t in range(len(xs))]
    direct = sum(a * b for a, b in zip(w, xs)) / sum(w)
    assert repetition_weighted_payoff(xs, delta) == pytest.approx(direct, rel=1e-9, abs=1e-9)
    assert min(xs) - 1e-9 <= repetition_weighted_payoff(xs, delta) <= max(xs) + 1e-9


# history views

def _rep_log(rounds):
    return [HistoryRecord(t, (0, 1), ("A0", "A0"), (2.0, 2.0)) for t in range(1, rounds + 1)]


def test_repetition_view_window():
    cfg = MechanismConfig("repetition", window=3)
    view = build_history_view(_rep_log(4), 0, cfg)
    assert [r.round for r in view.records] == [2, 3, 4]
    for t in range(1, 8):
        v = build_history_view(_rep_log(t - 1), 0, cfg, rounds_played=t - 1)
        assert len(v.records) == min(3, t - 1)
    with pytest.raises(KeyError):
        build_history_view(_rep_log(2), 5, cfg)


def test_reputation_first_round_is_empty():
    cfg = MechanismConfig("reputation_plus")
    view = build_history_view([], 0, cfg, coplayers=[1], rounds_played=0)
    assert view.own == () and view.others == ((1, ()),)


def _shape(nodes):
    return [(n.record.round, n.subject, [(a, _shape(sub)) for a, sub in n.expansions]) for n in nodes]


def test_reputation_plus_tree_shape():
    cfg = MechanismConfig("reputation_plus")
    view = build_history_view(reputation_log(), VIEWER, cfg, coplayers=[PARTNER], rounds_played=10)
    assert _shape(view.own) == [
        (10, 0, [(9, [(9, 9, [(8, [(8, 8, [])])]), (8, 9, [])])]),
        (9, 0, [(5, [(8, 5, [])])]),
        (8, 0, []),
    ]
    (agent, nodes), = view.others
    assert agent == PARTNER
    assert _shape(nodes) == [
        (10, 9, [(0, [(9, 0, [(5, [(8, 5, [])])]), (8, 0, [])])]),
        (9, 9, [(8, [(8, 8, [])])]),
        (8, 9, []),
    ]
    assert min(r.round for r in view.all_records()) == 8


def test_reputation_minus_is_flat():
    cfg = MechanismConfig("reputation_minus")
    view = build_history_view(reputation_log(), VIEWER, cfg, coplayers=[PARTNER], rounds_played=10)
    assert [n.record.round for n in view.own] == [10, 9, 8]
    assert all(n.expansions == () for n in view.own)
    assert [n.record.round for n in view.others[0][1]] == [10, 9, 8]


def test_reputation_cycles_terminate():
    # the same pair meets every round; expansion must not loop
    log = [HistoryRecord(t, (0, 1), ("A0", "A0"), (2.0, 2.0)) for t in range(1, 30)]
    cfg = MechanismConfig("reputation_plus", window=10)
    view = build_history_view(log, 0, cfg, coplayers=[1], rounds_played=29)
    assert len(view.own) == 10
    assert all(r.round >= 20 for r in view.all_records())


# episodes

def test_no_mechanism_defectors():
    g = build_game("prisoners")
    rec = run_episode(g, MechanismConfig(), [AlwaysDefect(), AlwaysDefect()], rng())
    assert rec.rounds[0]["groups"][0]["actions"] == ["A1", "A1"]
    assert rec.raw_payoffs == [[1.0], [1.0]]
    assert rec.weighted == [1.0, 1.0]


@pytest.mark.parametrize("name", DILEMMAS)
def test_grim_trigger_repetition_cooperates(name):
    g = build_game(name)
    n = g.num_players
    for seed in range(3):
        rec = run_episode(g, MechanismConfig("repetition"), [GrimTrigger() for _ in range(n)], rng(seed))
        assert len(rec.rounds) == 15
        coop = list(g.labels_of(g.coop_profile))
        assert all(r["groups"][0]["actions"] == coop for r in rec.rounds)
        assert rec.weighted == [float(x) for x in g.payoff(g.coop_profile)]


def test_grim_trigger_prisoners_weighted_two():
    g = build_game("prisoners")
    rec = run_episode(g, MechanismConfig("repetition"), [GrimTrigger(), GrimTrigger()], rng(5))
    assert rec.weighted == [2.0, 2.0]


def test_grim_trigger_punishes_forever():
    g = build_game("prisoners")
    flaky = AlwaysAction("A1")
    rec = run_episode(g, MechanismConfig("repetition"), [GrimTrigger(), flaky], rng())
    mine = [r["groups"][0]["actions"][0] for r in rec.rounds]
    assert mine == ["A0"] + ["A1"] * 14


@pytest.mark.parametrize("name", DILEMMAS)
def test_theorem_contract_end_to_end(name):
    g = build_game(name)
    n = g.num_players
    rec = run_episode(g, MechanismConfig("contracting"), [TheoremContract() for _ in range(n)], rng())
    assert rec.contract_active is True and rec.signs == [True] * n
    grp = rec.rounds[0]["groups"][0]
    assert grp["actions"] == list(g.labels_of(g.coop_profile))
    assert grp["payoffs"] == [float(x) for x in g.payoff(g.coop_profile)]
    assert sum(grp["transfers"]) == 0


@pytest.mark.parametrize("name", DILEMMAS)
def test_theorem_mediator_end_to_end(name):
    g = build_game(name)
    n = g.num_players
    rec = run_episode(g, MechanismConfig("mediation"), [TheoremMediator() for _ in range(n)], rng())
    grp = rec.rounds[0]["groups"][0]
    assert grp["chosen"] == [f"A{len(g.shared_actions)}"] * n
    assert grp["actions"] == list(g.labels_of(g.coop_profile))
    assert rec.approvals == [n] * n


def test_contract_not_signed_falls_back():
    g = build_game("prisoners")
    rec = run_episode(g, MechanismConfig("contracting"), [TheoremContract(), AlwaysDefect()], rng())
    # AlwaysDefect proposes the zero contract and signs anything
    assert rec.proposals[1]["spec"] == {"A0": 0, "A1": 0}
    if rec.winner == 0:
        assert rec.signs == [True, True] and rec.contract_active
    else:
        assert rec.signs == [False, True] and rec.contract_active is False
        grp = rec.rounds[0]["groups"][0]
        assert grp["transfers"] == [0.0, 0.0]


def test_contract_signing_is_unanimous():
    g = build_game("prisoners")
    for seed in range(10):
        rec = run_episode(g, MechanismConfig("contracting"), [TheoremContract(), TitForTat()], rng(seed))
        assert rec.contract_active == all(rec.signs)


class _Broken:
    name = "Broken"

    def __init__(self, phase, payload):
        self.phase, self.payload = phase, payload

    def decide(self, request):
        if request.phase == self.phase:
            return DecisionResponse(self.payload, raw="junk")
        return AlwaysDefect().decide(request)


def test_malformed_decision_aborts_with_diagnostic():
    g = build_game("prisoners")
    bad = _Broken("act", MixedAction(("A0", "A1", "A2"), (0, 0, 100)))
    with pytest.raises(EpisodeAborted) as exc:
        run_episode(g, MechanismConfig(), [AlwaysDefect(), bad], rng())
    assert exc.value.agent == "Broken" and exc.value.phase == "act"
    bad_vote = _Broken("vote", (True,))
    with pytest.raises(EpisodeAborted) as exc:
        run_episode(g, MechanismConfig("mediation"), [bad_vote, AlwaysDefect()], rng())
    assert exc.value.phase == "vote"


def test_roster_size_checks():
    g = build_game("prisoners")
    with pytest.raises(ConfigError):
        run_episode(g, MechanismConfig(), [AlwaysDefect()], rng())
    with pytest.raises(ConfigError):
        run_episode(g, MechanismConfig("reputation_minus"), [AlwaysDefect() for _ in range(3)], rng())
    with pytest.raises(ConfigError):
        run_episode(g, MechanismConfig("reputation_minus", population_size=6),
                    [AlwaysDefect() for _ in range(4)], rng())


@pytest.mark.parametrize("name", DILEMMAS)
def test_standing_norm_reputation_cooperates(name):
    g = build_game(name)
    pop = 2 * g.num_players
    for seed in range(3):
        rec = run_episode(g, MechanismConfig("reputation_plus"), [StandingNorm() for _ in range(pop)], rng(seed))
        coop = list(g.labels_of(g.coop_profile))
        for r in rec.rounds:
            assert len(r["groups"]) == 2
            assert all(grp["actions"] == coop for grp in r["groups"])


def test_standing_norm_punishes_a_defector():
    g = build_game("prisoners")
    agents = [StandingNorm() for _ in range(3)] + [AlwaysDefect()]
    rec = run_episode(g, MechanismConfig("reputation_plus"), agents, rng(3))
    for r in rec.rounds[1:]:
        for grp in r["groups"]:
            if 3 in grp["participants"]:
                # after the first round the defector is labeled bad and its partner defects
                other = [s for s, p in enumerate(grp["participants"]) if p != 3][0]
                assert grp["actions"][other] == "A1"


def test_reputation_partitions_each_round():
    g = build_game("public_goods")
    rec = run_episode(g, MechanismConfig("reputation_minus"), [UniformRandom() for _ in range(6)], rng(2))
    for r in rec.rounds:
        members = sorted(p for grp in r["groups"] for p in grp["participants"])
        assert members == list(range(6))
    assert all(len(xs) == 15 for xs in rec.raw_payoffs)


def test_reputation_matching_uniform():
    g = build_game("prisoners")
    counts = Counter()
    seeds = 400
    cfg = MechanismConfig("reputation_minus", horizon=5)
    for s in range(seeds):
        rec = run_episode(g, cfg, [AlwaysDefect() for _ in range(4)], rng(s))
        for r in rec.rounds:
            for grp in r["groups"]:
                counts[tuple(sorted(grp["participants"]))] += 1
    total = seeds * 5
    p = 1 / 3  # each pair meets in one of the three perfect matchings of four agents
    sigma = (total * p * (1 - p)) ** 0.5
    assert set(counts) == set(itertools.combinations(range(4), 2))
    for pair, c in counts.items():
        assert abs(c - total * p) <= 3 * sigma, pair


@pytest.mark.parametrize("variant", ["no_mechanism", "repetition", "reputation_plus", "mediation", "contracting"])
def test_replay_determinism(variant):
    g = build_game("prisoners")
    pop = 4 if variant == "reputation_plus" else 2

    def go():
        agents = [UniformRandom() if i % 2 else TitForTat() for i in range(pop)]
        return run_episode(g, MechanismConfig(variant), agents, rng(99)).to_json()

    assert go() == go()


def test_record_round_trip():
    g = build_game("trust")
    rec = run_episode(g, MechanismConfig("contracting"), [TheoremContract(), UniformRandom()], rng(4))
    back = EpisodeRecord.from_dict(rec.to_dict())
    assert back.to_json() == rec.to_json()
    with pytest.raises(ValueError):
        EpisodeRecord.from_dict({**rec.to_dict(), "schema": "other/1"})


@pytest.mark.parametrize("variant", ["no_mechanism", "repetition", "reputation_minus", "reputation_plus",
                                     "mediation", "contracting"])
def test_weighted_matches_raw(variant):
    g = build_game("public_goods")
    pop = 6 if variant.startswith("reputation") else 3
    rec = run_episode(g, MechanismConfig(variant), [UniformRandom() for _ in range(pop)], rng(8))
    for raw, w in zip(rec.raw_payoffs, rec.weighted):
        assert w == repetition_weighted_payoff(raw, 0.8)


class _Inspector(AlwaysCooperate):
    """Records every act request to check the offered actions."""

    def __init__(self):
        super().__init__()
        self.seen = []

    def decide(self, request):
        if request.phase == "act":
            self.seen.append(request)
        return super().decide(request)


@pytest.mark.parametrize("variant", ["no_mechanism", "repetition", "reputation_minus", "reputation_plus",
                                     "mediation", "contracting"])
@pytest.mark.parametrize("name", GAME_NAMES)
def test_non_restriction(variant, name):
    g = build_game(name)
    pop = 2 * g.num_players if variant.startswith("reputation") else g.num_players
    agents = [_Inspector() for _ in range(pop)]
    run_episode(g, MechanismConfig(variant, horizon=3), agents, rng())
    for a in agents:
        for req in a.seen:
            assert req.labels[: len(g.actions[req.seat])] == g.actions[req.seat]
            if variant == "contracting" and req.contract_active:
                tot = req.play_game.payoffs.sum(axis=-1)
                assert np.allclose(tot, g.payoffs.sum(axis=-1), atol=1e-9)


def test_generic_game_contract_budget():
    g = make_game("three", np.arange(27 * 3, dtype=float).reshape(3, 3, 3, 3), (0, 0, 0), (1, 1, 1))
    spec = ContractSpec.from_mapping({"A0": 7, "A1": -2, "A2": 1})
    v = apply_contract(g, spec)
    assert np.allclose(v.payoffs.sum(axis=-1), g.payoffs.sum(axis=-1), atol=1e-9)
