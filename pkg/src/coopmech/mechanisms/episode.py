"""The per-episode state machine for every mechanism variant."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..agents.base import AgentDecisionError, DecisionRequest, ParseError
from ..games import Game, GameError, MixedAction, sample_profile
from .config import ConfigError, MechanismConfig
from .history import HistoryRecord, build_history_view
from .transforms import (
    ContractSpec,
    MediatorSpec,
    Proposal,
    apply_contract,
    augment_with_mediator,
    resolve_mediated,
)

RECORD_SCHEMA = "coopmech.episode/1"


class EpisodeAborted(RuntimeError):
    def __init__(self, agent: str, phase: str, message: str):
        super().__init__(f"episode aborted: agent {agent!r}, phase {phase!r}: {message}")
        self.agent = agent
        self.phase = phase
        self.message = message


def repetition_weighted_payoff(round_payoffs: Sequence[float], delta: float) -> float:
    """Continuation-weighted average ``sum d^(t-1) x_t / sum d^(t-1)``."""
    if len(round_payoffs) == 0:
        raise ValueError("at least one round payoff is required")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    # Exact rational arithmetic, rounded once, so a constant stream maps to itself.
    weights = [Fraction(delta**t) for t in range(len(round_payoffs))]
    num = sum(w * Fraction(float(x)) for w, x in zip(weights, round_payoffs))
    return float(num / sum(weights))


def tail_mass(delta: float, horizon: int) -> float:
    """Share of the infinite-horizon weight falling after round ``horizon``."""
    return delta**horizon


def run_proposal_vote(proposals: Sequence, ballots: Sequence[Sequence[bool]],
                      rng: np.random.Generator) -> tuple[int, list[int]]:
    """Approval vote; ties among the most-approved proposals broken uniformly.

    Exactly one integer is drawn from ``rng`` per vote, tie or not.
    """
    k = len(proposals)
    if k == 0:
        raise ValueError("no proposals to vote on")
    for i, ballot in enumerate(ballots):
        if len(ballot) != k:
            raise ValueError(f"ballot {i} has {len(ballot)} entries for {k} proposals")
    approvals = [sum(bool(b[j]) for b in ballots) for j in range(k)]
    top = max(approvals)
    tied = [j for j, a in enumerate(approvals) if a == top]
    return tied[int(rng.integers(len(tied)))], approvals


@dataclass
class EpisodeRecord:
    """Full trace of one episode; ``raw_payoffs``/``seats`` are indexed [agent][round]."""

    game: str
    config: MechanismConfig
    agents: list[str]
    rounds: list[dict] = field(default_factory=list)
    raw_payoffs: list[list[float]] = field(default_factory=list)
    seats: list[list[int]] = field(default_factory=list)
    weighted: list[float] = field(default_factory=list)
    proposals: list[dict] = field(default_factory=list)
    ballots: list[list[bool]] = field(default_factory=list)
    approvals: list[int] = field(default_factory=list)
    winner: int | None = None
    signs: list[bool] = field(default_factory=list)
    contract_active: bool | None = None
    transcripts: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema": RECORD_SCHEMA,
            "game": self.game,
            "config": self.config.to_dict(),
            "agents": list(self.agents),
            "proposals": self.proposals,
            "ballots": self.ballots,
            "approvals": self.approvals,
            "winner": self.winner,
            "signs": self.signs,
            "contract_active": self.contract_active,
            "rounds": self.rounds,
            "raw_payoffs": self.raw_payoffs,
            "seats": self.seats,
            "weighted": self.weighted,
            "transcripts": self.transcripts,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeRecord":
        if d.get("schema") != RECORD_SCHEMA:
            raise ValueError(f"unsupported episode schema {d.get('schema')!r}")
        fields = {k: d[k] for k in (
            "game", "agents", "rounds", "raw_payoffs", "seats", "weighted", "proposals",
            "ballots", "approvals", "winner", "signs", "contract_active", "transcripts",
        )}
        return cls(config=MechanismConfig(**d["config"]), **fields)


def _name(agent, fallback: str) -> str:
    return getattr(agent, "name", fallback)


def _ask(agent, name: str, request: DecisionRequest, record: EpisodeRecord, rnd: int | None = None):
    try:
        resp = agent.decide(request)
    except (AgentDecisionError, ParseError) as exc:
        raise EpisodeAborted(name, request.phase, str(exc)) from exc
    payload = resp.payload
    try:
        _check_payload(request, payload)
    except (GameError, ValueError, TypeError) as exc:
        raise EpisodeAborted(name, request.phase, str(exc)) from exc
    if resp.raw is not None:
        record.transcripts.append({"agent": name, "phase": request.phase, "round": rnd, "raw": resp.raw})
    return payload


def _check_payload(request: DecisionRequest, payload) -> None:
    phase = request.phase
    if phase == "act":
        if not isinstance(payload, MixedAction) or payload.labels != request.labels:
            raise ValueError(f"expected a mixed action over {request.labels}, got {payload!r}")
    elif phase == "propose_mediator":
        if not isinstance(payload, MediatorSpec):
            raise TypeError("expected a mediator proposal")
        payload.validate(request.game)
    elif phase == "propose_contract":
        if not isinstance(payload, ContractSpec):
            raise TypeError("expected a contract proposal")
        payload.validate(request.game)
    elif phase == "vote":
        if not isinstance(payload, tuple) or len(payload) != len(request.slate) or not all(
            isinstance(b, bool) for b in payload
        ):
            raise ValueError("ballot must hold one boolean per proposal")
    elif not isinstance(payload, bool):
        raise TypeError("sign decision must be a boolean")


def _check_non_restriction(base: Game, play: Game) -> None:
    for i in range(base.num_players):
        if play.actions[i][: len(base.actions[i])] != base.actions[i]:
            raise AssertionError("mechanism removed a base-game action")


def _finish(record: EpisodeRecord, config: MechanismConfig) -> EpisodeRecord:
    record.weighted = [repetition_weighted_payoff(xs, config.delta) for xs in record.raw_payoffs]
    return record


def _play_round(game, play_game, config, agents, names, record, rnd, groups, log,
                rng, resolve=None, **request_kw):
    """Collect mixed actions for every group, then sample all profiles in group order."""
    decisions = []
    for group in groups:
        strategies = []
        for seat, agent_id in enumerate(group):
            view = None
            if config.variant == "repetition":
                view = build_history_view(log, agent_id, config, rounds_played=rnd - 1)
            elif config.is_reputation:
                others = [a for a in group if a != agent_id]
                view = build_history_view(log, agent_id, config, coplayers=others, rounds_played=rnd - 1)
            req = DecisionRequest(
                "act", game, seat, config, play_game=play_game, history=view,
                agent_id=agent_id if config.is_reputation else None, **request_kw,
            )
            strategies.append(_ask(agents[agent_id], names[agent_id], req, record, rnd))
        decisions.append(strategies)
    groups_out = []
    for group, strategies in zip(groups, decisions):
        chosen = sample_profile(strategies, rng)
        played = resolve(chosen) if resolve else chosen
        pay = play_game.payoff(chosen) if resolve is None else game.payoff(played)
        labels = game.labels_of(played)
        log.append(HistoryRecord(rnd, tuple(group), labels, tuple(float(x) for x in pay)))
        for seat, agent_id in enumerate(group):
            record.raw_payoffs[agent_id].append(float(pay[seat]))
            record.seats[agent_id].append(seat)
        entry = {
            "participants": list(group),
            "strategies": [s.to_wire() for s in strategies],
            "chosen": list(play_game.labels_of(chosen)),
            "actions": list(labels),
            "payoffs": [float(x) for x in pay],
        }
        if config.variant == "contracting":
            transfers = np.asarray(pay) - game.payoff(played)
            if abs(math.fsum(transfers)) > 1e-9:
                raise AssertionError("contract transfers are not budget balanced")
            entry["transfers"] = [float(x) for x in transfers]
        groups_out.append(entry)
    record.rounds.append({"round": rnd, "groups": groups_out})


def _proposal_phase(game, config, agents, names, record, rng, phase):
    n = game.num_players
    slate = []
    for seat in range(n):
        req = DecisionRequest(phase, game, seat, config)
        slate.append(Proposal(seat, _ask(agents[seat], names[seat], req, record)))
    slate = tuple(slate)
    record.proposals = [{"proposer": p.proposer, "spec": p.spec.to_wire()} for p in slate]
    ballots = []
    for seat in range(n):
        req = DecisionRequest("vote", game, seat, config, slate=slate)
        ballots.append(list(_ask(agents[seat], names[seat], req, record)))
    winner, approvals = run_proposal_vote(slate, ballots, rng)
    record.ballots, record.approvals, record.winner = ballots, approvals, winner
    return slate[winner]


def run_episode(game: Game, config: MechanismConfig, agents: Sequence, rng: np.random.Generator,
                names: Sequence[str] | None = None) -> EpisodeRecord:
    """Play one episode of ``game`` under ``config`` and return its full record.

    ``agents`` are seat-ordered for fixed-partner variants and the whole pooled
    population for reputation variants. Any malformed decision raises
    :class:`EpisodeAborted` naming the agent and phase.
    """
    n = game.num_players
    names = list(names) if names is not None else [_name(a, f"agent{i}") for i, a in enumerate(agents)]
    pop = len(agents)
    if config.is_reputation:
        if config.population_size is not None and config.population_size != pop:
            raise ConfigError(f"population_size {config.population_size} != roster size {pop}")
        if pop < n or pop % n:
            raise ConfigError(f"population of {pop} cannot be split into groups of {n}")
    elif pop != n:
        raise ConfigError(f"{config.variant} needs exactly {n} agents, got {pop}")
    record = EpisodeRecord(game.name, config, names, raw_payoffs=[[] for _ in range(pop)],
                           seats=[[] for _ in range(pop)])
    log: list[HistoryRecord] = []
    seated = [tuple(range(n))]

    if config.variant in ("no_mechanism", "repetition"):
        for rnd in range(1, config.rounds + 1):
            _play_round(game, game, config, agents, names, record, rnd, seated, log, rng)
    elif config.is_reputation:
        for rnd in range(1, config.rounds + 1):
            perm = [int(x) for x in rng.permutation(pop)]
            groups = [tuple(perm[i:i + n]) for i in range(0, pop, n)]
            _play_round(game, game, config, agents, names, record, rnd, groups, log, rng)
    elif config.variant == "mediation":
        winner = _proposal_phase(game, config, agents, names, record, rng, "propose_mediator")
        play = augment_with_mediator(game, winner.spec)
        _check_non_restriction(game, play)
        _play_round(game, play, config, agents, names, record, 1, seated, log, rng,
                    resolve=lambda prof: resolve_mediated(game, winner.spec, prof), winner=winner)
    else:
        winner = _proposal_phase(game, config, agents, names, record, rng, "propose_contract")
        signs = []
        for seat in range(n):
            req = DecisionRequest("sign", game, seat, config, winner=winner)
            signs.append(_ask(agents[seat], names[seat], req, record))
        active = all(signs)
        record.signs, record.contract_active = signs, active
        play = apply_contract(game, winner.spec) if active else game
        _check_non_restriction(game, play)
        _play_round(game, play, config, agents, names, record, 1, seated, log, rng,
                    winner=winner, contract_active=active)
    return _finish(record, config)
