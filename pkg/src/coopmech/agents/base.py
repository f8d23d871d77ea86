"""Decision requests and responses, and parsing of agents' JSON replies."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence, Union

from ..games import Game, GameError, MixedAction
from ..mechanisms.config import MechanismConfig
from ..mechanisms.history import RepetitionView, ReputationView
from ..mechanisms.transforms import ContractSpec, MediatorSpec, Proposal

PHASES = ("act", "propose_mediator", "propose_contract", "vote", "sign")

Payload = Union[MixedAction, MediatorSpec, ContractSpec, tuple, bool]


class ParseError(ValueError):
    """An agent reply violated the wire format; ``rule`` names the violated rule."""

    def __init__(self, rule: str, message: str):
        super().__init__(f"{rule}: {message}")
        self.rule = rule


class AgentDecisionError(RuntimeError):
    """An agent failed to produce a valid decision; aborts the episode."""

    def __init__(self, agent: str, phase: str, message: str):
        super().__init__(f"agent {agent!r} failed in phase {phase!r}: {message}")
        self.agent = agent
        self.phase = phase


@dataclass(frozen=True)
class DecisionRequest:
    """Everything an agent may see at one decision point.

    ``game`` is always the base game; ``play_game`` is the game actually played
    in the act phase (mediator-augmented or contract-transformed).
    """

    phase: str
    game: Game
    seat: int
    config: MechanismConfig = field(default_factory=MechanismConfig)
    play_game: Game | None = None
    history: RepetitionView | ReputationView | None = None
    slate: tuple[Proposal, ...] = ()
    winner: Proposal | None = None
    contract_active: bool = False
    agent_id: int | None = None

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.play_game is None:
            object.__setattr__(self, "play_game", self.game)
        if self.phase == "vote" and not self.slate:
            raise ValueError("vote requests need a proposal slate")
        if self.phase == "sign" and self.winner is None:
            raise ValueError("sign requests need the winning proposal")

    @property
    def labels(self) -> tuple[str, ...]:
        """Action labels this agent may weight in the act phase."""
        return self.play_game.actions[self.seat]

    @property
    def proposal_kind(self) -> str | None:
        specs = [p.spec for p in self.slate] + ([self.winner.spec] if self.winner else [])
        if specs:
            return "mediator" if isinstance(specs[0], MediatorSpec) else "contract"
        if self.phase == "propose_mediator" or self.config.variant == "mediation":
            return "mediator"
        if self.phase == "propose_contract" or self.config.variant == "contracting":
            return "contract"
        return None


@dataclass(frozen=True)
class DecisionResponse:
    payload: Payload
    raw: str | None = None


class Agent(Protocol):
    name: str

    def decide(self, request: DecisionRequest) -> DecisionResponse: ...


_FENCE = re.compile(r"^\s*```[\w-]*\s*$", re.MULTILINE)


def extract_json_object(raw: str) -> dict:
    """Return the last top-level JSON object in ``raw`` (code fences ignored)."""
    text = _FENCE.sub("", raw)
    decoder = json.JSONDecoder()
    found = None
    pos = 0
    while True:
        start = text.find("{", pos)
        if start < 0:
            break
        try:
            obj, end = decoder.raw_decode(text, start)
        except json.JSONDecodeError:
            pos = start + 1
            continue
        if isinstance(obj, dict):
            found = obj
        pos = end
    if found is None:
        raise ParseError("no_object", "no parsable JSON object found")
    return found


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def parse_mixed_action(obj: dict, labels: Sequence[str]) -> MixedAction:
    missing = [lab for lab in labels if lab not in obj]
    if missing:
        raise ParseError("missing_action", f"no weight for {', '.join(missing)}")
    extra = sorted(set(obj) - set(labels))
    if extra:
        raise ParseError("unknown_action", f"unexpected keys {', '.join(extra)}")
    for lab in labels:
        v = obj[lab]
        if not _is_int(v):
            raise ParseError("non_integer", f"weight for {lab} is {v!r}, not an integer")
        if not 0 <= v <= 100:
            raise ParseError("out_of_range", f"weight for {lab} is {v}, outside [0, 100]")
    total = sum(obj[lab] for lab in labels)
    if total != 100:
        raise ParseError("sum_not_100", f"sum ≠ 100 (weights sum to {total})")
    return MixedAction.from_wire(obj, labels)


def parse_response(phase: str, raw: str, request: DecisionRequest | None = None, *,
                   labels: Sequence[str] | None = None, num_players: int | None = None,
                   num_proposals: int | None = None, proposal_kind: str | None = None
                   ) -> DecisionResponse:
    """Parse and validate a raw reply for ``phase``.

    Context (labels, player count, slate size) comes from ``request`` when given,
    otherwise from the keyword arguments. No repair beyond locating the final
    object is attempted: malformed weights are errors, never renormalized.
    """
    if phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}")
    if request is not None:
        labels = request.labels if phase == "act" else request.game.shared_actions
        num_players = request.game.num_players
        num_proposals = len(request.slate)
        proposal_kind = request.proposal_kind
    obj = extract_json_object(raw)
    if phase == "act":
        if labels is None:
            raise ValueError("act parsing needs the action labels")
        payload: Payload = parse_mixed_action(obj, labels)
    elif phase == "propose_mediator":
        payload = _parse_mediator(obj, labels, num_players)
    elif phase == "propose_contract":
        payload = _parse_contract(obj, labels)
    elif phase == "vote":
        payload = _parse_ballot(obj, num_proposals, proposal_kind)
    else:
        if set(obj) != {"sign"} or not isinstance(obj["sign"], bool):
            raise ParseError("schema", 'expected {"sign": true|false}')
        payload = obj["sign"]
    return DecisionResponse(payload, raw)


def _parse_mediator(obj, labels, num_players) -> MediatorSpec:
    if num_players is None:
        raise ValueError("mediator parsing needs the player count")
    expected = {str(d) for d in range(1, num_players + 1)}
    if set(obj) != expected:
        raise ParseError("schema", f"mediator keys must be {sorted(expected)}, got {sorted(obj)}")
    for k, v in obj.items():
        if not isinstance(v, str) or (labels is not None and v not in labels):
            raise ParseError("schema", f"mediator action for {k} is {v!r}, not a valid action")
    return MediatorSpec.from_wire(obj)


def _parse_contract(obj, labels) -> ContractSpec:
    if labels is not None:
        missing = [lab for lab in labels if lab not in obj]
        if missing:
            raise ParseError("missing_action", f"no contract value for {', '.join(missing)}")
        extra = sorted(set(obj) - set(labels))
        if extra:
            raise ParseError("unknown_action", f"unexpected keys {', '.join(extra)}")
    for k, v in obj.items():
        if not _is_int(v):
            raise ParseError("non_integer", f"contract value for {k} is {v!r}, not an integer")
    try:
        return ContractSpec.from_wire(obj)
    except GameError as exc:
        raise ParseError("schema", str(exc)) from exc


def ballot_keys(count: int, kind: str | None) -> list[str]:
    prefix = "M" if kind == "mediator" else "C"
    return [f"{prefix}{i + 1}" for i in range(count)]


def _parse_ballot(obj, count, kind) -> tuple[bool, ...]:
    if count is None:
        raise ValueError("ballot parsing needs the slate size")
    keys = ballot_keys(count, kind)
    missing = [k for k in keys if k not in obj]
    if missing:
        raise ParseError("missing_entry", f"ballot has no entry for {', '.join(missing)}")
    extra = sorted(set(obj) - set(keys))
    if extra:
        raise ParseError("schema", f"unexpected ballot keys {', '.join(extra)}")
    for k in keys:
        if not isinstance(obj[k], bool):
            raise ParseError("schema", f"ballot entry {k} is {obj[k]!r}, not a boolean")
    return tuple(obj[k] for k in keys)


def payload_to_wire(payload: Payload, kind: str | None = None) -> Any:
    """Inverse of parsing: the JSON object an agent would emit for ``payload``."""
    if isinstance(payload, (MixedAction, MediatorSpec, ContractSpec)):
        return payload.to_wire()
    if isinstance(payload, bool):
        return {"sign": payload}
    return dict(zip(ballot_keys(len(payload), kind), payload))
