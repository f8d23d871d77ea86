"""Round records and the windowed history views served to agents."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

from .config import MechanismConfig


@dataclass(frozen=True)
class HistoryRecord:
    """One realized play of the base game among ``participants`` (agent ids in seat order)."""

    round: int
    participants: tuple[int, ...]
    actions: tuple[str, ...]
    payoffs: tuple[float, ...]

    def __post_init__(self):
        if not len(self.participants) == len(self.actions) == len(self.payoffs):
            raise ValueError("participants, actions and payoffs must align")

    def seat_of(self, agent: int) -> int:
        return self.participants.index(agent)

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "participants": list(self.participants),
            "actions": list(self.actions),
            "payoffs": list(self.payoffs),
        }


@dataclass(frozen=True)
class RepetitionView:
    """Fixed-partner history: the last ``window`` rounds, oldest first."""

    viewer: int
    rounds_played: int
    records: tuple[HistoryRecord, ...]


@dataclass(frozen=True)
class HistoryNode:
    """A record seen from ``subject``'s side, with co-players' earlier histories attached."""

    record: HistoryRecord
    subject: int
    expansions: tuple[tuple[int, tuple["HistoryNode", ...]], ...] = ()


@dataclass(frozen=True)
class ReputationView:
    viewer: int
    rounds_played: int
    coplayers: tuple[int, ...]
    own: tuple[HistoryNode, ...]
    others: tuple[tuple[int, tuple[HistoryNode, ...]], ...]
    order: str

    def all_records(self) -> list[HistoryRecord]:
        """Every distinct record anywhere in the view, in chronological order."""
        seen = {}

        def walk(nodes):
            for node in nodes:
                rec = node.record
                seen[(rec.round, rec.participants)] = rec
                for _, sub in node.expansions:
                    walk(sub)

        walk(self.own)
        for _, nodes in self.others:
            walk(nodes)
        return sorted(seen.values(), key=lambda r: (r.round, r.participants))


def _agent_history(log, subject, before, lowest, order, path) -> tuple[HistoryNode, ...]:
    records = sorted(
        (r for r in log if subject in r.participants and lowest <= r.round < before),
        key=lambda r: -r.round,
    )
    nodes = []
    for rec in records:
        expansions = []
        if order == "higher":
            for other in rec.participants:
                key = (other, rec.round)
                if other == subject or key in path:
                    continue
                sub = _agent_history(log, other, rec.round, lowest, order, path | {key})
                if sub:
                    expansions.append((other, sub))
        nodes.append(HistoryNode(rec, subject, tuple(expansions)))
    return tuple(nodes)


def build_history_view(
    log: Sequence[HistoryRecord],
    agent: int,
    config: MechanismConfig,
    order: Literal["first", "higher"] | None = None,
    coplayers: Sequence[int] = (),
    rounds_played: int | None = None,
):
    """History the mechanism reveals to ``agent`` before its next round.

    Only rounds in the last ``config.window`` are ever shown. Repetition yields
    a flat record list; reputation variants yield per-agent trees, where the
    higher-order variant recursively attaches each co-player's earlier history.
    """
    if rounds_played is None:
        rounds_played = max((r.round for r in log), default=0)
    lowest = rounds_played - config.window + 1
    if config.variant == "repetition":
        if log and all(agent not in r.participants for r in log):
            raise KeyError(f"unknown agent {agent}")
        recs = tuple(r for r in sorted(log, key=lambda r: r.round) if lowest <= r.round <= rounds_played)
        return RepetitionView(agent, rounds_played, recs)
    if order is None:
        order = "higher" if config.variant == "reputation_plus" else "first"
    if order not in ("first", "higher"):
        raise ValueError(f"unknown history order {order!r}")
    own = _agent_history(log, agent, rounds_played + 1, lowest, order, frozenset())
    others = tuple(
        (c, _agent_history(log, c, rounds_played + 1, lowest, order, frozenset())) for c in coplayers
    )
    return ReputationView(agent, rounds_played, tuple(coplayers), own, others, order)
