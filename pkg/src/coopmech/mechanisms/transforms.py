"""Mediator and contract specifications and the game transforms they induce."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from ..equilibrium import is_pure_nash, is_weakly_dominant_profile
from ..games import Game, GameError

DELEGATE_NOTE = "Delegate to Mediator"


@dataclass(frozen=True)
class MediatorSpec:
    """Action the mediator plays for every delegator, keyed by delegator count 1..n."""

    plan: tuple[tuple[int, str], ...]

    @classmethod
    def from_mapping(cls, plan: Mapping[int, str]) -> "MediatorSpec":
        return cls(tuple(sorted((int(k), str(v)) for k, v in plan.items())))

    @classmethod
    def from_wire(cls, obj: Mapping[str, str]) -> "MediatorSpec":
        return cls.from_mapping({int(k): v for k, v in obj.items()})

    def to_wire(self) -> dict[str, str]:
        return {str(d): a for d, a in self.plan}

    def action_for(self, delegators: int) -> str:
        return dict(self.plan)[delegators]

    def validate(self, game: Game) -> None:
        labels = game.shared_actions
        keys = [d for d, _ in self.plan]
        if keys != list(range(1, game.num_players + 1)):
            raise GameError(
                f"mediator plan must cover delegator counts 1..{game.num_players}, got {keys}"
            )
        for d, a in self.plan:
            if a not in labels:
                raise GameError(f"mediator plays unknown action {a!r} for {d} delegator(s)")


@dataclass(frozen=True)
class ContractSpec:
    """Integer transfer received (positive) or paid (negative) per own action label."""

    transfers: tuple[tuple[str, int], ...]

    @classmethod
    def from_mapping(cls, transfers: Mapping[str, int]) -> "ContractSpec":
        for k, v in transfers.items():
            if isinstance(v, bool) or int(v) != v:
                raise GameError(f"contract value for {k!r} must be an integer, got {v!r}")
        return cls(tuple(sorted((str(k), int(v)) for k, v in transfers.items())))

    from_wire = from_mapping

    def to_wire(self) -> dict[str, int]:
        return dict(self.transfers)

    def value(self, label: str) -> int:
        return dict(self.transfers)[label]

    def validate(self, game: Game) -> None:
        labels = set(game.shared_actions)
        keys = {k for k, _ in self.transfers}
        if keys != labels:
            raise GameError(f"contract keys {sorted(keys)} do not match actions {sorted(labels)}")


Spec = Union[MediatorSpec, ContractSpec]


@dataclass(frozen=True)
class Proposal:
    proposer: int
    spec: Spec


def apply_contract(game: Game, contract: ContractSpec) -> Game:
    """Layer zero-sum transfers onto ``game``.

    A player choosing label x receives ``transfers[x]`` in total, drawn equally
    from the other players, so ``v_i(a) = u_i(a) + t(a_i) - sum_{j != i} t(a_j)/(n-1)``.
    """
    if game.num_players < 2:
        raise GameError("contracts need at least two players")
    contract.validate(game)
    n = game.num_players
    t = dict(contract.transfers)
    v = np.array(game.payoffs, dtype=np.float64)
    for prof in game.profiles():
        own = np.array([t[game.actions[i][a]] for i, a in enumerate(prof)], dtype=np.float64)
        v[prof] = v[prof] + own - (own.sum() - own) / (n - 1)
    return game.with_payoffs(v)


def augment_with_mediator(game: Game, mediator: MediatorSpec) -> Game:
    """Extend every player's actions by a Delegate action resolved through ``mediator``."""
    mediator.validate(game)
    labels = game.shared_actions
    m = len(labels)
    new_labels = labels + (f"A{m}",)
    shape = (m + 1,) * game.num_players + (game.num_players,)
    v = np.zeros(shape)
    for prof in itertools.product(range(m + 1), repeat=game.num_players):
        v[prof] = game.payoff(resolve_mediated(game, mediator, prof))
    notes = dict(game.annotations)
    notes[new_labels[-1]] = DELEGATE_NOTE
    return Game(
        game.name, game.num_players, (new_labels,) * game.num_players, v,
        game.coop_profile, game.defect_profile, params=game.params, annotations=notes,
    )


def delegate_index(game: Game) -> int:
    """Index of the Delegate action in an augmented version of base ``game``."""
    return len(game.shared_actions)


def resolve_mediated(game: Game, mediator: MediatorSpec, profile) -> tuple[int, ...]:
    """Map an augmented profile (Delegate = index m) to the base-game profile played."""
    m = delegate_index(game)
    d = sum(1 for a in profile if a == m)
    if d == 0:
        return tuple(profile)
    played = game.shared_actions.index(mediator.action_for(d))
    return tuple(played if a == m else a for a in profile)


def contract_transfers(game: Game, contract: ContractSpec, profile) -> np.ndarray:
    n = game.num_players
    own = np.array([contract.value(game.actions[i][a]) for i, a in enumerate(profile)], dtype=float)
    return own - (own.sum() - own) / (n - 1)


def _shared_reference(game: Game, profile) -> str:
    labels = game.labels_of(profile)
    if len(set(labels)) != 1:
        raise GameError(f"{game.name}: reference profile {labels} is not a common action")
    return labels[0]


def theorem_mediator(game: Game) -> MediatorSpec:
    """Plays the coop action if everyone delegates, the defect action otherwise."""
    coop = _shared_reference(game, game.coop_profile)
    defect = _shared_reference(game, game.defect_profile)
    n = game.num_players
    return MediatorSpec.from_mapping({d: coop if d == n else defect for d in range(1, n + 1)})


def theorem_bound(game: Game) -> float:
    """Largest per-player payoff spread plus one."""
    return max(float(np.ptp(game.payoffs[..., i])) for i in range(game.num_players)) + 1.0


def theorem_contract(game: Game) -> ContractSpec:
    """Coop action collects M from each other player; other actions carry no transfer."""
    coop = _shared_reference(game, game.coop_profile)
    total = int(math.ceil(theorem_bound(game) * (game.num_players - 1)))
    return ContractSpec.from_mapping({lab: total if lab == coop else 0 for lab in game.shared_actions})


def proposal_quality(game: Game, spec: Spec) -> dict[str, bool]:
    """Is the cooperative outcome Nash / weakly dominant once ``spec`` is adopted?

    For a mediator the cooperative outcome is everyone delegating, and it only
    counts when the mediator then plays the coop profile.
    """
    if isinstance(spec, MediatorSpec):
        coop = _shared_reference(game, game.coop_profile)
        if spec.action_for(game.num_players) != coop:
            return {"nash": False, "weakly_dominant": False}
        played = augment_with_mediator(game, spec)
        target = (delegate_index(game),) * game.num_players
    else:
        played = apply_contract(game, spec)
        target = game.coop_profile
    return {
        "nash": is_pure_nash(played, target),
        "weakly_dominant": is_weakly_dominant_profile(played, target),
    }
