"""Dominance, pure Nash checks and grim-trigger continuation thresholds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .games import TOL, Game, GameError, expected_utility

DominanceMode = Literal["strict", "weak"]
MAX_ENUMERATION = 10**6


def _gt(a, b) -> bool:
    return a > b + TOL


def _ge(a, b) -> bool:
    return a >= b - TOL


def _opponent_profiles(game: Game, player: int, surviving=None):
    sets = surviving or [range(len(a)) for a in game.actions]
    others = [sets[j] for j in range(game.num_players) if j != player]
    for rest in itertools.product(*others):
        yield rest


def _with(player: int, action: int, rest: Sequence[int]) -> tuple[int, ...]:
    prof = list(rest)
    prof.insert(player, action)
    return tuple(prof)


def dominates(game: Game, player: int, a: int, b: int, mode: DominanceMode = "strict",
              surviving=None) -> bool:
    """Whether action ``a`` dominates ``b`` for ``player``.

    ``surviving`` optionally restricts the opponent profiles to per-player
    index collections (used by iterated elimination).
    """
    if not 0 <= player < game.num_players:
        raise GameError(f"invalid player {player}")
    n_act = len(game.actions[player])
    if not (0 <= a < n_act and 0 <= b < n_act) or a == b:
        raise GameError(f"actions {a}, {b} invalid or equal for player {player}")
    if mode not in ("strict", "weak"):
        raise GameError(f"unknown dominance mode {mode!r}")
    somewhere = False
    for rest in _opponent_profiles(game, player, surviving):
        ua = game.payoffs[_with(player, a, rest)][player]
        ub = game.payoffs[_with(player, b, rest)][player]
        if mode == "strict":
            if not _gt(ua, ub):
                return False
        else:
            if not _ge(ua, ub):
                return False
            somewhere = somewhere or _gt(ua, ub)
    return mode == "strict" or somewhere


@dataclass(frozen=True)
class Elimination:
    player: int
    eliminated: int
    dominating: int
    mode: str


@dataclass(frozen=True)
class EliminationTrace:
    rounds: tuple[Elimination, ...]
    surviving: tuple[tuple[int, ...], ...]

    def to_record(self, game: Game) -> dict:
        return {
            "rounds": [
                {
                    "player": r.player,
                    "eliminated": game.actions[r.player][r.eliminated],
                    "dominating": game.actions[r.player][r.dominating],
                    "mode": r.mode,
                }
                for r in self.rounds
            ],
            "surviving": [[game.actions[i][a] for a in s] for i, s in enumerate(self.surviving)],
        }


def iterated_elimination(game: Game, mode: DominanceMode = "strict") -> EliminationTrace:
    """Remove dominated actions one at a time until nothing more is dominated.

    Each pass scans players in index order and, within a player, candidate
    actions and dominators in index order; the first hit is removed and the
    scan restarts. The order matters only for weak dominance.
    """
    surviving = [list(range(len(a))) for a in game.actions]
    rounds: list[Elimination] = []
    while True:
        hit = _first_dominated(game, surviving, mode)
        if hit is None:
            break
        player, b, a = hit
        surviving[player].remove(b)
        rounds.append(Elimination(player, b, a, mode))
    return EliminationTrace(tuple(rounds), tuple(tuple(s) for s in surviving))


def _first_dominated(game, surviving, mode):
    for i in range(game.num_players):
        if len(surviving[i]) < 2:
            continue
        for b in surviving[i]:
            for a in surviving[i]:
                if a != b and dominates(game, i, a, b, mode, surviving):
                    return i, b, a
    return None


def deviation_gains(game: Game, profile: Sequence[int]) -> np.ndarray:
    """Best pure unilateral deviation gain per player (may be negative)."""
    profile = game.check_profile(profile)
    base = game.payoff(profile)
    gains = np.empty(game.num_players)
    for i in range(game.num_players):
        rest = profile[:i] + profile[i + 1:]
        best = -math.inf
        for d in range(len(game.actions[i])):
            if d != profile[i]:
                best = max(best, game.payoffs[_with(i, d, rest)][i] - base[i])
        gains[i] = best
    return gains


def is_pure_nash(game: Game, profile: Sequence[int]) -> bool:
    return not any(_gt(g, 0.0) for g in deviation_gains(game, profile))


def is_nash(game: Game, strategy_profile) -> bool:
    """Nash check for a (possibly mixed) strategy profile via pure deviations."""
    value = expected_utility(game, strategy_profile)
    probs = [np.asarray(s.probabilities() if hasattr(s, "probabilities") else s, dtype=float)
             for s in strategy_profile]
    for i in range(game.num_players):
        for d in range(len(game.actions[i])):
            dev = list(probs)
            dev[i] = np.eye(len(game.actions[i]))[d]
            if _gt(expected_utility(game, dev)[i], value[i]):
                return False
    return True


def is_weakly_dominant_profile(game: Game, profile: Sequence[int]) -> bool:
    profile = game.check_profile(profile)
    for i, a in enumerate(profile):
        for b in range(len(game.actions[i])):
            if b != a and not dominates(game, i, a, b, "weak"):
                return False
    return True


def enumerate_pure_nash(game: Game) -> list[tuple[int, ...]]:
    size = int(np.prod(game.shape))
    if size > MAX_ENUMERATION:
        raise GameError(f"{size} profiles exceed the enumeration guard of {MAX_ENUMERATION}")
    return [p for p in game.profiles() if is_pure_nash(game, p)]


@dataclass(frozen=True)
class SpeCertificate:
    """Grim-trigger certificate: cooperation is sustainable iff delta >= delta_threshold.

    ``loose_threshold`` is the weaker bound obtained by charging every player
    the full payoff spread plus one as their deviation gain.
    """

    delta_threshold: float
    gains: tuple[float, ...]
    surpluses: tuple[float, ...]
    loose_threshold: float
    bound_m: tuple[float, ...] = field(default=())

    def verdict(self, delta: float) -> bool:
        return delta >= self.delta_threshold - TOL

    def to_record(self, delta: float | None = None) -> dict:
        rec = {
            "delta_threshold": self.delta_threshold,
            "gains": list(self.gains),
            "surpluses": list(self.surpluses),
            "loose_threshold": self.loose_threshold,
        }
        if delta is not None:
            rec["delta"] = delta
            rec["verdict"] = self.verdict(delta)
        return rec


def grim_trigger_threshold(game: Game, coop: Sequence[int], punish) -> SpeCertificate:
    """Smallest continuation probability at which grim trigger on ``coop`` is subgame perfect.

    ``punish`` is a strategy profile (MixedActions or probability vectors) or a
    pure action profile. Per player the one-shot gain is clipped at zero: a
    player with no profitable deviation imposes no constraint.
    """
    coop = game.check_profile(coop)
    if len(punish) and all(isinstance(x, (int, np.integer)) for x in punish):
        punish = [np.eye(len(game.actions[i]))[a] for i, a in enumerate(game.check_profile(punish))]
    if not is_nash(game, punish):
        raise GameError("punishment profile is not a Nash equilibrium")
    u_coop = game.payoff(coop)
    u_pun = expected_utility(game, punish)
    surplus = u_coop - u_pun
    if np.any(surplus <= TOL):
        raise GameError("cooperative profile does not Pareto-dominate the punishment")
    gains = np.maximum(deviation_gains(game, coop), 0.0)
    ratios = gains / (gains + surplus)
    spread = np.array([np.ptp(game.payoffs[..., i]) for i in range(game.num_players)])
    m = spread + 1.0
    loose = m / (m + surplus)
    return SpeCertificate(
        float(ratios.max()),
        tuple(float(g) for g in gains),
        tuple(float(s) for s in surplus),
        float(loose.max()),
        tuple(float(x) for x in m),
    )
