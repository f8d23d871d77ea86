"""Finite normal-form games, integer-percent mixed actions and the benchmark dilemmas."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

TOL = 1e-9
GAME_SCHEMA = "coopmech.game/1"
GAME_NAMES = ("prisoners", "travelers", "public_goods", "trust", "stag_hunt")
DEFAULT_STAG_HUNT = ((5.0, 5.0), (0.0, 4.0), (4.0, 0.0), (4.0, 4.0))


class GameError(ValueError):
    """Invalid game definition, profile or normalization reference."""


def action_labels(count: int) -> tuple[str, ...]:
    return tuple(f"A{i}" for i in range(count))


@dataclass(frozen=True, eq=False)
class Game:
    """A finite normal-form game with designated cooperative and defective profiles.

    ``payoffs`` has shape ``(*action_counts, num_players)``; entry ``payoffs[a][i]``
    is player i's payoff under pure profile ``a``. Profiles are tuples of action
    indices.
    """

    name: str
    num_players: int
    actions: tuple[tuple[str, ...], ...]
    payoffs: np.ndarray
    coop_profile: tuple[int, ...]
    defect_profile: tuple[int, ...]
    params: Mapping[str, Any] = field(default_factory=dict)
    annotations: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.num_players < 1:
            raise GameError("num_players must be positive")
        if len(self.actions) != self.num_players:
            raise GameError("one action list per player required")
        payoffs = np.array(self.payoffs, dtype=np.float64)
        shape = tuple(len(a) for a in self.actions) + (self.num_players,)
        if payoffs.shape != shape:
            raise GameError(f"payoff tensor shape {payoffs.shape} != {shape}")
        if not np.all(np.isfinite(payoffs)):
            raise GameError("payoffs must be finite")
        payoffs.setflags(write=False)
        object.__setattr__(self, "payoffs", payoffs)
        object.__setattr__(self, "actions", tuple(tuple(a) for a in self.actions))
        object.__setattr__(self, "coop_profile", self.check_profile(self.coop_profile))
        object.__setattr__(self, "defect_profile", self.check_profile(self.defect_profile))
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "annotations", dict(self.annotations))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.payoffs.shape[:-1]

    @property
    def shared_actions(self) -> tuple[str, ...]:
        """The common action label set; raises if players' labels differ."""
        first = self.actions[0]
        if any(a != first for a in self.actions[1:]):
            raise GameError("players do not share one action label set")
        return first

    def check_profile(self, profile: Sequence[int]) -> tuple[int, ...]:
        profile = tuple(int(a) for a in profile)
        if len(profile) != self.num_players:
            raise GameError(f"profile {profile} has wrong length")
        for i, a in enumerate(profile):
            if not 0 <= a < len(self.actions[i]):
                raise GameError(f"action {a} invalid for player {i}")
        return profile

    def profile_from_labels(self, labels: Sequence[str]) -> tuple[int, ...]:
        if len(labels) != self.num_players:
            raise GameError("wrong number of labels")
        try:
            return tuple(self.actions[i].index(lab) for i, lab in enumerate(labels))
        except ValueError as exc:
            raise GameError(f"unknown action label in {labels}") from exc

    def labels_of(self, profile: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.actions[i][a] for i, a in enumerate(profile))

    def payoff(self, profile: Sequence[int]) -> np.ndarray:
        return self.payoffs[tuple(profile)]

    def profiles(self) -> Iterable[tuple[int, ...]]:
        return itertools.product(*(range(len(a)) for a in self.actions))

    def with_payoffs(self, payoffs: np.ndarray, **changes) -> "Game":
        kw = dict(
            name=self.name,
            num_players=self.num_players,
            actions=self.actions,
            payoffs=payoffs,
            coop_profile=self.coop_profile,
            defect_profile=self.defect_profile,
            params=self.params,
            annotations=self.annotations,
        )
        kw.update(changes)
        return Game(**kw)


@dataclass(frozen=True)
class MixedAction:
    """A distribution over one player's actions in integer percentage points."""

    labels: tuple[str, ...]
    weights: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.weights):
            raise GameError("labels and weights differ in length")
        for w in self.weights:
            if isinstance(w, bool) or not isinstance(w, (int, np.integer)):
                raise GameError(f"weight {w!r} is not an integer")
            if not 0 <= w <= 100:
                raise GameError(f"weight {w} outside [0, 100]")
        if sum(self.weights) != 100:
            raise GameError(f"weights sum to {sum(self.weights)}, not 100")
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))

    @classmethod
    def point(cls, labels: Sequence[str], action: int | str) -> "MixedAction":
        labels = tuple(labels)
        idx = labels.index(action) if isinstance(action, str) else int(action)
        return cls(labels, tuple(100 if i == idx else 0 for i in range(len(labels))))

    @classmethod
    def uniform(cls, labels: Sequence[str]) -> "MixedAction":
        labels = tuple(labels)
        base, extra = divmod(100, len(labels))
        return cls(labels, tuple(base + (1 if i < extra else 0) for i in range(len(labels))))

    @classmethod
    def from_wire(cls, obj: Mapping[str, int], labels: Sequence[str]) -> "MixedAction":
        return cls(tuple(labels), tuple(obj[lab] for lab in labels))

    def to_wire(self) -> dict[str, int]:
        return dict(zip(self.labels, self.weights))

    def probabilities(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64) / 100.0

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, w in enumerate(self.weights) if w > 0)


@dataclass(frozen=True)
class PublicGoodsParams:
    num_players: int = 3
    multiplier: float = 1.5

    def __post_init__(self):
        if self.num_players < 2:
            raise GameError("public goods needs at least two players")
        if not 1 < self.multiplier < self.num_players:
            raise GameError(
                f"multiplier {self.multiplier} outside (1, {self.num_players})"
            )


def make_game(name, payoffs, coop_profile, defect_profile, actions=None, **kw) -> Game:
    """Generic constructor from a nested payoff list of shape (*counts, n)."""
    payoffs = np.asarray(payoffs, dtype=np.float64)
    n = payoffs.shape[-1]
    if actions is None:
        actions = tuple(action_labels(c) for c in payoffs.shape[:-1])
    return Game(name, n, actions, payoffs, tuple(coop_profile), tuple(defect_profile), **kw)


def _two_player(name, table, coop, defect, **kw) -> Game:
    k = int(round(len(table) ** 0.5))
    arr = np.asarray(table, dtype=np.float64).reshape(k, k, 2)
    return make_game(name, arr, coop, defect, **kw)


def prisoners() -> Game:
    # A0 = cooperate, A1 = defect
    return _two_player("prisoners", [(2, 2), (0, 3), (3, 0), (1, 1)], (0, 0), (1, 1))


def travelers(low: int = 2, count: int = 4, bonus: float = 2.0) -> Game:
    numbers = [low + i for i in range(count)]
    arr = np.zeros((count, count, 2))
    for i, x in enumerate(numbers):
        for j, y in enumerate(numbers):
            if x == y:
                arr[i, j] = (x, y)
            elif x < y:
                arr[i, j] = (x + bonus, x - bonus)
            else:
                arr[i, j] = (y - bonus, y + bonus)
    notes = {f"A{i}": f"correspond to the number {x}" for i, x in enumerate(numbers)}
    top = count - 1
    return make_game(
        "travelers", arr, (top, top), (0, 0),
        params={"low": low, "count": count, "bonus": bonus}, annotations=notes,
    )


def public_goods(num_players: int = 3, multiplier: float = 1.5) -> Game:
    """Each contributor (A0) pays 1 into a pool multiplied by ``multiplier`` and shared."""
    p = PublicGoodsParams(num_players, multiplier)
    n, alpha = p.num_players, p.multiplier
    arr = np.zeros((2,) * n + (n,))
    for prof in itertools.product(range(2), repeat=n):
        k = prof.count(0)
        share = alpha * k / n
        arr[prof] = [share if a == 0 else 1.0 + share for a in prof]
    return make_game(
        "public_goods", arr, (0,) * n, (1,) * n,
        params={"num_players": n, "multiplier": alpha},
    )


def trust() -> Game:
    # P1: A0 invest the extra $4 / A1 keep; P2: A0 share / A1 keep the returns
    return _two_player("trust", [(10, 10), (0, 20), (6, 2), (4, 4)], (0, 0), (1, 1))


def stag_hunt(payoffs: Sequence[Sequence[float]] | None = None) -> Game:
    """Stag (A0) / Hare (A1); ``payoffs`` lists (SS, SH, HS, HH) payoff pairs."""
    table = DEFAULT_STAG_HUNT if payoffs is None else payoffs
    table = [tuple(float(x) for x in row) for row in table]
    if len(table) != 4 or any(len(r) != 2 for r in table):
        raise GameError("stag hunt payoffs must be four (u1, u2) pairs")
    return _two_player("stag_hunt", table, (0, 0), (1, 1), params={"payoffs": table})


def build_game(name: str, params: Mapping[str, Any] | None = None) -> Game:
    params = dict(params or {})
    if name not in GAME_NAMES:
        raise GameError(f"unknown game {name!r}; choose from {', '.join(GAME_NAMES)}")
    if params and name not in ("public_goods", "stag_hunt"):
        raise GameError(f"game {name!r} takes no parameters")
    if name == "prisoners":
        return prisoners()
    if name == "travelers":
        return travelers()
    if name == "trust":
        return trust()
    if name == "public_goods":
        unknown = set(params) - {"num_players", "multiplier"}
        if unknown:
            raise GameError(f"unknown public_goods parameters {sorted(unknown)}")
        return public_goods(**params)
    unknown = set(params) - {"payoffs"}
    if unknown:
        raise GameError(f"unknown stag_hunt parameters {sorted(unknown)}")
    return stag_hunt(params.get("payoffs"))


def _as_probabilities(game: Game, profile) -> list[np.ndarray]:
    if len(profile) != game.num_players:
        raise GameError("strategy profile has wrong number of players")
    probs = []
    for i, s in enumerate(profile):
        if isinstance(s, MixedAction):
            if s.labels != game.actions[i]:
                raise GameError(f"mixed action labels {s.labels} do not match player {i}")
            p = np.asarray(s.weights, dtype=np.float64)
        else:
            p = np.asarray(s, dtype=np.float64)
            if p.shape != (len(game.actions[i]),):
                raise GameError(f"distribution for player {i} has wrong dimension")
        probs.append(p)
    return probs


def expected_utility(game: Game, profile) -> np.ndarray:
    """Expected payoff vector of a strategy profile.

    Entries may be MixedActions or real probability vectors. With MixedActions
    the sum runs over integer weights and divides by ``100**n`` once at the end,
    so benchmark results are exact; real-valued input is accurate to ~1e-12.
    """
    probs = _as_probabilities(game, profile)
    out = game.payoffs
    for p in reversed(probs):
        out = np.tensordot(out, p, axes=([out.ndim - 2], [0]))
    if all(isinstance(s, MixedAction) for s in profile):
        out = out / (100.0 ** game.num_players)
    return np.asarray(out, dtype=np.float64)


def sample_profile(profile: Sequence[MixedAction], rng: np.random.Generator) -> tuple[int, ...]:
    """Draw one action per player independently; one integer draw in [0, 100) each."""
    out = []
    for s in profile:
        r = int(rng.integers(100))
        acc = 0
        for idx, w in enumerate(s.weights):
            acc += w
            if r < acc:
                out.append(idx)
                break
    return tuple(out)


def reference_payoffs(game: Game) -> tuple[np.ndarray, np.ndarray]:
    return game.payoff(game.defect_profile), game.payoff(game.coop_profile)


def normalize_payoff(game: Game, raw, player: int | None = None):
    """Map raw payoffs so the defect reference is 0 and the coop reference is 1.

    A vector is normalized per player. A scalar uses ``player``'s references; when
    ``player`` is omitted all players must share the same references.
    """
    low, high = reference_payoffs(game)
    span = high - low
    if np.any(np.abs(span) <= TOL):
        raise GameError(f"{game.name}: coop and defect payoffs coincide for some player")
    raw_arr = np.asarray(raw, dtype=np.float64)
    if raw_arr.ndim == 0:
        if player is None:
            if not (np.allclose(low, low[0], atol=0) and np.allclose(high, high[0], atol=0)):
                raise GameError("scalar normalization needs a player for asymmetric references")
            player = 0
        return float((raw_arr - low[player]) / span[player])
    if raw_arr.shape != (game.num_players,):
        raise GameError("payoff vector has wrong length")
    return (raw_arr - low) / span


def game_to_document(game: Game) -> dict:
    return {
        "schema": GAME_SCHEMA,
        "name": game.name,
        "num_players": game.num_players,
        "actions": [list(a) for a in game.actions],
        "annotations": dict(game.annotations),
        "params": dict(game.params),
        "payoffs": [list(map(float, game.payoff(p))) for p in game.profiles()],
        "coop_profile": list(game.labels_of(game.coop_profile)),
        "defect_profile": list(game.labels_of(game.defect_profile)),
    }


def game_from_document(doc: Mapping[str, Any]) -> Game:
    if doc.get("schema") != GAME_SCHEMA:
        raise GameError(f"unsupported game schema {doc.get('schema')!r}")
    actions = tuple(tuple(a) for a in doc["actions"])
    n = int(doc["num_players"])
    shape = tuple(len(a) for a in actions)
    flat = np.asarray(doc["payoffs"], dtype=np.float64)
    if flat.shape != (int(np.prod(shape)), n):
        raise GameError("payoff rows do not match the action counts")
    game = Game(
        doc["name"], n, actions, flat.reshape(shape + (n,)),
        (0,) * n, (0,) * n,
        params=doc.get("params", {}), annotations=doc.get("annotations", {}),
    )
    return game.with_payoffs(
        game.payoffs,
        coop_profile=game.profile_from_labels(doc["coop_profile"]),
        defect_profile=game.profile_from_labels(doc["defect_profile"]),
    )


def dump_game(game: Game) -> str:
    return json.dumps(game_to_document(game), indent=2) + "\n"


def load_game(text: str) -> Game:
    return game_from_document(json.loads(text))
