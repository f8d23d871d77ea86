"""Cross-play scheduling, the episode log, and the metagame payoff tensor."""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .agents.kinds import AgentKind
from .games import Game, build_game, normalize_payoff
from .mechanisms.config import ConfigError, MechanismConfig
from .mechanisms.episode import EpisodeAborted, repetition_weighted_payoff, run_episode

log = logging.getLogger(__name__)

LOG_SCHEMA = "coopmech.log/1"


class IncompleteRunError(RuntimeError):
    """Raised when all-success was demanded but some episodes aborted."""


@dataclass(frozen=True)
class TournamentConfig:
    game: str
    mechanism: MechanismConfig
    roster: tuple[AgentKind, ...]
    game_params: Mapping[str, Any] = field(default_factory=dict)
    repeats: int = 3
    seed: int = 0
    parallelism: int = 1
    require_complete: bool = False
    pool_multiplicity: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "roster", tuple(self.roster))
        object.__setattr__(self, "game_params", dict(self.game_params))
        if not self.roster:
            raise ConfigError("roster must not be empty")
        names = [k.name for k in self.roster]
        if len(set(names)) != len(names):
            raise ConfigError(f"roster names must be unique, got {names}")
        if int(self.repeats) != self.repeats or self.repeats < 1:
            raise ConfigError(f"repeats must be a positive integer, got {self.repeats}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")
        if self.pool_multiplicity is not None and self.pool_multiplicity < 1:
            raise ConfigError("pool_multiplicity must be positive")

    def build_game(self) -> Game:
        return build_game(self.game, self.game_params)

    @property
    def kind_names(self) -> list[str]:
        return [k.name for k in self.roster]

    def to_dict(self) -> dict:
        return {
            "game": self.game,
            "game_params": dict(self.game_params),
            "mechanism": self.mechanism.to_dict(),
            "roster": [k.to_dict() for k in self.roster],
            "repeats": self.repeats,
            "seed": self.seed,
            "parallelism": self.parallelism,
            "require_complete": self.require_complete,
            "pool_multiplicity": self.pool_multiplicity,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def digest(self) -> str:
        # Parallelism does not change results, so it stays out of the identity.
        d = self.to_dict()
        d.pop("parallelism")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TournamentConfig":
        known = {"game", "game_params", "mechanism", "roster", "repeats", "seed", "parallelism",
                 "require_complete", "pool_multiplicity"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown fields {sorted(unknown)}")
        for req in ("game", "mechanism", "roster"):
            if req not in d:
                raise ConfigError(f"missing field {req!r}")
        mech = d["mechanism"]
        if isinstance(mech, str):
            mech = {"variant": mech}
        try:
            mechanism = MechanismConfig(**mech)
        except TypeError as exc:
            raise ConfigError(f"mechanism: {exc}") from exc
        rest = {k: d[k] for k in known - {"game", "mechanism", "roster"} if k in d}
        return cls(d["game"], mechanism, tuple(AgentKind.parse(e) for e in d["roster"]), **rest)


def enumerate_assignments(roster: Sequence, game: Game, mechanism: MechanismConfig | None = None
                          ) -> list[tuple[int, ...]]:
    """Every seat assignment as a tuple of roster indices, in lexicographic order."""
    if mechanism is not None and mechanism.is_reputation:
        raise ConfigError(
            f"{mechanism.variant} rematches a pooled population; use pooled mode, not cross-play"
        )
    if not roster:
        raise ConfigError("roster must not be empty")
    return list(itertools.product(range(len(roster)), repeat=game.num_players))


def pool_members(config: TournamentConfig, game: Game) -> list[int]:
    """Roster index of each pool member; one per (kind, seat) unless overridden."""
    per_kind = config.pool_multiplicity or game.num_players
    members = [k for k in range(len(config.roster)) for _ in range(per_kind)]
    if len(members) % game.num_players:
        raise ConfigError(f"pool of {len(members)} cannot be split into groups of {game.num_players}")
    return members


def episode_rng(seed: int, assignment: int, repeat: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, assignment, repeat]))


def _run_one(config: TournamentConfig, game: Game, digest: str, index: int, members, repeat: int) -> dict:
    kinds = [config.roster[m] for m in members]
    entry = {
        "schema": LOG_SCHEMA,
        "digest": digest,
        "assignment": index,
        "members": list(members),
        "kinds": [k.name for k in kinds],
        "repeat": repeat,
        "seed": [config.seed, index, repeat],
    }
    rng = episode_rng(config.seed, index, repeat)
    try:
        record = run_episode(game, config.mechanism, [k.build() for k in kinds], rng,
                             names=[k.name for k in kinds])
    except EpisodeAborted as exc:
        log.warning("assignment %d repeat %d aborted: %s", index, repeat, exc)
        entry.update(status="aborted", error={"agent": exc.agent, "phase": exc.phase,
                                              "message": exc.message})
        return entry
    entry.update(status="ok", episode=record.to_dict())
    return entry


def dump_entry(entry: dict) -> str:
    return json.dumps(entry, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def read_log(path: Path | str) -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    entries = []
    lines = path.read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            entries.append(json.loads(line))
        except json.JSONDecodeError as exc:
            # A torn final line from an interrupted run is dropped; anything else is corruption.
            if lineno == len(lines):
                log.warning("ignoring truncated final log line %d", lineno)
                break
            raise ValueError(f"{path}:{lineno}: corrupt log line: {exc}") from exc
    return entries


def _repair_tail(path: Path) -> None:
    """Cut a partially written final line so appended records start on a fresh line."""
    if not path.exists():
        return
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        path.write_bytes(data[: data.rfind(b"\n") + 1])


@dataclass
class TournamentResult:
    config: TournamentConfig
    entries: list[dict]
    new_episodes: int

    @property
    def aborted(self) -> int:
        return sum(e["status"] != "ok" for e in self.entries)

    @property
    def complete(self) -> bool:
        return self.aborted == 0 and len(self.entries) == expected_episodes(self.config)

    def tensor(self) -> "MetagameTensor":
        return MetagameTensor.from_entries(self.config, self.entries)

    def pooled(self) -> "PooledSummary":
        return PooledSummary.from_entries(self.config, self.entries)


def planned_tasks(config: TournamentConfig, game: Game) -> list[tuple[int, tuple[int, ...], int]]:
    if config.mechanism.is_reputation:
        members = tuple(pool_members(config, game))
        return [(0, members, r) for r in range(config.repeats)]
    assignments = enumerate_assignments(config.roster, game, config.mechanism)
    return [(i, a, r) for i, a in enumerate(assignments) for r in range(config.repeats)]


def expected_episodes(config: TournamentConfig) -> int:
    return len(planned_tasks(config, config.build_game()))


def run_tournament(config: TournamentConfig, log_path: Path | str | None = None,
                   limit: int | None = None) -> TournamentResult:
    """Run every pending (assignment, repeat) pair, appending to ``log_path``.

    Pairs already present in the log are skipped, so an interrupted run resumes
    where it stopped. ``limit`` caps the number of new episodes (for staged runs).
    Results are written in task order regardless of ``parallelism``.
    """
    game = config.build_game()
    digest = config.digest()
    existing = read_log(log_path) if log_path is not None else []
    for e in existing:
        if e.get("digest") != digest:
            raise ConfigError(f"log entry digest {e.get('digest', '')[:12]} does not match config")
    done = {(e["assignment"], e["repeat"]) for e in existing}
    pending = [t for t in planned_tasks(config, game) if (t[0], t[2]) not in done]
    if limit is not None:
        pending = pending[:limit]

    def job(task):
        index, members, repeat = task
        return _run_one(config, game, digest, index, members, repeat)

    fresh: list[dict] = []
    if log_path is not None:
        _repair_tail(Path(log_path))
    handle = open(log_path, "a", encoding="utf-8") if log_path is not None else None
    try:
        if config.parallelism > 1:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                results: Iterable[dict] = pool.map(job, pending)
                for entry in results:
                    fresh.append(entry)
                    _append(handle, entry)
        else:
            for task in pending:
                entry = job(task)
                fresh.append(entry)
                _append(handle, entry)
    finally:
        if handle is not None:
            handle.close()
    entries = sorted(existing + fresh, key=lambda e: (e["assignment"], e["repeat"]))
    result = TournamentResult(config, entries, len(fresh))
    if config.require_complete and result.aborted:
        raise IncompleteRunError(f"{result.aborted} episode(s) aborted")
    return result


def _append(handle, entry: dict) -> None:
    if handle is not None:
        handle.write(dump_entry(entry) + "\n")
        handle.flush()


def normalized_scores(game: Game, episode: Mapping[str, Any]) -> list[float]:
    """Per-agent delta-weighted payoff after normalizing each round by the seat held."""
    delta = episode["config"]["delta"]
    out = []
    for raws, seats in zip(episode["raw_payoffs"], episode["seats"]):
        per_round = [normalize_payoff(game, x, seat) for x, seat in zip(raws, seats)]
        out.append(repetition_weighted_payoff(per_round, delta))
    return out


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


@dataclass
class MetagameTensor:
    """Mean normalized payoffs indexed ``[kind_seat0, ..., kind_seat{n-1}, seat]``."""

    kinds: tuple[str, ...]
    num_seats: int
    means: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        k, n = len(self.kinds), self.num_seats
        if self.means.shape != (k,) * n + (n,) or self.stderr.shape != self.means.shape:
            raise ValueError("tensor shape does not match roster and seat count")
        if self.counts.shape != (k,) * n:
            raise ValueError("counts shape does not match roster and seat count")

    @classmethod
    def from_array(cls, kinds: Sequence[str], means, stderr=None, counts=None) -> "MetagameTensor":
        means = np.asarray(means, dtype=np.float64)
        n = means.ndim - 1
        stderr = np.zeros_like(means) if stderr is None else np.asarray(stderr, dtype=np.float64)
        counts = np.ones(means.shape[:-1], dtype=np.int64) if counts is None else np.asarray(counts)
        return cls(tuple(kinds), n, means, stderr, counts)

    @classmethod
    def from_entries(cls, config: TournamentConfig, entries: Iterable[Mapping]) -> "MetagameTensor":
        if config.mechanism.is_reputation:
            raise ConfigError("reputation runs have no metagame tensor; use PooledSummary")
        game = config.build_game()
        k, n = len(config.roster), game.num_players
        samples: dict[tuple[int, ...], list[list[float]]] = {}
        for e in entries:
            if e["status"] != "ok":
                continue
            samples.setdefault(tuple(e["members"]), []).append(normalized_scores(game, e["episode"]))
        means = np.full((k,) * n + (n,), np.nan)
        stderr = np.full_like(means, np.nan)
        counts = np.zeros((k,) * n, dtype=np.int64)
        for assignment, rows in samples.items():
            counts[assignment] = len(rows)
            for s in range(n):
                means[assignment + (s,)], stderr[assignment + (s,)] = _mean_se([r[s] for r in rows])
        return cls(tuple(config.kind_names), n, means, stderr, counts)

    @property
    def is_complete(self) -> bool:
        return bool(np.all(self.counts > 0))

    def require_complete(self) -> None:
        if not self.is_complete:
            missing = [tuple(int(x) for x in idx) for idx in np.argwhere(self.counts == 0)]
            raise ValueError(f"tensor has no samples for assignments {missing[:5]}")

    def index(self, kind: str | int) -> int:
        if isinstance(kind, int):
            if not 0 <= kind < len(self.kinds):
                raise KeyError(f"kind index {kind} out of range")
            return kind
        try:
            return self.kinds.index(kind)
        except ValueError:
            raise KeyError(f"unknown kind {kind!r}") from None

    def entry(self, assignment: Sequence[str | int]) -> np.ndarray:
        return self.means[tuple(self.index(a) for a in assignment)]

    def shifted(self, c: float) -> "MetagameTensor":
        return MetagameTensor(self.kinds, self.num_seats, self.means + c, self.stderr, self.counts)

    def rows(self) -> list[dict]:
        """Dense export: one row per assignment with per-seat means, errors and counts."""
        out = []
        for assignment in itertools.product(range(len(self.kinds)), repeat=self.num_seats):
            out.append({
                "assignment": [self.kinds[a] for a in assignment],
                "payoffs": [float(x) for x in self.means[assignment]],
                "stderr": [float(x) for x in self.stderr[assignment]],
                "count": int(self.counts[assignment]),
            })
        return out


@dataclass
class PooledSummary:
    """Per-kind mean normalized payoff from pooled reputation episodes."""

    kinds: tuple[str, ...]
    means: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_entries(cls, config: TournamentConfig, entries: Iterable[Mapping]) -> "PooledSummary":
        game = config.build_game()
        per_kind: list[list[float]] = [[] for _ in config.roster]
        for e in entries:
            if e["status"] != "ok":
                continue
            for member, score in zip(e["members"], normalized_scores(game, e["episode"])):
                per_kind[member].append(score)
        means = np.full(len(config.roster), np.nan)
        stderr = np.full(len(config.roster), np.nan)
        for i, vals in enumerate(per_kind):
            if vals:
                means[i], stderr[i] = _mean_se(vals)
        counts = np.array([len(v) for v in per_kind], dtype=np.int64)
        return cls(tuple(config.kind_names), means, stderr, counts)


def aggregate_across_games(tables: Mapping[str, Mapping[str, tuple[float, float]]]
                           ) -> dict[str, tuple[float, float]]:
    """Unweighted mean over games per kind; errors combine as ``sqrt(sum s^2) / G``."""
    if not tables:
        raise ValueError("no per-game tables to aggregate")
    games = list(tables)
    roster = set(tables[games[0]])
    for g in games[1:]:
        if set(tables[g]) != roster:
            raise ValueError(f"roster of {g!r} differs from {games[0]!r}")
    count = len(games)
    out = {}
    for kind in tables[games[0]]:
        vals = [tables[g][kind][0] for g in games]
        errs = [tables[g][kind][1] for g in games]
        out[kind] = (math.fsum(vals) / count, math.sqrt(math.fsum(e * e for e in errs)) / count)
    return out
