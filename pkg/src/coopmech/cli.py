"""Command-line entry points: run, analyze, verify-theorem, list-games, render-prompt."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .agents.base import DecisionRequest
from .agents.external import TransportError
from .agents.prompts import COT_INSTRUCTION, DIRECT_INSTRUCTION, render_prompt
from .agents.scripted import ScriptedAgent
from .games import GAME_NAMES, GameError, build_game
from .mechanisms.config import VARIANTS, ConfigError, MechanismConfig
from .mechanisms.episode import repetition_weighted_payoff
from .mechanisms.history import build_history_view
from .mechanisms.transforms import (
    ContractSpec,
    Proposal,
    apply_contract,
    augment_with_mediator,
    theorem_contract,
    theorem_mediator,
)
from .metrics import (
    ReplicatorConfig,
    deviation_ratings,
    fitness_metric,
    mean_metric,
)
from .tournament import (
    IncompleteRunError,
    MetagameTensor,
    PooledSummary,
    TournamentConfig,
    aggregate_across_games,
    expected_episodes,
    normalized_scores,
    read_log,
    run_tournament,
)
from .verification import THEOREM_VARIANTS, verify_theorem

log = logging.getLogger("coopmech")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_TRANSPORT = 3
EXIT_VERIFY = 4

RUN_SCHEMA = "coopmech.run/1"
MANIFEST_SCHEMA = "coopmech.manifest/1"
SUMMARY_SCHEMA = "coopmech.summary/1"
SUMMARY_FIELDS = ("schema", "game", "mechanism", "metric", "kind", "value", "stderr")

CONFIG_NAME = "config.json"
LOG_NAME = "episodes.jsonl"
MANIFEST_NAME = "manifest.json"


class VerificationFailure(RuntimeError):
    pass


# ---------------------------------------------------------------- run configuration

def _line_of(text: str, key: str) -> int | None:
    needle = json.dumps(key)
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _config_error(path: Path, text: str, field: str, message: str) -> ConfigError:
    key = field.split("[")[0].split(".")[-1]
    line = _line_of(text, key) or (_line_of(text, key[:-1]) if key.endswith("s") else None)
    where = f"{path}:{line}" if line else str(path)
    return ConfigError(f"{where}: field {field!r}: {message}")


def load_run_config(path: Path | str) -> list[tuple[str, TournamentConfig]]:
    """Expand a run file into one named tournament per (game, mechanism) pair."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    schema = doc.pop("schema", RUN_SCHEMA)
    if schema != RUN_SCHEMA:
        raise _config_error(path, text, "schema", f"unsupported schema {schema!r}, expected {RUN_SCHEMA!r}")

    def plural(single: str, many: str) -> list:
        if (single in doc) == (many in doc):
            raise _config_error(path, text, many, f"give exactly one of {single!r} or {many!r}")
        vals = [doc.pop(single)] if single in doc else doc.pop(many)
        if not isinstance(vals, list) or not vals:
            raise _config_error(path, text, many, "must be a non-empty list")
        return vals

    games = plural("game", "games")
    mechanisms = plural("mechanism", "mechanisms")
    allowed = {"roster", "repeats", "seed", "parallelism", "require_complete", "pool_multiplicity"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise _config_error(path, text, unknown[0], f"unknown field; allowed: {sorted(allowed | {'games', 'mechanisms'})}")
    if "roster" not in doc:
        raise ConfigError(f"{path}: missing field 'roster'")
    combos: list[tuple[str, TournamentConfig]] = []
    seen: dict[str, int] = {}
    for gi, g in enumerate(games):
        if isinstance(g, str):
            gname, gparams = g, {}
        elif isinstance(g, dict) and set(g) <= {"name", "params"} and "name" in g:
            gname, gparams = g["name"], g.get("params", {})
        else:
            raise _config_error(path, text, f"games[{gi}]", "expected a name or {name, params}")
        for mi, m in enumerate(mechanisms):
            mdict = {"variant": m} if isinstance(m, str) else m
            try:
                tc = TournamentConfig.from_dict({"game": gname, "game_params": gparams,
                                                 "mechanism": mdict, **doc})
                tc.build_game()
            except (ConfigError, GameError, TypeError) as exc:
                field = "roster" if "roster" in str(exc) or "agent" in str(exc) else (
                    f"mechanisms[{mi}]" if "mechanism" in str(exc) or "delta" in str(exc) else f"games[{gi}]")
                raise _config_error(path, text, field, str(exc)) from exc
            name = f"{gname}-{tc.mechanism.variant}"
            seen[name] = seen.get(name, 0) + 1
            if seen[name] > 1:
                name = f"{name}-{seen[name]}"
            combos.append((name, tc))
    return combos


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    digest: str
    version: str
    seed: int
    started: str
    finished: str
    complete: bool
    episodes: dict

    def to_dict(self) -> dict:
        return {"schema": MANIFEST_SCHEMA, "digest": self.digest, "version": self.version,
                "seed": self.seed, "started": self.started, "finished": self.finished,
                "complete": self.complete, "episodes": self.episodes}


def cmd_run(config_path: Path | str, out_dir: Path | str, max_episodes: int | None = None,
            parallelism: int | None = None) -> int:
    combos = load_run_config(config_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    budget = max_episodes
    finished = True
    for name, tc in combos:
        if parallelism is not None:
            tc = dataclasses.replace(tc, parallelism=parallelism)
        d = out_dir / name
        d.mkdir(exist_ok=True)
        cfg_file = d / CONFIG_NAME
        body = tc.canonical_json()
        if cfg_file.exists():
            old = TournamentConfig.from_dict(json.loads(cfg_file.read_text(encoding="utf-8")))
            if old.digest() != tc.digest():
                raise ConfigError(f"{d} holds a run with a different configuration; use a new directory")
        cfg_file.write_text(body, encoding="utf-8")
        manifest = d / MANIFEST_NAME
        if manifest.exists():
            manifest.unlink()
        if budget is not None and budget <= 0:
            finished = False
            continue
        started = _now()
        result = run_tournament(tc, d / LOG_NAME, limit=budget)
        if budget is not None:
            budget -= result.new_episodes
        total = expected_episodes(tc)
        log.info("%s: %d new episode(s), %d/%d logged", name, result.new_episodes, len(result.entries), total)
        if len(result.entries) < total:
            finished = False
            continue
        m = RunManifest(tc.digest(), __version__, tc.seed, started, _now(), result.complete, {
            "planned": total, "logged": len(result.entries),
            "ok": len(result.entries) - result.aborted, "aborted": result.aborted,
            "new": result.new_episodes,
        })
        manifest.write_text(json.dumps(m.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
        if not result.complete:
            log.warning("%s: %d episode(s) aborted; run marked incomplete", name, result.aborted)
    if not finished:
        print("run stopped before all episodes were logged; rerun the same command to resume")
    return EXIT_OK


# ---------------------------------------------------------------- analysis

@dataclass
class LoadedRun:
    name: str
    directory: Path
    config: TournamentConfig
    entries: list[dict]
    manifest: dict | None


def discover_runs(log_dir: Path | str) -> list[LoadedRun]:
    log_dir = Path(log_dir)
    if not log_dir.is_dir():
        raise ConfigError(f"{log_dir}: not a directory")
    dirs = [log_dir] if (log_dir / CONFIG_NAME).exists() else sorted(
        p for p in log_dir.iterdir() if (p / CONFIG_NAME).exists())
    runs = []
    for d in dirs:
        tc = TournamentConfig.from_dict(json.loads((d / CONFIG_NAME).read_text(encoding="utf-8")))
        digest = tc.digest()
        entries = read_log(d / LOG_NAME)
        bad = [e for e in entries if e.get("digest") != digest]
        if bad:
            raise ConfigError(f"{d}: {len(bad)} log record(s) carry a different config digest")
        manifest = None
        if (d / MANIFEST_NAME).exists():
            manifest = json.loads((d / MANIFEST_NAME).read_text(encoding="utf-8"))
            if manifest.get("digest") != digest:
                raise ConfigError(f"{d}: manifest digest does not match config")
        runs.append(LoadedRun(d.name, d, tc, entries, manifest))
    return runs


def _scores_by_assignment(run: LoadedRun) -> dict[tuple[int, ...], list[list[float]]]:
    game = run.config.build_game()
    out: dict[tuple[int, ...], list[list[float]]] = {}
    for e in run.entries:
        if e["status"] == "ok":
            out.setdefault(tuple(e["members"]), []).append(normalized_scores(game, e["episode"]))
    return out


def _bootstrap_tensors(run: LoadedRun, tensor: MetagameTensor, samples: int, seed: int, index: int):
    """Tensors rebuilt from repeat resamples, drawn independently per assignment."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    scores = _scores_by_assignment(run)
    keys = sorted(scores)
    for _ in range(samples):
        means = np.array(tensor.means)
        for key in keys:
            rows = np.asarray(scores[key])
            pick = rng.integers(len(rows), size=len(rows))
            means[key] = rows[pick].mean(axis=0)
        yield MetagameTensor(tensor.kinds, tensor.num_seats, means, tensor.stderr, tensor.counts)


def _std(values: list[np.ndarray]) -> np.ndarray:
    if len(values) < 2:
        return np.zeros_like(values[0]) if values else np.array([])
    return np.std(np.asarray(values), axis=0, ddof=1)


def analyze_runs(runs: Sequence[LoadedRun], bootstrap: int = 20, seed: int = 0,
                 replicator: ReplicatorConfig = ReplicatorConfig()):
    """Summary rows plus per-run exports; problems with single cells are collected, not raised."""
    rows: list[dict] = []
    exports: dict[str, Any] = {}
    problems: list[str] = []
    per_mech: dict[tuple[str, str], dict[str, dict[str, tuple[float, float]]]] = {}

    def add(game, mech, metric, kinds, values, errors):
        table = {}
        for kind, v, e in zip(kinds, values, errors):
            rows.append({"schema": SUMMARY_SCHEMA, "game": game, "mechanism": mech, "metric": metric,
                         "kind": kind, "value": float(v), "stderr": float(e)})
            table[kind] = (float(v), float(e))
        per_mech.setdefault((mech, metric), {})[game] = table

    for index, run in enumerate(runs):
        tc = run.config
        mech = tc.mechanism.variant
        if not run.entries:
            problems.append(f"{run.name}: no episodes logged")
            continue
        if tc.mechanism.is_reputation:
            pooled = PooledSummary.from_entries(tc, run.entries)
            if np.any(pooled.counts == 0):
                missing = [k for k, c in zip(pooled.kinds, pooled.counts) if c == 0]
                problems.append(f"{run.name}: no samples for kinds {missing}")
                continue
            add(tc.game, mech, "mean", pooled.kinds, pooled.means, pooled.stderr)
            continue
        tensor = MetagameTensor.from_entries(tc, run.entries)
        exports[f"tensor-{run.name}.csv"] = _tensor_csv(tensor)
        if not tensor.is_complete:
            missing = [tuple(tensor.kinds[i] for i in idx) for idx in np.argwhere(tensor.counts == 0)]
            problems.append(f"{run.name}: no samples for assignments {missing}")
            continue
        mean, mean_se = mean_metric(tensor)
        add(tc.game, mech, "mean", tensor.kinds, mean, mean_se)
        fit = fitness_metric(tensor, replicator)
        dr = deviation_ratings(tensor)
        boots = list(_bootstrap_tensors(run, tensor, bootstrap, seed, index)) if bootstrap > 1 else []
        fit_se = _std([fitness_metric(b, replicator).fitness for b in boots]) if boots else np.zeros(len(mean))
        dr_b = [deviation_ratings(b) for b in boots]
        rating_se = _std([d.ratings for d in dr_b]) if boots else np.zeros(len(mean))
        rank_se = _std([d.ranks for d in dr_b]) if boots else np.zeros(len(mean))
        add(tc.game, mech, "fitness", tensor.kinds, fit.fitness, fit_se)
        add(tc.game, mech, "dr_rating", tensor.kinds, dr.ratings, rating_se)
        add(tc.game, mech, "dr_rank", tensor.kinds, dr.ranks, rank_se)
        exports[f"fitness-{run.name}.csv"] = _trajectory_csv(tensor.kinds, fit.trajectory)
        exports[f"dr-{run.name}.json"] = json.dumps({
            "kinds": list(dr.kinds), "ratings": dr.ratings.tolist(), "ranks": dr.ranks.tolist(),
            "strictness": dr.strictness, "tiers": dr.tiers,
            "distribution": dr.distribution.tolist(),
        }, sort_keys=True, indent=2) + "\n"

    for (mech, metric), tables in sorted(per_mech.items()):
        if len(tables) < 2:
            continue
        try:
            agg = aggregate_across_games(tables)
        except ValueError as exc:
            problems.append(f"{mech}/{metric}: not aggregated: {exc}")
            continue
        for kind, (v, e) in agg.items():
            rows.append({"schema": SUMMARY_SCHEMA, "game": "aggregate", "mechanism": mech,
                         "metric": metric, "kind": kind, "value": v, "stderr": e})
    return rows, exports, problems


def _tensor_csv(tensor: MetagameTensor) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = tensor.num_seats
    w.writerow([f"seat{s}" for s in range(n)] + [f"payoff{s}" for s in range(n)]
               + [f"stderr{s}" for s in range(n)] + ["count"])
    for r in tensor.rows():
        w.writerow(r["assignment"] + [repr(x) for x in r["payoffs"]] + [repr(x) for x in r["stderr"]]
                   + [r["count"]])
    return buf.getvalue()


def _trajectory_csv(kinds, traj: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step"] + list(kinds))
    for t, row in enumerate(traj):
        w.writerow([t] + [repr(float(x)) for x in row])
    return buf.getvalue()


def summary_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "value": repr(r["value"]), "stderr": repr(r["stderr"])})
    return buf.getvalue()


def audit_runs(runs: Sequence[LoadedRun]) -> list[str]:
    """Re-derive every logged payoff from the actions and the game; report mismatches."""
    issues = []
    for run in runs:
        game = run.config.build_game()
        for e in run.entries:
            if e["status"] != "ok":
                continue
            ep = e["episode"]
            tag = f"{run.name} assignment {e['assignment']} repeat {e['repeat']}"
            play = game
            if ep["contract_active"]:
                spec = ContractSpec.from_wire(ep["proposals"][ep["winner"]]["spec"])
                play = apply_contract(game, spec)
            per_agent: dict[int, list[float]] = {}
            for rnd in ep["rounds"]:
                for grp in rnd["groups"]:
                    expect = play.payoff(game.profile_from_labels(grp["actions"]))
                    if not np.array_equal(expect, np.asarray(grp["payoffs"])):
                        issues.append(f"{tag} round {rnd['round']}: payoffs differ from the game table")
                    for a, x in zip(grp["participants"], grp["payoffs"]):
                        per_agent.setdefault(a, []).append(x)
            for a, xs in per_agent.items():
                if xs != ep["raw_payoffs"][a]:
                    issues.append(f"{tag}: raw payoffs of agent {a} do not match the rounds")
                w = repetition_weighted_payoff(xs, ep["config"]["delta"])
                if w != ep["weighted"][a]:
                    issues.append(f"{tag}: weighted payoff of agent {a} does not recompute")
    return issues


def cmd_analyze(log_dir: Path | str, out_dir: Path | str | None = None, bootstrap: int = 20,
                seed: int = 0, verify: bool = False, replicator: ReplicatorConfig = ReplicatorConfig()
                ) -> int:
    runs = discover_runs(log_dir)
    if not runs:
        raise ConfigError(f"{log_dir}: no runs found")
    out_dir = Path(out_dir) if out_dir is not None else Path(log_dir) / "analysis"
    rows, exports, problems = analyze_runs(runs, bootstrap, seed, replicator)
    for p in problems:
        print(f"warning: {p}", file=sys.stderr)
    for run in runs:
        if run.manifest is None:
            print(f"warning: {run.name}: no manifest; run did not finish", file=sys.stderr)
        elif not run.manifest.get("complete", False):
            print(f"warning: {run.name}: run marked incomplete", file=sys.stderr)
    table = summary_csv(rows)
    if verify:
        issues = audit_runs(runs)
        summary_file = out_dir / "summary.csv"
        if not summary_file.exists():
            issues.append(f"{summary_file}: no stored summary to compare against")
        elif summary_file.read_text(encoding="utf-8") != table:
            issues.append(f"{summary_file}: stored summary differs from the recomputed one")
        for i in issues:
            print(f"verification: {i}", file=sys.stderr)
        if issues:
            raise VerificationFailure(f"{len(issues)} verification issue(s)")
        print("verification: all numbers recompute from the episode logs")
        return EXIT_OK
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.csv").write_text(table, encoding="utf-8")
    for name, body in exports.items():
        (out_dir / name).write_text(body, encoding="utf-8")
    _print_rows(rows)
    return EXIT_OK


def _print_rows(rows: Sequence[dict]) -> None:
    header = ("game", "mechanism", "metric", "kind", "value", "stderr")
    body = [[r["game"], r["mechanism"], r["metric"], r["kind"], f"{r['value']:.3f}",
             f"{r['stderr']:.3f}"] for r in rows]
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(header)]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for b in body:
        print("  ".join(c.ljust(w) for c, w in zip(b, widths)))


# ---------------------------------------------------------------- other commands

def cmd_verify_theorem(game_name: str, variant: str, delta: float = 0.8, params: dict | None = None) -> int:
    game = build_game(game_name, params)
    report = verify_theorem(game, variant, delta)
    for line in report.lines():
        print(line)
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise VerificationFailure("violated: " + "; ".join(failed))
    return EXIT_OK


def cmd_list_games() -> int:
    for name in GAME_NAMES:
        g = build_game(name)
        acts = " | ".join(",".join(a) for a in g.actions)
        print(f"{name}: {g.num_players} players; actions {acts}; "
              f"coop {g.labels_of(g.coop_profile)}; defect {g.labels_of(g.defect_profile)}")
    return EXIT_OK


def demo_request(game_name: str, variant: str, phase: str, seat: int = 0,
                 params: dict | None = None, config: MechanismConfig | None = None) -> DecisionRequest:
    """A representative request: seat 0 proposes the reference construction, others the defaults."""
    game = build_game(game_name, params)
    config = config or MechanismConfig(variant)
    if not 0 <= seat < game.num_players:
        raise ConfigError(f"seat must lie in [0, {game.num_players - 1}]")
    kind = "mediator" if phase == "propose_mediator" or variant == "mediation" else "contract"
    default = ScriptedAgent()
    slate = []
    for s in range(game.num_players):
        probe = DecisionRequest("propose_" + kind, game, s, config)
        if s == 0:
            spec = theorem_mediator(game) if kind == "mediator" else theorem_contract(game)
        else:
            spec = getattr(default, f"on_propose_{kind}")(probe)
        slate.append(Proposal(s, spec))
    slate = tuple(slate)
    play = game
    kw: dict[str, Any] = {}
    if phase == "vote":
        kw["slate"] = slate
    elif phase == "sign":
        kw["winner"] = slate[0]
    elif phase == "act" and variant == "mediation":
        play = augment_with_mediator(game, slate[0].spec)
        kw["winner"] = slate[0]
    elif phase == "act" and variant == "contracting":
        play = apply_contract(game, slate[0].spec)
        kw.update(winner=slate[0], contract_active=True)
    if config.is_reputation and phase == "act":
        others = [s for s in range(game.num_players) if s != seat]
        kw["history"] = build_history_view([], seat, config, coplayers=others, rounds_played=0)
        kw["agent_id"] = seat
    elif variant == "repetition" and phase == "act":
        kw["history"] = build_history_view([], seat, config, rounds_played=0)
    return DecisionRequest(phase, game, seat, config, play_game=play, **kw)


def cmd_render_prompt(game_name: str, variant: str, phase: str, seat: int = 0,
                      instruction: str = "none", params: dict | None = None) -> int:
    req = demo_request(game_name, variant, phase, seat, params)
    text = render_prompt(req)
    if instruction == "cot":
        text += "\n\n" + COT_INSTRUCTION
    elif instruction == "direct":
        text += "\n\n" + DIRECT_INSTRUCTION
    print(text)
    return EXIT_OK


# ---------------------------------------------------------------- argument parsing

def _json_arg(text: str) -> dict:
    try:
        val = json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc.msg}") from exc
    if not isinstance(val, dict):
        raise argparse.ArgumentTypeError("expected a JSON object")
    return val


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coopmech", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every tournament declared in a config file")
    r.add_argument("config", type=Path, help="run configuration (JSON)")
    r.add_argument("output", type=Path, help="output directory; reused runs resume")
    r.add_argument("--max-episodes", type=int, default=None,
                   help="stop after this many new episodes (default: no limit)")
    r.add_argument("--parallelism", type=int, default=None,
                   help="override the config's parallelism bound")

    a = sub.add_parser("analyze", help="compute Mean, Fitness and deviation ratings from run logs")
    a.add_argument("logs", type=Path, help="run output directory")
    a.add_argument("--out", type=Path, default=None, help="analysis directory (default: <logs>/analysis)")
    a.add_argument("--bootstrap", type=int, default=20,
                   help="repeat resamples for Fitness/DR error bars (default: 20; <2 disables)")
    a.add_argument("--seed", type=int, default=0, help="bootstrap seed (default: 0)")
    a.add_argument("--steps", type=int, default=1000, help="replicator steps (default: 1000)")
    a.add_argument("--learning-rate", type=float, default=0.1, help="replicator learning rate (default: 0.1)")
    a.add_argument("--verify", action="store_true",
                   help="recompute everything and compare with the stored summary")

    v = sub.add_parser("verify-theorem", help="check the reference cooperative construction")
    v.add_argument("game", choices=GAME_NAMES)
    v.add_argument("mechanism", choices=THEOREM_VARIANTS)
    v.add_argument("--delta", type=float, default=0.8, help="continuation probability (default: 0.8)")
    v.add_argument("--params", type=_json_arg, default=None, help="game parameters as JSON")

    sub.add_parser("list-games", help="list the built-in games")

    pr = sub.add_parser("render-prompt", help="print the exact prompt for one decision point")
    pr.add_argument("game", choices=GAME_NAMES)
    pr.add_argument("mechanism", choices=VARIANTS)
    pr.add_argument("phase", choices=("act", "propose_mediator", "propose_contract", "vote", "sign"))
    pr.add_argument("--seat", type=int, default=0, help="seat index (default: 0)")
    pr.add_argument("--instruction", choices=("none", "cot", "direct"), default="none",
                    help="append the reasoning instruction (default: none)")
    pr.add_argument("--params", type=_json_arg, default=None, help="game parameters as JSON")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args.config, args.output, args.max_episodes, args.parallelism)
        if args.command == "analyze":
            return cmd_analyze(args.logs, args.out, args.bootstrap, args.seed, args.verify,
                               ReplicatorConfig(args.steps, args.learning_rate))
        if args.command == "verify-theorem":
            return cmd_verify_theorem(args.game, args.mechanism, args.delta, args.params)
        if args.command == "list-games":
            return cmd_list_games()
        return cmd_render_prompt(args.game, args.mechanism, args.phase, args.seat,
                                 args.instruction, args.params)
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ConfigError, GameError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (IncompleteRunError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
