"""Desk checks that each mechanism's reference construction sustains cooperation."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .equilibrium import (
    deviation_gains,
    grim_trigger_threshold,
    is_pure_nash,
    is_weakly_dominant_profile,
)
from .games import Game, GameError
from .mechanisms.config import ConfigError
from .mechanisms.transforms import (
    apply_contract,
    augment_with_mediator,
    delegate_index,
    resolve_mediated,
    theorem_contract,
    theorem_mediator,
)

THEOREM_VARIANTS = ("repetition", "reputation_plus", "mediation", "contracting")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class TheoremReport:
    game: str
    variant: str
    construction: str
    checks: list[CheckResult] = field(default_factory=list)
    values: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = [f"{self.game} / {self.variant}: {self.construction}"]
        for key, val in self.values.items():
            out.append(f"  {key} = {val}")
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            out.append(f"  [{mark}] {c.name}" + (f": {c.detail}" if c.detail else ""))
        out.append("verdict: " + ("pass" if self.passed else "fail"))
        return out


def exact_transfers(game: Game, contract, profile) -> list[Fraction]:
    n = game.num_players
    own = [Fraction(contract.value(game.actions[i][a])) for i, a in enumerate(profile)]
    total = sum(own)
    return [t - (total - t) / (n - 1) for t in own]


def verify_theorem(game: Game, variant: str, delta: float = 0.8) -> TheoremReport:
    if variant not in THEOREM_VARIANTS:
        raise ConfigError(f"no reference construction for {variant!r}; choose from {', '.join(THEOREM_VARIANTS)}")
    if variant in ("repetition", "reputation_plus"):
        construction = "grim trigger" if variant == "repetition" else "Standing norm"
        report = TheoremReport(game.name, variant, construction)
        cert = grim_trigger_threshold(game, game.coop_profile, game.defect_profile)
        report.values.update(
            delta=delta,
            delta_threshold=cert.delta_threshold,
            gains=list(cert.gains),
            surpluses=list(cert.surpluses),
            loose_threshold=cert.loose_threshold,
        )
        report.checks.append(CheckResult("defect profile is a Nash equilibrium (punishment)", True))
        ok = cert.verdict(delta)
        report.checks.append(CheckResult(
            "delta >= delta threshold", ok,
            f"{delta} {'>=' if ok else '<'} {cert.delta_threshold:.6g}",
        ))
        return report
    if variant == "mediation":
        spec = theorem_mediator(game)
        report = TheoremReport(game.name, variant, "mediator " + str(spec.to_wire()))
        aug = augment_with_mediator(game, spec)
        target = (delegate_index(game),) * game.num_players
        gains = deviation_gains(aug, target)
        report.values.update(deviation_gains=[float(g) for g in gains])
        report.checks.append(CheckResult(
            "all-delegate is a pure Nash equilibrium of the augmented game",
            is_pure_nash(aug, target), f"max unilateral gain {float(max(gains)):.6g}",
        ))
        outcome = resolve_mediated(game, spec, target)
        report.checks.append(CheckResult(
            "all-delegate plays the cooperative profile", outcome == game.coop_profile,
            f"played {game.labels_of(outcome)}",
        ))
        return report
    spec = theorem_contract(game)
    report = TheoremReport(game.name, variant, "contract " + str(spec.to_wire()))
    transformed = apply_contract(game, spec)
    report.values.update(transfers=spec.to_wire())
    report.checks.append(CheckResult(
        "cooperative profile is weakly dominant in the transformed game",
        is_weakly_dominant_profile(transformed, game.coop_profile),
    ))
    unbalanced = [p for p in game.profiles() if sum(exact_transfers(game, spec, p)) != 0]
    report.checks.append(CheckResult(
        "transfers sum to exactly zero at every profile", not unbalanced,
        f"{len(unbalanced)} unbalanced profile(s)" if unbalanced else "",
    ))
    return report


def verify_all(games, delta: float = 0.8) -> list[TheoremReport]:
    out = []
    for g in games:
        for v in THEOREM_VARIANTS:
            try:
                out.append(verify_theorem(g, v, delta))
            except GameError as exc:
                r = TheoremReport(g.name, v, "unavailable")
                r.checks.append(CheckResult("construction exists", False, str(exc)))
                out.append(r)
    return out
