"""Mechanism variants and their parameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass

VARIANTS = (
    "no_mechanism",
    "repetition",
    "reputation_minus",
    "reputation_plus",
    "mediation",
    "contracting",
)
REPUTATION_VARIANTS = ("reputation_minus", "reputation_plus")
MULTI_ROUND_VARIANTS = ("repetition",) + REPUTATION_VARIANTS
PROPOSAL_VARIANTS = ("mediation", "contracting")


class ConfigError(ValueError):
    """Invalid mechanism, tournament or run configuration."""


@dataclass(frozen=True)
class MechanismConfig:
    variant: str = "no_mechanism"
    delta: float = 0.8
    window: int = 3
    horizon: int = 15
    population_size: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown mechanism {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.window) != self.window or self.window < 1:
            raise ConfigError(f"window must be a positive integer, got {self.window}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ConfigError(f"horizon must be a positive integer, got {self.horizon}")
        if self.population_size is not None and self.population_size < 1:
            raise ConfigError("population_size must be positive")

    @property
    def is_reputation(self) -> bool:
        return self.variant in REPUTATION_VARIANTS

    @property
    def rounds(self) -> int:
        return self.horizon if self.variant in MULTI_ROUND_VARIANTS else 1

    def to_dict(self) -> dict:
        return asdict(self)
