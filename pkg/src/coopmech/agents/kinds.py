"""Named agent kinds: the roster entries a tournament instantiates per episode."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from ..mechanisms.config import ConfigError
from .external import CannedTransport, ExternalAgent, HttpChatTransport
from .scripted import SCRIPTED


@dataclass(frozen=True)
class AgentKind:
    name: str
    category: str = "scripted"
    strategy: str | None = None
    parameters: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.category not in ("scripted", "external"):
            raise ConfigError(f"agent {self.name!r}: unknown category {self.category!r}")
        if self.category == "scripted":
            strategy = self.strategy or self.name
            if strategy not in SCRIPTED:
                raise ConfigError(
                    f"agent {self.name!r}: unknown scripted strategy {strategy!r}; "
                    f"choose from {', '.join(sorted(SCRIPTED))}"
                )
            object.__setattr__(self, "strategy", strategy)
        object.__setattr__(self, "parameters", dict(self.parameters))

    @classmethod
    def parse(cls, entry) -> "AgentKind":
        """Accept a bare strategy name or a mapping with name/category/strategy/parameters."""
        if isinstance(entry, str):
            return cls(entry)
        if not isinstance(entry, Mapping) or "name" not in entry:
            raise ConfigError(f"roster entry {entry!r} needs a name")
        unknown = set(entry) - {"name", "category", "strategy", "parameters"}
        if unknown:
            raise ConfigError(f"roster entry {entry['name']!r}: unknown fields {sorted(unknown)}")
        return cls(entry["name"], entry.get("category", "scripted"), entry.get("strategy"),
                   entry.get("parameters", {}))

    def to_dict(self) -> dict:
        return {"name": self.name, "category": self.category, "strategy": self.strategy,
                "parameters": dict(self.parameters)}

    def build(self):
        """A fresh, episode-scoped agent instance."""
        if self.category == "scripted":
            return SCRIPTED[self.strategy](name=self.name, **self.parameters)
        p = dict(self.parameters)
        kind = p.pop("transport", "http")
        if kind == "canned":
            transport = CannedTransport(p.pop("directory"))
        elif kind == "http":
            transport = HttpChatTransport(
                p.pop("endpoint"), p.pop("model"),
                api_key_env=p.pop("api_key_env", "COOPMECH_API_KEY"),
                timeout=p.pop("timeout", 120.0), retries=p.pop("retries", 2),
            )
        else:
            raise ConfigError(f"agent {self.name!r}: unknown transport {kind!r}")
        sampling = {"temperature": p.pop("temperature", 1.0)}
        agent = ExternalAgent(self.name, transport, reasoning=p.pop("reasoning", True),
                              reasks=p.pop("reasks", 2), params=sampling)
        if p:
            raise ConfigError(f"agent {self.name!r}: unknown parameters {sorted(p)}")
        return agent
