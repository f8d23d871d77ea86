"""Mechanism configuration, game transforms, history views and the episode driver."""

from .config import (
    MULTI_ROUND_VARIANTS,
    PROPOSAL_VARIANTS,
    REPUTATION_VARIANTS,
    VARIANTS,
    ConfigError,
    MechanismConfig,
)
from .history import HistoryNode, HistoryRecord, RepetitionView, ReputationView, build_history_view
from .transforms import (
    ContractSpec,
    MediatorSpec,
    Proposal,
    apply_contract,
    augment_with_mediator,
    contract_transfers,
    delegate_index,
    proposal_quality,
    resolve_mediated,
    theorem_bound,
    theorem_contract,
    theorem_mediator,
)

__all__ = [
    "MULTI_ROUND_VARIANTS", "PROPOSAL_VARIANTS", "REPUTATION_VARIANTS", "VARIANTS", "ConfigError",
    "MechanismConfig", "HistoryNode", "HistoryRecord", "RepetitionView", "ReputationView",
    "build_history_view", "ContractSpec", "MediatorSpec", "Proposal", "apply_contract",
    "augment_with_mediator", "contract_transfers", "delegate_index", "proposal_quality",
    "resolve_mediated", "theorem_bound", "theorem_contract", "theorem_mediator",
    "EpisodeAborted", "EpisodeRecord", "repetition_weighted_payoff", "run_episode",
    "run_proposal_vote", "tail_mass",
]

# The episode driver depends on the agents package, which itself imports the
# modules above; load it lazily to keep the import graph acyclic.
_EPISODE_NAMES = (
    "EpisodeAborted", "EpisodeRecord", "repetition_weighted_payoff", "run_episode",
    "run_proposal_vote", "tail_mass",
)


def __getattr__(name):
    if name in _EPISODE_NAMES:
        from . import episode

        return getattr(episode, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
