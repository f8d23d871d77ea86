"""Rule-based reference agents, including the equilibrium constructions.

Instances are episode-scoped: build a fresh one per episode, since some
(GrimTrigger) remember what they have observed.
"""

from __future__ import annotations

from collections import defaultdict

from ..games import MixedAction
from ..mechanisms.history import RepetitionView, ReputationView
from ..mechanisms.transforms import (
    ContractSpec,
    MediatorSpec,
    delegate_index,
    proposal_quality,
    theorem_contract,
    theorem_mediator,
)
from .base import DecisionRequest, DecisionResponse


def coop_label(request: DecisionRequest) -> str:
    g = request.game
    return g.actions[request.seat][g.coop_profile[request.seat]]


def defect_label(request: DecisionRequest) -> str:
    g = request.game
    return g.actions[request.seat][g.defect_profile[request.seat]]


def _viewer(request: DecisionRequest) -> int:
    return request.seat if request.agent_id is None else request.agent_id


def observed_records(request: DecisionRequest):
    view = request.history
    if isinstance(view, RepetitionView):
        return list(view.records)
    if isinstance(view, ReputationView):
        return view.all_records()
    return []


def current_coplayers(request: DecisionRequest) -> list[int]:
    view = request.history
    if isinstance(view, ReputationView):
        return list(view.coplayers)
    if isinstance(view, RepetitionView) and view.records:
        me = _viewer(request)
        return [p for p in view.records[-1].participants if p != me]
    return [s for s in range(request.game.num_players) if s != request.seat]


def is_coop_move(request: DecisionRequest, record, agent: int) -> bool:
    seat = record.seat_of(agent)
    g = request.game
    return record.actions[seat] == g.actions[seat][g.coop_profile[seat]]


class ScriptedAgent:
    """Base rule for the act phase plus declared defaults for every other phase.

    Defaults: propose a mediator that always plays the coop action, propose an
    all-zero contract, approve every proposal, sign every contract.
    """

    name = "Scripted"

    def __init__(self, name: str | None = None):
        if name is not None:
            self.name = name

    def decide(self, request: DecisionRequest) -> DecisionResponse:
        handler = getattr(self, f"on_{request.phase}")
        return DecisionResponse(handler(request))

    def base_action(self, request: DecisionRequest) -> str:
        raise NotImplementedError

    def on_act(self, request):
        return MixedAction.point(request.labels, self.base_action(request))

    def on_propose_mediator(self, request):
        g = request.game
        return MediatorSpec.from_mapping({d: coop_label(request) for d in range(1, g.num_players + 1)})

    def on_propose_contract(self, request):
        return ContractSpec.from_mapping({lab: 0 for lab in request.game.shared_actions})

    def on_vote(self, request):
        return tuple(True for _ in request.slate)

    def on_sign(self, request):
        return True


class AlwaysAction(ScriptedAgent):
    name = "AlwaysAction"

    def __init__(self, action: str, name: str | None = None):
        super().__init__(name)
        self.action = action

    def base_action(self, request):
        return self.action


class AlwaysCooperate(ScriptedAgent):
    name = "AlwaysCooperate"

    def base_action(self, request):
        return coop_label(request)


class AlwaysDefect(ScriptedAgent):
    name = "AlwaysDefect"

    def base_action(self, request):
        return defect_label(request)


class UniformRandom(ScriptedAgent):
    name = "UniformRandom"

    def on_act(self, request):
        return MixedAction.uniform(request.labels)


class TitForTat(ScriptedAgent):
    """Cooperate first, then mirror the co-player's most recent move.

    With several co-players: cooperate iff all of them cooperated last time.
    """

    name = "TitForTat"

    def base_action(self, request):
        records = observed_records(request)
        coplayers = current_coplayers(request)
        last = {}
        for rec in records:
            for c in coplayers:
                if c in rec.participants:
                    last[c] = rec
        if not last:
            return coop_label(request)
        if len(coplayers) == 1 and coplayers[0] in last:
            rec = last[coplayers[0]]
            mirrored = rec.actions[rec.seat_of(coplayers[0])]
            if mirrored in request.game.actions[request.seat]:
                return mirrored
        if all(is_coop_move(request, rec, c) for c, rec in last.items()):
            return coop_label(request)
        return defect_label(request)


class GrimTrigger(ScriptedAgent):
    """Cooperate until any observed deviation from the coop profile, then defect forever."""

    name = "GrimTrigger"

    def __init__(self, name: str | None = None):
        super().__init__(name)
        self.triggered = False

    def base_action(self, request):
        for rec in observed_records(request):
            if not all(is_coop_move(request, rec, p) for p in rec.participants):
                self.triggered = True
        return defect_label(request) if self.triggered else coop_label(request)


def standing_labels(request: DecisionRequest, records) -> dict[int, bool]:
    """Good/bad labels replayed over ``records``; True means good.

    An agent turns bad in a round iff all its co-players were good at the start
    of that round and it did not play its coop action.
    """
    good: dict[int, bool] = defaultdict(lambda: True)
    by_round = defaultdict(list)
    for rec in records:
        by_round[rec.round].append(rec)
    for rnd in sorted(by_round):
        start = dict(good)
        for rec in by_round[rnd]:
            for p in rec.participants:
                others_good = all(start.get(q, True) for q in rec.participants if q != p)
                if others_good and not is_coop_move(request, rec, p):
                    good[p] = False
    return good


class StandingNorm(ScriptedAgent):
    """Cooperate iff every current co-player is labeled good."""

    name = "StandingNorm"

    def base_action(self, request):
        good = standing_labels(request, observed_records(request))
        if all(good[c] for c in current_coplayers(request)):
            return coop_label(request)
        return defect_label(request)


class TheoremMediator(ScriptedAgent):
    """Proposes and approves only the trigger mediator; delegates iff it won."""

    name = "TheoremMediator"

    def base_action(self, request):
        return defect_label(request)

    def on_propose_mediator(self, request):
        return theorem_mediator(request.game)

    def on_vote(self, request):
        target = theorem_mediator(request.game)
        return tuple(p.spec == target for p in request.slate)

    def on_act(self, request):
        if request.winner is not None and request.winner.spec == theorem_mediator(request.game):
            return MixedAction.point(request.labels, delegate_index(request.game))
        return super().on_act(request)


class TheoremContract(ScriptedAgent):
    """Proposes, approves and signs only the trigger contract; cooperates iff it is active."""

    name = "TheoremContract"

    def base_action(self, request):
        target = theorem_contract(request.game)
        if request.contract_active and request.winner is not None and request.winner.spec == target:
            return coop_label(request)
        return defect_label(request)

    def on_propose_contract(self, request):
        return theorem_contract(request.game)

    def on_vote(self, request):
        target = theorem_contract(request.game)
        return tuple(p.spec == target for p in request.slate)

    def on_sign(self, request):
        return request.winner.spec == theorem_contract(request.game)


class BestResponse(ScriptedAgent):
    """Looser voter: approves any proposal under which the cooperative outcome is Nash."""

    name = "BestResponse"

    def _good(self, request, spec) -> bool:
        return proposal_quality(request.game, spec)["nash"]

    def base_action(self, request):
        w = request.winner
        if w is not None and isinstance(w.spec, ContractSpec) and request.contract_active:
            if self._good(request, w.spec):
                return coop_label(request)
        return defect_label(request)

    def on_act(self, request):
        w = request.winner
        if w is not None and isinstance(w.spec, MediatorSpec) and self._good(request, w.spec):
            return MixedAction.point(request.labels, delegate_index(request.game))
        return super().on_act(request)

    def on_propose_mediator(self, request):
        return theorem_mediator(request.game)

    def on_propose_contract(self, request):
        return theorem_contract(request.game)

    def on_vote(self, request):
        return tuple(self._good(request, p.spec) for p in request.slate)

    def on_sign(self, request):
        return self._good(request, request.winner.spec)


SCRIPTED = {
    cls.name: cls
    for cls in (
        AlwaysAction, AlwaysCooperate, AlwaysDefect, UniformRandom, TitForTat,
        GrimTrigger, StandingNorm, TheoremMediator, TheoremContract, BestResponse,
    )
}
