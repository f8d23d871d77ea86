"""Prompt text for every (game, mechanism, phase) decision point."""

from __future__ import annotations

from ..games import Game
from ..mechanisms.history import HistoryNode, RepetitionView, ReputationView
from ..mechanisms.transforms import ContractSpec, MediatorSpec, Proposal, delegate_index
from .base import DecisionRequest

ACTION_SCHEMA = """\
Instruction:
- Choose a probability distribution over the provided actions each round.
- Output must contain a valid JSON object at the end.
- Keys must be the action names exactly as given.
- Values must be percentage points given in integers.
- The values must sum to exactly 100.

Format requirement:
Return exactly one JSON object, for example:
{"A0": <INT>, "A1": <INT>, ...}"""

COT_INSTRUCTION = """\
Think about the question step by step.
Break it down into small steps.
Explain your reasoning, and then provide the final answer."""

DIRECT_INSTRUCTION = """\
Please ONLY provide the output to the above question.
DO NOT provide any additional text or explanation."""

JUDGE_TEMPLATE = """\
Analyze the following text and categorize the decision-making strategy used.
You may choose one, multiple or none of the classes. If none apply, classify as other.

Taxonomy:
1. Individual utility maximization: Response includes considerations of pursuing the highest possible personal payoff, optimizing for self-interest with few regard for the payoffs of other players.
2. Strategic equilibrium focus: Response includes considerations of appealing to game-theoretic stability, such as attempting to play a Nash equilibrium strategy. The agent bases its choice on formulating an optimal response to the anticipated, mathematically rational behavior of others.
3. Social welfare maximization: Response includes considerations of a utilitarian desire to maximize the combined total payoff or collective utility of all players in the game, even if it requires sacrificing some of the agent's own individual payoff.
4. Inequity aversion: Response includes considerations of a desire to minimize the difference in payoffs between players. The agent prioritizes symmetric outcomes, aiming to ensure no player gets significantly more or less than others.
5. Reciprocity: Response includes considerations of an intention to respond to the other player's actions in kind, such as rewarding perceived cooperative behavior or punishing uncooperative behavior.
6. Strategic influence: Response includes considerations of an attempt to shape the downstream behavior of other players or to maintain better control over the future dynamics of the game.
7. Trust evaluation: Response includes considerations of an assessment of whether the other player can be trusted to cooperate or act in a mutually beneficial manner.
8. Competitiveness: Response includes considerations of a desire to achieve a higher payoff than the other player, for example, by prioritizing relative performance and beating the other player.
9. Uncertainty evaluation: Response includes considerations of the need to navigate, measure, or mitigate uncertainty regarding the other player's underlying intentions or strategy.
10. Social norm conformity: Response includes considerations of evaluating other players' expectations or attempting to conform to a perceived norm, collective practice, or cultural appropriateness.
11. Rule misunderstanding: Response includes considerations of an expressed misunderstanding, uncertainty, or confusion regarding the underlying rules and mechanics of the game.
12. Exploration-exploitation trade-off: Response includes considerations of the need to balance exploiting known, high-performing strategies against experimenting with less-explored ones.
13. Risk aversion: Response includes considerations of a desire to minimize exposure to risk and unpredictable outcomes.
14. Strategy legibility: Response includes considerations of the intent to adopt a simple, clear strategy that is easily understood or anticipated by the other player.
15. Multidimensional reasoning: The agent exhibits complex reasoning that integrates various facets of the decision-making problem. The analysis goes beyond a one-dimensional approach / mathematical treatment.


Text to analyze:
\"\"\"
{text}
\"\"\"

IMPORTANT: Your response MUST be in valid JSON format EXACTLY as shown below. Do not include any explanatory text outside of the JSON structure.

Example of the required JSON format:
{{
  "Reasoning_behind_classification": "Explanation of your classification reasoning",
  "Confidence": 0.85,
  "justification_type": "Category1, Category2"
}}

Ensure that:
1. Your JSON is properly formatted with no trailing commas
2. "Confidence" is a decimal number between 0 and 1, not a string
3. For multiple justification types, list them as a comma-separated string
4. Don't include any text outside the JSON object"""


def fmt_num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def _others(n: int, plural_word: str = "players") -> str:
    return "another player" if n == 2 else f"{n - 1} other {plural_word}"


def render_game(game: Game, seat: int) -> str:
    n = game.num_players
    two = n == 2
    other = "the other player" if two else "the other players"
    action_lines = []
    for lab in game.actions[seat]:
        note = game.annotations.get(lab)
        action_lines.append(f"- {lab}: {note}" if note else f"- {lab}")
    parts = [
        "Setup:\n"
        f"You are playing a decision-making game with {_others(n)}.\n"
        "Your objective is to maximize your total points received in the game described in length below.",
        "Actions available to each player:\n" + "\n".join(action_lines),
        "Basic game rules:\n"
        f"1. You and {other} each choose a probability for each action, simultaneously.\n"
        f"2. After {'both' if two else 'all'} decisions are locked in, the final action will be drawn from the probability distributions.\n"
        f"3. {'Both' if two else 'All'} players receive the points specified in the payoff description below.",
        "Payoff description:\n" + render_payoffs(game, seat),
        f"In case player identification becomes relevant, you are playing in the position of Player {seat + 1} in this game.",
    ]
    return "\n\n".join(parts)


def render_payoffs(game: Game, seat: int) -> str:
    if game.name == "public_goods":
        n = game.num_players
        alpha = str(float(game.params["multiplier"]))
        return (
            f"Suppose k out of {n} players play A0.\n"
            f"    If a player plays A0, their payoff is: {alpha} * k / {n}.\n"
            f"    If a player plays A1, their payoff is: 1 + ({alpha} * k / {n})."
        )
    if game.name == "travelers":
        b = str(float(game.params["bonus"]))
        return (
            "Suppose you choose number X and the other player chooses number Y.\n"
            "    - If X = Y: you get X points, the other player gets Y (=X) points.\n"
            f"    - If X < Y: you get X + {b}, the other player gets X - {b}.\n"
            f"    - If X > Y: you get Y - {b}, the other player gets Y + {b}."
        )
    if game.num_players != 2:
        return _profile_list(game, seat)
    indent, you = ("    ", "You") if game.name == "trust" else ("\t", "you")
    lines = []
    for prof in game.profiles():
        me, them = prof[seat], prof[1 - seat]
        u = game.payoff(prof)
        lines.append(
            f"{indent}- If you choose {game.actions[seat][me]} and the other player chooses "
            f"{game.actions[1 - seat][them]}: {you} get {fmt_num(u[seat])} points, "
            f"the other player gets {fmt_num(u[1 - seat])} points."
        )
    return "\n".join(lines)


def _profile_list(game: Game, seat: int) -> str:
    lines = []
    for prof in game.profiles():
        u = game.payoff(prof)
        who = ", ".join(
            f"{'you' if i == seat else f'Player {i + 1}'} choose{'' if i == seat else 's'} {game.actions[i][a]}"
            for i, a in enumerate(prof)
        )
        pay = ", ".join(
            f"{'you get' if i == seat else f'Player {i + 1} gets'} {fmt_num(u[i])} points"
            for i in range(game.num_players)
        )
        lines.append(f"\t- If {who}: {pay}.")
    return "\n".join(lines)


def _continuation(config, rounds_played: int) -> str:
    return (
        f"After each round, there is a {fmt_num(round(config.delta * 100, 9))}% chance probability "
        f"that an additional round will take place. You have already played this game for "
        f"{rounds_played} round(s) in the past."
    )


_HISTORY_INTRO = (
    "Next, you find the info available to you about the history of play that is related "
    "to you and the other player(s) you are playing with in this upcoming round."
)


def render_repetition(view: RepetitionView, config) -> str:
    text = (
        "Here is the twist:\n"
        "You are playing this game *repeatedly* with the same player(s). The action sampled from "
        "your action probability distribution will be visible to those player(s) in future rounds "
        "and may influence their decisions.\n" + _continuation(config, view.rounds_played)
    )
    if not view.records:
        return text
    blocks = []
    for rec in reversed(view.records):
        lines = [f"[Round {rec.round}] "]
        for seat, (p, a) in enumerate(zip(rec.participants, rec.actions)):
            who = "You" if p == view.viewer else f"Player {seat + 1}"
            lines.append(f"\t{who}: {a}")
        blocks.append("\n".join(lines))
    return text + "\n\n" + _HISTORY_INTRO + "\n\n" + "\n".join(blocks)


def agent_name(agent: int, viewer: int) -> str:
    return "You" if agent == viewer else f"Agent #{agent + 1}"


def _entry(node: HistoryNode, viewer: int) -> str:
    rec = node.record
    order = [node.subject] + [p for p in rec.participants if p != node.subject]
    sides = []
    for p in order:
        s = rec.seat_of(p)
        sides.append(
            f"{agent_name(p, viewer)} (played {rec.actions[s]}, received {fmt_num(rec.payoffs[s])}pts)"
        )
    return f"[Round {rec.round}] " + " vs ".join(sides)


def render_tree(nodes, viewer: int, prefix: str = "") -> list[str]:
    lines = []
    for i, node in enumerate(nodes):
        last = i == len(nodes) - 1
        lines.append(prefix + ("└─ " if last else "├─ ") + _entry(node, viewer))
        child = prefix + ("   " if last else "│  ")
        for j, (agent, sub) in enumerate(node.expansions):
            last_j = j == len(node.expansions) - 1
            lines.append(
                child + ("└─ " if last_j else "├─ ")
                + f"History of {agent_name(agent, viewer)} before this match:"
            )
            lines.extend(render_tree(sub, viewer, child + ("   " if last_j else "│  ")))
    return lines


def render_reputation(view: ReputationView, config) -> str:
    v = view.viewer
    parts = [
        "Here is the twist:\n"
        "You are playing this game *repeatedly* but with varying players who you encounter at random.\n"
        "The action sampled from your action probability distribution in the current round will be "
        "visible to the players you encounter in future rounds and may influence their decisions.\n"
        + _continuation(config, view.rounds_played)
    ]
    if view.rounds_played > 0:
        parts.append(_HISTORY_INTRO)
    names = ", ".join(agent_name(c, v) for c in view.coplayers)
    parts.append(f"You are playing with {len(view.coplayers)} other agent(s): {names}.")
    if view.own:
        parts.append("Your history of play:\n" + "\n".join(render_tree(view.own, v)))
    for agent, nodes in view.others:
        if nodes:
            parts.append(
                f"History of play of {agent_name(agent, v)}:\n" + "\n".join(render_tree(nodes, v))
            )
    return "\n\n".join(parts)


def _mediator_lines(spec: MediatorSpec) -> str:
    return "\n".join(
        f"\t• If {d} player(s) delegate to the mediator, it will play action {a}." for d, a in spec.plan
    )


def _contract_lines(spec: ContractSpec, game: Game) -> str:
    lines = []
    for lab in game.shared_actions:
        x = spec.value(lab)
        if x > 0:
            lines.append(f"- If a player chooses {lab}, they receive an additional payment of {x} "
                         "point(s), drawn equally from the other players.")
        elif x < 0:
            lines.append(f"- If a player chooses {lab}, they pay an additional payment of {-x} "
                         "point(s), distributed equally among the other players.")
        else:
            lines.append(f"- If a player chooses {lab}, there is no additional payment in either direction.")
    return "\n".join(lines)


_VOTE_RULE = ("The winning {kind} will be selected uniform at random from those with the "
              "maximum number of approvals.")


def render_mediator_proposal(game: Game) -> str:
    n = game.num_players
    keys = ", ".join(['"1": <Action>', "...", f'"{n}": <Action>'])
    return (
        "Here is the twist:\n"
        "There will be a mediator for this game, and your task now is to design and propose one.\n\n"
        "- A mediator is an entity that plays actions on behalf of delegating players.\n"
        "- Each player may choose to delegate their move to the mediator or act independently.\n"
        "- The mediator observes the number of players delegating to the mediator and then plays "
        "the same action for all delegating players.\n\n"
        "The other player(s) will also design and propose a mediator. Only one will be present in the "
        "game though. Which one will be decided in a separate step later via an approval voting process "
        "by you and the other player(s). " + _VOTE_RULE.format(kind="mediator") + "\n\n"
        "Output Format:\n"
        "Return a valid JSON object in a single line:\n"
        "{" + keys + '} where <Action> is a string like "A0", "A1" ...\n\n'
        f"- Keys: the number of players delegating (from 1 to {n}).\n"
        '- Values: the action the mediator will play on behalf of delegating players (e.g., "A0" or "A1" etc.).'
    )


_MEDIATOR_OPTION = (
    "If you choose to delegate, the mediator will play an action for you based on how many players "
    "have delegated to it.\nYou can also choose to act independently."
)


def render_mediator_vote(game: Game, slate: tuple[Proposal, ...]) -> str:
    others = "the other player" if game.num_players == 2 else "the other players"
    designs = "\n\n".join(
        f"Mediator proposed by Player {p.proposer + 1}:\n" + _mediator_lines(p.spec) for p in slate
    )
    return (
        "Here is the twist:\n"
        "On top of the original game rules, you will have the option to delegate your move to a mediator.\n"
        + _MEDIATOR_OPTION + "\n\n"
        f"But first, you and {others} have to decide via an approval voting process which mediator will "
        "be present in the game. Your task now is to review each mediator and decide which ones you "
        "approve of. " + _VOTE_RULE.format(kind="mediator") + "\n\n"
        "Here are the mediator designs that have been proposed:\n" + designs + "\n\n"
        "Output Format:\n"
        "Return a valid JSON object with your approvals:\n"
        '{"M1": <true/false>, "M2": <true/false>, ...}\n\n'
        '- Keys: mediator identifiers (e.g., "M1", "M2", ...)\n'
        "- Values: `true` if you approve, `false` if you don't\n"
        "- Ensure all mediators have an entry"
    )


def render_mediator_act(game: Game, winner: Proposal) -> str:
    m = delegate_index(game)
    return (
        "Here is the twist:\n"
        "On top of the original game rules, you have the option to delegate your move to a mediator.\n"
        + _MEDIATOR_OPTION + "\n\n"
        f"The available mediator was proposed by Player {winner.proposer + 1} and selected via approval "
        "voting among the players. Here is what the mediator would do for the players that delegate to it:\n"
        + _mediator_lines(winner.spec) + "\n\n"
        f'Consider A{m} as an additional action "Delegate to Mediator". Your final mixed strategy should '
        f"include probability for all actions A0, A1, ..., A{m}."
    )


def render_contract_proposal(game: Game) -> str:
    return (
        "Here is the twist:\n"
        "There will be the option for a payment contract in this game, and your task now is to design "
        "and propose one.\n\n"
        "- A contract is an additional payoff agreement on top of the original game payoffs. It specifies "
        "a number for each action that a player can play, indicating one of three cases:\n"
        "    * Positive number (+): the player receives an additional payment of X points in total, "
        "drawn equally from the other player(s).\n"
        "    * Negative number (-): the player pays an additional payment of X points in total, "
        "distributed equally among the other player(s).\n"
        "    * Zero (0): no additional payments in either direction.\n"
        "- Each player may choose to accept the contract as a whole or not.\n"
        "- The contract becomes active only if all players accept.\n\n"
        "The other player(s) will also design and propose a contract. Only one will be present in the "
        "game though. Which one will be decided in a separate step later via an approval voting process "
        "by you and the other player(s). " + _VOTE_RULE.format(kind="contract") + "\n\n"
        "Output Format:\n"
        "Return a valid JSON object in a single line:\n"
        '{"A0": <INT>, "A1": <INT>, ...}\n\n'
        "- Keys: all available game actions.\n"
        "- Values: integers representing the extra payoff for that action."
    )


def render_contract_vote(game: Game, slate: tuple[Proposal, ...]) -> str:
    designs = "\n\n".join(
        f"Contract proposed by Player {p.proposer + 1}:\n" + _contract_lines(p.spec, game) for p in slate
    )
    return (
        "Here is the twist:\n"
        "On top of the original game rules, a payment contract can be put in place if the players agree "
        "to it via an approval voting process. A contract specifies a payment value for each action that "
        "a player can play.\n\n"
        "Your task now is to review each proposed contract and decide which ones you approve of. "
        + _VOTE_RULE.format(kind="contract") + "\n\n"
        "Here are the contract designs that have been proposed:\n" + designs + "\n\n\n"
        "Output Format:\n"
        "Return a valid JSON object with your approvals:\n"
        '{"C1": <true/false>, "C2": <true/false>, ...}\n\n'
        '- Keys: contract identifiers (e.g., "C1", "C2", ...)\n'
        "- Values: `true` if you approve, `false` if you don't\n"
        "- Ensure all contracts have an entry"
    )


def render_contract_sign(game: Game, winner: Proposal) -> str:
    return (
        "Here is the twist:\n"
        "On top of the original game rules, you have the option to sign a payment contract. A contract "
        "specifies a payment value for each action that a player can play. Here is the contract that was "
        f"selected via approval voting (proposed by Player {winner.proposer + 1}):\n"
        + _contract_lines(winner.spec, game) + "\n\n"
        "At this stage, you are asked to decide whether to sign the contract. The contract becomes active "
        "only if all players sign it.\n\n"
        "Output Requirement:\n"
        "- Respond with a valid JSON object.\n"
        '- Format: {"sign": <BOOL>} where <BOOL> is true or false.'
    )


def render_contract_act(game: Game, winner: Proposal | None, active: bool) -> str:
    if not active or winner is None:
        return (
            "Here is the twist:\n"
            "A payment contract was proposed, but not every player signed it, so no contract is in place. "
            "The original game rules apply unchanged."
        )
    return (
        "Here is the twist:\n"
        "On top of the original game rules, there is a payment contract in place because every player "
        "signed it in beforehand. Here is the contract that was selected via approval voting "
        f"(proposed by Player {winner.proposer + 1}):\n"
        + _contract_lines(winner.spec, game) + "\n\n"
        "Since this contract directly affects your final payoff, consider the contract when making your "
        "strategy decisions!"
    )


def render_twist(request: DecisionRequest) -> str | None:
    g, cfg, phase = request.game, request.config, request.phase
    if phase == "propose_mediator":
        return render_mediator_proposal(g)
    if phase == "propose_contract":
        return render_contract_proposal(g)
    if phase == "vote":
        if request.proposal_kind == "mediator":
            return render_mediator_vote(g, request.slate)
        return render_contract_vote(g, request.slate)
    if phase == "sign":
        return render_contract_sign(g, request.winner)
    if isinstance(request.history, RepetitionView):
        return render_repetition(request.history, cfg)
    if isinstance(request.history, ReputationView):
        return render_reputation(request.history, cfg)
    if cfg.variant == "mediation" and request.winner is not None:
        return render_mediator_act(g, request.winner)
    if cfg.variant == "contracting":
        return render_contract_act(g, request.winner, request.contract_active)
    return None


def render_prompt(request: DecisionRequest) -> str:
    """Full user prompt: game description, mechanism twist, output format."""
    parts = [render_game(request.game, request.seat)]
    twist = render_twist(request)
    if twist:
        parts.append(twist)
    if request.phase == "act":
        parts.append(ACTION_SCHEMA)
    return "\n\n".join(parts)


def render_judge_prompt(text: str) -> str:
    return JUDGE_TEMPLATE.format(text=text)
