from .base import (
    PHASES,
    Agent,
    AgentDecisionError,
    DecisionRequest,
    DecisionResponse,
    ParseError,
    extract_json_object,
    parse_response,
    payload_to_wire,
)
from .external import CannedTransport, ExternalAgent, HttpChatTransport, TransportError, request_key
from .kinds import AgentKind
from .prompts import render_judge_prompt, render_prompt
from .scripted import SCRIPTED, ScriptedAgent

__all__ = [
    "PHASES", "Agent", "AgentDecisionError", "AgentKind", "CannedTransport", "DecisionRequest",
    "DecisionResponse", "ExternalAgent", "HttpChatTransport", "ParseError", "SCRIPTED",
    "ScriptedAgent", "TransportError", "extract_json_object", "parse_response",
    "payload_to_wire", "render_judge_prompt", "render_prompt", "request_key",
]
