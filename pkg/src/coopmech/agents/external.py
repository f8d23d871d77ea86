"""Transport-backed agents: a generic chat endpoint and an offline canned replay."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

from .base import AgentDecisionError, DecisionRequest, DecisionResponse, ParseError, parse_response
from .prompts import COT_INSTRUCTION, DIRECT_INSTRUCTION, render_prompt

log = logging.getLogger(__name__)

Message = dict  # {"role": ..., "content": ...}


class TransportError(RuntimeError):
    """The chat backend could not produce a reply within the retry budget."""


class ChatTransport(Protocol):
    def complete(self, messages: Sequence[Message], params: dict) -> str: ...


def request_key(messages: Sequence[Message], params: dict) -> str:
    blob = json.dumps({"messages": list(messages), "params": params}, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class CannedTransport:
    """Replays responses stored as ``<request_key>.txt`` files in ``directory``."""

    directory: Path

    def __post_init__(self):
        self.directory = Path(self.directory)

    def complete(self, messages, params):
        path = self.directory / f"{request_key(messages, params)}.txt"
        if not path.exists():
            raise TransportError(f"no canned response for request {path.stem[:12]}")
        return path.read_text(encoding="utf-8")

    def store(self, messages, params, text: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / f"{request_key(messages, params)}.txt"
        path.write_text(text, encoding="utf-8")
        return path


@dataclass
class HttpChatTransport:
    """POSTs ``{"model", "messages", **params}`` and reads ``choices[0].message.content``.

    The API key is read from the environment variable named by ``api_key_env``.
    """

    endpoint: str
    model: str
    api_key_env: str = "COOPMECH_API_KEY"
    timeout: float = 120.0
    retries: int = 2
    backoff: float = 2.0

    def complete(self, messages, params):
        body = json.dumps({"model": self.model, "messages": list(messages), **params}).encode()
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last = None
        for attempt in range(self.retries + 1):
            req = urllib.request.Request(self.endpoint, data=body, headers=headers, method="POST")
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    data = json.loads(resp.read().decode("utf-8"))
                return data["choices"][0]["message"]["content"]
            except (urllib.error.URLError, TimeoutError, OSError, KeyError, ValueError) as exc:
                last = exc
                log.warning("chat request failed (attempt %d): %s", attempt + 1, exc)
                if attempt < self.retries:
                    time.sleep(self.backoff * (attempt + 1))
        raise TransportError(f"chat request failed after {self.retries + 1} attempt(s): {last}")


@dataclass
class ExternalAgent:
    """Renders the prompt, asks the transport, parses; re-asks up to ``reasks`` times."""

    name: str
    transport: ChatTransport
    reasoning: bool = True
    reasks: int = 2
    params: dict = field(default_factory=lambda: {"temperature": 1.0})
    transcripts: list = field(default_factory=list)

    def messages(self, request: DecisionRequest) -> list[Message]:
        instruction = COT_INSTRUCTION if self.reasoning else DIRECT_INSTRUCTION
        return [{"role": "user", "content": render_prompt(request) + "\n\n" + instruction}]

    def decide(self, request: DecisionRequest) -> DecisionResponse:
        messages = self.messages(request)
        errors = []
        for _ in range(self.reasks + 1):
            try:
                text = self.transport.complete(messages, dict(self.params))
            except TransportError as exc:
                raise TransportError(f"{self.name} / {request.phase}: {exc}") from exc
            self.transcripts.append(text)
            try:
                return parse_response(request.phase, text, request)
            except ParseError as exc:
                errors.append(str(exc))
        raise AgentDecisionError(self.name, request.phase, "; ".join(errors))
