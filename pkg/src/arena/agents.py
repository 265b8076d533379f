"""Agent implementations and the response parser.

Every agent produces raw text for the host to parse: remote chat-completion
models return whatever the provider sends back, while the built-in kinds
(rational, level-k, constant, random, replay, always-violate) synthesize a
compliant JSON document around their computed action.  The mock kind returns
scripted raw strings verbatim so parser-failure paths stay testable.

Accounting separation matters here: format violations are values produced by
the parser and are never retried, while transport failures raise and are
retried by the HTTP client without ever being counted as rule breaks.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import requests

from .games import BeautyContestParams, GameKind, GameSpec, nash_profile
from .prompts import PromptBundle


class DescriptorError(ValueError):
    """An agent descriptor misses or carries fields its kind does not allow."""


class MissingApiKey(RuntimeError):
    pass


class TransportError(RuntimeError):
    """Network or server-side failure after all retries."""


class Timeout(TransportError):
    pass


class MalformedProviderReply(RuntimeError):
    """The provider answered, but not in the chat-completion shape."""


class AgentKind(Enum):
    LLM = "llm"
    RATIONAL = "rational"
    LEVEL_K = "level_k"
    CONSTANT = "constant"
    RANDOM = "random"
    REPLAY = "replay"
    MOCK = "mock"
    ALWAYS_VIOLATE = "always_violate"


@dataclass(frozen=True)
class ProviderConfig:
    """How to reach one chat-completion endpoint.

    The credential is read from the named environment variable at call time
    and never stored; an empty api_key_env means the endpoint (e.g. the mock
    server) needs no auth header.
    """

    endpoint_url: str
    model_id: str
    api_key_env: str = ""
    temperature: float = 0.0
    timeout_secs: float = 30.0
    max_transport_retries: int = 2
    backoff_secs: float = 0.25

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise DescriptorError("temperature must be >= 0")
        if self.timeout_secs <= 0:
            raise DescriptorError("timeout_secs must be positive")
        if self.max_transport_retries < 0:
            raise DescriptorError("max_transport_retries must be >= 0")


_REQUIRED_FIELDS = {
    AgentKind.LLM: ("provider",),
    AgentKind.LEVEL_K: ("k",),
    AgentKind.CONSTANT: ("value",),
    AgentKind.REPLAY: ("script",),
    AgentKind.MOCK: ("script",),
}


@dataclass(frozen=True)
class AgentDescriptor:
    name: str
    kind: AgentKind
    provider: Optional[ProviderConfig] = None
    k: Optional[int] = None
    value: Optional[float] = None
    script: Optional[tuple] = None

    def __post_init__(self) -> None:
        if self.script is not None:
            object.__setattr__(self, "script", tuple(self.script))
        required = _REQUIRED_FIELDS.get(self.kind, ())
        for name in ("provider", "k", "value", "script"):
            value = getattr(self, name)
            if name in required and value is None:
                raise DescriptorError(f"{self.kind.value} agent requires {name!r}")
            if name not in required and value is not None:
                raise DescriptorError(f"{self.kind.value} agent must not set {name!r}")
        if self.kind is AgentKind.LEVEL_K and self.k < 1:
            raise DescriptorError("level-k agent needs k >= 1")
        if self.kind in (AgentKind.REPLAY, AgentKind.MOCK) and not self.script:
            raise DescriptorError("script must be nonempty")
        if self.kind is AgentKind.REPLAY and not all(
            isinstance(a, (int, float)) for a in self.script
        ):
            raise DescriptorError("replay script must contain numbers")
        if self.kind is AgentKind.MOCK and not all(
            isinstance(a, str) for a in self.script
        ):
            raise DescriptorError("mock script must contain raw strings")


class ResponseViolationKind(Enum):
    NO_DOCUMENT = "no_document"
    MISSING_KEY = "missing_key"
    NON_NUMERIC = "non_numeric"
    RULE_VIOLATION = "rule_violation"


@dataclass(frozen=True)
class ResponseViolation:
    kind: ResponseViolationKind
    detail: str = ""


@dataclass(frozen=True)
class ParsedResponse:
    """Raw text reduced to either a numeric action or a typed violation."""

    raw_text: str
    extracted: Optional[dict] = None
    action: Optional[float] = None
    violation: Optional[ResponseViolation] = None

    def __post_init__(self) -> None:
        if (self.action is None) == (self.violation is None):
            raise ValueError("exactly one of action/violation must be set")


def _first_json_object(raw: str) -> Optional[dict]:
    """The first well-formed brace-delimited document in raw text.

    Tolerates surrounding prose, code fences and whitespace by scanning for
    balanced braces (string-aware) and attempting a parse at each candidate.
    """
    start = raw.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for pos in range(start, len(raw)):
            ch = raw[pos]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        doc = json.loads(raw[start : pos + 1])
                    except json.JSONDecodeError:
                        break
                    if isinstance(doc, dict):
                        return doc
                    break
        start = raw.find("{", start + 1)
    return None


def _as_real(value: object) -> Optional[float]:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            return None
    return None


def parse_response(raw: str, schema: Sequence[str]) -> ParsedResponse:
    """Reduce raw model text to a float action under the schema's action key.

    All failures are violation values, never exceptions: no document, a
    missing required key, or a non-numeric action.
    """
    action_key = "answer" if "answer" in schema else "bid"
    doc = _first_json_object(raw)
    if doc is None:
        return ParsedResponse(
            raw, violation=ResponseViolation(ResponseViolationKind.NO_DOCUMENT, "no JSON object found")
        )
    if action_key not in doc:
        return ParsedResponse(
            raw,
            extracted=doc,
            violation=ResponseViolation(ResponseViolationKind.MISSING_KEY, action_key),
        )
    action = _as_real(doc[action_key])
    if action is None:
        return ParsedResponse(
            raw,
            extracted=doc,
            violation=ResponseViolation(ResponseViolationKind.NON_NUMERIC, action_key),
        )
    for key in schema:
        if key not in doc:
            return ParsedResponse(
                raw,
                extracted=doc,
                violation=ResponseViolation(ResponseViolationKind.MISSING_KEY, key),
            )
    return ParsedResponse(raw, extracted=doc, action=action)


def rational_action(spec: GameSpec, seat: int) -> float:
    """The hard-coded equilibrium action for one seat."""
    return nash_profile(spec)[seat]


def level_k_action(k: int, params: BeautyContestParams) -> float:
    """Bounded-rationality contest action: the midpoint anchor scaled k times.

    Level 0 plays the midpoint of the interval; each level best-responds by
    multiplying once more, clamped into [lower, upper].
    """
    if k < 0:
        raise DescriptorError("k must be >= 0")
    midpoint = (Fraction(params.lower) + Fraction(params.upper)) / 2
    value = float(params.multiplier**k * midpoint)
    return min(max(value, params.lower), params.upper)


@dataclass
class RunContext:
    """What a seat knows when asked to act in one run."""

    spec: GameSpec
    seat: int
    run_index: int = 1
    rng: Optional[object] = None
    prev_action: Optional[float] = None
    prev_payoff: Optional[float] = None


_CANNED_TEXT = {
    "understanding": "scripted participant",
    "reason": "scripted policy",
    "goal": "maximize my payoff",
}


def _synthesize_document(action: float, schema: Sequence[str], ctx: RunContext) -> str:
    doc: dict[str, object] = {}
    for key in schema:
        if key in ("answer", "bid"):
            doc[key] = action
        elif key in ("previous answer", "previous bid"):
            doc[key] = ctx.prev_action if ctx.prev_action is not None else action
        elif key == "previous payoff":
            doc[key] = ctx.prev_payoff if ctx.prev_payoff is not None else 0.0
        elif key == "popular answer":
            doc[key] = action
        else:
            doc[key] = _CANNED_TEXT.get(key, "")
    return json.dumps(doc)


def _computed_action(agent: AgentDescriptor, ctx: RunContext) -> float:
    spec = ctx.spec
    kind = agent.kind
    if kind is AgentKind.RATIONAL:
        return rational_action(spec, ctx.seat)
    if kind is AgentKind.LEVEL_K:
        if spec.kind is GameKind.BEAUTY_CONTEST:
            return level_k_action(agent.k, spec.bc)
        # Truthful bidding is dominant whatever the reasoning depth.
        return spec.auction.private_values[ctx.seat]
    if kind is AgentKind.CONSTANT:
        return float(agent.value)
    if kind is AgentKind.REPLAY:
        return float(agent.script[(ctx.run_index - 1) % len(agent.script)])
    if kind is AgentKind.RANDOM:
        if ctx.rng is None:
            raise DescriptorError("random agent needs a seeded generator")
        if spec.kind is GameKind.BEAUTY_CONTEST:
            return float(ctx.rng.uniform(spec.bc.lower, spec.bc.upper))
        return float(ctx.rng.uniform(0.0, spec.auction.assets[ctx.seat]))
    if kind is AgentKind.ALWAYS_VIOLATE:
        if spec.kind is GameKind.BEAUTY_CONTEST:
            return 2.0 * spec.bc.upper if spec.bc.upper > 0 else 1.0
        return 2.0 * spec.auction.assets[ctx.seat]
    raise DescriptorError(f"{kind.value} does not compute actions")


def act(agent: AgentDescriptor, prompt: PromptBundle, ctx: RunContext) -> str:
    """Produce raw response text for one seat in one run."""
    if agent.kind is AgentKind.LLM:
        messages = (
            {"role": "system", "content": prompt.system},
            {"role": "user", "content": prompt.user},
        )
        return chat_complete(agent.provider, messages)
    if agent.kind is AgentKind.MOCK:
        return agent.script[(ctx.run_index - 1) % len(agent.script)]
    action = _computed_action(agent, ctx)
    return _synthesize_document(action, prompt.schema, ctx)


def _bearer_headers(provider: ProviderConfig) -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    if provider.api_key_env:
        key = os.environ.get(provider.api_key_env)
        if not key:
            raise MissingApiKey(f"environment variable {provider.api_key_env} is not set")
        headers["Authorization"] = f"Bearer {key}"
    return headers


def chat_complete(
    provider: ProviderConfig, messages: Sequence[Mapping[str, str]]
) -> str:
    """One chat completion with exponential-backoff retries on transport
    failures only; malformed 200 replies are surfaced immediately."""
    if not messages:
        raise ValueError("messages must be nonempty")
    headers = _bearer_headers(provider)
    payload = {
        "model": provider.model_id,
        "messages": list(messages),
        "temperature": provider.temperature,
    }
    attempts = 1 + provider.max_transport_retries
    last_error: Optional[Exception] = None
    timed_out = False
    for attempt in range(attempts):
        if attempt:
            time.sleep(provider.backoff_secs * 2 ** (attempt - 1))
        try:
            reply = requests.post(
                provider.endpoint_url,
                json=payload,
                headers=headers,
                timeout=provider.timeout_secs,
            )
        except requests.Timeout as exc:
            last_error, timed_out = exc, True
            continue
        except requests.RequestException as exc:
            last_error, timed_out = exc, False
            continue
        if reply.status_code >= 500:
            last_error, timed_out = (
                TransportError(f"server error {reply.status_code}"),
                False,
            )
            continue
        if reply.status_code != 200:
            raise TransportError(f"request rejected with status {reply.status_code}")
        return _extract_content(reply)
    if timed_out:
        raise Timeout(f"no reply within {provider.timeout_secs}s after {attempts} attempts")
    raise TransportError(f"transport failed after {attempts} attempts: {last_error}")


def _extract_content(reply: requests.Response) -> str:
    try:
        body = reply.json()
        content = body["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedProviderReply(f"unusable completion body: {exc}") from exc
    if not isinstance(content, str):
        raise MalformedProviderReply("completion content is not text")
    return content
