"""Provider-agnostic text generation with a deterministic scripted backend.

Every agent that needs language-model output goes through ``complete`` with a
role tag, so prompts, token metering and failure handling are uniform.  The
scripted backend replays a fixture file and makes the whole pipeline runnable
and byte-reproducible with no network; the live backend talks to an
HTTP chat-completion endpoint with retry.

``parse_structured`` is the single point where model text becomes data: all
agents instruct the model to emit exactly one JSON object, and malformed
output fails identically everywhere.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional, Union

import httpx

from .model import CostLedger, EventKind, RunState


class RoleTag(str, Enum):
    QUESTION_GEN = "QuestionGen"
    DRAFT_GEN = "DraftGen"
    CRITIQUE = "Critique"
    REVIEW = "Review"
    REVISION_PLAN = "RevisionPlan"


# Ledger/event attribution for each calling role.
AGENT_OF_ROLE = {
    RoleTag.QUESTION_GEN: "question_agent",
    RoleTag.DRAFT_GEN: "paper_agent",
    RoleTag.CRITIQUE: "reviewer_agent",
    RoleTag.REVIEW: "reviewer_agent",
    RoleTag.REVISION_PLAN: "econometrics_agent",
}


class GatewayError(Exception):
    """Transport or protocol failure talking to a live backend."""


class FixtureExhaustedError(Exception):
    def __init__(self, role_tag: RoleTag, detail: str = "") -> None:
        self.role_tag = role_tag
        msg = f"no scripted fixture entry left for role {role_tag.value}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class LlmParseError(Exception):
    """No JSON object could be extracted from model output."""

    def __init__(self, message: str, raw_text: str = "") -> None:
        super().__init__(message)
        self.raw_text = raw_text


class SchemaValidationError(Exception):
    """Extracted JSON does not satisfy the expected shape."""

    def __init__(self, schema_tag: str, problems: list[str]) -> None:
        self.schema_tag = schema_tag
        self.problems = problems
        super().__init__(f"{schema_tag}: " + "; ".join(problems))


@dataclass
class LlmRequest:
    role_tag: RoleTag
    system_text: str
    user_text: str
    max_output_tokens: int = 4096
    temperature: float = 0.2

    def __post_init__(self) -> None:
        if not self.system_text or not self.user_text:
            raise ValueError("prompts must be nonempty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass
class LlmResponse:
    text: str
    input_tokens: int
    output_tokens: int
    backend_id: str


@dataclass
class FixtureEntry:
    role_tag: RoleTag
    text: str
    match: Optional[str] = None
    input_tokens: Optional[int] = None
    output_tokens: Optional[int] = None


@dataclass
class ScriptFixture:
    """Ordered canned responses; consumed in order within each role tag."""

    entries: list[FixtureEntry] = field(default_factory=list)

    @classmethod
    def from_dicts(cls, dicts: list[dict[str, Any]]) -> "ScriptFixture":
        entries = []
        for d in dicts:
            entries.append(FixtureEntry(
                role_tag=RoleTag(d["role"]),
                text=d["text"],
                match=d.get("match"),
                input_tokens=d.get("input_tokens"),
                output_tokens=d.get("output_tokens"),
            ))
        return cls(entries)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ScriptFixture":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dicts(data["entries"])


def _approx_tokens(text: str) -> int:
    # Deterministic stand-in when a fixture entry gives no counts.
    return max(1, len(text) // 4)


class ScriptedBackend:
    """Deterministic replay of a ScriptFixture.  Thread-safe."""

    backend_id = "scripted"

    def __init__(self, fixture: ScriptFixture) -> None:
        self._entries = list(fixture.entries)
        self._consumed = [False] * len(self._entries)
        self._lock = threading.Lock()

    def complete(self, request: LlmRequest) -> LlmResponse:
        with self._lock:
            for i, entry in enumerate(self._entries):
                if self._consumed[i] or entry.role_tag is not request.role_tag:
                    continue
                if entry.match is not None and entry.match not in request.user_text:
                    continue
                self._consumed[i] = True
                return LlmResponse(
                    text=entry.text,
                    input_tokens=(entry.input_tokens
                                  if entry.input_tokens is not None
                                  else _approx_tokens(request.system_text
                                                      + request.user_text)),
                    output_tokens=(entry.output_tokens
                                   if entry.output_tokens is not None
                                   else _approx_tokens(entry.text)),
                    backend_id=self.backend_id,
                )
        raise FixtureExhaustedError(request.role_tag)


class LiveBackend:
    """HTTP chat-completion backend.

    Endpoint and credentials come from the environment (ECONPILOT_LLM_URL,
    ECONPILOT_LLM_API_KEY, optional ECONPILOT_LLM_MODEL).  Failures are
    retried up to 3 attempts with exponential backoff, then raised as
    GatewayError.
    """

    backend_id = "live"
    MAX_ATTEMPTS = 3

    def __init__(self, url: Optional[str] = None, api_key: Optional[str] = None,
                 model: Optional[str] = None,
                 transport: Optional[Callable[[dict], dict]] = None,
                 sleep: Callable[[float], None] = time.sleep) -> None:
        self.url = url or os.environ.get("ECONPILOT_LLM_URL", "")
        self.api_key = api_key or os.environ.get("ECONPILOT_LLM_API_KEY", "")
        self.model = model or os.environ.get("ECONPILOT_LLM_MODEL", "default")
        self._transport = transport or self._http_post
        self._sleep = sleep
        if transport is None and (not self.url or not self.api_key):
            raise GatewayError(
                "live backend requires ECONPILOT_LLM_URL and "
                "ECONPILOT_LLM_API_KEY"
            )

    def _http_post(self, payload: dict) -> dict:
        resp = httpx.post(
            self.url,
            json=payload,
            headers={"Authorization": f"Bearer {self.api_key}"},
            timeout=120.0,
        )
        resp.raise_for_status()
        return resp.json()

    def complete(self, request: LlmRequest) -> LlmResponse:
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "max_tokens": request.max_output_tokens,
            "temperature": request.temperature,
        }
        last_error: Optional[Exception] = None
        for attempt in range(self.MAX_ATTEMPTS):
            try:
                data = self._transport(payload)
                usage = data.get("usage", {})
                return LlmResponse(
                    text=data["choices"][0]["message"]["content"],
                    input_tokens=int(usage.get("prompt_tokens",
                                               _approx_tokens(request.user_text))),
                    output_tokens=int(usage.get("completion_tokens", 0)),
                    backend_id=self.backend_id,
                )
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < self.MAX_ATTEMPTS - 1:
                    self._sleep(0.5 * 2 ** attempt)
        raise GatewayError(
            f"live completion failed after {self.MAX_ATTEMPTS} attempts: "
            f"{last_error}"
        )


Backend = Union[ScriptedBackend, LiveBackend]


@dataclass
class PriceTable:
    """Per-backend token prices in integer micro-dollars per token."""

    prices: dict[str, tuple[int, int]] = field(
        default_factory=lambda: {"scripted": (3, 15), "live": (3, 15)}
    )

    def for_backend(self, backend_id: str) -> tuple[int, int]:
        return self.prices.get(backend_id, (0, 0))


class Gateway:
    """Backend plus metering: every completion lands in the cost ledger and
    the event log of the run it belongs to."""

    def __init__(self, backend: Backend, prices: Optional[PriceTable] = None,
                 state: Optional[RunState] = None) -> None:
        self.backend = backend
        self.prices = prices or PriceTable()
        self.state = state

    def bind(self, state: RunState) -> "Gateway":
        return Gateway(self.backend, self.prices, state)

    def complete(self, request: LlmRequest) -> LlmResponse:
        response = self.backend.complete(request)
        if self.state is not None:
            agent = AGENT_OF_ROLE[request.role_tag]
            in_price, out_price = self.prices.for_backend(response.backend_id)
            entry = self.state.cost.add(
                agent, response.input_tokens, response.output_tokens,
                in_price, out_price,
            )
            self.state.record_event(agent, EventKind.LLM_CALL, {
                "role": request.role_tag.value,
                "backend": response.backend_id,
                "input_tokens": response.input_tokens,
                "output_tokens": response.output_tokens,
                "cost_micro": entry.cost_micro,
            })
        return response


# ---------------------------------------------------------------------------
# Structured-output extraction
# ---------------------------------------------------------------------------

REVIEW_DIMENSIONS = ("novelty", "identification", "data_quality", "clarity",
                     "policy_relevance")

_REQUEST_KINDS = {"RobustnessCheck", "IdentificationDiscussion",
                  "VariableDescription", "Exposition", "Other"}


def _extract_json_object(text: str) -> dict[str, Any]:
    decoder = json.JSONDecoder()
    idx = text.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(text[idx:])
        except json.JSONDecodeError:
            idx = text.find("{", idx + 1)
            continue
        if isinstance(obj, dict):
            return obj
        idx = text.find("{", idx + 1)
    raise LlmParseError("no JSON object found in model output", raw_text=text)


def _validate_questions(obj: dict[str, Any]) -> list[str]:
    if "questions" not in obj:
        return ["missing field 'questions'"]
    if not isinstance(obj["questions"], list):
        return ["'questions' must be a list"]
    return []


def _validate_review(obj: dict[str, Any]) -> list[str]:
    problems = []
    scores = obj.get("scores")
    if not isinstance(scores, dict):
        return ["missing or ill-typed field 'scores'"]
    for dim in REVIEW_DIMENSIONS:
        if dim not in scores:
            problems.append(f"missing score '{dim}'")
        elif not isinstance(scores[dim], (int, float)):
            problems.append(f"ill-typed score '{dim}'")
    requests = obj.get("revision_requests", [])
    if not isinstance(requests, list):
        problems.append("'revision_requests' must be a list")
    else:
        for i, req in enumerate(requests):
            if not isinstance(req, dict) or "text" not in req:
                problems.append(f"revision_requests[{i}] missing 'text'")
            elif req.get("kind") not in _REQUEST_KINDS:
                problems.append(f"revision_requests[{i}] has unknown kind "
                                f"{req.get('kind')!r}")
    return problems


def _validate_revision_plan(obj: dict[str, Any]) -> list[str]:
    specs = obj.get("additional_specifications")
    if not isinstance(specs, list):
        return ["missing or ill-typed field 'additional_specifications'"]
    return []


def _validate_critique(obj: dict[str, Any]) -> list[str]:
    problems = []
    if obj.get("severity") not in ("Minor", "Major"):
        problems.append("field 'severity' must be 'Minor' or 'Major'")
    if not isinstance(obj.get("issues"), list):
        problems.append("missing or ill-typed field 'issues'")
    return problems


_VALIDATORS = {
    "questions": _validate_questions,
    "review": _validate_review,
    "revision_plan": _validate_revision_plan,
    "critique": _validate_critique,
}


def parse_structured(text: str, schema_tag: str) -> dict[str, Any]:
    """Extract the first well-formed JSON object from ``text`` and validate
    it against the named schema.  Unknown fields are ignored; prose before or
    after the object (including code fences) is ignored."""
    if schema_tag not in _VALIDATORS:
        raise ValueError(f"unknown schema tag {schema_tag!r}")
    obj = _extract_json_object(text)
    problems = _VALIDATORS[schema_tag](obj)
    if problems:
        raise SchemaValidationError(schema_tag, problems)
    return obj


def make_backend(spec: str,
                 fixture_base: Optional[Path] = None) -> Backend:
    """Build a backend from a CLI-style selector: ``live`` or
    ``scripted:<fixture-path>``."""
    if spec == "live":
        return LiveBackend()
    if spec.startswith("scripted:"):
        path = Path(spec.split(":", 1)[1])
        if fixture_base is not None and not path.is_absolute():
            path = fixture_base / path
        return ScriptedBackend(ScriptFixture.load(path))
    raise ValueError(f"unknown backend selector {spec!r}; "
                     "use 'live' or 'scripted:<fixture.json>'")
