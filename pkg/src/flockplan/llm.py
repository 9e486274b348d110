"""Chat-completions client and the language-model planner.

Each robot owns a :class:`Conversation`: the system message once, then one
user/assistant exchange per request. Only the last few exchanges are sent so
long runs stay inside the model's context window.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field

import httpx

from .core import SeededRng, TaskSpec, Vec2
from .planner import (
    PLAN_FORMAT_REMINDER,
    POSITION_FORMAT_REMINDER,
    ParseFailure,
    PlannerUnavailable,
    PlanResult,
    StepContext,
    parse_plan_reply,
    parse_position_reply,
    render_plan_request,
    render_step_request,
    render_system_prompt,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LLMSettings:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o-mini"
    temperature: float = 0.0
    timeout: float = 60.0
    api_key_env: str = "OPENAI_API_KEY"
    max_retries: int = 3
    backoff: float = 1.0
    reprompts: int = 2
    history_exchanges: int = 6


class ChatClient:
    """Minimal POST ``/chat/completions`` client with retry on transport errors."""

    def __init__(self, settings: LLMSettings, transport: httpx.BaseTransport | None = None):
        self.settings = settings
        headers = {}
        key = os.environ.get(settings.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(
            base_url=settings.base_url.rstrip("/"),
            timeout=settings.timeout,
            headers=headers,
            transport=transport,
        )

    def complete(self, messages: list[dict]) -> str:
        payload = {
            "model": self.settings.model,
            "messages": messages,
            "temperature": self.settings.temperature,
        }
        last: Exception | None = None
        for attempt in range(self.settings.max_retries):
            try:
                resp = self._http.post("/chat/completions", json=payload)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
                last = exc
                log.warning("event=llm_retry attempt=%d error=%s", attempt + 1, exc)
                if attempt + 1 < self.settings.max_retries and self.settings.backoff > 0:
                    time.sleep(self.settings.backoff * 2**attempt)
        raise PlannerUnavailable(f"chat endpoint failed after retries: {last}")

    def close(self) -> None:
        self._http.close()


@dataclass
class Conversation:
    system: str
    keep: int = 6
    exchanges: list[tuple[str, str]] = field(default_factory=list)

    def messages(self, user: str) -> list[dict]:
        msgs = [{"role": "system", "content": self.system}]
        for u, a in self.exchanges[-self.keep :] if self.keep else []:
            msgs.append({"role": "user", "content": u})
            msgs.append({"role": "assistant", "content": a})
        msgs.append({"role": "user", "content": user})
        return msgs

    def record(self, user: str, reply: str) -> None:
        self.exchanges.append((user, reply))


class LLMPlanner:
    """One robot's model-backed planner.

    Unreadable replies are re-prompted up to ``settings.reprompts`` times with
    a format reminder; after that :class:`ParseFailure` propagates and the
    caller decides the fallback.
    """

    def __init__(self, robot_id: int, spec: TaskSpec, client: ChatClient):
        self.robot_id = robot_id
        self.spec = spec
        self.client = client
        self.conversation = Conversation(
            render_system_prompt(spec), keep=client.settings.history_exchanges
        )
        self.replies = 0
        self.parse_failures = 0

    def _ask(self, prompt: str, parse, reminder: str):
        user = prompt
        for attempt in range(self.client.settings.reprompts + 1):
            reply = self.client.complete(self.conversation.messages(user))
            self.conversation.record(user, reply)
            self.replies += 1
            try:
                return parse(reply)
            except ParseFailure as exc:
                self.parse_failures += 1
                log.info(
                    "robot=%d event=parse_failure attempt=%d reason=%s",
                    self.robot_id,
                    attempt + 1,
                    exc.reason,
                )
                err = exc
                user = reminder
        raise err

    def generate_plan(self, rng: SeededRng | None = None) -> PlanResult:
        n = self.spec.team_size
        return self._ask(
            render_plan_request(self.spec),
            lambda r: parse_plan_reply(r, n, origin_id=self.robot_id),
            PLAN_FORMAT_REMINDER.format(n=n),
        )

    def propose_step(self, ctx: StepContext) -> Vec2:
        return self._ask(render_step_request(ctx), parse_position_reply, POSITION_FORMAT_REMINDER)
