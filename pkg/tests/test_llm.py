import json

import httpx
import pytest

from flockplan.core import TaskSpec, Vec2
from flockplan.llm import ChatClient, Conversation, LLMPlanner, LLMSettings
from flockplan.planner import ParseFailure, PlannerUnavailable, StepContext, generate_plan
from scripted import ScriptedModel

SETTINGS = LLMSettings(base_url="http://model.test/v1", backoff=0.0)


def _client(handler, **kw):
    return ChatClient(LLMSettings(**{**SETTINGS.__dict__, **kw}), httpx.MockTransport(handler))


def test_request_shape_and_auth(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "sk-test")
    seen = {}

    def handler(req):
        seen["url"] = str(req.url)
        seen["auth"] = req.headers.get("authorization")
        seen["body"] = req.read()
        return httpx.Response(200, json={"choices": [{"message": {"content": "hi"}}]})

    assert _client(handler).complete([{"role": "user", "content": "x"}]) == "hi"
    assert seen["url"] == "http://model.test/v1/chat/completions"
    assert seen["auth"] == "Bearer sk-test"
    body = json.loads(seen["body"])
    assert body["model"] == "gpt-4o-mini" and body["temperature"] == 0


def test_retries_then_gives_up():
    calls = []

    def handler(req):
        calls.append(1)
        return httpx.Response(503)

    with pytest.raises(PlannerUnavailable):
        _client(handler, max_retries=3).complete([])
    assert len(calls) == 3


def test_retry_recovers():
    calls = []

    def handler(req):
        calls.append(1)
        if len(calls) == 1:
            raise httpx.ConnectError("boom")
        return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

    assert _client(handler).complete([]) == "ok"


def test_conversation_keeps_last_exchanges():
    c = Conversation("sys", keep=2)
    for k in range(5):
        c.record(f"u{k}", f"a{k}")
    msgs = c.messages("now")
    assert [m["content"] for m in msgs] == ["sys", "u3", "a3", "u4", "a4", "now"]
    assert msgs[0]["role"] == "system" and msgs[-1]["role"] == "user"


def test_planner_reprompts_then_parses():
    model = ScriptedModel(garbage={1})
    planner = LLMPlanner(2, TaskSpec(), _client(model))
    res = planner.generate_plan()
    assert res.plan.origin_id == 2 and len(res.plan) == 3
    assert (planner.replies, planner.parse_failures) == (2, 1)
    assert "could not be read" in model.requests[1]["messages"][-1]["content"]


def test_planner_gives_up_after_budget():
    planner = LLMPlanner(0, TaskSpec(), _client(ScriptedModel(garbage={1, 2, 3})))
    with pytest.raises(ParseFailure):
        planner.generate_plan()
    assert planner.replies == 3


def test_planner_step():
    spec = TaskSpec()
    plan = generate_plan("oracle", 0, spec).plan
    planner = LLMPlanner(0, spec, _client(ScriptedModel(spec)))
    p = planner.propose_step(StepContext(Vec2(50, 40), [], plan, Vec2(50, 44), spec))
    assert p == Vec2(50, 44)
