"""A fake chat-completions endpoint that answers like a careful model."""

import json
import re

import httpx

from flockplan.core import TaskSpec, Vec2
from flockplan.planner import (
    generate_plan,
    render_plan_reply,
    render_position_reply,
    toward,
)

_NUM = r"[-+]?\d+(?:\.\d+)?(?:e[-+]?\d+)?"
_PAIR = rf"\[({_NUM}), ({_NUM})\]"


def _reply(content: str) -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": content}}]})


class ScriptedModel:
    """Plans with the oracle layout and steps straight toward the goal.

    ``garbage`` lists reply numbers (1-based, counted over all calls) that are
    answered with unparseable text instead.
    """

    def __init__(self, spec: TaskSpec = TaskSpec(), garbage=()):
        self.spec = spec
        self.garbage = set(garbage)
        self.calls = 0
        self.requests: list[dict] = []

    def __call__(self, request: httpx.Request) -> httpx.Response:
        self.calls += 1
        body = json.loads(request.content)
        self.requests.append(body)
        if self.calls in self.garbage:
            return _reply("I am not sure what to do here.")
        user = body["messages"][-1]["content"]
        if "make a plan" in user or "'Plan:" in user:
            return _reply("Sure.\n" + render_plan_reply(generate_plan("oracle", 0, self.spec)))
        if "Position:" in user and "Current Position" not in user:
            # format reminder after a bad step reply: answer from the last real request
            user = next(
                m["content"] for m in reversed(body["messages"])
                if m["role"] == "user" and "Current Position" in m["content"]
            )
        me = re.search(rf"Current Position: {_PAIR}", user)
        goal = re.search(rf"go to {_PAIR}", user)
        p = toward(Vec2(float(me[1]), float(me[2])), Vec2(float(goal[1]), float(goal[2])),
                   self.spec.max_speed)
        return _reply(f"Moving toward the goal.\n{render_position_reply(p)}")
