"""INI run-configuration files.

Three sections mirror :class:`~flockplan.harness.RunConfig`::

    [task]  shape robots center_x center_y desired_distance safe_distance
            max_speed comm_range arena_xmin arena_xmax arena_ymin arena_ymax
    [run]   planner planner_overrides consensus tie_break_by_id conflicting_plans
            max_rounds seeds epsilon window correspondence distortion
    [llm]   base_url model temperature timeout api_key_env max_retries
            backoff reprompts history_exchanges

``planner_overrides`` is ``id:kind`` pairs separated by commas; ``seeds`` is
a comma-separated list. Credentials are never read from the file, only
from the environment variable named by ``api_key_env``.
"""

from __future__ import annotations

import configparser
from dataclasses import fields
from pathlib import Path

from .core import Arena, ConfigError, Shape, TaskSpec, Vec2
from .harness import RunConfig
from .llm import LLMSettings
from .planner import PlannerKind, format_number

TASK_KEYS = (
    "shape", "robots", "center_x", "center_y", "desired_distance", "safe_distance",
    "max_speed", "comm_range", "arena_xmin", "arena_xmax", "arena_ymin", "arena_ymax",
)
RUN_KEYS = (
    "planner", "planner_overrides", "consensus", "tie_break_by_id", "conflicting_plans",
    "max_rounds", "seeds", "epsilon", "window", "correspondence", "distortion",
)
LLM_KEYS = tuple(f.name for f in fields(LLMSettings))
SECTIONS = {"task": TASK_KEYS, "run": RUN_KEYS, "llm": LLM_KEYS}


def parse_seeds(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        raise ConfigError("empty seed list")
    try:
        return tuple(int(s) for s in text.replace(" ", "").split(",") if s)
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}") from None


def parse_overrides(text: str) -> dict[int, PlannerKind]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        try:
            rid, kind = item.split(":")
            out[int(rid)] = PlannerKind(kind.strip())
        except ValueError:
            raise ConfigError(f"bad planner override {item!r}") from None
    return out


def _flatten(cfg: RunConfig) -> dict[str, dict[str, str]]:
    t = cfg.task
    task = {
        "shape": t.shape.value,
        "robots": str(t.team_size),
        "center_x": format_number(t.center.x),
        "center_y": format_number(t.center.y),
        "desired_distance": format_number(t.desired_distance),
        "safe_distance": format_number(t.safe_distance),
        "max_speed": format_number(t.max_speed),
        "comm_range": format_number(t.comm_range),
        "arena_xmin": format_number(t.arena.xmin),
        "arena_xmax": format_number(t.arena.xmax),
        "arena_ymin": format_number(t.arena.ymin),
        "arena_ymax": format_number(t.arena.ymax),
    }
    run = {
        "planner": cfg.planner.value,
        "planner_overrides": ",".join(f"{k}:{v.value}" for k, v in sorted(cfg.planner_overrides.items())),
        "consensus": str(cfg.consensus_enabled).lower(),
        "tie_break_by_id": str(cfg.tie_break_by_id).lower(),
        "conflicting_plans": str(cfg.conflicting_plans).lower(),
        "max_rounds": str(cfg.max_rounds),
        "seeds": ",".join(str(s) for s in cfg.seeds),
        "epsilon": format_number(cfg.epsilon),
        "window": str(cfg.window),
        "correspondence": cfg.correspondence,
        "distortion": format_number(cfg.distortion),
    }
    llm_cfg = cfg.llm or LLMSettings()
    llm = {f.name: str(getattr(llm_cfg, f.name)) for f in fields(LLMSettings)}
    return {"task": task, "run": run, "llm": llm}


def dump_config(cfg: RunConfig) -> str:
    sections = _flatten(cfg)
    lines = []
    for name, values in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {v}" for k, v in values.items())
        lines.append("")
    return "\n".join(lines)


def write_config(cfg: RunConfig, path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dump_config(cfg), encoding="utf-8")
    return p


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def build_config(values: dict[str, dict[str, str]]) -> RunConfig:
    """Assemble a :class:`RunConfig` from flat string sections over the defaults."""
    for section, keys in values.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(keys) - set(SECTIONS[section])
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
    merged = _flatten(RunConfig())
    for section, keys in values.items():
        merged[section].update(keys)
    t, r, lm = merged["task"], merged["run"], merged["llm"]
    try:
        task = TaskSpec(
            shape=Shape(t["shape"]),
            team_size=int(t["robots"]),
            center=Vec2(float(t["center_x"]), float(t["center_y"])),
            desired_distance=float(t["desired_distance"]),
            safe_distance=float(t["safe_distance"]),
            max_speed=float(t["max_speed"]),
            comm_range=float(t["comm_range"]),
            arena=Arena(
                float(t["arena_xmin"]), float(t["arena_xmax"]),
                float(t["arena_ymin"]), float(t["arena_ymax"]),
            ),
        )
        llm = LLMSettings(
            base_url=lm["base_url"],
            model=lm["model"],
            temperature=float(lm["temperature"]),
            timeout=float(lm["timeout"]),
            api_key_env=lm["api_key_env"],
            max_retries=int(lm["max_retries"]),
            backoff=float(lm["backoff"]),
            reprompts=int(lm["reprompts"]),
            history_exchanges=int(lm["history_exchanges"]),
        )
        return RunConfig(
            task=task,
            planner=PlannerKind(r["planner"]),
            planner_overrides=parse_overrides(r["planner_overrides"]),
            consensus_enabled=_bool(r["consensus"]),
            tie_break_by_id=_bool(r["tie_break_by_id"]),
            conflicting_plans=_bool(r["conflicting_plans"]),
            max_rounds=int(r["max_rounds"]),
            seeds=parse_seeds(r["seeds"]),
            epsilon=float(r["epsilon"]),
            window=int(r["window"]),
            correspondence=r["correspondence"],
            distortion=float(r["distortion"]),
            llm=llm,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def read_config_sections(path: str | Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return {s: dict(parser[s]) for s in parser.sections()}


def load_config(path: str | Path) -> RunConfig:
    return build_config(read_config_sections(path))
