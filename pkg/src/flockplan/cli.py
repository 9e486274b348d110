"""Command-line entry point.

Precedence, lowest to highest: built-in defaults, ``--config`` file, flags.
Exit status: 0 on success, 1 on configuration or usage errors, 2 on runtime
failures.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .config import build_config, parse_seeds, read_config_sections, write_config
from .core import ConfigError, FlockError, Shape, TaskSpec, Vec2
from .export import export_trial, load_frames, write_summary, write_svgs
from .geometry import ShapeTemplate
from .harness import RunConfig, run_batch, run_trial
from .metrics import point_correspondence, procrustes_align
from .planner import (
    PlannerKind,
    StepContext,
    generate_plan,
    render_plan_request,
    render_step_request,
    render_system_prompt,
)

log = logging.getLogger("flockplan")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _task_flags(p: argparse.ArgumentParser) -> None:
    d = TaskSpec()
    p.add_argument("--config", type=Path, help="INI run configuration (flags override it)")
    p.add_argument("--shape", choices=[s.value for s in Shape],
                   help=f"formation shape (default: {d.shape.value})")
    p.add_argument("--robots", type=int, help=f"team size (default: {d.team_size})")
    p.add_argument("--center", type=float, nargs=2, metavar=("X", "Y"),
                   help="formation center (default: 50 50)")
    p.add_argument("--desired-distance", type=float,
                   help=f"spacing between adjacent robots (default: {d.desired_distance:g})")
    p.add_argument("--safe-distance", type=float,
                   help=f"minimum inter-robot distance (default: {d.safe_distance:g})")
    p.add_argument("--max-speed", type=float,
                   help=f"maximum displacement per round (default: {d.max_speed:g})")
    p.add_argument("--comm-range", type=float,
                   help=f"communication radius (default: {d.comm_range:g}); arena is 100x100")


def _run_flags(p: argparse.ArgumentParser) -> None:
    c = RunConfig()
    p.add_argument("--planner", choices=[k.value for k in PlannerKind],
                   help=f"planner for every robot (default: {c.planner.value})")
    p.add_argument("--override", action="append", default=[], metavar="ID:KIND",
                   help="per-robot planner, e.g. 2:fault_overshoot (repeatable)")
    p.add_argument("--no-consensus", action="store_true",
                   help="baseline: each robot keeps its own initial plan")
    p.add_argument("--tie-break", action="store_true",
                   help="also adopt from equally influential neighbors with lower id")
    p.add_argument("--same-plans", action="store_true",
                   help="give every oracle robot the unrotated canonical plan")
    p.add_argument("--max-rounds", type=int, help=f"round limit (default: {c.max_rounds})")
    p.add_argument("--epsilon", type=float,
                   help=f"convergence threshold on the mean error (default: {c.epsilon:g})")
    p.add_argument("--window", type=int,
                   help=f"rounds the error must stay below epsilon (default: {c.window})")
    p.add_argument("--correspondence", choices=["auto", "goal", "greedy"],
                   help="how robots are matched to formation points (default: auto)")
    p.add_argument("--out", type=Path, default=Path("runs"), help="output directory (default: runs)")
    p.add_argument("--svg", action="store_true", help="also write one SVG per round")
    p.add_argument("--llm-base-url", help="chat-completions base URL")
    p.add_argument("--llm-model", help="model name sent to the endpoint")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flockplan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="log events to stderr (-vv for per-robot detail)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a single seeded trial")
    _task_flags(run)
    _run_flags(run)
    run.add_argument("--seed", type=int, default=0, help="trial seed (default: 0)")

    batch = sub.add_parser("batch", help="run a seeded batch and aggregate it")
    _task_flags(batch)
    _run_flags(batch)
    batch.add_argument("--seeds", help="seed count N (seeds 0..N-1) or a comma list (default: 10)")
    batch.add_argument("--workers", type=int, default=1, help="trials run in parallel (default: 1)")

    render = sub.add_parser("render", help="draw SVG frames from a trial directory")
    render.add_argument("trial", type=Path, help="directory containing frames.jsonl")
    render.add_argument("--config", type=Path,
                        help="run configuration (default: config.ini next to the trial)")
    render.add_argument("--out", type=Path, help="SVG directory (default: <trial>/frames)")

    align = sub.add_parser("align", help="Procrustes report for two point files")
    align.add_argument("actual", type=Path, help="CSV of x,y rows")
    align.add_argument("target", type=Path, help="CSV of x,y rows")
    align.add_argument("--match", choices=["index", "greedy"], default="index",
                       help="row correspondence (default: index)")

    prompts = sub.add_parser("prompts", help="write the prompt texts for a task")
    _task_flags(prompts)
    prompts.add_argument("--out", type=Path, default=Path("prompts"),
                         help="output directory (default: prompts)")
    return parser


def _overrides_from(args) -> dict[str, dict[str, str]]:
    task: dict[str, str] = {}
    run: dict[str, str] = {}
    llm: dict[str, str] = {}
    simple = {
        "shape": ("shape", task), "robots": ("robots", task),
        "desired_distance": ("desired_distance", task), "safe_distance": ("safe_distance", task),
        "max_speed": ("max_speed", task), "comm_range": ("comm_range", task),
        "planner": ("planner", run), "max_rounds": ("max_rounds", run),
        "epsilon": ("epsilon", run), "window": ("window", run),
        "correspondence": ("correspondence", run),
        "llm_base_url": ("base_url", llm), "llm_model": ("model", llm),
    }
    for attr, (key, section) in simple.items():
        v = getattr(args, attr, None)
        if v is not None:
            section[key] = str(v)
    if getattr(args, "center", None):
        task["center_x"], task["center_y"] = (repr(float(c)) for c in args.center)
    if getattr(args, "override", None):
        run["planner_overrides"] = ",".join(args.override)
    if getattr(args, "no_consensus", False):
        run["consensus"] = "false"
    if getattr(args, "tie_break", False):
        run["tie_break_by_id"] = "true"
    if getattr(args, "same_plans", False):
        run["conflicting_plans"] = "false"
    if getattr(args, "seed", None) is not None:
        run["seeds"] = str(args.seed)
    seeds = getattr(args, "seeds", None)
    if seeds is not None:
        if "," in seeds:
            run["seeds"] = ",".join(str(s) for s in parse_seeds(seeds))
        else:
            try:
                count = int(seeds)
            except ValueError:
                raise ConfigError(f"bad --seeds {seeds!r}") from None
            if count < 1:
                raise ConfigError("--seeds must be positive")
            run["seeds"] = ",".join(str(s) for s in range(count))
    return {"task": task, "run": run, "llm": llm}


def resolve_config(args) -> RunConfig:
    sections: dict[str, dict[str, str]] = {"task": {}, "run": {}, "llm": {}}
    if getattr(args, "config", None):
        for name, values in read_config_sections(args.config).items():
            sections.setdefault(name, {}).update(values)
    for name, values in _overrides_from(args).items():
        sections[name].update(values)
    return build_config(sections)


def _cmd_run(args) -> int:
    cfg = resolve_config(args)
    record = run_trial(cfg, cfg.seeds[0])
    write_config(cfg, args.out / "config.ini")
    trial_dir = export_trial(record, args.out / str(record.seed), spec=cfg.task, svg=args.svg)
    f = record.final if record.frames else None
    print(f"trial {record.seed}: {len(record.frames)} frames -> {trial_dir}")
    if f is not None:
        print(f"final error_mean_dist={f.error_mean_dist:.4f} agreement={f.agreement:.3f} "
              f"converged_round={record.converged_round}")
    return EXIT_RUNTIME if record.failed else EXIT_OK


def _cmd_batch(args) -> int:
    cfg = resolve_config(args)
    if args.seeds is None and args.config is None:
        cfg = cfg.with_(seeds=tuple(range(10)))
    summary, records = run_batch(cfg, workers=args.workers)
    write_config(cfg, args.out / "config.ini")
    for r in records:
        export_trial(r, args.out / str(r.seed), spec=cfg.task, svg=args.svg)
    path = write_summary(summary, records, args.out)
    print(f"{summary.trials} trials ({summary.failed} failed) -> {path}")
    print(f"convergence rate {summary.convergence_rate:.2f}, "
          f"mean convergence round {summary.mean_convergence_round}")
    if summary.mean_error:
        print(f"final mean error {summary.mean_error[-1]:.4f} +/- {summary.half_width[-1]:.4f}")
    return EXIT_RUNTIME if summary.failed == summary.trials else EXIT_OK


def _cmd_render(args) -> int:
    trial = args.trial
    cfg_path = args.config or trial.parent / "config.ini"
    if not cfg_path.exists():
        raise ConfigError(f"no run configuration at {cfg_path}; pass --config")
    cfg = build_config(read_config_sections(cfg_path))
    frames = load_frames(trial / "frames.jsonl")
    paths = write_svgs(frames, cfg.task, args.out or trial / "frames")
    print(f"wrote {len(paths)} SVG frames")
    return EXIT_OK


def read_points(path: Path) -> list[Vec2]:
    pts = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    pts.append(Vec2(float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if pts:
                        raise ConfigError(f"{path}: bad row {row}") from None
                    # header line
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return pts


def _cmd_align(args) -> int:
    X, Y = read_points(args.actual), read_points(args.target)
    if len(X) != len(Y) or len(X) < 2:
        raise ConfigError(f"need two equal-length point sets (got {len(X)} and {len(Y)})")
    if args.match == "greedy":
        Y = [Y[j] for j in point_correspondence(X, Y)]
    res = procrustes_align(X, Y)
    angle = math.degrees(math.atan2(res.rotation[1, 0], res.rotation[0, 0]))
    print(f"points: {len(X)}")
    print(f"error_mean_dist: {res.error_mean_dist!r}")
    print(f"error_mean_sq: {res.error_mean_sq!r}")
    print(f"rotation_deg: {angle!r}")
    print(f"reflection_corrected: {str(res.reflection_corrected).lower()}")
    return EXIT_OK


def sample_step_context(spec: TaskSpec) -> StepContext:
    """Fixed step context used for the step-request prompt file."""
    plan = generate_plan(PlannerKind.ORACLE, 0, spec).plan
    me = Vec2(spec.center.x + 2.0, spec.center.y - 6.0)
    nbrs = [p for p in plan.points[1:] if me.dist(p) <= spec.comm_range]
    return StepContext(me, nbrs, plan, plan[0], spec)


def write_prompts(spec: TaskSpec, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    texts = {
        "system.txt": render_system_prompt(spec),
        "plan_request.txt": render_plan_request(spec),
        "step_request.txt": render_step_request(sample_step_context(spec)),
    }
    paths = []
    for name, text in texts.items():
        p = out / name
        p.write_text(text, encoding="utf-8")
        paths.append(p)
    return paths


def _cmd_prompts(args) -> int:
    cfg = resolve_config(args)
    # the rendered prompts only depend on the task; validate it as a formation anyway
    ShapeTemplate.from_task(cfg.task)
    paths = write_prompts(cfg.task, args.out)
    print("\n".join(str(p) for p in paths))
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "batch": _cmd_batch,
    "render": _cmd_render,
    "align": _cmd_align,
    "prompts": _cmd_prompts,
}


def _setup_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("level=%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        # --help / --version
        return int(exc.code or 0)
    _setup_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FlockError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
