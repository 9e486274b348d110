"""On-disk layout of trial and batch results.

    <out>/<seed>/frames.jsonl   one JSON object per round
    <out>/<seed>/curves.csv     round,error_mean_dist,error_mean_sq,agreement
    <out>/<seed>/trial.json     seed, convergence round, failure flags
    <out>/<seed>/frames/<round>.svg   optional
    <out>/summary.csv           one row per trial
    <out>/summary_curve.csv     per-round batch mean and 95% half-width

Floats are written with Python's shortest round-trip repr.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

from .consensus import Adoption
from .core import TaskSpec, Vec2
from .harness import BatchSummary, Frame, TrialRecord
from .motion import MotionReport
from .render import frame_svg

CURVE_HEADER = ["round", "error_mean_dist", "error_mean_sq", "agreement"]
SUMMARY_HEADER = [
    "seed",
    "rounds",
    "final_error_mean_dist",
    "final_error_mean_sq",
    "final_agreement",
    "converged_round",
    "failed",
]
SUMMARY_CURVE_HEADER = ["round", "mean_error_mean_dist", "half_width_95", "mean_error_mean_sq"]


def frame_to_dict(f: Frame) -> dict:
    return {
        "round": f.round,
        "positions": [p.as_list() for p in f.positions],
        "plan_origins": list(f.plan_origins),
        "goals": [g.as_list() for g in f.goals],
        "goal_indices": list(f.goal_indices),
        "influences": list(f.influences),
        "adoptions": [list(a) for a in f.adoptions],
        "motion": [m.to_dict() for m in f.motion],
        "error_mean_dist": f.error_mean_dist,
        "error_mean_sq": f.error_mean_sq,
        "agreement": f.agreement,
        "wall_clock": f.wall_clock,
    }


def frame_from_dict(d: dict) -> Frame:
    return Frame(
        round=int(d["round"]),
        positions=tuple(Vec2.of(p) for p in d["positions"]),
        plan_origins=tuple(d["plan_origins"]),
        goals=tuple(Vec2.of(g) for g in d["goals"]),
        goal_indices=tuple(d["goal_indices"]),
        influences=tuple(d["influences"]),
        adoptions=tuple(Adoption(*a) for a in d["adoptions"]),
        motion=tuple(MotionReport.from_dict(m) for m in d["motion"]),
        error_mean_dist=d["error_mean_dist"],
        error_mean_sq=d["error_mean_sq"],
        agreement=d["agreement"],
        wall_clock=d.get("wall_clock", 0.0),
    )


def export_trial(
    record: TrialRecord,
    directory: str | Path,
    *,
    spec: TaskSpec | None = None,
    svg: bool = False,
) -> Path:
    """Write one trial under ``directory``; SVG frames need ``spec``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "frames.jsonl", "w", encoding="utf-8") as fh:
        for f in record.frames:
            fh.write(json.dumps(frame_to_dict(f)) + "\n")
    with open(out / "curves.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for f in record.frames:
            w.writerow([f.round, f.error_mean_dist, f.error_mean_sq, f.agreement])
    meta = {
        "seed": record.seed,
        "converged_round": record.converged_round,
        "failed": record.failed,
        "failure": record.failure,
        "llm_replies": record.llm_replies,
        "llm_parse_failures": record.llm_parse_failures,
        "llm_fallbacks": record.llm_fallbacks,
    }
    (out / "trial.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    if svg:
        if spec is None:
            raise ValueError("SVG export needs the task spec")
        write_svgs(record.frames, spec, out / "frames")
    return out


def write_svgs(frames: Sequence[Frame], spec: TaskSpec, directory: str | Path) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    width = len(str(max((f.round for f in frames), default=0)))
    paths = []
    for f in frames:
        p = d / f"{f.round:0{max(width, 2)}d}.svg"
        p.write_text(frame_svg(f, spec), encoding="utf-8")
        paths.append(p)
    return paths


def load_frames(path: str | Path) -> list[Frame]:
    with open(path, encoding="utf-8") as fh:
        return [frame_from_dict(json.loads(line)) for line in fh if line.strip()]


def load_trial(directory: str | Path) -> TrialRecord:
    d = Path(directory)
    meta = json.loads((d / "trial.json").read_text(encoding="utf-8"))
    return TrialRecord(
        seed=meta["seed"],
        frames=load_frames(d / "frames.jsonl"),
        converged_round=meta["converged_round"],
        failed=meta["failed"],
        failure=meta["failure"],
        llm_replies=meta.get("llm_replies", 0),
        llm_parse_failures=meta.get("llm_parse_failures", 0),
        llm_fallbacks=meta.get("llm_fallbacks", 0),
    )


def write_summary(
    summary: BatchSummary, records: Sequence[TrialRecord], directory: str | Path
) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for r in records:
            last = r.frames[-1] if r.frames else None
            w.writerow(
                [
                    r.seed,
                    len(r.frames),
                    "" if last is None else last.error_mean_dist,
                    "" if last is None else last.error_mean_sq,
                    "" if last is None else last.agreement,
                    "" if r.converged_round is None else r.converged_round,
                    int(r.failed),
                ]
            )
    with open(d / "summary_curve.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_CURVE_HEADER)
        for t, (m, h, sq) in enumerate(
            zip(summary.mean_error, summary.half_width, summary.mean_error_sq)
        ):
            w.writerow([t, m, h, sq])
    return d / "summary.csv"
