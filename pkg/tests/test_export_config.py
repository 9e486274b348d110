import csv

import pytest

from flockplan.config import (
    build_config,
    dump_config,
    load_config,
    parse_overrides,
    parse_seeds,
    write_config,
)
from flockplan.core import ConfigError, Shape, TaskSpec
from flockplan.export import (
    CURVE_HEADER,
    SUMMARY_HEADER,
    export_trial,
    load_trial,
    write_summary,
)
from flockplan.harness import RunConfig, run_batch, run_trial
from flockplan.planner import PlannerKind
from flockplan.render import frame_svg


def test_trial_round_trip(tmp_path):
    rec = run_trial(RunConfig(max_rounds=5), 4)
    d = export_trial(rec, tmp_path / "4", spec=TaskSpec(), svg=True)
    back = load_trial(d)
    assert back.frames == rec.frames
    assert back.converged_round == rec.converged_round
    with open(d / "curves.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CURVE_HEADER and len(rows) == len(rec.frames) + 1
    assert float(rows[1][1]) == rec.frames[0].error_mean_dist
    assert sorted(p.name for p in (d / "frames").iterdir())[:2] == ["00.svg", "01.svg"]


def test_svg_is_wellformed():
    import xml.etree.ElementTree as ET

    rec = run_trial(RunConfig(max_rounds=1), 0)
    root = ET.fromstring(frame_svg(rec.final, TaskSpec()))
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}circle")) == 6


def test_svg_needs_spec(tmp_path):
    with pytest.raises(ValueError):
        export_trial(run_trial(RunConfig(max_rounds=1), 0), tmp_path, svg=True)


def test_summary_files(tmp_path):
    summary, records = run_batch(RunConfig(max_rounds=4, seeds=(0, 1)))
    path = write_summary(summary, records, tmp_path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == SUMMARY_HEADER and [r[0] for r in rows[1:]] == ["0", "1"]
    curve = list(csv.reader(open(tmp_path / "summary_curve.csv")))
    assert len(curve) == len(summary.mean_error) + 1


def test_default_config_golden(fixtures):
    assert dump_config(RunConfig()) == (fixtures / "default_config.ini").read_text()


def test_config_round_trip(tmp_path):
    cfg = RunConfig(
        task=TaskSpec(shape=Shape.CIRCLE, team_size=10, comm_range=22.5),
        planner_overrides={3: PlannerKind.FAULT_OVERSHOOT},
        consensus_enabled=False,
        seeds=(4, 9),
        epsilon=0.25,
    )
    cfg2 = load_config(write_config(cfg, tmp_path / "c.ini"))
    assert dump_config(cfg2) == dump_config(cfg)
    assert cfg2.task == cfg.task and cfg2.planner_overrides == cfg.planner_overrides


@pytest.mark.parametrize(
    "sections",
    [
        {"task": {"colour": "red"}},
        {"extra": {}},
        {"task": {"robots": "three"}},
        {"run": {"consensus": "maybe"}},
        {"run": {"planner_overrides": "1-oracle"}},
        {"run": {"seeds": ""}},
        {"task": {"shape": "square"}},
    ],
)
def test_bad_configs(sections):
    with pytest.raises(ConfigError):
        build_config(sections)


def test_parsers():
    assert parse_seeds("3, 1,2") == (3, 1, 2)
    assert parse_overrides("0:llm, 2:fault_overshoot") == {
        0: PlannerKind.LLM,
        2: PlannerKind.FAULT_OVERSHOOT,
    }
