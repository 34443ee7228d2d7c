"""Regenerate the fixture run directory with the primary CLI.

Run from this directory:  python3 generate.py
The artifacts are byte-deterministic, so regeneration is a no-op unless the
primary component's schemas change.
"""

import json
import shutil
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent.parent.parent / "tests"))

from cli_fixture import make_scenario_dir, scenario_doc  # noqa: E402

from stldmp.cli import main  # noqa: E402


def run() -> None:
    doc = scenario_doc()
    # give the final descent a velocity constraint so channel-vs-time plots
    # have a bound line and a shaded window to draw
    doc["task"]["subtasks"][2]["c_stl"] = "G[5,55](vel.z > -0.3)"
    doc["optimizer"]["per_subtask"] = {"place": {"rho_min": 0.002,
                                                 "temperature": 0.002}}
    scenario_dir = HERE / "scenario"
    if scenario_dir.exists():
        shutil.rmtree(scenario_dir)
    scenario = make_scenario_dir(scenario_dir, doc)
    out = HERE / "run_dir"
    if out.exists():
        shutil.rmtree(out)
    assert main(["--out-dir", str(out), "plan", str(scenario)]) == 0
    assert main(["--out-dir", str(out), "run", str(scenario)]) == 0
    # wall-clock times out of the committed fixture
    for summary in out.rglob("summary.json"):
        doc = json.loads(summary.read_text())
        doc["wall_time"] = 0.0
        summary.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    print(f"fixture written to {out}")


if __name__ == "__main__":
    run()
