"""Full pipeline: task spec -> behavior tree -> constrained motions -> execution.

Generates a small pick-move-place scenario on disk, then drives it through
the command-line interface exactly as a user would:

  stldmp plan   compiles the task, learns skills, optimizes each motion
  stldmp run    executes the behavior tree tick by tick in the simulator
  stldmp eval   re-checks a constraint on one of the planned traces

The second run adds a scripted disturbance (the cup is teleported away after
placement), which forces the tree to re-enter the affected subtasks.
"""

import csv
import json
import sys

from stldmp.cli import main as stldmp

from common import banner, min_jerk, out_dir, write_json


def build_scenario(root, disturbances=()):
    root.mkdir(parents=True, exist_ok=True)
    min_jerk([0, 0, 0], [0.3, 0, 0]).to_csv(root / "reach.csv")
    min_jerk([0.3, 0, 0], [0.5, 0.5, 0], bump=(2, 0.05)).to_csv(root / "transport.csv")
    min_jerk([0.5, 0.5, 0], [0.5, 0.5, -0.2]).to_csv(root / "lower.csv")
    doc = {
        "schema": "stldmp.scenario/1",
        "name": "pick-move-place",
        "seed": 0,
        "max_ticks": 1000,
        "world": {
            "ee": [0.0, 0.0, 0.0],
            "objects": {"cup": [0.3, 0.0, 0.0]},
            "regions": {
                "goal_zone": {"center": [0.5, 0.5, 0.0], "radius": 0.3},
                "place_zone": {"center": [0.5, 0.5, -0.2], "radius": 0.05},
            },
            "predicates": {
                "holding_cup": {"kind": "attached", "object": "cup"},
                "hand_free": {"kind": "hand_empty"},
                "cup_in_goal": {"kind": "in_region", "object": "cup",
                                "region": "goal_zone"},
                "cup_placed": {"kind": "in_region", "object": "cup",
                               "region": "place_zone"},
            },
        },
        "symbols": {"obstacle": [0.4, 0.25, 0.0]},
        "task": {
            "schema": "stldmp.task/1",
            "subtasks": [
                {"name": "pick", "window": [0, 2], "pre": "hand_free",
                 "post": "holding_cup", "c_stl": "",
                 "action": {"skill": "reach", "init": "ee", "goal": "cup",
                            "grasp": "cup"}},
                {"name": "move", "window": [2, 4], "pre": "holding_cup",
                 "post": "cup_in_goal",
                 "c_stl": "G[0,59](norm2(y - obstacle) > 0.08)",
                 "action": {"skill": "transport", "init": "cup",
                            "goal": "goal_zone"}},
                {"name": "place", "window": [4, 6], "pre": "holding_cup",
                 "post": "cup_placed", "c_stl": "",
                 "action": {"skill": "lower", "init": "goal_zone",
                            "goal": "place_zone", "release": True}},
            ],
        },
        "skills": {
            "reach": {"demos": ["reach.csv"], "n_basis": 15},
            "transport": {"demos": ["transport.csv"], "n_basis": 15},
            "lower": {"demos": ["lower.csv"], "n_basis": 15},
        },
        "optimizer": {"defaults": {"lambda1": 5000.0, "rho_min": 0.01,
                                   "temperature": 0.01, "max_iters": 150}},
        "evaluation": {"post_stl": {
            "pick": "norm2(y - cup) < 0.02",
            "move": "norm2(y - goal_zone) < 0.3",
            "place": "norm2(y - place_zone) < 0.05",
        }},
        "disturbances": list(disturbances),
    }
    path = root / "scenario.json"
    write_json(path, doc)
    return path


def epsilon_stair(execution_csv):
    stair = []
    with open(execution_csv) as fh:
        rows = csv.DictReader(r for r in fh if not r.startswith("#"))
        for row in rows:
            if not row["epsilon"]:
                continue
            eps = int(row["epsilon"])
            if not stair or stair[-1] != eps:
                stair.append(eps)
    return stair


def main() -> int:
    dest = out_dir("pick_move_place")
    scenario = build_scenario(dest / "scenario")

    banner("plan: learn skills and optimize the constrained transport")
    if stldmp(["--out-dir", str(dest / "nominal"), "plan", str(scenario)]) != 0:
        return 1

    banner("run: nominal execution")
    if stldmp(["--out-dir", str(dest / "nominal"), "run", str(scenario)]) != 0:
        return 1
    evaluation = json.loads((dest / "nominal" / "run" / "evaluation.json").read_text())
    print(f"whole-task robustness: {evaluation['whole_task']['robustness']:+.4f}")
    stair = epsilon_stair(dest / "nominal" / "run" / "execution.csv")
    print(f"subtask switching signal: {stair}")

    banner("eval: recheck the obstacle constraint on the planned transport")
    symbols = dest / "symbols.json"
    write_json(symbols, {"obstacle": [0.4, 0.25, 0.0]})
    code = stldmp(["eval", str(dest / "nominal" / "plan" / "move" / "trace.csv"),
                   "G[0,59](norm2(y - obstacle) > 0.08)",
                   "--symbols", str(symbols)])
    if code != 0:
        return 1

    banner("run again with a scripted disturbance (cup teleported at tick 100)")
    disturbed = build_scenario(
        dest / "scenario_disturbed",
        [{"tick": 100, "kind": "teleport_object", "target": "cup",
          "value": [0.1, -0.2, 0.0]}],
    )
    if stldmp(["--out-dir", str(dest / "disturbed"), "plan", str(disturbed)]) != 0:
        return 1
    if stldmp(["--out-dir", str(dest / "disturbed"), "run", str(disturbed)]) != 0:
        return 1
    stair = epsilon_stair(dest / "disturbed" / "run" / "execution.csv")
    print(f"subtask switching signal with re-entry: {stair}")

    print(f"\nartifacts in {dest}")
    return 0 if stair == [1, 2, 3, 1, 2, 3] else 1


if __name__ == "__main__":
    sys.exit(main())
