"""Set a breakfast table: several pick-and-place subtasks plus a constrained yank.

Fork, knife, and plate are moved to their spots one by one; the napkin is
then yanked into a bin along a path that must visit an inspection point and
stay inside the workspace box.  Everything runs through the command-line
interface: the task document below is compiled to a behavior tree, each
motion is optimized under its constraint, and the whole run executes in the
kinematic simulator.
"""

import json
import sys

from stldmp.cli import main as stldmp

from common import banner, min_jerk, out_dir, write_json

WORKSPACE_BOX = ("(y.x > -0.05) & (y.x < 0.7) & (y.y > -0.4) & (y.y < 0.4)"
                 " & (y.z > -0.05) & (y.z < 0.3)")


def transfer_subtasks():
    """Two subtasks per item: reach-and-grasp, then carry-and-release."""
    items = {
        "fork": ("fork_spot", ""),
        "knife": ("knife_spot", ""),
        "plate": ("plate_spot", ""),
        "napkin": ("napkin_bin",
                   f"F[0,59](norm2(y - inspection) < 0.02) & G[0,59]({WORKSPACE_BOX})"),
    }
    subtasks = []
    lo = 0
    for item, (spot, c_stl) in items.items():
        subtasks.append({
            "name": f"reach_{item}", "window": [lo, lo + 2],
            "pre": "hand_free", "post": f"{item}_handled", "c_stl": "",
            "action": {"skill": "reach", "init": "ee", "goal": item,
                       "grasp": item},
        })
        verb = "yank" if item == "napkin" else "place"
        subtasks.append({
            "name": f"{verb}_{item}", "window": [lo + 2, lo + 4],
            "pre": f"holding_{item}", "post": f"{item}_placed", "c_stl": c_stl,
            "action": {"skill": "transport", "init": item, "goal": spot,
                       "release": True},
        })
        lo += 4
    return subtasks


def build_scenario(root):
    root.mkdir(parents=True, exist_ok=True)
    min_jerk([0, 0, 0], [0.3, 0.2, 0]).to_csv(root / "reach.csv")
    min_jerk([0.3, 0.2, 0], [0.6, 0.25, 0], bump=(2, 0.06)).to_csv(root / "transport.csv")

    objects = {"fork": [0.3, 0.2, 0.0], "knife": [0.3, -0.2, 0.0],
               "plate": [0.35, 0.0, 0.0], "napkin": [0.2, 0.1, 0.0]}
    regions = {"fork_spot": {"center": [0.6, 0.25, 0.0], "radius": 0.02},
               "knife_spot": {"center": [0.6, -0.25, 0.0], "radius": 0.02},
               "plate_spot": {"center": [0.6, 0.0, 0.0], "radius": 0.03},
               "napkin_bin": {"center": [0.1, -0.3, 0.0], "radius": 0.03}}
    spots = {"fork": "fork_spot", "knife": "knife_spot",
             "plate": "plate_spot", "napkin": "napkin_bin"}
    predicates = {"hand_free": {"kind": "hand_empty"}}
    post_stl = {}
    for item, spot in spots.items():
        predicates[f"holding_{item}"] = {"kind": "attached", "object": item}
        predicates[f"{item}_placed"] = {"kind": "placed", "object": item,
                                        "region": spot}
        # "handled" = still in hand or already delivered; keeps the reactive
        # tree from re-picking an item after it has been released
        predicates[f"{item}_handled"] = {
            "kind": "any_of", "of": [f"holding_{item}", f"{item}_placed"],
        }
        post_stl[f"reach_{item}"] = f"norm2(y - {item}) < 0.02"
        verb = "yank" if item == "napkin" else "place"
        post_stl[f"{verb}_{item}"] = f"norm2(y - {spot}) < 0.05"

    doc = {
        "schema": "stldmp.scenario/1",
        "name": "breakfast",
        "seed": 0,
        "max_ticks": 2000,
        "world": {"ee": [0.0, 0.0, 0.0], "objects": objects,
                  "regions": regions, "predicates": predicates},
        "symbols": {"inspection": [0.15, -0.05, 0.12]},
        "task": {"schema": "stldmp.task/1", "subtasks": transfer_subtasks()},
        "skills": {"reach": {"demos": ["reach.csv"], "n_basis": 15},
                   "transport": {"demos": ["transport.csv"], "n_basis": 15}},
        "optimizer": {
            "defaults": {"lambda1": 5000.0, "rho_min": 0.01,
                         "temperature": 0.01, "max_iters": 300},
            "per_subtask": {"yank_napkin": {"rho_min": 0.003,
                                            "temperature": 0.001}},
        },
        "evaluation": {"post_stl": post_stl},
    }
    path = root / "scenario.json"
    write_json(path, doc)
    return path


def main() -> int:
    dest = out_dir("breakfast")
    scenario = build_scenario(dest / "scenario")

    banner("plan: all eight motions, napkin yank under via-point + box constraint")
    if stldmp(["--out-dir", str(dest), "plan", str(scenario)]) != 0:
        return 1
    summary = json.loads((dest / "plan" / "summary.json").read_text())
    for name, status in summary["subtasks"].items():
        print(f"  {name:<14} {status}")
    if any(s != "satisfied" for s in summary["subtasks"].values()):
        return 1

    banner("run: execute the table-setting routine")
    if stldmp(["--out-dir", str(dest), "run", str(scenario)]) != 0:
        return 1
    evaluation = json.loads((dest / "run" / "evaluation.json").read_text())
    print(f"outcome: {evaluation['outcome']}, "
          f"whole-task robustness {evaluation['whole_task']['robustness']:+.4f}")
    print(f"\nartifacts in {dest}")
    return 0 if evaluation["whole_task"]["satisfied"] else 1


if __name__ == "__main__":
    sys.exit(main())
