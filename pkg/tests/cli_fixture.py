"""Scenario directory builder shared by CLI and acceptance tests."""

import json

import numpy as np

from stldmp.trace import SignalTrace

DT = 0.02
DEMO_SAMPLES = 60


def min_jerk_demo(path, start, end, arc=0.0, n=DEMO_SAMPLES, dt=DT):
    t = np.linspace(0.0, 1.0, n)
    s = 10 * t**3 - 15 * t**4 + 6 * t**5
    pos = np.outer(1 - s, start) + np.outer(s, end)
    pos[:, 2] += arc * np.sin(np.pi * t)
    SignalTrace.from_positions(dt, pos).to_csv(path)


def scenario_doc():
    return {
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
                 "post": "holding_cup",
                 "action": {"skill": "reach", "init": "ee", "goal": "cup",
                            "grasp": "cup"},
                 "c_stl": ""},
                {"name": "move", "window": [2, 4], "pre": "holding_cup",
                 "post": "cup_in_goal",
                 "action": {"skill": "transport", "init": "cup",
                            "goal": "goal_zone"},
                 "c_stl": f"G[0,{DEMO_SAMPLES - 1}](norm2(y - obstacle) > 0.08)"},
                {"name": "place", "window": [4, 6], "pre": "holding_cup",
                 "post": "cup_placed",
                 "action": {"skill": "lower", "init": "goal_zone",
                            "goal": "place_zone", "release": True},
                 "c_stl": ""},
            ],
        },
        "skills": {
            "reach": {"demos": ["reach.csv"], "n_basis": 15},
            "transport": {"demos": ["transport.csv"], "n_basis": 15},
            "lower": {"demos": ["lower.csv"], "n_basis": 15},
        },
        "optimizer": {
            "defaults": {"lambda1": 5000.0, "rho_min": 0.01,
                         "temperature": 0.01, "max_iters": 150},
        },
        "evaluation": {
            "post_stl": {
                "pick": "norm2(y - cup) < 0.02",
                "move": "norm2(y - goal_zone) < 0.3",
                "place": "norm2(y - place_zone) < 0.05",
            },
        },
    }


def make_scenario_dir(root, doc=None):
    """Write demo CSVs plus scenario.json under root; returns the JSON path."""
    root.mkdir(parents=True, exist_ok=True)
    min_jerk_demo(root / "reach.csv", [0, 0, 0], [0.3, 0, 0])
    min_jerk_demo(root / "transport.csv", [0.3, 0, 0], [0.5, 0.5, 0], arc=0.05)
    min_jerk_demo(root / "lower.csv", [0.5, 0.5, 0], [0.5, 0.5, -0.2])
    doc = doc or scenario_doc()
    path = root / "scenario.json"
    path.write_text(json.dumps(doc, indent=1))
    return path
