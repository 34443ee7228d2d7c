"""Shared pick-move-place fixture for behavior-tree engine tests."""

import numpy as np

from stldmp.bt import ActionPlan, BtInstance
from stldmp.task import compile_task
from stldmp.world import build_world

DT = 0.02
PLAN_SAMPLES = 60
OBSTACLE = (0.4, 0.25, 0.0)

WORLD_DOC = {
    "ee": [0.0, 0.0, 0.0],
    "objects": {"cup": [0.3, 0.0, 0.0]},
    "regions": {
        "goal_zone": {"center": [0.5, 0.5, 0.0], "radius": 0.3},
        "place_zone": {"center": [0.5, 0.5, -0.2], "radius": 0.05},
    },
    "predicates": {
        "holding_cup": {"kind": "attached", "object": "cup"},
        "hand_free": {"kind": "hand_empty"},
        "cup_in_goal": {"kind": "in_region", "object": "cup", "region": "goal_zone"},
        "cup_placed": {"kind": "in_region", "object": "cup", "region": "place_zone"},
    },
}

TASK_DOC = {
    "schema": "stldmp.task/1",
    "subtasks": [
        {
            "name": "pick",
            "window": [0, 2],
            "pre": "hand_free",
            "post": "holding_cup",
            "action": {"skill": "reach", "init": "ee", "goal": "cup", "grasp": "cup"},
            "c_stl": "",
        },
        {
            "name": "move",
            "window": [2, 4],
            "pre": "holding_cup",
            "post": "cup_in_goal",
            "action": {"skill": "transport", "init": "cup", "goal": "goal_zone"},
            "c_stl": f"G[0,{PLAN_SAMPLES - 1}]"
                     f"(norm2(y - [{OBSTACLE[0]},{OBSTACLE[1]},{OBSTACLE[2]}]) > 0.05)",
        },
        {
            "name": "place",
            "window": [4, 6],
            "pre": "holding_cup",
            "post": "cup_placed",
            "action": {"skill": "lower", "init": "goal_zone", "goal": "place_zone",
                       "release": True},
            "c_stl": "",
        },
    ],
}


def min_jerk_path(start, goal, n=PLAN_SAMPLES, dodge=0.0):
    t = np.linspace(0.0, 1.0, n)
    s = 10 * t**3 - 15 * t**4 + 6 * t**5
    pos = np.outer(1 - s, start) + np.outer(s, goal)
    pos[:, 2] += dodge * np.sin(np.pi * t)
    return pos


def dodging_planner(action, world):
    """Straight min-jerk plans; the transport leg arcs over the obstacle."""
    start = world.ee.position
    goal = world.resolve(action.goal)
    dodge = 0.12 if action.skill == "transport" else 0.0
    return ActionPlan(min_jerk_path(start, goal, dodge=dodge))


def straight_planner(action, world):
    """Plans straight through everything; the move leg hits the obstacle."""
    return ActionPlan(min_jerk_path(world.ee.position, world.resolve(action.goal)))


def make_instance(planner=dodging_planner, task_doc=TASK_DOC):
    world, predicates = build_world(WORLD_DOC)
    blueprint = compile_task(task_doc)
    return BtInstance(blueprint, world, predicates, planner, DT)


def epsilon_stair(log):
    """Distinct consecutive subtask indices in the switching signal."""
    stair = []
    for e in log.epsilon_sequence:
        if e is not None and (not stair or stair[-1] != e):
            stair.append(e)
    return stair
