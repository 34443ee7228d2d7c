"""Behavior-tree engine: composite semantics, reactivity, execution runs."""

import itertools

import numpy as np
import pytest

from bt_fixture import (
    DT,
    TASK_DOC,
    dodging_planner,
    epsilon_stair,
    make_instance,
    min_jerk_path,
    straight_planner,
)
from stldmp.bt import (
    ActionPlan,
    BtInstance,
    EngineFault,
    TickStatus,
    run_to_completion,
)
from stldmp.stl import parse
from stldmp.task import (
    BtAction,
    BtBlueprint,
    BtCondition,
    BtFallback,
    BtParallel,
    BtSequence,
    trivial_constraint,
)
from stldmp.world import build_world


class Flag:
    """Scripted predicate: returns a settable boolean and counts queries."""

    def __init__(self, value=False):
        self.value = value
        self.calls = 0

    def evaluate(self, world, *args):
        self.calls += 1
        return self.value


def engine_for(root, predicates, planner=None):
    world, _ = build_world({"ee": [0.0, 0.0, 0.0]})
    blueprint = BtBlueprint(root=root, subtasks=())
    return BtInstance(blueprint, world, predicates, planner, DT)


def conds(n):
    flags = {f"p{i}": Flag() for i in range(n)}
    nodes = tuple(BtCondition(name=f"c{i}", predicate=f"p{i}") for i in range(n))
    return flags, nodes


# --- composite truth tables -------------------------------------------------


@pytest.mark.parametrize("n", [2, 3])
def test_sequence_truth_table_with_short_circuit(n):
    for values in itertools.product([False, True], repeat=n):
        flags, nodes = conds(n)
        for i, v in enumerate(values):
            flags[f"p{i}"].value = v
        engine = engine_for(BtSequence(name="s", children=nodes), flags)
        status = engine.tick()
        expected = TickStatus.SUCCESS if all(values) else TickStatus.FAILURE
        assert status is expected, values
        # children after the first failure are never evaluated
        first_fail = values.index(False) if False in values else n - 1
        for i in range(n):
            assert flags[f"p{i}"].calls == (1 if i <= first_fail else 0), values


@pytest.mark.parametrize("n", [2, 3])
def test_fallback_truth_table_with_short_circuit(n):
    for values in itertools.product([False, True], repeat=n):
        flags, nodes = conds(n)
        for i, v in enumerate(values):
            flags[f"p{i}"].value = v
        engine = engine_for(BtFallback(name="f", children=nodes), flags)
        status = engine.tick()
        expected = TickStatus.SUCCESS if any(values) else TickStatus.FAILURE
        assert status is expected, values
        first_ok = values.index(True) if True in values else n - 1
        for i in range(n):
            assert flags[f"p{i}"].calls == (1 if i <= first_ok else 0), values


def test_parallel_truth_table_for_all_thresholds():
    n = 3
    for alpha in (1, 2, 3):
        for beta in (0, 1, 2):
            for values in itertools.product([False, True], repeat=n):
                flags, nodes = conds(n)
                for i, v in enumerate(values):
                    flags[f"p{i}"].value = v
                root = BtParallel(name="p", children=nodes, alpha=alpha, beta=beta)
                engine = engine_for(root, flags)
                status = engine.tick()
                # reference semantics: walk children in order, halting the
                # moment the failure budget is exceeded
                failures = successes = 0
                halted_at = n
                for i, v in enumerate(values):
                    failures += not v
                    successes += v
                    if failures > beta:
                        halted_at = i
                        break
                if halted_at < n:
                    expected = TickStatus.FAILURE
                elif successes >= alpha:
                    expected = TickStatus.SUCCESS
                else:
                    expected = TickStatus.RUNNING
                assert status is expected, (alpha, beta, values)
                for i in range(n):
                    assert flags[f"p{i}"].calls == (1 if i <= halted_at else 0), (
                        alpha, beta, values,
                    )


# --- running and reactive semantics ------------------------------------------


def running_action(subtask="s", samples=3):
    return BtAction(
        name=f"{subtask}/action", subtask=subtask, skill="k",
        init="ee", goal=(0.1, 0.0, 0.0), constraint=trivial_constraint(),
    ), (lambda action, world: ActionPlan(
        min_jerk_path(world.ee.position, world.resolve(action.goal), n=samples)
    ))


def test_sequence_propagates_running_until_the_action_completes():
    flags = {"go": Flag(True)}
    action, planner = running_action(samples=3)
    root = BtSequence(name="s", children=(
        BtCondition(name="c", predicate="go"), action,
    ))
    engine = engine_for(root, flags, planner)
    assert engine.tick() is TickStatus.RUNNING
    assert engine.tick() is TickStatus.RUNNING
    assert engine.tick() is TickStatus.SUCCESS


def test_conditions_are_reevaluated_every_tick():
    # Fallback(post, action): when post flips true mid-motion the action
    # is never ticked again and the tree succeeds immediately.
    flags = {"post": Flag(False)}
    action, planner = running_action(samples=10)
    root = BtFallback(name="f", children=(
        BtCondition(name="post", predicate="post"), action,
    ))
    engine = engine_for(root, flags, planner)
    assert engine.tick() is TickStatus.RUNNING
    moved_to = engine.world.ee.position.copy()
    flags["post"].value = True
    assert engine.tick() is TickStatus.SUCCESS
    assert np.array_equal(engine.world.ee.position, moved_to)  # action halted


def test_preempted_action_replans_from_the_current_state():
    # While "hold" is true the action runs; a tick with hold=False preempts
    # it, and on re-entry the planner is called again from the current pose.
    flags = {"hold": Flag(True), "idle": Flag(False)}
    calls = []
    action = BtAction(name="a/action", subtask="a", skill="k", init="ee",
                      goal=(0.2, 0.0, 0.0), constraint=trivial_constraint())

    def planner(node, world):
        calls.append(world.ee.position.copy())
        return ActionPlan(min_jerk_path(world.ee.position, world.resolve(node.goal), n=8))

    root = BtFallback(name="f", children=(
        BtSequence(name="s", children=(BtCondition(name="h", predicate="hold"), action)),
        BtCondition(name="i", predicate="idle"),
    ))
    engine = engine_for(root, flags, planner)
    engine.tick()
    engine.tick()
    assert len(calls) == 1
    flags["hold"].value = False
    flags["idle"].value = True
    engine.tick()  # action preempted this tick
    flags["hold"].value = True
    engine.tick()  # re-entry: must re-plan, not resume the stale plan
    assert len(calls) == 2
    assert np.allclose(calls[1], engine.world.ee.position, atol=0.1)
    assert not np.allclose(calls[0], calls[1])


def test_tick_does_not_mutate_state_when_no_action_runs():
    flags, nodes = conds(2)
    engine = engine_for(BtSequence(name="s", children=nodes), flags)
    before = engine.world.ee.position.copy()
    engine.tick()
    engine.tick()
    assert np.array_equal(engine.world.ee.position, before)
    assert engine.switching_signal() is None


def test_empty_tree_succeeds_immediately():
    engine = engine_for(BtSequence(name="task", children=()), {})
    log = run_to_completion(engine, 10)
    assert log.outcome == "success"
    assert len(log.records) == 1
    assert log.epsilon_sequence == []


# --- engine faults ---------------------------------------------------------------


def test_unknown_predicate_id_is_an_engine_fault():
    root = BtSequence(name="s", children=(BtCondition(name="c", predicate="nope"),))
    engine = engine_for(root, {})
    with pytest.raises(EngineFault, match="unresolvable predicate"):
        engine.tick()


def test_temporal_formula_in_instant_condition_is_an_engine_fault():
    cond = BtCondition(name="c", formula=parse("G[0,5](norm2(y - [0,0,0]) < 1)"))
    engine = engine_for(BtSequence(name="s", children=(cond,)), {})
    with pytest.raises(EngineFault, match="instantaneous"):
        engine.tick()


def test_empty_plan_is_an_engine_fault():
    action = BtAction(name="a/action", subtask="a", skill="k", init="ee",
                      goal=(0.1, 0, 0), constraint=trivial_constraint())
    engine = engine_for(
        BtSequence(name="s", children=(action,)), {},
        planner=lambda a, w: ActionPlan(np.zeros((0, 3))),
    )
    with pytest.raises(EngineFault, match="empty plan"):
        engine.tick()


def test_run_requires_a_positive_tick_budget():
    engine = engine_for(BtSequence(name="task", children=()), {})
    with pytest.raises(EngineFault, match="max_ticks"):
        run_to_completion(engine, 0)


# --- full pick-move-place runs ------------------------------------------------------


def test_nominal_run_succeeds_with_monotone_switching_signal():
    instance = make_instance()
    log = run_to_completion(instance, 1000)
    assert log.outcome == "success"
    assert epsilon_stair(log) == [1, 2, 3]
    world = instance.world
    cup = world.objects["cup"].position
    zone = world.regions["place_zone"]
    assert np.linalg.norm(cup - zone.center) <= zone.radius


def test_release_fires_when_the_action_runs_to_completion():
    # Shrink the placement zone below the plan's final step so the
    # post-condition cannot preempt the action's last sample; the action
    # then completes normally and performs its release.
    import copy

    from stldmp.bt import BtInstance
    from stldmp.task import compile_task
    from stldmp.world import build_world
    from bt_fixture import WORLD_DOC

    world_doc = copy.deepcopy(WORLD_DOC)
    world_doc["regions"]["place_zone"]["radius"] = 1e-6
    world, predicates = build_world(world_doc)
    instance = BtInstance(compile_task(TASK_DOC), world, predicates,
                          dodging_planner, DT)
    log = run_to_completion(instance, 1000)
    assert log.outcome == "success"
    assert world.attached is None
    # the end-effector reaches the zone center exactly; the cup sits at its
    # rigid grip offset, which is bounded by the grasp distance
    assert np.allclose(world.ee.position, [0.5, 0.5, -0.2], atol=1e-12)
    gap = np.linalg.norm(world.objects["cup"].position - world.ee.position)
    assert gap <= world.GRASP_DISTANCE


def test_disturbance_forces_reentry_and_recovery():
    instance = make_instance()
    from stldmp.world import Disturbance

    disturbed = Disturbance(100, "teleport_object", "cup", (0.1, -0.2, 0.0))
    log = run_to_completion(instance, 1000, [disturbed])
    assert log.outcome == "success"
    assert epsilon_stair(log) == [1, 2, 3, 1, 2, 3]


def test_violating_planner_is_caught_and_replanned_once_then_fails():
    calls = {"transport": 0}

    def counting_straight(action, world):
        if action.skill == "transport":
            calls["transport"] += 1
        return straight_planner(action, world)

    instance = make_instance(planner=counting_straight)
    log = run_to_completion(instance, 1000)
    assert log.outcome == "failure"
    assert "constraint violated" in log.failure_reason
    assert "re-plan budget exhausted" in log.failure_reason
    assert calls["transport"] == 2  # original plan plus one re-plan


def test_monitor_passes_a_compliant_trajectory():
    instance = make_instance(planner=dodging_planner)
    log = run_to_completion(instance, 1000)
    assert log.outcome == "success"
    # post-hoc: the executed move leg keeps clear of the obstacle
    move_ticks = [r for r in log.records if r.epsilon == 2]
    pos = np.array([r.position for r in move_ticks])
    dist = np.linalg.norm(pos - np.array([0.4, 0.25, 0.0]), axis=1)
    assert dist.min() > 0.05


def test_execution_log_csv_is_versioned_and_deterministic(tmp_path):
    log1 = run_to_completion(make_instance(), 1000)
    log2 = run_to_completion(make_instance(), 1000)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    log1.to_csv(p1)
    log2.to_csv(p2)
    assert p1.read_text() == p2.read_text()
    assert p1.read_text().startswith("# schema=stldmp.execution/1\n")


def test_timeout_is_reported_when_the_budget_is_too_small():
    log = run_to_completion(make_instance(), 5)
    assert log.outcome == "timeout"
    assert len(log.records) == 5
