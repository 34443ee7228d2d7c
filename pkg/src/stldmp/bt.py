"""Behavior-tree execution engine.

Blueprints from the task compiler are executed with standard reactive tick
semantics: every tick re-evaluates conditions from the root, so a
falsified post-condition re-enters its subtask automatically.  The only
memory between ticks is each Action's rollout progress.

Action nodes advance one trajectory sample per tick (the control rate
equals the trajectory dt) and command the end-effector pose directly.
Motion constraints are monitored on the executed prefix each tick
(invariant sub-formulas only) and checked exactly at completion.  A
constraint failure triggers one re-plan from the current state; a second
failure is final.

The switching signal epsilon is the 1-based index of the subtask whose
action commanded the end-effector this tick.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .quat import rotation_speed
from .stl import Formula, Globally, boolean_satisfies, horizon, robustness
from .stl.ast import And, StlError
from .task import (
    BtAction,
    BtBlueprint,
    BtCondition,
    BtFallback,
    BtNode,
    BtParallel,
    BtSequence,
)
from .trace import SignalTrace
from .world import WorldState

EXECUTION_SCHEMA = "stldmp.execution/1"


class TickStatus(Enum):
    RUNNING = "running"
    SUCCESS = "success"
    FAILURE = "failure"


class EngineFault(RuntimeError):
    """Configuration or binding error, distinct from a Failure status."""


@dataclass
class ActionPlan:
    """A trajectory an Action node executes sample by sample."""

    positions: np.ndarray             # (T, 3)
    quaternions: np.ndarray | None = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise EngineFault(f"plan positions must be (T, 3), got {self.positions.shape}")
        if self.quaternions is not None:
            self.quaternions = np.asarray(self.quaternions, dtype=float)
            if self.quaternions.shape != (len(self.positions), 4):
                raise EngineFault("plan quaternions must be (T, 4)")

    def __len__(self) -> int:
        return len(self.positions)


@dataclass
class _ActionState:
    plan: ActionPlan | None = None
    k: int = 0                        # next sample to apply
    constraint_failures: int = 0
    hard_failed: bool = False

    def reset_progress(self):
        self.plan = None
        self.k = 0


@dataclass
class LogRecord:
    tick: int
    time: float
    epsilon: int | None
    status: str
    position: np.ndarray
    quaternion: np.ndarray


@dataclass
class ExecutionLog:
    records: list[LogRecord]
    outcome: str                      # success | failure | timeout
    failure_reason: str | None = None

    @property
    def epsilon_sequence(self) -> list[int]:
        return [r.epsilon for r in self.records if r.epsilon is not None]

    def trace(self, dt: float) -> SignalTrace:
        """Executed end-effector path as a trace for post-hoc evaluation."""
        pos = np.array([r.position for r in self.records])
        quat = np.array([r.quaternion for r in self.records])
        trace = SignalTrace.from_positions(dt, pos, quat)
        return trace.with_channels({"qspeed": rotation_speed(quat, dt)})

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# schema={EXECUTION_SCHEMA}\n")
            writer = csv.writer(fh)
            writer.writerow(
                ["tick", "time", "epsilon", "status",
                 "y.x", "y.y", "y.z", "q.w", "q.x", "q.y", "q.z"]
            )
            for r in self.records:
                writer.writerow(
                    [r.tick, repr(float(r.time)),
                     "" if r.epsilon is None else r.epsilon, r.status]
                    + [repr(float(v)) for v in r.position]
                    + [repr(float(v)) for v in r.quaternion]
                )


def _flatten_and(formula: Formula) -> list[Formula]:
    if isinstance(formula, And):
        out = []
        for child in formula.children:
            out.extend(_flatten_and(child))
        return out
    return [formula]


class BtInstance:
    """Mutable execution state for one blueprint over one world.

    ``planner(action, world) -> ActionPlan`` is invoked whenever an Action
    starts (first entry, re-entry after a disturbance, or the single
    re-plan after a constraint failure), so plans always start from the
    current world state.
    """

    def __init__(
        self,
        blueprint: BtBlueprint,
        world: WorldState,
        predicates: dict,
        planner,
        dt: float,
        max_constraint_failures: int = 2,
    ):
        self.blueprint = blueprint
        self.world = world
        self.predicates = dict(predicates)
        self.planner = planner
        self.dt = float(dt)
        self.max_constraint_failures = max_constraint_failures
        self._subtask_index = {s.name: i + 1 for i, s in enumerate(blueprint.subtasks)}
        self._states: dict[str, _ActionState] = {}
        self.epsilon: int | None = None
        self.last_failure: str | None = None
        self._progressed = False      # an action planned or moved this tick
        self._ticked_actions: set[str] = set()

    # -- per-tick API --------------------------------------------------

    def tick(self) -> TickStatus:
        self.epsilon = None
        self._progressed = False
        self._ticked_actions = set()
        status = self._tick_node(self.blueprint.root)
        # reactive reset: actions preempted this tick (not reached because
        # an earlier condition changed) restart from the current state on
        # their next entry instead of resuming a stale trajectory
        for name, state in self._states.items():
            if state.plan is not None and name not in self._ticked_actions:
                state.reset_progress()
        return status

    def switching_signal(self) -> int | None:
        return self.epsilon

    # -- node semantics --------------------------------------------------

    def _tick_node(self, node: BtNode) -> TickStatus:
        if isinstance(node, BtSequence):
            for child in node.children:
                status = self._tick_node(child)
                if status is not TickStatus.SUCCESS:
                    return status
            return TickStatus.SUCCESS
        if isinstance(node, BtFallback):
            for child in node.children:
                status = self._tick_node(child)
                if status is not TickStatus.FAILURE:
                    return status
            return TickStatus.FAILURE
        if isinstance(node, BtParallel):
            statuses = []
            failures = 0
            for child in node.children:
                status = self._tick_node(child)
                statuses.append(status)
                failures += status is TickStatus.FAILURE
                if failures > node.beta:
                    # the subtree already failed; halt remaining children
                    # (in the monitor pattern this stops the action the
                    # same tick its constraint is violated)
                    return TickStatus.FAILURE
            if sum(s is TickStatus.SUCCESS for s in statuses) >= node.alpha:
                return TickStatus.SUCCESS
            return TickStatus.RUNNING
        if isinstance(node, BtCondition):
            return self._tick_condition(node)
        if isinstance(node, BtAction):
            return self._tick_action(node)
        raise EngineFault(f"unknown node type {type(node).__name__}")

    def _tick_condition(self, node: BtCondition) -> TickStatus:
        if node.predicate is not None:
            if node.predicate not in self.predicates:
                raise EngineFault(f"unresolvable predicate id {node.predicate!r}")
            ok = self.predicates[node.predicate].evaluate(self.world, self.predicates)
            return TickStatus.SUCCESS if ok else TickStatus.FAILURE
        if node.monitor:
            return self._tick_monitor(node)
        return self._instantaneous(node.formula, node.name)

    def _instantaneous(self, formula: Formula, name: str) -> TickStatus:
        if horizon(formula, self.dt) != 0:
            raise EngineFault(
                f"condition {name!r}: temporal formulas cannot be evaluated "
                "instantaneously; use a predicate or a monitor"
            )
        pos = np.repeat(self.world.ee.position[None, :], 2, axis=0)
        quat = np.repeat(self.world.ee.quaternion[None, :], 2, axis=0)
        trace = SignalTrace.from_positions(self.dt, pos, quat)
        trace = trace.with_channels({"qspeed": np.zeros(2)})
        try:
            ok = boolean_satisfies(formula, trace, 0)
        except StlError as exc:
            raise EngineFault(f"condition {name!r}: {exc}") from exc
        return TickStatus.SUCCESS if ok else TickStatus.FAILURE

    def _tick_monitor(self, node: BtCondition) -> TickStatus:
        """Prefix check of the owning action's motion constraint.

        Only invariant conjuncts (Globally over a time-free body) can be
        falsified mid-run; anything else is checked exactly at action
        completion.  Window bounds are clipped to the executed prefix.
        """
        state = self._states.get(node.subtask)
        if state is None or state.plan is None or state.k < 2:
            return TickStatus.SUCCESS
        executed = state.plan.positions[: state.k]
        quats = (
            state.plan.quaternions[: state.k]
            if state.plan.quaternions is not None
            else None
        )
        prefix = SignalTrace.from_positions(self.dt, executed, quats)
        if quats is not None:
            prefix = prefix.with_channels({"qspeed": rotation_speed(quats, self.dt)})
        last = state.k - 1
        for conjunct in _flatten_and(node.formula):
            if not isinstance(conjunct, Globally):
                continue
            if horizon(conjunct.child, self.dt) != 0:
                continue
            lo = int(conjunct.lo)
            hi = min(int(conjunct.hi), last)
            for t in range(lo, hi + 1):
                if robustness(conjunct.child, prefix, t) < 0:
                    return self._constraint_violated(
                        node.subtask, state,
                        f"{node.subtask}: constraint violated at sample {t}",
                    )
        return TickStatus.SUCCESS

    def _constraint_violated(self, subtask, state, reason) -> TickStatus:
        """Book a constraint failure: one re-plan is allowed, then final."""
        state.constraint_failures += 1
        state.reset_progress()
        if state.constraint_failures >= self.max_constraint_failures:
            state.hard_failed = True
            self.last_failure = reason + " (re-plan budget exhausted)"
        else:
            self.last_failure = reason + ", re-planning"
            self._progressed = True   # a re-plan is pending; keep running
        return TickStatus.FAILURE

    def _tick_action(self, node: BtAction) -> TickStatus:
        state = self._states.setdefault(node.subtask, _ActionState())
        if state.hard_failed:
            return TickStatus.FAILURE
        if state.plan is None:
            plan = self.planner(node, self.world)
            if not isinstance(plan, ActionPlan):
                plan = ActionPlan(*plan) if isinstance(plan, tuple) else ActionPlan(plan)
            if len(plan) == 0:
                raise EngineFault(f"planner returned an empty plan for {node.name!r}")
            state.plan = plan
            state.k = 0
            self._progressed = True
        quat = (
            state.plan.quaternions[state.k]
            if state.plan.quaternions is not None
            else None
        )
        self.world.set_ee(state.plan.positions[state.k], quat)
        if node.grasp:
            self.world.try_grasp(node.grasp)
        state.k += 1
        self.epsilon = self._subtask_index.get(node.subtask)
        self._progressed = True
        self._ticked_actions.add(node.subtask)
        if state.k < len(state.plan):
            return TickStatus.RUNNING
        return self._complete_action(node, state)

    def _complete_action(self, node: BtAction, state: _ActionState) -> TickStatus:
        executed = SignalTrace.from_positions(
            self.dt, state.plan.positions, state.plan.quaternions
        )
        if state.plan.quaternions is not None:
            executed = executed.with_channels(
                {"qspeed": rotation_speed(state.plan.quaternions, self.dt)}
            )
        try:
            rho = robustness(node.constraint, executed, 0)
        except StlError as exc:
            raise EngineFault(f"action {node.name!r}: constraint not evaluable on "
                              f"the executed trajectory: {exc}") from exc
        if rho < 0:
            return self._constraint_violated(
                node.subtask, state,
                f"{node.subtask}: constraint violated on the completed "
                f"trajectory (robustness {rho:.4g})",
            )
        state.reset_progress()
        if node.release:
            self.world.release()
        return TickStatus.SUCCESS


def run_to_completion(
    instance: BtInstance,
    max_ticks: int,
    disturbances=(),
) -> ExecutionLog:
    """Tick until the root succeeds, fails for good, or the budget runs out.

    Scripted disturbances are applied to the world before their tick.  A
    Failure tick only ends the run when no re-plan can change the outcome;
    otherwise the reactive root re-enters the affected subtask.
    """
    if max_ticks <= 0:
        raise EngineFault("max_ticks must be positive")
    pending = sorted(disturbances, key=lambda d: d.tick)
    records: list[LogRecord] = []
    for tick_no in range(max_ticks):
        while pending and pending[0].tick <= tick_no:
            pending.pop(0).apply(instance.world)
        status = instance.tick()
        records.append(
            LogRecord(
                tick=tick_no,
                time=tick_no * instance.dt,
                epsilon=instance.epsilon,
                status=status.value,
                position=instance.world.ee.position.copy(),
                quaternion=instance.world.ee.quaternion.copy(),
            )
        )
        if status is TickStatus.SUCCESS:
            return ExecutionLog(records, "success")
        if status is TickStatus.FAILURE and not instance._progressed:
            return ExecutionLog(records, "failure", instance.last_failure)
    return ExecutionLog(records, "timeout", "tick budget exceeded")
