"""Long-horizon task compilation: task file -> LTL abstraction -> BT blueprint.

A task is an ordered list of subtasks, each carrying the four atomic-action
slots: a post-condition (what the subtask achieves), a pre-condition (what
must already hold), an action (a DMP skill with endpoint bindings), and a
motion constraint (an STL formula handed to the trajectory optimizer, never
evaluated at the task level except as a runtime monitor).

Compilation abstracts each subtask into the propositional pattern

    psi = PoC or [PrC and U(C_STL, Action)]

chains the subtasks as nested Until-of-Eventually, and maps that fragment
onto a Behavior-Tree blueprint:

    Sequence over subtasks, each
        Fallback(Condition(PoC),
                 Sequence(Condition(PrC),
                          Parallel(Condition(C_STL monitor), Action)))

The pipeline is pure and deterministic: identical task files produce
structurally identical blueprints.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .stl import Formula, parse, pretty
from .stl.ast import StlError


class TaskError(ValueError):
    pass


TASK_SCHEMA = "stldmp.task/1"
BLUEPRINT_SCHEMA = "stldmp.blueprint/1"

# A constraint every position trace satisfies (a norm is never below -1);
# attached when a subtask declares no motion constraint so every Action
# node carries exactly one formula.
TRIVIAL_CONSTRAINT_TEXT = "norm2(y - [0,0,0]) > -1"

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def trivial_constraint() -> Formula:
    return parse(TRIVIAL_CONSTRAINT_TEXT)


def is_trivial_constraint(formula: Formula) -> bool:
    return formula == trivial_constraint()


# --- task specification -------------------------------------------------


@dataclass(frozen=True)
class ActionBinding:
    """A DMP skill with endpoint bindings.

    ``init`` and ``goal`` are either world symbols (object/region names,
    resolved against the scenario at plan time) or literal 3-vectors.
    """

    skill: str
    init: str | tuple[float, float, float]
    goal: str | tuple[float, float, float]
    grasp: str | None = None          # object to attach when within reach
    release: bool = False             # detach on completion


@dataclass(frozen=True)
class Subtask:
    name: str
    window: tuple[float, float]
    pre: str                          # predicate id queried on the world
    post: str | Formula               # predicate id, or STL over the trace
    action: ActionBinding
    c_stl: Formula                    # motion constraint for the optimizer


@dataclass(frozen=True)
class TaskSpec:
    subtasks: tuple[Subtask, ...]

    def __post_init__(self):
        if not self.subtasks:
            raise TaskError("task needs at least one subtask")
        names = [s.name for s in self.subtasks]
        if len(set(names)) != len(names):
            raise TaskError(f"duplicate subtask names: {names}")
        prev_end = None
        for s in self.subtasks:
            a, b = s.window
            if not a < b:
                raise TaskError(f"subtask {s.name!r}: window must satisfy a < b")
            if prev_end is not None and a < prev_end:
                raise TaskError(
                    f"subtask {s.name!r}: window [{a},{b}] overlaps the "
                    f"previous subtask (ends at {prev_end})"
                )
            prev_end = b


def _parse_binding(value, where: str):
    if isinstance(value, str):
        if not _IDENT.match(value):
            raise TaskError(f"{where}: invalid symbol {value!r}")
        return value
    if isinstance(value, (list, tuple)) and len(value) == 3:
        return tuple(float(v) for v in value)
    raise TaskError(f"{where}: binding must be a symbol or a 3-vector")


def _parse_condition(value, where: str, symbols=None):
    """A predicate id stays symbolic; anything else must parse as STL."""
    if not isinstance(value, str) or not value.strip():
        raise TaskError(f"{where}: expected a predicate id or an STL string")
    value = value.strip()
    if _IDENT.match(value):
        return value
    try:
        return parse(value, symbols)
    except StlError as exc:
        raise TaskError(f"{where}: {exc}") from exc


def parse_task(source, symbols: dict | None = None) -> TaskSpec:
    """Parse a task file (JSON text, dict, or path-like) into a TaskSpec.

    ``symbols`` resolves named points inside embedded STL strings.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TaskError(f"task file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "subtasks" not in doc:
        raise TaskError('task file must be an object with a "subtasks" list')
    schema = doc.get("schema")
    if schema is not None and schema != TASK_SCHEMA:
        raise TaskError(f"unsupported task schema {schema!r}, expected {TASK_SCHEMA!r}")
    subtasks = []
    for i, item in enumerate(doc["subtasks"]):
        where = f"subtasks[{i}]"
        if not isinstance(item, dict):
            raise TaskError(f"{where}: expected an object")
        missing = [k for k in ("name", "window", "pre", "post", "action") if k not in item]
        if missing:
            raise TaskError(f"{where}: missing fields {missing}")
        name = str(item["name"])
        window = item["window"]
        if not isinstance(window, (list, tuple)) or len(window) != 2:
            raise TaskError(f"{where}: window must be [a, b]")
        action = item["action"]
        if not isinstance(action, dict) or "skill" not in action:
            raise TaskError(f"{where}: action must be an object with a skill id")
        for key in ("init", "goal"):
            if key not in action:
                raise TaskError(f"{where}: action is missing {key!r}")
        pre = item["pre"]
        if not isinstance(pre, str) or not _IDENT.match(pre.strip()):
            raise TaskError(f"{where}: pre must be a predicate id")
        c_stl_text = item.get("c_stl", "")
        if c_stl_text is None or not str(c_stl_text).strip():
            c_stl = trivial_constraint()
        else:
            try:
                c_stl = parse(str(c_stl_text), symbols)
            except StlError as exc:
                raise TaskError(f"{where}: bad c_stl: {exc}") from exc
        subtasks.append(
            Subtask(
                name=name,
                window=(float(window[0]), float(window[1])),
                pre=pre.strip(),
                post=_parse_condition(item["post"], f"{where}.post", symbols),
                action=ActionBinding(
                    skill=str(action["skill"]),
                    init=_parse_binding(action["init"], f"{where}.action.init"),
                    goal=_parse_binding(action["goal"], f"{where}.action.goal"),
                    grasp=str(action["grasp"]) if action.get("grasp") else None,
                    release=bool(action.get("release", False)),
                ),
                c_stl=c_stl,
            )
        )
    return TaskSpec(subtasks=tuple(subtasks))


# --- LTL abstraction ------------------------------------------------------


@dataclass(frozen=True)
class LtlAtom:
    """An atomic proposition referencing one slot of one subtask."""

    kind: str                # post | pre | constraint | action
    subtask: Subtask

    def __post_init__(self):
        if self.kind not in ("post", "pre", "constraint", "action"):
            raise TaskError(f"unknown atom kind {self.kind!r}")


@dataclass(frozen=True)
class LtlOr:
    lhs: "LtlForm"
    rhs: "LtlForm"


@dataclass(frozen=True)
class LtlAnd:
    lhs: "LtlForm"
    rhs: "LtlForm"


@dataclass(frozen=True)
class LtlEventually:
    child: "LtlForm"


@dataclass(frozen=True)
class LtlUntil:
    lhs: "LtlForm"
    rhs: "LtlForm"


LtlForm = LtlAtom | LtlOr | LtlAnd | LtlEventually | LtlUntil


def abstract_to_ltl(spec: TaskSpec) -> LtlForm:
    """Nested chain U(F psi_1, U(F psi_2, ... F psi_N)).

    Each subtask abstracts to psi = PoC or [PrC and U(C_STL, Action)];
    a single-subtask spec degenerates to F psi_1 with no Until.
    """

    def psi(s: Subtask) -> LtlForm:
        return LtlOr(
            LtlAtom("post", s),
            LtlAnd(
                LtlAtom("pre", s),
                LtlUntil(LtlAtom("constraint", s), LtlAtom("action", s)),
            ),
        )

    form = LtlEventually(psi(spec.subtasks[-1]))
    for s in reversed(spec.subtasks[:-1]):
        form = LtlUntil(LtlEventually(psi(s)), form)
    return form


def ltl_pretty(form: LtlForm) -> str:
    if isinstance(form, LtlAtom):
        slot = {
            "post": f"PoC[{form.subtask.name}]",
            "pre": f"PrC[{form.subtask.name}]",
            "constraint": f"Cstl[{form.subtask.name}]",
            "action": f"Act[{form.subtask.name}]",
        }
        return slot[form.kind]
    if isinstance(form, LtlOr):
        return f"({ltl_pretty(form.lhs)} | {ltl_pretty(form.rhs)})"
    if isinstance(form, LtlAnd):
        return f"({ltl_pretty(form.lhs)} & {ltl_pretty(form.rhs)})"
    if isinstance(form, LtlEventually):
        return f"F({ltl_pretty(form.child)})"
    if isinstance(form, LtlUntil):
        return f"U({ltl_pretty(form.lhs)}, {ltl_pretty(form.rhs)})"
    raise TypeError(form)


# --- behavior-tree blueprint ----------------------------------------------


@dataclass(frozen=True)
class BtCondition:
    """Instantaneous world-state check.

    Either a predicate id resolved through the engine's query table, or an
    STL formula evaluated on the executed trace (monitors and formula
    post-conditions).
    """

    name: str
    predicate: str | None = None
    formula: Formula | None = None
    monitor: bool = False             # prefix-monitored motion constraint
    subtask: str | None = None        # owning subtask, set for monitors

    def __post_init__(self):
        if (self.predicate is None) == (self.formula is None):
            raise TaskError(f"condition {self.name!r} needs a predicate or a formula")


@dataclass(frozen=True)
class BtAction:
    name: str
    subtask: str
    skill: str
    init: str | tuple[float, float, float]
    goal: str | tuple[float, float, float]
    constraint: Formula
    grasp: str | None = None
    release: bool = False


@dataclass(frozen=True)
class BtSequence:
    name: str
    children: tuple["BtNode", ...]


@dataclass(frozen=True)
class BtFallback:
    name: str
    children: tuple["BtNode", ...]


@dataclass(frozen=True)
class BtParallel:
    name: str
    children: tuple["BtNode", ...]
    alpha: int                        # successes required for Success
    beta: int                         # failures tolerated before Failure

    def __post_init__(self):
        if not 1 <= self.alpha <= len(self.children):
            raise TaskError("parallel: alpha must be in [1, len(children)]")
        if not 0 <= self.beta < len(self.children):
            raise TaskError("parallel: beta must be in [0, len(children))")


BtNode = BtCondition | BtAction | BtSequence | BtFallback | BtParallel


@dataclass(frozen=True)
class BtBlueprint:
    root: BtNode
    subtasks: tuple[Subtask, ...] = field(default=())

    def to_json(self) -> dict:
        return {"schema_version": 1, "schema": BLUEPRINT_SCHEMA, "root": _node_json(self.root)}


def _node_json(node: BtNode) -> dict:
    if isinstance(node, BtCondition):
        out = {"kind": "condition", "name": node.name, "monitor": node.monitor}
        if node.predicate is not None:
            out["predicate"] = node.predicate
        else:
            out["formula"] = pretty(node.formula)
        return out
    if isinstance(node, BtAction):
        out = {
            "kind": "action",
            "name": node.name,
            "subtask": node.subtask,
            "skill": node.skill,
            "init": list(node.init) if isinstance(node.init, tuple) else node.init,
            "goal": list(node.goal) if isinstance(node.goal, tuple) else node.goal,
            "constraint": pretty(node.constraint),
        }
        if node.grasp:
            out["grasp"] = node.grasp
        if node.release:
            out["release"] = True
        return out
    kind = {BtSequence: "sequence", BtFallback: "fallback", BtParallel: "parallel"}[type(node)]
    out = {"kind": kind, "name": node.name, "children": [_node_json(c) for c in node.children]}
    if isinstance(node, BtParallel):
        out["alpha"] = node.alpha
        out["beta"] = node.beta
    return out


def _subtask_subtree(s: Subtask) -> BtFallback:
    if isinstance(s.post, str):
        post = BtCondition(name=f"{s.name}/post", predicate=s.post)
    else:
        post = BtCondition(name=f"{s.name}/post", formula=s.post)
    pre = BtCondition(name=f"{s.name}/pre", predicate=s.pre)
    monitor = BtCondition(
        name=f"{s.name}/monitor", formula=s.c_stl, monitor=True, subtask=s.name
    )
    action = BtAction(
        name=f"{s.name}/action",
        subtask=s.name,
        skill=s.action.skill,
        init=s.action.init,
        goal=s.action.goal,
        constraint=s.c_stl,
        grasp=s.action.grasp,
        release=s.action.release,
    )
    # the monitor must hold while the action runs: both children are
    # required (alpha = 2), any failure fails the node (beta = 0)
    parallel = BtParallel(
        name=f"{s.name}/constrained-action", children=(monitor, action), alpha=2, beta=0
    )
    body = BtSequence(name=f"{s.name}/body", children=(pre, parallel))
    return BtFallback(name=s.name, children=(post, body))


def ltl_to_bt(form: LtlForm) -> BtBlueprint:
    """Map the Until-of-Eventually chain onto a BT blueprint.

    Only forms produced by abstract_to_ltl are supported; anything outside
    that fragment is rejected with a diagnostic.
    """
    subtasks = []
    node = form
    while True:
        if isinstance(node, LtlUntil) and isinstance(node.lhs, LtlEventually):
            subtasks.append(_psi_subtask(node.lhs.child))
            node = node.rhs
        elif isinstance(node, LtlEventually):
            subtasks.append(_psi_subtask(node.child))
            break
        else:
            raise TaskError(
                "unsupported LTL structure: expected a chain "
                "U(F psi, U(F psi, ... F psi)), got " + ltl_pretty(form)
            )
    root = BtSequence(name="task", children=tuple(_subtask_subtree(s) for s in subtasks))
    return BtBlueprint(root=root, subtasks=tuple(subtasks))


def _psi_subtask(psi: LtlForm) -> Subtask:
    ok = (
        isinstance(psi, LtlOr)
        and isinstance(psi.lhs, LtlAtom)
        and psi.lhs.kind == "post"
        and isinstance(psi.rhs, LtlAnd)
        and isinstance(psi.rhs.lhs, LtlAtom)
        and psi.rhs.lhs.kind == "pre"
        and isinstance(psi.rhs.rhs, LtlUntil)
        and isinstance(psi.rhs.rhs.lhs, LtlAtom)
        and psi.rhs.rhs.lhs.kind == "constraint"
        and isinstance(psi.rhs.rhs.rhs, LtlAtom)
        and psi.rhs.rhs.rhs.kind == "action"
    )
    if not ok:
        raise TaskError(
            "unsupported subtask pattern: expected "
            "PoC | (PrC & U(Cstl, Act)), got " + ltl_pretty(psi)
        )
    atoms = (psi.lhs, psi.rhs.lhs, psi.rhs.rhs.lhs, psi.rhs.rhs.rhs)
    if len({a.subtask.name for a in atoms}) != 1:
        raise TaskError("subtask pattern mixes atoms from different subtasks")
    return psi.lhs.subtask


def compile_task(source, symbols: dict | None = None) -> BtBlueprint:
    """parse_task -> abstract_to_ltl -> ltl_to_bt in one call."""
    return ltl_to_bt(abstract_to_ltl(parse_task(source, symbols)))
