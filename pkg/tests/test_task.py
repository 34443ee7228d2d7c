"""Task file parsing, LTL abstraction, and tree compilation."""

import json

import pytest

from stldmp.stl import pretty
from stldmp.stl.ast import Globally
from stldmp.task import (
    LtlAtom,
    LtlEventually,
    LtlOr,
    LtlUntil,
    Subtask,
    TaskError,
    TaskSpec,
    abstract_to_ltl,
    compile_task,
    is_trivial_constraint,
    ltl_pretty,
    ltl_to_bt,
    parse_task,
    trivial_constraint,
)
from stldmp.task import BtAction, BtCondition, BtFallback, BtParallel, BtSequence


def task_doc(n=3, c_stl="G[0,10](norm2(y - [0.5,0.5,0.0]) > 0.1)"):
    return {
        "schema": "stldmp.task/1",
        "subtasks": [
            {
                "name": f"step{i}",
                "window": [2 * i, 2 * i + 2],
                "pre": "ready",
                "post": "done",
                "action": {"skill": f"skill{i}", "init": "ee", "goal": [0.1 * i, 0, 0]},
                "c_stl": c_stl if i == 1 else "",
            }
            for i in range(n)
        ],
    }


# --- parsing -----------------------------------------------------------------


def test_parse_preserves_order_windows_and_bindings():
    spec = parse_task(task_doc())
    assert [s.name for s in spec.subtasks] == ["step0", "step1", "step2"]
    assert spec.subtasks[1].window == (2.0, 4.0)
    assert spec.subtasks[0].action.init == "ee"
    assert spec.subtasks[2].action.goal == (0.2, 0.0, 0.0)


def test_empty_constraint_becomes_the_trivial_formula():
    spec = parse_task(task_doc())
    assert is_trivial_constraint(spec.subtasks[0].c_stl)
    assert not is_trivial_constraint(spec.subtasks[1].c_stl)
    # the trivial formula is always satisfied with positive margin
    assert pretty(trivial_constraint()) == pretty(parse_task(task_doc()).subtasks[0].c_stl)


def test_bare_identifier_post_is_a_predicate_and_stl_post_is_a_formula():
    doc = task_doc(n=1)
    doc["subtasks"][0]["post"] = "norm2(y - [1,0,0]) < 0.05"
    spec = parse_task(doc)
    assert not isinstance(spec.subtasks[0].post, str)
    doc["subtasks"][0]["post"] = "cup_placed"
    spec = parse_task(doc)
    assert spec.subtasks[0].post == "cup_placed"


def test_parse_rejects_malformed_documents():
    with pytest.raises(TaskError, match="at least one subtask"):
        parse_task({"subtasks": []})
    doc = task_doc()
    doc["subtasks"][1]["name"] = "step0"
    with pytest.raises(TaskError, match="duplicate"):
        parse_task(doc)
    doc = task_doc()
    doc["subtasks"][0]["window"] = [2, 2]
    with pytest.raises(TaskError, match="a < b"):
        parse_task(doc)
    doc = task_doc()
    doc["subtasks"][1]["window"] = [1, 3]  # overlaps step0's [0, 2]... shifted
    doc["subtasks"][1]["window"] = [1.5, 3]
    with pytest.raises(TaskError):
        parse_task(doc)
    doc = task_doc()
    del doc["subtasks"][0]["action"]
    with pytest.raises(TaskError, match="missing fields"):
        parse_task(doc)
    doc = task_doc()
    doc["subtasks"][0]["c_stl"] = "G[0,10](norm2(y - nowhere) > 0.1)"
    with pytest.raises(TaskError, match="bad c_stl"):
        parse_task(doc)
    with pytest.raises(TaskError, match="unsupported task schema"):
        parse_task({"schema": "stldmp.task/99", "subtasks": task_doc()["subtasks"]})


def test_parse_accepts_json_text_and_paths(tmp_path):
    doc = task_doc(n=1)
    text = json.dumps(doc)
    assert parse_task(text).subtasks[0].name == "step0"
    path = tmp_path / "task.json"
    path.write_text(text)
    assert parse_task(path).subtasks[0].name == "step0"


# --- LTL abstraction ----------------------------------------------------------


def test_ltl_chain_is_right_nested_and_order_preserving():
    spec = parse_task(task_doc())
    form = abstract_to_ltl(spec)
    # U(F psi0, U(F psi1, F psi2))
    assert isinstance(form, LtlUntil)
    assert isinstance(form.lhs, LtlEventually)
    assert form.lhs.child.lhs.subtask.name == "step0"
    inner = form.rhs
    assert isinstance(inner, LtlUntil)
    assert inner.lhs.child.lhs.subtask.name == "step1"
    assert isinstance(inner.rhs, LtlEventually)
    assert inner.rhs.child.lhs.subtask.name == "step2"


def test_single_subtask_degenerates_to_eventually():
    form = abstract_to_ltl(parse_task(task_doc(n=1)))
    assert isinstance(form, LtlEventually)
    assert isinstance(form.child, LtlOr)
    text = ltl_pretty(form)
    assert text.startswith("F(") and "U(Cstl[step0], Act[step0])" in text


def test_ltl_to_bt_rejects_forms_outside_the_fragment():
    spec = parse_task(task_doc(n=2))
    good = abstract_to_ltl(spec)
    with pytest.raises(TaskError, match="unsupported LTL structure"):
        ltl_to_bt(LtlUntil(LtlAtom("action", spec.subtasks[0]), good))
    with pytest.raises(TaskError, match="unsupported subtask pattern"):
        ltl_to_bt(LtlEventually(LtlAtom("post", spec.subtasks[0])))
    mixed = LtlEventually(
        LtlOr(
            LtlAtom("post", spec.subtasks[0]),
            good.lhs.child.rhs.__class__(
                LtlAtom("pre", spec.subtasks[1]),
                LtlUntil(
                    LtlAtom("constraint", spec.subtasks[1]),
                    LtlAtom("action", spec.subtasks[1]),
                ),
            ),
        )
    )
    with pytest.raises(TaskError, match="different subtasks"):
        ltl_to_bt(mixed)


# --- tree compilation ------------------------------------------------------------


def test_compiled_tree_shape_per_subtask():
    blueprint = compile_task(task_doc())
    root = blueprint.root
    assert isinstance(root, BtSequence)
    assert len(root.children) == 3
    sub = root.children[1]
    assert isinstance(sub, BtFallback) and sub.name == "step1"
    post, body = sub.children
    assert isinstance(post, BtCondition) and post.predicate == "done"
    assert isinstance(body, BtSequence)
    pre, par = body.children
    assert pre.predicate == "ready"
    assert isinstance(par, BtParallel) and par.alpha == 2 and par.beta == 0
    monitor, action = par.children
    assert monitor.monitor and monitor.subtask == "step1"
    assert isinstance(action, BtAction) and action.skill == "skill1"


def test_constraint_is_conserved_from_task_file_to_monitor_and_action():
    text = "G[0,10](norm2(y - [0.5,0.5,0.0]) > 0.1)"
    blueprint = compile_task(task_doc(c_stl=text))
    sub = blueprint.root.children[1]
    monitor, action = sub.children[1].children[1].children
    assert pretty(monitor.formula) == pretty(action.constraint)
    assert isinstance(monitor.formula, Globally)
    assert pretty(blueprint.subtasks[1].c_stl) == pretty(monitor.formula)


def test_compilation_is_deterministic():
    a = compile_task(task_doc())
    b = compile_task(task_doc())
    assert a.to_json() == b.to_json()


def test_blueprint_json_is_versioned_and_self_contained():
    doc = task_doc(n=2)
    doc["subtasks"][0]["action"]["grasp"] = "cup"
    doc["subtasks"][1]["action"]["release"] = True
    out = compile_task(doc).to_json()
    assert out["schema"] == "stldmp.blueprint/1"
    assert out["schema_version"] == 1
    first_action = out["root"]["children"][0]["children"][1]["children"][1]["children"][1]
    assert first_action["grasp"] == "cup"
    second_action = out["root"]["children"][1]["children"][1]["children"][1]["children"][1]
    assert second_action["release"] is True
    json.dumps(out)  # serializable


def test_parallel_parameter_validation():
    cond = BtCondition(name="c", predicate="p")
    with pytest.raises(TaskError, match="alpha"):
        BtParallel(name="p", children=(cond,), alpha=2, beta=0)
    with pytest.raises(TaskError, match="beta"):
        BtParallel(name="p", children=(cond,), alpha=1, beta=1)
    with pytest.raises(TaskError, match="predicate or a formula"):
        BtCondition(name="c")


def test_windows_must_be_ordered_and_disjoint():
    s1 = Subtask(
        name="a", window=(0.0, 2.0), pre="p", post="q",
        action=parse_task(task_doc(n=1)).subtasks[0].action,
        c_stl=trivial_constraint(),
    )
    s2 = Subtask(
        name="b", window=(1.0, 3.0), pre="p", post="q",
        action=s1.action, c_stl=trivial_constraint(),
    )
    with pytest.raises(TaskError):
        TaskSpec(subtasks=(s1, s2))
