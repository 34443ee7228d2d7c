"""Command-line pipeline: learn, plan, run, eval, export.

The subcommands tie the library together around versioned artifacts:

    learn   demo CSVs -> model bundle JSON per skill
    plan    scenario JSON -> blueprint + per-subtask optimized trajectories
    run     scenario JSON -> ticked execution log + post-hoc evaluation
    eval    trace CSV + STL string -> robustness report
    export  scenario or task JSON -> blueprint JSON + LTL rendering

Every artifact carries a schema identifier; runs are deterministic given
the scenario and seed (wall-clock timings only appear in summary files).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .bt import ActionPlan, BtInstance, ExecutionLog, run_to_completion
from .demostats import build_demo_set, compute_stats
from .dmp import BasisSet, DmpModel, rollout_arrays
from .optimize import (
    OptimizationProblem,
    OptimizationResult,
    OptimizerConfig,
    optimize,
)
from .quat import QuatDmpModel, learn_forcing_quat, rollout_quat
from .stl import formula_channels, horizon, parse, pretty, robustness
from .stl.ast import (
    And,
    Eventually,
    Formula,
    Globally,
    Implies,
    Not,
    Or,
    Pred,
    StlError,
)
from .task import BtAction, compile_task, is_trivial_constraint, ltl_pretty
from .task import abstract_to_ltl, parse_task
from .trace import SignalTrace, TraceError
from .world import build_world, parse_disturbance

MODEL_SCHEMA = "stldmp.model/1"
SCENARIO_SCHEMA = "stldmp.scenario/1"
PLAN_SCHEMA = "stldmp.plan/1"
EVALUATION_SCHEMA = "stldmp.evaluation/1"


class CliError(ValueError):
    pass


def _load_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise CliError(f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}") from exc


def _write_json(path, doc) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _array(doc, key) -> np.ndarray:
    return np.asarray(doc[key], dtype=float)


# --- model bundles ----------------------------------------------------------


def bundle_from_model(skill: str, model: DmpModel, W: np.ndarray,
                      quat: QuatDmpModel | None = None) -> dict:
    doc = {
        "schema_version": 1,
        "schema": MODEL_SCHEMA,
        "skill": skill,
        "dt": model.dt,
        "alpha": model.alpha,
        "beta": model.beta,
        "tau": model.tau,
        "y_init": model.y_init.tolist(),
        "y_goal": model.y_goal.tolist(),
        "F_lrn": model.F_lrn.tolist(),
        "W": np.asarray(W, dtype=float).tolist(),
        "basis": None
        if model.basis is None
        else {
            "centers": model.basis.centers.tolist(),
            "widths": model.basis.widths.tolist(),
            "weights": model.weights.tolist(),
        },
    }
    if quat is not None:
        doc["quat"] = {
            "alpha_q": quat.alpha_q,
            "beta_q": quat.beta_q,
            "tau_q": quat.tau_q,
            "q_init": quat.q_init.tolist(),
            "q_goal": quat.q_goal.tolist(),
            "F_q_lrn": quat.F_q_lrn.tolist(),
        }
    return doc


def model_from_bundle(doc: dict):
    if doc.get("schema") != MODEL_SCHEMA:
        raise CliError(
            f"expected model schema {MODEL_SCHEMA!r}, got {doc.get('schema')!r}"
        )
    basis = doc.get("basis")
    model = DmpModel(
        alpha=float(doc["alpha"]),
        beta=float(doc["beta"]),
        tau=float(doc["tau"]),
        dt=float(doc["dt"]),
        y_init=_array(doc, "y_init"),
        y_goal=_array(doc, "y_goal"),
        F_lrn=_array(doc, "F_lrn"),
        basis=None
        if basis is None
        else BasisSet(np.asarray(basis["centers"]), np.asarray(basis["widths"])),
        weights=None if basis is None else np.asarray(basis["weights"]),
    )
    W = _array(doc, "W")
    quat = None
    if "quat" in doc:
        q = doc["quat"]
        quat = QuatDmpModel(
            alpha_q=float(q["alpha_q"]),
            beta_q=float(q["beta_q"]),
            tau_q=float(q["tau_q"]),
            dt=float(doc["dt"]),
            q_init=np.asarray(q["q_init"], dtype=float),
            q_goal=np.asarray(q["q_goal"], dtype=float),
            F_q_lrn=np.asarray(q["F_q_lrn"], dtype=float),
        )
    return model, W, quat


def _mean_quaternions(demos: list[SignalTrace]) -> np.ndarray:
    stacks = []
    for d in demos:
        q = np.stack([d.channel(f"q.{c}") for c in "wxyz"], axis=1)
        if stacks and float(np.sum(q[0] * stacks[0][0])) < 0:
            q = -q
        stacks.append(q)
    mean = np.mean(stacks, axis=0)
    norms = np.linalg.norm(mean, axis=1, keepdims=True)
    return mean / norms


def learn_skill(demo_paths, params: dict, seed: int = 0):
    """Demo CSVs -> (DmpModel, W, QuatDmpModel or None, DemoStats)."""
    if not demo_paths:
        raise CliError("need at least one demo file")
    demos = [SignalTrace.from_csv(p) for p in demo_paths]
    n_samples = params.get("samples") or max(len(d) for d in demos)
    demo_set = build_demo_set(demos, n_samples)
    stats = compute_stats(
        demo_set,
        n_components=int(params.get("n_components", 8)),
        seed=seed,
    )
    dt = demo_set.demos[0].dt
    mean_demo = SignalTrace.from_positions(dt, stats.mean)
    model = learn_dmp_from(mean_demo, params)
    quat = None
    if all("q.w" in d.channel_names for d in demo_set.demos):
        q_mean = _mean_quaternions(demo_set.demos)
        quat_demo = mean_demo.with_channels(
            {f"q.{c}": q_mean[:, j] for j, c in enumerate("wxyz")}
        )
        alpha_q = float(params.get("alpha_q", model.alpha))
        beta_q = float(params.get("beta_q", alpha_q / 4.0))
        F_q = learn_forcing_quat(quat_demo, alpha_q, beta_q, model.tau)
        quat = QuatDmpModel(
            alpha_q=alpha_q,
            beta_q=beta_q,
            tau_q=model.tau,
            dt=dt,
            q_init=q_mean[0],
            q_goal=q_mean[-1],
            F_q_lrn=F_q,
        )
    return model, stats.W, quat, stats


def learn_dmp_from(demo: SignalTrace, params: dict) -> DmpModel:
    from .dmp import learn_dmp

    return learn_dmp(
        demo,
        alpha=float(params.get("alpha", 25.0)),
        beta=params.get("beta"),
        tau=params.get("tau"),
        n_basis=int(params.get("n_basis", 25)),
    )


# --- scenarios --------------------------------------------------------------


class Scenario:
    def __init__(self, doc: dict, base_dir: Path):
        if doc.get("schema") not in (None, SCENARIO_SCHEMA):
            raise CliError(
                f"expected scenario schema {SCENARIO_SCHEMA!r}, got {doc.get('schema')!r}"
            )
        for key in ("world", "task", "skills"):
            if key not in doc:
                raise CliError(f"scenario is missing the {key!r} section")
        self.doc = doc
        self.base_dir = base_dir
        self.name = doc.get("name", base_dir.name)
        self.seed = int(doc.get("seed", 0))
        self.max_ticks = int(doc.get("max_ticks", 5000))
        task_doc = doc["task"]
        if isinstance(task_doc, str):
            task_doc = _load_json(base_dir / task_doc)
        self.task_doc = task_doc
        for skill, sk in doc["skills"].items():
            if "demos" not in sk or not sk["demos"]:
                raise CliError(f"skill {skill!r} lists no demo files")
            for demo in sk["demos"]:
                if not (base_dir / demo).exists():
                    raise CliError(f"skill {skill!r}: demo file not found: {demo}")
        for dist in doc.get("disturbances", []):
            parse_disturbance(dist)

    @staticmethod
    def load(path) -> "Scenario":
        path = Path(path)
        return Scenario(_load_json(path), path.parent)

    def fresh_world(self):
        return build_world(self.doc["world"])

    def symbols(self) -> dict:
        """Named points for STL parsing: explicit symbols + initial world."""
        world, _ = self.fresh_world()
        out = {name: tuple(pose.position) for name, pose in world.objects.items()}
        out.update(
            {name: tuple(reg.center) for name, reg in world.regions.items()}
        )
        for name, point in self.doc.get("symbols", {}).items():
            out[name] = tuple(float(v) for v in point)
        return out

    def blueprint(self):
        return compile_task(self.task_doc, self.symbols())

    def optimizer_config(self, subtask: str, overrides: dict | None = None) -> OptimizerConfig:
        opts = dict(self.doc.get("optimizer", {}).get("defaults", {}))
        opts.update(self.doc.get("optimizer", {}).get("per_subtask", {}).get(subtask, {}))
        opts.update(overrides or {})
        try:
            return OptimizerConfig(**opts)
        except TypeError as exc:
            raise CliError(f"bad optimizer option for {subtask!r}: {exc}") from exc

    def disturbances(self):
        return [parse_disturbance(d) for d in self.doc.get("disturbances", [])]


def ensure_models(scenario: Scenario, out_dir: Path, config: dict):
    """Load per-skill model bundles, learning any that are missing."""
    models = {}
    model_dir = out_dir / "models"
    for skill, sk in scenario.doc["skills"].items():
        bundle_path = model_dir / f"{skill}.json"
        if bundle_path.exists():
            models[skill] = model_from_bundle(_load_json(bundle_path))
            continue
        params = dict(sk)
        params.update(config.get("learn", {}))
        demo_paths = [scenario.base_dir / p for p in sk["demos"]]
        model, W, quat, _ = learn_skill(demo_paths, params, seed=scenario.seed)
        _write_json(bundle_path, bundle_from_model(skill, model, W, quat))
        models[skill] = (model, W, quat)
    return models


_QUAT_CHANNELS = {"qspeed", "q.w", "q.x", "q.y", "q.z",
                  "eta.x", "eta.y", "eta.z"}


def plan_action(
    action: BtAction,
    models: dict,
    y_init: np.ndarray,
    y_goal: np.ndarray,
    cfg: OptimizerConfig,
) -> tuple[ActionPlan, OptimizationResult | None]:
    """Optimized trajectory for one action from the given endpoints."""
    if action.skill not in models:
        raise CliError(f"action {action.name!r} references unlearned skill {action.skill!r}")
    model, W, quat = models[action.skill]
    needs_quat = bool(formula_channels(action.constraint) & _QUAT_CHANNELS)
    if needs_quat and quat is None:
        raise CliError(
            f"action {action.name!r}: constraint references orientation "
            f"channels but skill {action.skill!r} has no orientation model"
        )
    if is_trivial_constraint(action.constraint):
        y, _ = rollout_arrays(model, model.F_lrn, y_init, y_goal)
        quats = None
        if quat is not None:
            quats = np.stack(
                [rollout_quat(quat).channel(f"q.{c}") for c in "wxyz"], axis=1
            )
        return ActionPlan(y, quats), None
    problem = OptimizationProblem(
        model=model,
        constraint=action.constraint,
        W=W,
        y_init=np.asarray(y_init, dtype=float),
        y_goal=np.asarray(y_goal, dtype=float),
        quat_model=quat if needs_quat else None,
        config=cfg,
    )
    result = optimize(problem)
    quats = None
    if quat is not None:
        F_q = result.F_q_opt if needs_quat else quat.F_q_lrn
        quats = np.stack(
            [rollout_quat(quat, F_q).channel(f"q.{c}") for c in "wxyz"], axis=1
        )
    positions = result.trace.vector("y")
    return ActionPlan(positions, quats), result


def make_planner(scenario: Scenario, models: dict, config: dict, reports: list):
    def planner(action: BtAction, world) -> ActionPlan:
        y_init = world.ee.position.copy()
        y_goal = world.resolve(action.goal)
        cfg = scenario.optimizer_config(action.subtask, config.get("optimizer"))
        plan, result = plan_action(action, models, y_init, y_goal, cfg)
        if result is not None:
            entry = {"subtask": action.subtask, "status": result.status,
                     "robustness_exact": result.robustness_exact,
                     "iterations": result.iterations}
            reports.append(entry)
            if result.status != "satisfied":
                print(
                    f"warning: {action.subtask}: optimizer finished "
                    f"{result.status} (robustness {result.robustness_exact:.4g})",
                    file=sys.stderr,
                )
        return plan

    return planner


# --- evaluation helpers -----------------------------------------------------


def _epsilon_blocks(log: ExecutionLog) -> dict[int, tuple[int, int]]:
    """Final contiguous tick block per subtask index."""
    blocks: dict[int, tuple[int, int]] = {}
    current = None
    start = 0
    for i, rec in enumerate(log.records):
        if rec.epsilon != current:
            if current is not None:
                blocks[current] = (start, i - 1)
            current = rec.epsilon
            start = i
    if current is not None:
        blocks[current] = (start, len(log.records) - 1)
    blocks.pop(None, None)
    return blocks


def _subformula_report(formula: Formula, trace: SignalTrace, t0: int) -> dict:
    out = {"formula": pretty(formula), "robustness": robustness(formula, trace, t0)}
    children = []
    if isinstance(formula, Not):
        children = [formula.child]
    elif isinstance(formula, (And, Or)):
        children = list(formula.children)
    elif isinstance(formula, Implies):
        children = [formula.lhs, formula.rhs]
    elif isinstance(formula, (Eventually, Globally)):
        children = [formula.child]
    if children:
        out["children"] = [_subformula_report(c, trace, t0) for c in children]
    return out


def evaluate_run(scenario: Scenario, blueprint, log: ExecutionLog, dt: float) -> dict:
    trace = log.trace(dt)
    blocks = _epsilon_blocks(log)
    symbols = scenario.symbols()
    sub_reports = []
    for i, sub in enumerate(blueprint.subtasks, start=1):
        entry = {"name": sub.name, "epsilon": i,
                 "constraint": pretty(sub.c_stl)}
        block = blocks.get(i)
        if block is None:
            entry["note"] = "never executed (post-condition already satisfied)"
            entry["robustness"] = None
        else:
            entry["window"] = list(block)
            a, b = block
            length = b - a + 1
            needed = horizon(sub.c_stl, dt)
            if needed > length - 1:
                entry["robustness"] = None
                entry["note"] = (
                    f"executed block ({length} samples) shorter than the "
                    f"constraint horizon ({needed}); subtask ended early"
                )
            else:
                positions = np.array(
                    [r.position for r in log.records[a : b + 1]]
                )
                quats = np.array([r.quaternion for r in log.records[a : b + 1]])
                sub_trace = SignalTrace.from_positions(dt, positions, quats)
                from .quat import rotation_speed

                sub_trace = sub_trace.with_channels(
                    {"qspeed": rotation_speed(quats, dt)}
                )
                rho = robustness(sub.c_stl, sub_trace, 0)
                entry["robustness"] = rho
                entry["satisfied"] = bool(rho >= 0)
        sub_reports.append(entry)
    report = {
        "schema_version": 1,
        "schema": EVALUATION_SCHEMA,
        "outcome": log.outcome,
        "failure_reason": log.failure_reason,
        "ticks": len(log.records),
        "epsilon_blocks": {str(k): list(v) for k, v in blocks.items()},
        "subtasks": sub_reports,
    }
    # whole-task formula: each subtask's achievement formula must hold
    # somewhere inside its realized execution window
    post_stl = scenario.doc.get("evaluation", {}).get("post_stl", {})
    clauses = []
    for i, sub in enumerate(blueprint.subtasks, start=1):
        text = post_stl.get(sub.name)
        if text is None:
            continue
        child = parse(text, symbols)
        block = blocks.get(i)
        hi = min(block[1] + 1, len(log.records) - 1) if block else len(log.records) - 1
        lo = block[0] if block else 0
        clauses.append(Eventually(float(lo), float(hi), child))
    if clauses:
        whole = clauses[0] if len(clauses) == 1 else And(tuple(clauses))
        rho = robustness(whole, trace, 0)
        report["whole_task"] = {
            "formula": pretty(whole),
            "robustness": rho,
            "satisfied": bool(rho >= 0),
        }
    return report


# --- subcommands ------------------------------------------------------------


def cmd_learn(args, config: dict) -> int:
    params = dict(config.get("learn", {}))
    model, W, quat, stats = learn_skill(args.demos, params, seed=args.seed)
    out_dir = Path(args.out_dir)
    bundle = bundle_from_model(args.skill, model, W, quat)
    path = out_dir / "models" / f"{args.skill}.json"
    _write_json(path, bundle)
    print(f"learned skill {args.skill!r} from {len(args.demos)} demo(s) -> {path}")
    return 0


def cmd_plan(args, config: dict) -> int:
    scenario = Scenario.load(args.scenario)
    out_dir = Path(args.out_dir)
    if args.seed is not None:
        scenario.seed = args.seed
    models = ensure_models(scenario, out_dir, config)
    blueprint = scenario.blueprint()
    world, _ = scenario.fresh_world()
    plan_dir = out_dir / "plan"
    _write_json(plan_dir / "blueprint.json", blueprint.to_json())
    statuses = {}
    t0 = time.perf_counter()
    for i, sub in enumerate(blueprint.subtasks, start=1):
        action = BtAction(
            name=f"{sub.name}/action", subtask=sub.name, skill=sub.action.skill,
            init=sub.action.init, goal=sub.action.goal, constraint=sub.c_stl,
        )
        y_init = world.resolve(sub.action.init)
        y_goal = world.resolve(sub.action.goal)
        cfg = scenario.optimizer_config(sub.name, config.get("optimizer"))
        plan, result = plan_action(action, models, y_init, y_goal, cfg)
        sub_dir = plan_dir / sub.name
        sub_dir.mkdir(parents=True, exist_ok=True)
        trace = SignalTrace.from_positions(
            models[sub.action.skill][0].dt, plan.positions, plan.quaternions
        )
        trace.to_csv(sub_dir / "trace.csv")
        report = {
            "schema_version": 1,
            "subtask": sub.name,
            "skill": sub.action.skill,
            "constraint": pretty(sub.c_stl),
            "y_init": np.asarray(y_init, dtype=float).tolist(),
            "y_goal": np.asarray(y_goal, dtype=float).tolist(),
        }
        if result is None:
            report["status"] = "satisfied"
            report["note"] = "no motion constraint; learned forcing kept"
            statuses[sub.name] = "satisfied"
        else:
            report["status"] = result.status
            report["robustness_exact"] = result.robustness_exact
            report["iterations"] = result.iterations
            report["objective_history"] = result.objective_history
            report["F_opt"] = result.F_opt.tolist()
            statuses[sub.name] = result.status
            if result.status != "satisfied":
                print(
                    f"warning: {sub.name}: optimizer finished {result.status} "
                    f"(robustness {result.robustness_exact:.4g})",
                    file=sys.stderr,
                )
        _write_json(sub_dir / "report.json", report)
    _write_json(
        plan_dir / "summary.json",
        {
            "schema_version": 1,
            "schema": PLAN_SCHEMA,
            "scenario": scenario.name,
            "seed": scenario.seed,
            "subtasks": statuses,
            "wall_time": time.perf_counter() - t0,
        },
    )
    print(f"planned {len(blueprint.subtasks)} subtask(s) -> {plan_dir}")
    return 0 if all(s == "satisfied" for s in statuses.values()) else 3


def cmd_run(args, config: dict) -> int:
    scenario = Scenario.load(args.scenario)
    out_dir = Path(args.out_dir)
    if args.seed is not None:
        scenario.seed = args.seed
    if not (out_dir / "plan" / "summary.json").exists():
        raise CliError(
            f"no plan artifacts under {out_dir / 'plan'}; run the plan "
            "subcommand first"
        )
    models = ensure_models(scenario, out_dir, config)
    blueprint = scenario.blueprint()
    world, predicates = scenario.fresh_world()
    dt = next(iter(models.values()))[0].dt
    reports: list = []
    planner = make_planner(scenario, models, config, reports)
    instance = BtInstance(blueprint, world, predicates, planner, dt)
    t0 = time.perf_counter()
    log = run_to_completion(instance, scenario.max_ticks, scenario.disturbances())
    run_dir = out_dir / "run"
    run_dir.mkdir(parents=True, exist_ok=True)
    log.to_csv(run_dir / "execution.csv")
    evaluation = evaluate_run(scenario, blueprint, log, dt)
    evaluation["optimizations"] = reports
    _write_json(run_dir / "evaluation.json", evaluation)
    _write_json(
        run_dir / "summary.json",
        {
            "schema_version": 1,
            "scenario": scenario.name,
            "seed": scenario.seed,
            "outcome": log.outcome,
            "ticks": len(log.records),
            "wall_time": time.perf_counter() - t0,
        },
    )
    print(f"run {log.outcome} after {len(log.records)} tick(s) -> {run_dir}")
    return 0 if log.outcome == "success" else 4


def cmd_eval(args, config: dict) -> int:
    symbols = {}
    if args.symbols:
        symbols = {
            name: tuple(float(v) for v in point)
            for name, point in _load_json(args.symbols).items()
        }
    trace = SignalTrace.from_csv(args.trace)
    formula = parse(args.formula, symbols)
    report = {
        "schema_version": 1,
        "trace": str(args.trace),
        "samples": len(trace),
        "dt": trace.dt,
    }
    breakdown = _subformula_report(formula, trace, args.at)
    report.update(breakdown)
    report["satisfied"] = bool(report["robustness"] >= 0)
    text = json.dumps(report, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0 if report["satisfied"] else 5


def cmd_export(args, config: dict) -> int:
    doc = _load_json(args.source)
    out_dir = Path(args.out_dir)
    if "subtasks" in doc:
        symbols = {
            name: tuple(float(v) for v in point)
            for name, point in config.get("symbols", {}).items()
        }
        spec = parse_task(doc, symbols)
        blueprint = compile_task(doc, symbols)
    else:
        scenario = Scenario(doc, Path(args.source).parent)
        spec = parse_task(scenario.task_doc, scenario.symbols())
        blueprint = scenario.blueprint()
    _write_json(out_dir / "blueprint.json", blueprint.to_json())
    ltl = ltl_pretty(abstract_to_ltl(spec))
    (out_dir / "ltl.txt").write_text(ltl + "\n")
    print(f"exported blueprint and LTL form -> {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stldmp",
        description="Learn DMP skills, optimize them under STL constraints, "
        "and execute long-horizon tasks via behavior trees.",
    )
    parser.add_argument("--config", help="JSON file with option overrides")
    parser.add_argument("--seed", type=int, default=None, help="random seed override")
    parser.add_argument("--out-dir", default="out", help="artifact directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a skill model from demo CSVs")
    p.add_argument("--skill", required=True)
    p.add_argument("demos", nargs="+")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("plan", help="compile a scenario and optimize its motions")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="execute a planned scenario tick by tick")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="evaluate an STL formula on a trace CSV")
    p.add_argument("trace")
    p.add_argument("formula")
    p.add_argument("--symbols", help="JSON file of named points")
    p.add_argument("--at", type=int, default=0, help="evaluation start sample")
    p.add_argument("--out", help="write the report JSON here as well")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="export the blueprint and LTL form")
    p.add_argument("source", help="scenario or task JSON file")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _load_json(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    args.seed = seed
    try:
        return args.func(args, config)
    except (CliError, TraceError, StlError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
