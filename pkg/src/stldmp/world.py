"""Kinematic world model for task execution.

The world tracks an end-effector pose, named objects, and named spherical
regions.  There are no dynamics: objects move only when attached to the
end-effector or when a scripted disturbance teleports them, and the
end-effector goes exactly where it is commanded.

Predicates over the world (Picked, CupGoal, ...) are declared in the
scenario as small structured queries and evaluated as pure functions of
the current state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class WorldError(ValueError):
    pass


_IDENTITY_QUAT = (1.0, 0.0, 0.0, 0.0)


def _vec3(value, where: str) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise WorldError(f"{where}: expected a finite 3-vector, got {value!r}")
    return v


def _quat(value, where: str) -> np.ndarray:
    q = np.asarray(value, dtype=float)
    if q.shape != (4,) or not np.all(np.isfinite(q)):
        raise WorldError(f"{where}: expected a finite quaternion (w,x,y,z)")
    n = np.linalg.norm(q)
    if n == 0:
        raise WorldError(f"{where}: zero quaternion")
    return q / n


@dataclass
class Pose:
    position: np.ndarray
    quaternion: np.ndarray

    @staticmethod
    def of(position, quaternion=None, where: str = "pose") -> "Pose":
        return Pose(
            _vec3(position, where),
            _quat(quaternion if quaternion is not None else _IDENTITY_QUAT, where),
        )

    def copy(self) -> "Pose":
        return Pose(self.position.copy(), self.quaternion.copy())


@dataclass
class Region:
    center: np.ndarray
    radius: float

    @staticmethod
    def of(center, radius, where: str = "region") -> "Region":
        r = float(radius)
        if r <= 0:
            raise WorldError(f"{where}: radius must be positive")
        return Region(_vec3(center, where), r)


class WorldState:
    """End-effector, objects, regions, and the attachment relation."""

    GRASP_DISTANCE = 0.01

    def __init__(self, ee_position, ee_quaternion=None):
        self.ee = Pose.of(ee_position, ee_quaternion, "end-effector")
        self.objects: dict[str, Pose] = {}
        self.regions: dict[str, Region] = {}
        self.attached: str | None = None
        # offset of the attached object from the end-effector, kept rigid
        self._grip_offset = np.zeros(3)

    def add_object(self, name: str, position, quaternion=None):
        if name in self.objects or name in self.regions or name == "ee":
            raise WorldError(f"duplicate world symbol {name!r}")
        self.objects[name] = Pose.of(position, quaternion, f"object {name!r}")

    def add_region(self, name: str, center, radius):
        if name in self.objects or name in self.regions or name == "ee":
            raise WorldError(f"duplicate world symbol {name!r}")
        self.regions[name] = Region.of(center, radius, f"region {name!r}")

    def resolve(self, symbol) -> np.ndarray:
        """Position of a world symbol, or a literal 3-vector passed through."""
        if not isinstance(symbol, str):
            return _vec3(symbol, "binding")
        if symbol == "ee":
            return self.ee.position.copy()
        if symbol in self.objects:
            return self.objects[symbol].position.copy()
        if symbol in self.regions:
            return self.regions[symbol].center.copy()
        raise WorldError(f"unknown world symbol {symbol!r}")

    def set_ee(self, position, quaternion=None):
        self.ee.position = _vec3(position, "end-effector command")
        if quaternion is not None:
            self.ee.quaternion = _quat(quaternion, "end-effector command")
        if self.attached is not None:
            held = self.objects[self.attached]
            held.position = self.ee.position + self._grip_offset
            held.quaternion = self.ee.quaternion.copy()

    def try_grasp(self, name: str) -> bool:
        """Attach the object if the end-effector is within grasp distance."""
        if name not in self.objects:
            raise WorldError(f"cannot grasp unknown object {name!r}")
        if self.attached == name:
            return True
        if self.attached is not None:
            return False
        gap = np.linalg.norm(self.objects[name].position - self.ee.position)
        if gap <= self.GRASP_DISTANCE:
            self.attached = name
            self._grip_offset = self.objects[name].position - self.ee.position
            return True
        return False

    def release(self):
        self.attached = None
        self._grip_offset = np.zeros(3)

    def teleport_object(self, name: str, position):
        if name not in self.objects:
            raise WorldError(f"cannot teleport unknown object {name!r}")
        if self.attached == name:
            self.release()
        self.objects[name].position = _vec3(position, f"teleport {name!r}")

    def teleport_region(self, name: str, center):
        if name not in self.regions:
            raise WorldError(f"cannot move unknown region {name!r}")
        self.regions[name].center = _vec3(center, f"move region {name!r}")


# --- predicates -------------------------------------------------------------


@dataclass(frozen=True)
class PredicateDef:
    """Declarative world query.

    kinds:
      attached(object)       -- the object is held
      hand_empty()           -- nothing is held
      in_region(object|ee, region)  -- position inside the region sphere
      placed(object, region) -- inside the region and no longer held
      near(a, b, distance)   -- two symbols within a distance
      any_of(ids...)         -- disjunction of other predicates
      all_of(ids...)         -- conjunction of other predicates

    The compound kinds need the predicate table passed to evaluate();
    references must not form a cycle.
    """

    kind: str
    args: tuple = ()

    def evaluate(self, world: WorldState, table: dict | None = None,
                 _seen: frozenset = frozenset()) -> bool:
        if self.kind in ("any_of", "all_of"):
            if table is None:
                raise WorldError(
                    f"{self.kind} predicates need the predicate table to evaluate"
                )
            members = []
            for pid in self.args:
                if pid in _seen:
                    raise WorldError(f"cyclic predicate reference through {pid!r}")
                if pid not in table:
                    raise WorldError(f"predicate references unknown predicate {pid!r}")
                members.append(
                    table[pid].evaluate(world, table, _seen | {pid})
                )
            return any(members) if self.kind == "any_of" else all(members)
        if self.kind == "attached":
            (name,) = self.args
            return world.attached == name
        if self.kind == "hand_empty":
            return world.attached is None
        if self.kind == "in_region":
            subject, region = self.args
            if region not in world.regions:
                raise WorldError(f"predicate references unknown region {region!r}")
            reg = world.regions[region]
            pos = world.resolve(subject)
            return bool(np.linalg.norm(pos - reg.center) <= reg.radius)
        if self.kind == "placed":
            subject, region = self.args
            if region not in world.regions:
                raise WorldError(f"predicate references unknown region {region!r}")
            reg = world.regions[region]
            pos = world.resolve(subject)
            inside = bool(np.linalg.norm(pos - reg.center) <= reg.radius)
            return inside and world.attached != subject
        if self.kind == "near":
            a, b, distance = self.args
            return bool(
                np.linalg.norm(world.resolve(a) - world.resolve(b)) <= float(distance)
            )
        raise WorldError(f"unknown predicate kind {self.kind!r}")


def parse_predicate(doc: dict, where: str = "predicate") -> PredicateDef:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise WorldError(f"{where}: expected an object with a kind")
    kind = doc["kind"]
    if kind == "attached":
        return PredicateDef("attached", (str(doc["object"]),))
    if kind == "hand_empty":
        return PredicateDef("hand_empty")
    if kind == "in_region":
        return PredicateDef("in_region", (str(doc["object"]), str(doc["region"])))
    if kind == "placed":
        return PredicateDef("placed", (str(doc["object"]), str(doc["region"])))
    if kind in ("any_of", "all_of"):
        members = doc.get("of")
        if not isinstance(members, (list, tuple)) or len(members) < 2:
            raise WorldError(f"{where}: {kind} needs a list 'of' >= 2 predicate ids")
        return PredicateDef(kind, tuple(str(m) for m in members))
    if kind == "near":
        return PredicateDef(
            "near", (doc["a"] if not isinstance(doc["a"], list) else tuple(doc["a"]),
                     doc["b"] if not isinstance(doc["b"], list) else tuple(doc["b"]),
                     float(doc["distance"]))
        )
    raise WorldError(f"{where}: unknown predicate kind {kind!r}")


# --- disturbances -----------------------------------------------------------


@dataclass(frozen=True)
class Disturbance:
    """A scripted world mutation applied before a given tick."""

    tick: int
    kind: str                # teleport_object | teleport_region | detach
    target: str = ""
    value: tuple = ()

    def __post_init__(self):
        if self.tick < 0:
            raise WorldError("disturbance tick must be >= 0")
        if self.kind not in ("teleport_object", "teleport_region", "detach"):
            raise WorldError(f"unknown disturbance kind {self.kind!r}")

    def apply(self, world: WorldState):
        if self.kind == "teleport_object":
            world.teleport_object(self.target, self.value)
        elif self.kind == "teleport_region":
            world.teleport_region(self.target, self.value)
        else:
            world.release()


def parse_disturbance(doc: dict, where: str = "disturbance") -> Disturbance:
    if not isinstance(doc, dict) or "tick" not in doc or "kind" not in doc:
        raise WorldError(f"{where}: expected an object with tick and kind")
    kind = str(doc["kind"])
    if kind == "detach":
        return Disturbance(int(doc["tick"]), kind)
    return Disturbance(
        int(doc["tick"]), kind, str(doc["target"]), tuple(float(v) for v in doc["value"])
    )


def build_world(doc: dict) -> tuple[WorldState, dict[str, PredicateDef]]:
    """World and predicate table from a scenario's "world" section."""
    if "ee" not in doc:
        raise WorldError('world section needs an "ee" start position')
    ee = doc["ee"]
    world = WorldState(ee.get("position", ee) if isinstance(ee, dict) else ee,
                       ee.get("quaternion") if isinstance(ee, dict) else None)
    for name, obj in doc.get("objects", {}).items():
        if isinstance(obj, dict):
            world.add_object(name, obj["position"], obj.get("quaternion"))
        else:
            world.add_object(name, obj)
    for name, reg in doc.get("regions", {}).items():
        world.add_region(name, reg["center"], reg["radius"])
    predicates = {
        name: parse_predicate(p, f"predicate {name!r}")
        for name, p in doc.get("predicates", {}).items()
    }
    return world, predicates
