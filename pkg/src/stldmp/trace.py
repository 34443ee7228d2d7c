"""Uniformly sampled multi-channel signal traces.

A trace holds named scalar channels of equal length plus the sample
period.  Position channels are conventionally named ``y.x``, ``y.y``,
``y.z``; quaternion channels ``q.w`` .. ``q.z``; derived velocities
``vel.x`` .. ``vel.z``.
"""

from __future__ import annotations

import csv
import io

import numpy as np


class TraceError(ValueError):
    pass


class SignalTrace:
    """Immutable container of equally long scalar channels sampled at dt."""

    def __init__(self, dt: float, channels: dict[str, np.ndarray]):
        if dt <= 0:
            raise TraceError(f"dt must be positive, got {dt}")
        if not channels:
            raise TraceError("trace needs at least one channel")
        lengths = {name: len(np.asarray(v)) for name, v in channels.items()}
        T = next(iter(lengths.values()))
        if T < 1:
            raise TraceError("channels must have length >= 1")
        bad = {n: L for n, L in lengths.items() if L != T}
        if bad:
            raise TraceError(f"channel length mismatch: expected {T}, got {bad}")
        self.dt = float(dt)
        self.length = T
        self._channels = {
            name: np.asarray(v, dtype=float).copy() for name, v in channels.items()
        }
        for name, v in self._channels.items():
            if not np.all(np.isfinite(v)):
                raise TraceError(f"channel {name!r} contains non-finite samples")
            v.setflags(write=False)

    def __len__(self) -> int:
        return self.length

    def has(self, name: str) -> bool:
        return name in self._channels

    def channel(self, name: str) -> np.ndarray:
        try:
            return self._channels[name]
        except KeyError:
            raise TraceError(
                f"unknown channel {name!r}; available: {sorted(self._channels)}"
            ) from None

    @property
    def channel_names(self) -> list[str]:
        return sorted(self._channels)

    def vector(self, base: str) -> np.ndarray:
        """Stack base.x, base.y, base.z into a (T, 3) array."""
        return np.stack([self.channel(f"{base}.{ax}") for ax in "xyz"], axis=1)

    def with_channels(self, extra: dict[str, np.ndarray]) -> "SignalTrace":
        merged = dict(self._channels)
        merged.update(extra)
        return SignalTrace(self.dt, merged)

    @staticmethod
    def from_positions(
        dt: float,
        positions: np.ndarray,
        quaternions: np.ndarray | None = None,
        derive_velocity: bool = True,
    ) -> "SignalTrace":
        """Build a trace from a (T, 3) position array, deriving velocities.

        Velocities use first differences vel[k] = (pos[k] - pos[k-1]) / dt
        with vel[0] = vel[1].
        """
        positions = np.asarray(positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise TraceError(f"positions must be (T, 3), got {positions.shape}")
        channels: dict[str, np.ndarray] = {}
        for j, ax in enumerate("xyz"):
            channels[f"y.{ax}"] = positions[:, j]
        if derive_velocity:
            vel = derive_velocities(positions, dt)
            for j, ax in enumerate("xyz"):
                channels[f"vel.{ax}"] = vel[:, j]
        if quaternions is not None:
            quaternions = np.asarray(quaternions, dtype=float)
            if quaternions.shape != (positions.shape[0], 4):
                raise TraceError("quaternions must be (T, 4) in wxyz order")
            for j, comp in enumerate("wxyz"):
                channels[f"q.{comp}"] = quaternions[:, j]
        return SignalTrace(dt, channels)

    def to_csv(self, path, schema: str = "stldmp.trace/1") -> None:
        names = self.channel_names
        with open(path, "w", newline="") as fh:
            fh.write(f"# schema={schema}\n")
            writer = csv.writer(fh)
            writer.writerow(["t"] + names)
            for k in range(self.length):
                writer.writerow(
                    [repr(float(k * self.dt))]
                    + [repr(float(self._channels[n][k])) for n in names]
                )

    @staticmethod
    def from_csv(path) -> "SignalTrace":
        with open(path) as fh:
            text = fh.read()
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        rows = list(csv.reader(io.StringIO("\n".join(lines))))
        header, data = rows[0], rows[1:]
        if header[0] != "t":
            raise TraceError("trace CSV must start with a 't' column")
        parsed = []
        for i, row in enumerate(data):
            if len(row) != len(header):
                raise TraceError(
                    f"{path}: data row {i + 1} has {len(row)} fields, "
                    f"expected {len(header)}"
                )
            try:
                values = [float(x) for x in row]
            except ValueError as exc:
                raise TraceError(f"{path}: data row {i + 1}: {exc}") from None
            for name, v in zip(header, values):
                if not np.isfinite(v):
                    raise TraceError(
                        f"{path}: data row {i + 1}: column {name!r} is "
                        f"non-finite ({v})"
                    )
            parsed.append(values)
        arr = np.array(parsed)
        if arr.shape[0] < 2:
            raise TraceError("trace CSV needs at least two rows")
        t = arr[:, 0]
        steps = np.diff(t)
        if np.any(np.abs(steps - steps[0]) > 1e-6 * max(abs(steps[0]), 1.0)):
            raise TraceError("trace CSV time column is not uniformly spaced")
        channels = {name: arr[:, j + 1] for j, name in enumerate(header[1:])}
        return SignalTrace(float(steps[0]), channels)


def derive_velocities(positions: np.ndarray, dt: float) -> np.ndarray:
    """First-difference velocities with vel[0] = vel[1]."""
    positions = np.asarray(positions, dtype=float)
    vel = np.empty_like(positions)
    vel[1:] = (positions[1:] - positions[:-1]) / dt
    vel[0] = vel[1] if len(positions) > 1 else 0.0
    return vel
