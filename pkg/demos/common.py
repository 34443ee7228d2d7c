"""Shared helpers for the demo scripts: synthetic demos and output dirs."""

import json
from pathlib import Path

import numpy as np

from stldmp.trace import SignalTrace


def out_dir(name: str) -> Path:
    path = Path(__file__).resolve().parent.parent / "demo_out" / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def min_jerk(start, end, n=60, dt=0.02, bump=None):
    """Minimum-jerk point-to-point path; bump=(axis, height) adds a sine arc."""
    t = np.linspace(0.0, 1.0, n)
    s = 10 * t**3 - 15 * t**4 + 6 * t**5
    pos = np.outer(1 - s, np.asarray(start, float)) + np.outer(s, np.asarray(end, float))
    if bump is not None:
        axis, height = bump
        pos[:, axis] += height * np.sin(np.pi * t)
    return SignalTrace.from_positions(dt, pos)


def write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def banner(text: str) -> None:
    print()
    print(text)
    print("-" * len(text))
