"""STL-constrained motion primitives with behavior-tree task execution."""

from .trace import SignalTrace, TraceError

__version__ = "0.1.0"

__all__ = ["SignalTrace", "TraceError", "__version__"]
