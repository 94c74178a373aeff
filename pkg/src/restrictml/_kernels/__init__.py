"""Hot-kernel backend selection.

The compiled ``_native`` module is used when it imports; otherwise the
pure-Python reference in ``_python`` takes over. Setting the environment
variable ``RESTRICTML_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _python

try:
    if os.environ.get("RESTRICTML_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend forced")
    from . import _native
except ImportError:
    _native = None

BACKENDS = {"python": _python}
if _native is not None:
    BACKENDS["native"] = _native

BACKEND = "native" if _native is not None else "python"


def get(name: str | None = None):
    """Kernel module by name (``"native"``/``"python"``); default is the active one."""
    return BACKENDS[name or BACKEND]


def make_automaton(backend, masks, starts, ends, bit_pattern, bit_length):
    if backend is _python:
        return _python.PyAutomaton(masks, starts, ends, bit_pattern, bit_length)
    return backend.NativeAutomaton(masks, starts, ends, bit_pattern, bit_length)
