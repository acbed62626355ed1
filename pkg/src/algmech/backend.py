"""Executor selection: compiled core if available, pure Python otherwise.

``ALGMECH_BACKEND`` overrides the choice: ``c`` demands the compiled
extension (ImportError if missing), ``py`` forces the fallback, ``auto``
(default) prefers the extension.  Both executors produce bit-identical
results; the switch only affects speed.
"""

import os

from . import _jetpy

try:
    from . import _jetc
except ImportError:
    _jetc = None

_choice = os.environ.get("ALGMECH_BACKEND", "auto").lower()
if _choice == "py":
    _active = _jetpy
elif _choice == "c":
    if _jetc is None:
        raise ImportError(
            "ALGMECH_BACKEND=c but the compiled extension algmech._jetc "
            "is not available; rebuild the package or use ALGMECH_BACKEND=py")
    _active = _jetc
else:
    _active = _jetc if _jetc is not None else _jetpy


def run_program(prog, values):
    return _active.run_program(prog, values)


def active_backend() -> str:
    """'compiled' or 'pure'."""
    return "compiled" if _active is _jetc else "pure"


def available_backends() -> dict:
    """Executor callables by name (used by the benchmark and twin tests)."""
    out = {"pure": _jetpy.run_program}
    if _jetc is not None:
        out["compiled"] = _jetc.run_program
    return out
