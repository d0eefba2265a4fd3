"""Kernel backend selection.

The shortest-path kernels exist twice: a numba ``@njit`` version and a
pure numpy/heapq twin. ``FPP_LAB_BACKEND`` picks one:

* ``numba`` - require numba, raise if it cannot be imported;
* ``numpy`` - force the pure-python fallback;
* ``auto``  - use numba when importable (default).

Both backends produce bit-identical ``dist``/``parent`` arrays; the test
suite enforces that. ``benchmarks/backend_bench.py`` compares their speed.
"""

from __future__ import annotations

import os

_ENV_VAR = "FPP_LAB_BACKEND"
_numba_checked = False
_numba_ok = False


def _numba_available() -> bool:
    global _numba_checked, _numba_ok
    if not _numba_checked:
        try:
            import numba  # noqa: F401

            _numba_ok = True
        except Exception:
            _numba_ok = False
        _numba_checked = True
    return _numba_ok


def backend_name() -> str:
    """Resolve the active backend ("numba" or "numpy") from the environment."""
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"{_ENV_VAR} must be auto, numba or numpy, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not _numba_available():
            raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")
        return "numba"
    return "numba" if _numba_available() else "numpy"


def use_numba() -> bool:
    return backend_name() == "numba"
