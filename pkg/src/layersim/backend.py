"""Backend selection for the state-update primitives.

Two interchangeable implementations exist: the compiled extension
``layersim._fastops`` and the pure-numpy module ``layersim._pyops``. The
compiled one is used when it imported successfully; set
``LAYERSIM_BACKEND=python`` (or ``compiled``) to force a choice. Kernels
look the active module up through ``ops()`` on every call, so
``use_backend`` can swap it temporarily for comparisons and tests.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _pyops

try:
    from . import _fastops
except ImportError:  # pragma: no cover - depends on the build
    _fastops = None

HAVE_COMPILED = _fastops is not None

_BY_NAME = {"python": _pyops, "compiled": _fastops}


def _initial():
    name = os.environ.get("LAYERSIM_BACKEND", "").strip().lower()
    if name:
        if name not in _BY_NAME:
            raise ValueError(f"unknown LAYERSIM_BACKEND {name!r}")
        if _BY_NAME[name] is None:
            raise ImportError(
                "LAYERSIM_BACKEND=compiled but the extension is not built"
            )
        return name
    return "compiled" if HAVE_COMPILED else "python"


_active = _initial()


def active_backend() -> str:
    """Name of the backend currently in use: 'compiled' or 'python'."""
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(name for name, mod in _BY_NAME.items() if mod is not None)


def ops():
    """The active primitive module (see layersim._pyops for the surface)."""
    return _BY_NAME[_active]


@contextmanager
def use_backend(name: str):
    """Temporarily force a backend, e.g. ``with use_backend('python'): ...``."""
    global _active
    if name not in _BY_NAME:
        raise ValueError(f"unknown backend {name!r}")
    if _BY_NAME[name] is None:
        raise ValueError(f"backend {name!r} is not available")
    previous = _active
    _active = name
    try:
        yield
    finally:
        _active = previous
