"""Select the pairwise-kernel implementation at import.

``RBMFLOCK_BACKEND`` may be ``auto`` (default: compiled if importable),
``compiled`` (fail if the extension is missing) or ``python``.
"""

import contextlib
import os

from . import _fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_choice = os.environ.get("RBMFLOCK_BACKEND", "auto").lower()
if _choice not in ("auto", "compiled", "python"):
    raise ImportError(f"RBMFLOCK_BACKEND must be auto, compiled or python, not {_choice!r}")
if _choice == "compiled" and _core is None:
    raise ImportError("RBMFLOCK_BACKEND=compiled but rbmflock._core is not built")

impl = _fallback if (_choice == "python" or _core is None) else _core
NAME = "python" if impl is _fallback else "compiled"


def available() -> dict:
    out = {"python": _fallback}
    if _core is not None:
        out["compiled"] = _core
    return out


def get(name: str | None = None):
    if name is None:
        return impl
    try:
        return available()[name]
    except KeyError:
        raise ValueError(f"backend {name!r} is not available") from None


@contextlib.contextmanager
def use(name: str | None):
    """Temporarily route all pairwise work through backend ``name``."""
    global impl, NAME
    if name is None:
        yield impl
        return
    saved = impl, NAME
    impl, NAME = get(name), name
    try:
        yield impl
    finally:
        impl, NAME = saved
