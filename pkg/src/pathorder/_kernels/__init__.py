"""Kernel backend selection.

The compiled extension is preferred when it imports cleanly; the pure
Python module is the fallback and the reference.  Set the environment
variable ``PATHORDER_BACKEND`` to ``python`` or ``native`` to force a
choice (forcing ``native`` raises if the extension is missing).
"""

from __future__ import annotations

import os

from pathorder._kernels import _pyfallback

_FUNCTIONS = (
    "mix64",
    "rng_next",
    "rng_uniform",
    "rng_below",
    "rng_normal",
    "rng_gamma",
    "rng_dirichlet",
    "fill_dirichlet_rows",
    "log_gamma",
    "reg_upper_gamma",
    "generate_paths",
    "count_transitions",
    "score_count_map",
)


def _load():
    forced = os.environ.get("PATHORDER_BACKEND", "").strip().lower()
    if forced == "python":
        return _pyfallback
    try:
        from pathorder._kernels import _native
        return _native
    except ImportError:
        if forced == "native":
            raise
        return _pyfallback


_impl = _load()
backend_name = _impl.BACKEND_NAME

for _name in _FUNCTIONS:
    globals()[_name] = getattr(_impl, _name)

__all__ = list(_FUNCTIONS) + ["backend_name"]
