"""Kernel backend selection.

The compiled extension is preferred when built; the pure-NumPy fallback is
semantically identical.  Set ``SPARSESELECT_BACKEND=python`` (or
``compiled``) to force a backend.
"""

import os

_force = os.environ.get("SPARSESELECT_BACKEND", "").strip().lower()

if _force == "python":
    from .numpy_backend import BACKEND_NAME, enet_cd_sweeps
elif _force == "compiled":
    from ._cd_fast import BACKEND_NAME, enet_cd_sweeps
else:
    try:
        from ._cd_fast import BACKEND_NAME, enet_cd_sweeps
    except ImportError:
        from .numpy_backend import BACKEND_NAME, enet_cd_sweeps

__all__ = ["BACKEND_NAME", "enet_cd_sweeps"]
