"""Edit-distance kernel selection.

The compiled Cython kernel is used when its extension module imported
successfully; otherwise the pure-Python implementation takes over. Setting
``DIALOGFORGE_PURE_PYTHON=1`` forces the fallback (used by the benchmark and
by tests that must cover both code paths). Both kernels implement the exact
same contract, verified against a brute-force DP oracle in the test suite.
"""

import os

from dialogforge import _editdist_py

try:
    from dialogforge import _editdist as _compiled
except ImportError:
    _compiled = None

if _compiled is not None and not os.environ.get("DIALOGFORGE_PURE_PYTHON"):
    edit_distance = _compiled.edit_distance
    KERNEL = "cython"
else:
    edit_distance = _editdist_py.edit_distance
    KERNEL = "python"


def available_kernels() -> dict[str, object]:
    """Name -> callable for every kernel importable in this process."""
    kernels: dict[str, object] = {"python": _editdist_py.edit_distance}
    if _compiled is not None:
        kernels["cython"] = _compiled.edit_distance
    return kernels
