"""Kernel selection: compiled extension when available, numpy fallback otherwise.

Both backends expose the same three entry points with identical semantics:

* ``xoshiro_fill(state, n)``   -- batch 64-bit words of the xoshiro256++ stream
* ``bspline_design(knots, degree, ages)`` -- B-spline basis rows
* ``qr_simplex(X, y, tau, h0, tol, max_iter)`` -- check-loss simplex

Set ``CENTILE_PURE_PYTHON=1`` to force the fallback even when the compiled
module is importable (used by the benchmark and backend-agreement tests).
"""

import os

from . import _ref

try:
    from . import _ckern
except ImportError:
    _ckern = None

HAVE_COMPILED = _ckern is not None

if HAVE_COMPILED and os.environ.get("CENTILE_PURE_PYTHON", "0") not in ("1", "true", "yes"):
    _active = _ckern
    BACKEND = "compiled"
else:
    _active = _ref
    BACKEND = "python"

xoshiro_fill = _active.xoshiro_fill
bspline_design = _active.bspline_design
qr_simplex = _active.qr_simplex
