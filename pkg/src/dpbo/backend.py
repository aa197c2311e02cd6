"""Backend selection: compiled core when built, numpy fallback otherwise.

Set the environment variable ``DPBO_PURE_PYTHON=1`` before import to force
the fallback (useful for debugging and for the backend benchmark).
"""

import os

_FORCE_PURE = os.environ.get("DPBO_PURE_PYTHON", "").strip().lower() in {
    "1",
    "true",
    "yes",
}

if _FORCE_PURE:
    from . import _gpcore_py as _impl

    USING_COMPILED = False
else:
    try:
        from . import _gpcore as _impl  # type: ignore[no-redef]

        USING_COMPILED = True
    except ImportError:
        from . import _gpcore_py as _impl  # type: ignore[no-redef]

        USING_COMPILED = False

SE = _impl.SE
MATERN52 = _impl.MATERN52

gram = _impl.gram
cross_gram = _impl.cross_gram
posterior_from_gram = _impl.posterior_from_gram
ucb_argmax = _impl.ucb_argmax
