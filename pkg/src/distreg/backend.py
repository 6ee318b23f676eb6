"""Selection of the pairwise-reduction implementation.

The compiled core is preferred when the extension imported cleanly; the
NumPy implementation is the fallback.  Set ``DISTREG_BACKEND=python`` to
force the fallback or ``DISTREG_BACKEND=cython`` to insist on the
extension (raising if it is unavailable).  Both implementations are
deterministic; they may differ from each other by last-ulp rounding.
"""

import os

from ._pairwise_np import GAUSSIAN, LAPLACIAN

_requested = os.environ.get("DISTREG_BACKEND", "").strip().lower()

if _requested in ("", "cython"):
    try:
        from . import _pairwise_cy as _impl

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _pairwise_np as _impl

        BACKEND = "python"
elif _requested in ("python", "numpy"):
    from . import _pairwise_np as _impl

    BACKEND = "python"
else:
    raise ValueError(
        f"DISTREG_BACKEND={_requested!r} not recognized "
        "(expected 'cython' or 'python')"
    )

pair_mean = _impl.pair_mean
bag_means = _impl.bag_means
