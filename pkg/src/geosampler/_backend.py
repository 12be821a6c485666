"""Kernel backend selection.

The compiled extension is preferred; the numpy implementation is the
fallback when the extension was not built. Set ``GEOSAMPLER_BACKEND=python``
to force the fallback (used by the benchmark and the equivalence tests).
"""

import os

if os.environ.get("GEOSAMPLER_BACKEND", "").lower() in ("python", "numpy"):
    from . import _kernels as kernels
else:
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels as kernels  # type: ignore[no-redef]

BACKEND = kernels.NAME
