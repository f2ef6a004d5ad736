"""Hot raster kernels with a compiled core and a numpy fallback.

The Cython extension is preferred when it imported successfully; set
``SHRIMPMORPH_FORCE_NUMPY=1`` to force the numpy backend (used by the
benchmark and by tests that compare the two implementations).
"""

import os

from . import numpy_backend

if os.environ.get("SHRIMPMORPH_FORCE_NUMPY") == "1":
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = numpy_backend
        BACKEND = "numpy"

render_gaussians = _impl.render_gaussians
decode_peaks = _impl.decode_peaks

__all__ = ["render_gaussians", "decode_peaks", "BACKEND", "numpy_backend"]
