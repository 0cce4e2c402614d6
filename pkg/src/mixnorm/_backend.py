"""Select the compiled quadrature kernel, falling back to pure Python.

Set ``MIXNORM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _quadkernel_py

BACKEND = "python"
mixture_logpdf = _quadkernel_py.mixture_logpdf

if os.environ.get("MIXNORM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _quadkernel
    except ImportError:
        _quadkernel = None
    else:
        mixture_logpdf = _quadkernel.mixture_logpdf
        BACKEND = "compiled"
