"""Select the compiled kernels when available, the numpy ones otherwise.

Set ``NEHARI_FLOW_PURE=1`` to force the numpy implementations.
"""

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("NEHARI_FLOW_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

direct_convolve = _impl.direct_convolve
neg_laplacian = _impl.neg_laplacian
edge_sum_sq = _impl.edge_sum_sq

__all__ = ["BACKEND", "direct_convolve", "neg_laplacian", "edge_sum_sq"]
