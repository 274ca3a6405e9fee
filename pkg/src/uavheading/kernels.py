"""Backend selection for the batched SINR kernels.

The compiled extension is used when importable; set ``UAVSIM_BACKEND=python``
to force the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
sinr_batch = _pykernels.sinr_batch
jensen_bound_batch = _pykernels.jensen_bound_batch

if os.environ.get("UAVSIM_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        sinr_batch = _ckernels.sinr_batch
        jensen_bound_batch = _ckernels.jensen_bound_batch

__all__ = ["BACKEND", "sinr_batch", "jensen_bound_batch"]
