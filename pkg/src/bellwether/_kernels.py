"""Pick the compiled kernels when available, the numpy ones otherwise.

Set ``BELLWETHER_PURE=1`` to force the numpy path.
"""
import os

from bellwether import _pycore

BACKEND = "numpy"
_impl = _pycore

if not os.environ.get("BELLWETHER_PURE"):
    try:
        from bellwether import _ccore as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pycore

count_transitions = _impl.count_transitions
nearest_centroid = _impl.nearest_centroid
# numpy's vectorized tanh beats the compiled per-sample loop here
mlp_forward = _pycore.mlp_forward
mlp_jacobian = _impl.mlp_jacobian

__all__ = [
    "BACKEND",
    "count_transitions",
    "nearest_centroid",
    "mlp_forward",
    "mlp_jacobian",
]
