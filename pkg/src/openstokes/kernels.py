"""Backend selection for the element kernels.

The compiled extension is preferred; the numpy implementation is a
drop-in replacement used when the extension was not built.  Both are
importable directly for the parity test and the benchmark.
"""

from . import _kernels_py

try:
    from . import _kernels_c
except ImportError:
    _kernels_c = None

if _kernels_c is not None:
    BACKEND = "cython"
    tri_local_matrices = _kernels_c.tri_local_matrices
else:
    BACKEND = "python"
    tri_local_matrices = _kernels_py.tri_local_matrices
