"""Shortest-path kernel selection: compiled extension if built, else pure Python.

Both expose the same two functions with bit-identical results:
``shortest_path_distances`` and ``brandes_source``.  ``KERNEL_COMPILED``
reports which one is active; the benchmark in benchmarks/ compares them.
"""

from streetrisk._kernels import _pure

try:
    from streetrisk._kernels import _brandes as _impl

    KERNEL_COMPILED = True
except ImportError:
    _impl = _pure
    KERNEL_COMPILED = False

shortest_path_distances = _impl.shortest_path_distances
brandes_source = _impl.brandes_source

__all__ = ["KERNEL_COMPILED", "shortest_path_distances", "brandes_source", "_pure"]
