"""Hot-path kernels with a compiled core and a pure-Python fallback.

The Cython extension is preferred when importable; set CCOBFT_PURE_PYTHON=1
to force the fallback (the benchmark and the equivalence tests use this).
"""
import os

from . import pure

IMPLEMENTATION = "python"
_impl = pure

if not os.environ.get("CCOBFT_PURE_PYTHON"):
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        IMPLEMENTATION = "cython"
    except ImportError:
        pass

objective_components = _impl.objective_components

__all__ = ["objective_components", "IMPLEMENTATION", "pure"]
