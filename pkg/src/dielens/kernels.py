"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy versions
are used. Set ``DIELENS_PURE_PYTHON=1`` to force the fallback.
"""

import os


def _load():
    if os.environ.get("DIELENS_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
        try:
            from . import _kernels_ext
            return _kernels_ext, "cython"
        except ImportError:
            pass
    from . import _kernels_py
    return _kernels_py, "python"


_impl, BACKEND = _load()
impedance_gamma = _impl.impedance_gamma
abcd_sweep = _impl.abcd_sweep
aperture_field = _impl.aperture_field

__all__ = ["BACKEND", "abcd_sweep", "aperture_field", "impedance_gamma"]
