"""Kernel backend selection.

The compiled extension ``_kernels`` is used when it imports; otherwise the
numpy implementation in ``_kernels_py``.  Setting ``MFCONTEST_PURE_PYTHON=1``
forces the fallback.
"""
import os

if os.environ.get("MFCONTEST_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        from . import _kernels_py as _impl

from . import _kernels_py as python_backend

BACKEND = _impl.BACKEND
gn_eval = _impl.gn_eval
gn_deriv = _impl.gn_deriv
gn_inverse = _impl.gn_inverse
xi_trinomial = _impl.xi_trinomial
exit_two_boundary = _impl.exit_two_boundary
log_binom_coeffs = _impl.log_binom_coeffs


def compiled_backend():
    """The compiled module, or None when it is unavailable."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels
