"""Backend selection for the hot GP kernels.

The compiled extension ``_kernels_c`` is used when it was built; otherwise the
numpy implementations in ``_kernels_py`` are used. Set ``SOLIDOPT_PURE_PYTHON=1``
to force the fallback.
"""

import os

from solidopt import _kernels_py

if os.environ.get("SOLIDOPT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from solidopt import _kernels_c as _impl
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"
    else:
        BACKEND = "cython"

factor_stats = _impl.factor_stats
factor_stats_d = _impl.factor_stats_d
marginal_mean_grad = _impl.marginal_mean_grad
marginal_moments_grad = _impl.marginal_moments_grad
sq_exp_exponent = _kernels_py.sq_exp_exponent
JITTER_START = _kernels_py.JITTER_START
JITTER_MAX = _kernels_py.JITTER_MAX

__all__ = [
    "BACKEND",
    "factor_stats",
    "factor_stats_d",
    "marginal_mean_grad",
    "marginal_moments_grad",
    "sq_exp_exponent",
    "JITTER_START",
    "JITTER_MAX",
]
