"""Hot inner loop of the S-TISP iteration.

The solve loop is written once in numpy-compatible form and JIT-compiled
with numba when available.  Set GSRL_PURE_NUMPY=1 to force the plain-numpy
interpretation (exact same code path, no compilation); both backends produce
identical iterates.
"""

from __future__ import annotations

import os

import numpy as np

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_EXACT_FIT = 2


def _stisp_solve_impl(X, XT, Y, beta, cols, ptr, thresholds, tol, max_iter, floor):
    """Iterate the grouped soft-thresholding map on pre-scaled (X, Y).

    beta is updated in place.  All group updates in one sweep use the
    residual of the incoming iterate (simultaneous update).  Returns
    (iterations, status).
    """
    q = ptr.shape[0] - 1
    new = beta.copy()
    status = STATUS_MAX_ITER
    it = 0
    while it < max_iter:
        r = Y - X @ beta
        rnorm = np.sqrt(np.sum(r * r))
        if rnorm <= floor:
            status = STATUS_EXACT_FIT
            break
        g = XT @ r
        for j in range(q):
            idx = cols[ptr[j] : ptr[j + 1]]
            a = beta[idx] + g[idx]
            anorm = np.sqrt(np.sum(a * a))
            thr = thresholds[j] * rnorm
            if anorm <= thr:
                new[idx] = 0.0
            else:
                new[idx] = a * ((anorm - thr) / anorm)
        it += 1
        diff = np.sqrt(np.sum((new - beta) ** 2))
        scale = max(1.0, np.sqrt(np.sum(beta * beta)))
        beta[:] = new
        if diff / scale < tol:
            status = STATUS_CONVERGED
            break
    return it, status


_FORCE_NUMPY = os.environ.get("GSRL_PURE_NUMPY", "").strip() not in ("", "0")

if _FORCE_NUMPY:
    BACKEND = "numpy"
    stisp_solve = _stisp_solve_impl
else:
    try:
        from numba import njit

        BACKEND = "numba"
        stisp_solve = njit(cache=True, nogil=True)(_stisp_solve_impl)
    except ImportError:
        BACKEND = "numpy"
        stisp_solve = _stisp_solve_impl
