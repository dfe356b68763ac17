"""Battery trajectory kernels.

Per interval the charge evolves as ``b' = min(max(b - a, 0) + e, K)`` where
``a`` is the intent to transmit and ``e`` the arrival; equivalently
``b' = clamp(b + e - a, e, K)``. The numba kernel runs the recursion
directly. The numpy path composes the clamp maps with a Hillis-Steele
prefix scan, using that ``clamp(clamp(b + c1, l1, h1) + c2, l2, h2)`` is
again ``clamp(b + c1 + c2, L, H)``.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = ["battery_path", "battery_path_numpy", "battery_path_jit", "USE_NUMBA"]


@njit
def battery_path_jit(b0, intent, arrive, K, out):
    b = b0
    for t in range(intent.shape[0]):
        out[t] = b
        if intent[t] and b > 0:
            b -= 1
        b += arrive[t]
        if b > K:
            b = K
    return b


def battery_path_numpy(b0, intent, arrive, K, out):
    n = intent.shape[0]
    if n == 0:
        return b0
    e = arrive.astype(np.int64)
    c = e - intent.astype(np.int64)
    lo = e.copy()
    hi = np.full(n, K, dtype=np.int64)
    d = 1
    while d < n:
        # F[t] <- F[t] after F[t-d]
        c2, lo2, hi2 = c[d:], lo[d:], hi[d:]
        new_lo = np.clip(lo[:-d] + c2, lo2, hi2)
        new_hi = np.clip(hi[:-d] + c2, lo2, hi2)
        new_c = c[:-d] + c2
        c = np.concatenate((c[:d], new_c))
        lo = np.concatenate((lo[:d], new_lo))
        hi = np.concatenate((hi[:d], new_hi))
        d *= 2
    after = np.clip(b0 + c, lo, hi)
    out[0] = b0
    out[1:] = after[:-1]
    return int(after[-1])


battery_path = battery_path_jit if USE_NUMBA else battery_path_numpy
