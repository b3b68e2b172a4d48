"""Pure-numpy versions of the compiled kernels in ``_ckernels.pyx``."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def direct_convolve(q, table):
    """Return ``out[i] = sum_j table[i - j + m - 1] * q[j]`` over an m^3 grid."""
    q = np.ascontiguousarray(q, dtype=np.float64)
    m = q.shape[0]
    # reversing q turns the correlation into a plain sliding-window dot product
    qr = q[::-1, ::-1, ::-1]
    out = np.empty((m, m, m))
    for i0 in range(m):
        for i1 in range(m):
            block = table[i0:i0 + m, i1:i1 + m, :]
            windows = sliding_window_view(block, m, axis=2)[:, :, :m, :]
            out[i0, i1, :] = np.einsum("abkc,abc->k", windows, qr)
    return out


def neg_laplacian(u, inv_h2):
    """7-point ``-Delta_h u`` with zero values outside the interior block."""
    p = np.pad(u, 1)
    out = 6.0 * u
    out -= p[:-2, 1:-1, 1:-1]
    out -= p[2:, 1:-1, 1:-1]
    out -= p[1:-1, :-2, 1:-1]
    out -= p[1:-1, 2:, 1:-1]
    out -= p[1:-1, 1:-1, :-2]
    out -= p[1:-1, 1:-1, 2:]
    return out * inv_h2


def edge_sum_sq(u):
    """Sum of squared differences over all axis edges, boundary edges included."""
    p = np.pad(u, 1)
    total = 0.0
    for axis in range(3):
        d = np.diff(p, axis=axis)
        # drop the edges that run along the padded boundary faces
        sl = [slice(1, -1)] * 3
        sl[axis] = slice(None)
        total += float(np.sum(d[tuple(sl)] ** 2))
    return total
