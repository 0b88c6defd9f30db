"""Pure numpy versions of the compiled kernels (same signatures)."""
import numpy as np


def displacement(alpha, dim):
    """Matrix ``<m|D(alpha)|k>`` for ``0 <= m, k < dim`` by the column recurrence."""
    alpha = complex(alpha)
    out = np.zeros((dim, dim), dtype=np.complex128)
    if dim == 0:
        return out
    m = np.arange(dim)
    col = np.empty(dim, dtype=np.complex128)
    col[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for i in range(1, dim):
        col[i] = alpha / np.sqrt(i) * col[i - 1]
    out[:, 0] = col
    sq = np.sqrt(m[1:])
    ca = alpha.conjugate()
    for k in range(1, dim):
        prev = out[:, k - 1]
        new = -ca * prev
        new[1:] += sq * prev[:-1]
        out[:, k] = new / np.sqrt(k)
    return out


def tensor_select(mats, rows, cols):
    """``out[b, a] = prod_j mats[j, rows[b, j], cols[a, j]]``."""
    out = mats[0][np.ix_(rows[:, 0], cols[:, 0])].copy()
    for j in range(1, mats.shape[0]):
        out *= mats[j][np.ix_(rows[:, j], cols[:, j])]
    return out
