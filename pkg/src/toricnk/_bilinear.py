"""Sparse bilinear maps out[k] = Σ s · a[i] · b[j] over a fixed list of (i, j, k, s)."""

import numpy as np


class SparseBilinear:
    """Built from a dense table of shape (m·n, r) with rows indexed by i·n + j."""

    def __init__(self, table, m, n):
        rows, cols = np.nonzero(table)
        order = np.argsort(cols, kind="stable")
        rows, cols = rows[order], cols[order]
        self.left = rows // n
        self.right = rows % n
        self.sign = table[rows, cols]
        self.r = table.shape[1]
        self.starts = np.searchsorted(cols, np.arange(self.r))
        # reduceat needs every output slot to receive at least one term
        if not np.all(np.bincount(cols, minlength=self.r) > 0):
            raise ValueError("table has an output slot with no contributing terms")

    def __call__(self, a, b):
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        # coefficient axis first so each gathered term is a contiguous batch row
        at = np.moveaxis(np.broadcast_to(a, shape + a.shape[-1:]), -1, 0).reshape(a.shape[-1], -1)
        bt = np.moveaxis(np.broadcast_to(b, shape + b.shape[-1:]), -1, 0).reshape(b.shape[-1], -1)
        terms = at[self.left] * bt[self.right]
        terms *= self.sign[:, None]
        out = np.add.reduceat(terms, self.starts, axis=0)
        return np.moveaxis(out.reshape((self.r,) + shape), 0, -1)
