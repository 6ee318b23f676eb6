"""NumPy implementation of the pairwise base-kernel reductions.

Everything downstream of a bag reduces to means of base-kernel values
between two point sets, so the two entry points here are the whole hot
path: ``pair_mean`` for a single pair of bags and ``bag_means`` for the
matrix of means between two bag collections.

Column tiles are a fixed size so the summation order (and therefore the
output, bit for bit) does not depend on available memory.
"""

import numpy as np

GAUSSIAN = 0
LAPLACIAN = 1

# entries per kernel block ~ _BLOCK doubles; fixed for determinism
_BLOCK = 4_000_000
_MAX_TILE = 16384


def _sq_norms(pts):
    return np.einsum("ij,ij->i", pts, pts)


def _kernel_block(a, aa, b, bb, family, bandwidth):
    """Base-kernel values between point sets a and b, as a (da, db) block."""
    d2 = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    if family == GAUSSIAN:
        d2 *= -1.0 / (bandwidth * bandwidth)
        return np.exp(d2, out=d2)
    # cancellation in the norm expansion leaves an O(eps) residue where the
    # true distance is near zero, and the sqrt amplifies it to O(sqrt(eps));
    # recompute those entries from explicit differences
    tau = 1e-6 * (aa[:, None] + bb[None, :] + 1.0)
    rows, cols = np.nonzero(d2 < tau)
    if rows.size:
        delta = a[rows] - b[cols]
        d2[rows, cols] = np.einsum("ij,ij->i", delta, delta)
    np.sqrt(d2, out=d2)
    d2 *= -1.0 / bandwidth
    return np.exp(d2, out=d2)


def bag_means(pts_a, starts_a, pts_b, starts_b, family, bandwidth, symmetric=False):
    """Matrix of mean base-kernel values between two bag collections.

    ``pts_a`` stacks the points of the first collection row-wise and
    ``starts_a`` holds the bag boundaries (length n_a + 1); likewise for the
    second collection.  Entry (i, j) is the mean of the base kernel over all
    point pairs drawn from bag i of the first collection and bag j of the
    second.  With ``symmetric=True`` the collections are assumed identical
    and only the upper triangle is computed, the rest mirrored exactly.
    """
    na = len(starts_a) - 1
    nb = len(starts_b) - 1
    sizes_b = np.diff(starts_b).astype(np.float64)
    bb = _sq_norms(pts_b)
    out = np.empty((na, nb))
    for i in range(na):
        a = pts_a[starts_a[i] : starts_a[i + 1]]
        da = a.shape[0]
        aa = _sq_norms(a)
        j0 = i if symmetric else 0
        lo = starts_b[j0]
        hi = starts_b[nb]
        colsum = np.zeros(hi - lo)
        tile = min(_MAX_TILE, max(256, _BLOCK // da))
        for t0 in range(lo, hi, tile):
            t1 = min(t0 + tile, hi)
            block = _kernel_block(
                a, aa, pts_b[t0:t1], bb[t0:t1], family, bandwidth
            )
            colsum[t0 - lo : t1 - lo] = block.sum(axis=0)
        seg = (starts_b[j0:nb] - lo).astype(np.intp)
        out[i, j0:] = np.add.reduceat(colsum, seg) / (da * sizes_b[j0:])
    if symmetric:
        low = np.tril_indices(na, -1)
        out[low] = out.T[low]
    return out


def pair_mean(pts_a, pts_b, family, bandwidth):
    """Mean base-kernel value over all point pairs of two bags."""
    starts_a = np.array([0, pts_a.shape[0]], dtype=np.int64)
    starts_b = np.array([0, pts_b.shape[0]], dtype=np.int64)
    return float(bag_means(pts_a, starts_a, pts_b, starts_b, family, bandwidth)[0, 0])
