"""Compiled leaf kernel for the quasi-triangular Sylvester solve.

The kernel solves ``ha @ Y + Y @ hb.T = c`` for small quasi-upper-triangular
``ha`` and ``hb`` by block back-substitution. Each diagonal block pair gives
a dense system of size at most 4, solved by Gaussian elimination with
partial pivoting.
"""

import numpy as np
from numba import njit

# status codes returned by bs_leaf
OK = 0
SINGULAR = 1


@njit(cache=True)
def _solve_small(k_mat, rhs, k):
    """Solve the ``k x k`` system in place; returns False if near-singular."""
    scale = 0.0
    for i in range(k):
        for j in range(k):
            v = abs(k_mat[i, j])
            if v > scale:
                scale = v
    if scale == 0.0:
        return False
    eps = np.finfo(np.float64).eps
    for col in range(k):
        piv = col
        best = abs(k_mat[col, col])
        for r in range(col + 1, k):
            v = abs(k_mat[r, col])
            if v > best:
                best = v
                piv = r
        # pivot ratio is a cheap condition estimate
        if best <= eps * scale:
            return False
        if piv != col:
            for j in range(k):
                t = k_mat[col, j]
                k_mat[col, j] = k_mat[piv, j]
                k_mat[piv, j] = t
            t = rhs[col]
            rhs[col] = rhs[piv]
            rhs[piv] = t
        for r in range(col + 1, k):
            f = k_mat[r, col] / k_mat[col, col]
            if f != 0.0:
                for j in range(col, k):
                    k_mat[r, j] -= f * k_mat[col, j]
                rhs[r] -= f * rhs[col]
    for i in range(k - 1, -1, -1):
        s = rhs[i]
        for j in range(i + 1, k):
            s -= k_mat[i, j] * rhs[j]
        rhs[i] = s / k_mat[i, i]
    return True


@njit(cache=True)
def bs_leaf(ha, hb, c, a_starts, b_starts):
    """Bartels-Stewart back-substitution on a leaf problem.

    ``a_starts``/``b_starts`` list the first index of every diagonal block
    (1x1 or 2x2) of ``ha``/``hb``. Returns ``(y, status, i0, j0)`` where
    ``(i0, j0)`` locate the failing block when ``status != OK``.
    """
    na = ha.shape[0]
    nb = hb.shape[0]
    y = c.copy()
    k_mat = np.zeros((4, 4))
    rhs = np.zeros(4)
    n_ablk = a_starts.shape[0]
    n_bblk = b_starts.shape[0]

    # columns of Y depend on later columns through Y @ hb.T: sweep right to left
    for jb in range(n_bblk - 1, -1, -1):
        j0 = b_starts[jb]
        j1 = b_starts[jb + 1] if jb + 1 < n_bblk else nb
        q = j1 - j0
        for jj in range(j0, j1):
            for l in range(j1, nb):
                h = hb[jj, l]
                if h != 0.0:
                    for i in range(na):
                        y[i, jj] -= y[i, l] * h
        for ib in range(n_ablk - 1, -1, -1):
            i0 = a_starts[ib]
            i1 = a_starts[ib + 1] if ib + 1 < n_ablk else na
            p = i1 - i0
            for ii in range(i0, i1):
                for jj in range(j0, j1):
                    s = 0.0
                    for l in range(i1, na):
                        s += ha[ii, l] * y[l, jj]
                    y[ii, jj] -= s
            # vec(Y_IJ) in column-stacking order: index = r + p * s
            k = p * q
            for r in range(k):
                for s_ in range(k):
                    k_mat[r, s_] = 0.0
            for jj in range(q):
                for ii in range(p):
                    row = ii + p * jj
                    for kk in range(p):
                        k_mat[row, kk + p * jj] += ha[i0 + ii, i0 + kk]
                    for ll in range(q):
                        k_mat[row, ii + p * ll] += hb[j0 + jj, j0 + ll]
                    rhs[row] = y[i0 + ii, j0 + jj]
            if not _solve_small(k_mat, rhs, k):
                return y, SINGULAR, i0, j0
            for jj in range(q):
                for ii in range(p):
                    y[i0 + ii, j0 + jj] = rhs[ii + p * jj]
    return y, OK, -1, -1
