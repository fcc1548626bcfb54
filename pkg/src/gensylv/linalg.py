"""Dense real matrix primitives.

Matrices are ``numpy.ndarray`` objects of dtype ``float64`` in NumPy's default
row-major (C) layout. The vec operator used by the Kronecker oracle is the
column-stacking one, ``X.reshape(-1, order="F")``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla
import scipy.sparse.linalg as spsla

from gensylv._kernels import OK, bs_leaf
from gensylv.errors import (
    DimensionError,
    NearSingularOperatorError,
    SchurError,
    ZeroMatrixError,
)

#: residual tolerance documented for the quasi-triangular Sylvester kernel:
#: ||h_a Y + Y h_b^T - c||_F <= TOL_SOLVE * (||h_a||_F + ||h_b||_F) * ||Y||_F
TOL_SOLVE = 1e-12

#: constant c of the Schur reconstruction bound c * n * eps * ||A||_F
SCHUR_RECON_CONST = 10.0

# leaves of the recursive splitting are handed to the compiled kernel
_LEAF = 64

# truncated SVD: dense below this size, else partial SVDs starting at this rank
_SVD_DENSE_BELOW = 64
_SVD_START_RANK = 8

# singular values tied with the cutoff up to a few ulps count as retained
_TIE_SLACK = 8 * np.finfo(float).eps


@dataclass(frozen=True)
class SchurFactorization:
    """Real Schur form ``a = q @ h @ q.T`` with quasi-upper-triangular ``h``."""

    q: np.ndarray
    h: np.ndarray

    @property
    def n(self):
        return self.h.shape[0]

    def eigenvalues(self):
        return quasitriangular_eigenvalues(self.h)


@dataclass(frozen=True)
class TruncatedSvd:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def r(self):
        return self.sigma.shape[0]


def _as_square(a, name="a"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def _readonly(a):
    a.setflags(write=False)
    return a


def real_schur(a):
    """Real Schur factorization of a square matrix.

    Symmetric input is factored with a symmetric eigensolver, which yields
    an exactly diagonal ``h`` (a valid quasi-triangular factor) and lets
    the Sylvester kernel take its elementwise fast path.

    Raises
    ------
    DimensionError
        If ``a`` is not square.
    SchurError
        If the QR iteration does not converge.
    """
    a = _as_square(a)
    if not np.all(np.isfinite(a)):
        raise ValueError("real_schur: matrix has non-finite entries")
    n = a.shape[0]
    try:
        if np.array_equal(a, a.T):
            w, q = np.linalg.eigh(a)
            h = np.diag(w)
        else:
            h, q = spla.schur(a, output="real")
    except (np.linalg.LinAlgError, ValueError) as exc:
        # LAPACK reports failure after its internal cap of 30*n sweeps
        raise SchurError(f"real Schur factorization failed: {exc}", iterations=30 * n) from exc
    h = np.array(h, dtype=float)
    # clear rounding noise below the first subdiagonal
    h[np.tril_indices(n, -2)] = 0.0
    return SchurFactorization(q=_readonly(np.array(q, dtype=float)), h=_readonly(h))


def block_starts(h):
    """Start indices of the 1x1 and 2x2 diagonal blocks of ``h``."""
    n = h.shape[0]
    starts = []
    i = 0
    while i < n:
        starts.append(i)
        i += 2 if (i + 1 < n and h[i + 1, i] != 0.0) else 1
    return np.asarray(starts, dtype=np.int64)


def is_quasitriangular(h):
    """True if ``h`` is zero below the first subdiagonal with isolated subdiagonal entries."""
    h = np.asarray(h)
    n = h.shape[0]
    if np.any(np.tril(h, -2) != 0.0):
        return False
    sub = np.diagonal(h, -1) != 0.0
    return not np.any(sub[1:] & sub[:-1])


def quasitriangular_eigenvalues(h):
    """Eigenvalues read off the diagonal blocks of a quasi-triangular matrix."""
    n = h.shape[0]
    starts = block_starts(h)
    vals = []
    for k, i in enumerate(starts):
        end = starts[k + 1] if k + 1 < len(starts) else n
        if end - i == 1:
            vals.append(complex(h[i, i]))
        else:
            vals.extend(np.linalg.eigvals(h[i:end, i:end]).astype(complex))
    return np.asarray(vals)


def _is_diagonal(h):
    return np.count_nonzero(h) == np.count_nonzero(np.diagonal(h))


class SylvesterKernel:
    """Reusable solver for ``h_a @ Y + Y @ h_b.T = c``.

    The block structure of both quasi-triangular factors is analysed once,
    so repeated solves against the same pair (the situation in every
    iterative scheme of this package) skip that work.
    """

    def __init__(self, h_a, h_b, check=True):
        h_a = _as_square(h_a, "h_a")
        h_b = _as_square(h_b, "h_b")
        if check:
            for name, h in (("h_a", h_a), ("h_b", h_b)):
                if not is_quasitriangular(h):
                    raise DimensionError(f"{name} is not quasi-upper-triangular")
        self.h_a = np.ascontiguousarray(h_a)
        self.h_b = np.ascontiguousarray(h_b)
        self.a_starts = block_starts(self.h_a)
        self.b_starts = block_starts(self.h_b)
        self.diagonal = _is_diagonal(self.h_a) and _is_diagonal(self.h_b)
        if self.diagonal:
            da = np.diagonal(self.h_a)
            db = np.diagonal(self.h_b)
            self._denom = da[:, None] + db[None, :]
            scale = np.max(np.abs(da)) + np.max(np.abs(db))
            bad = np.abs(self._denom) <= np.finfo(float).eps * scale
            if np.any(bad):
                i, j = np.argwhere(bad)[0]
                raise NearSingularOperatorError(
                    f"eigenvalue clash between h_a[{i},{i}] and -h_b[{j},{j}]",
                    block=(int(i), int(j)),
                )

    def solve(self, c):
        c = np.asarray(c, dtype=float)
        na, nb = self.h_a.shape[0], self.h_b.shape[0]
        if c.shape != (na, nb):
            raise DimensionError(f"right-hand side has shape {c.shape}, expected {(na, nb)}")
        if self.diagonal:
            return c / self._denom
        return self._solve_rec(0, na, 0, nb, c)

    def _leaf(self, r0, r1, c0, c1, c):
        a_st = self.a_starts[(self.a_starts >= r0) & (self.a_starts < r1)] - r0
        b_st = self.b_starts[(self.b_starts >= c0) & (self.b_starts < c1)] - c0
        y, status, i0, j0 = bs_leaf(
            np.ascontiguousarray(self.h_a[r0:r1, r0:r1]),
            np.ascontiguousarray(self.h_b[c0:c1, c0:c1]),
            np.asfortranarray(c),
            a_st,
            b_st,
        )
        if status != OK:
            raise NearSingularOperatorError(
                f"near-singular diagonal block system at h_a block {r0 + i0}, h_b block {c0 + j0}",
                block=(int(r0 + i0), int(c0 + j0)),
            )
        return y

    @staticmethod
    def _split(starts, lo, hi):
        inner = starts[(starts > lo) & (starts < hi)]
        mid = (lo + hi) // 2
        return int(inner[np.argmin(np.abs(inner - mid))])

    def _solve_rec(self, r0, r1, c0, c1, c):
        na, nb = r1 - r0, c1 - c0
        if na <= _LEAF and nb <= _LEAF:
            return self._leaf(r0, r1, c0, c1, c)
        if na >= nb:
            k = self._split(self.a_starts, r0, r1)
            y2 = self._solve_rec(k, r1, c0, c1, c[k - r0:])
            rhs = c[: k - r0] - self.h_a[r0:k, k:r1] @ y2
            y1 = self._solve_rec(r0, k, c0, c1, rhs)
            return np.vstack((y1, y2))
        k = self._split(self.b_starts, c0, c1)
        y2 = self._solve_rec(r0, r1, k, c1, c[:, k - c0:])
        rhs = c[:, : k - c0] - y2 @ self.h_b[c0:k, k:c1].T
        y1 = self._solve_rec(r0, r1, c0, k, rhs)
        return np.hstack((y1, y2))


def solve_sylvester_quasitriangular(h_a, h_b, c):
    """Solve ``h_a @ Y + Y @ h_b.T = c`` for quasi-upper-triangular ``h_a``, ``h_b``.

    Bartels-Stewart back-substitution: columns of ``Y`` are resolved from
    the last block of ``h_b`` to the first and rows from the last block of
    ``h_a`` to the first. Large problems are split recursively at block
    boundaries so that the off-diagonal updates become matrix products.

    Raises
    ------
    NearSingularOperatorError
        If an eigenvalue of ``h_a`` (nearly) equals the negative of one of
        ``h_b``.
    """
    return SylvesterKernel(h_a, h_b).solve(c)


def _partial_svd(m, k, v0):
    u, s, vt = spsla.svds(m, k=k, v0=v0, tol=0, solver="arpack")
    order = np.argsort(s)[::-1]
    return u[:, order], s[order], vt[order]


def truncated_svd(m, rel_threshold=0.1):
    """Leading singular triplets with ``sigma_i / sigma_1 >= rel_threshold``.

    Values that meet the cutoff up to rounding (a few ulps) are kept, so
    ``rel_threshold = 1`` retains every singular value tied with the largest.

    Small matrices use a dense SVD. Larger ones compute a growing number of
    leading triplets with an iterative solver (deterministic start vector)
    until the cutoff is bracketed, and fall back to the dense SVD once that
    number reaches a quarter of the smaller dimension.
    """
    m = np.asarray(m, dtype=float)
    if not 0.0 < rel_threshold <= 1.0:
        raise ValueError("rel_threshold must lie in (0, 1]")
    if not np.any(m):
        raise ZeroMatrixError("truncated_svd of a zero matrix")
    cutoff = rel_threshold * (1.0 - _TIE_SLACK)
    kmax = min(m.shape)
    k = _SVD_START_RANK
    if kmax > _SVD_DENSE_BELOW:
        v0 = np.random.default_rng(0).standard_normal(kmax)
        while k < kmax // 4:
            u, s, vt = _partial_svd(m, k, v0)
            if s[-1] < cutoff * s[0]:
                break
            k *= 2
        else:
            u, s, vt = np.linalg.svd(m, full_matrices=False)
    else:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    r = int(np.count_nonzero(s >= cutoff * s[0]))
    return TruncatedSvd(u=u[:, :r], sigma=s[:r], v=vt[:r].T)


def least_squares_truncated(f, rhs, rel_threshold=0.1):
    """Regularized solution of ``min ||rhs - f @ gamma||_F``.

    Returns ``v @ diag(1/sigma) @ u.T @ rhs`` from :func:`truncated_svd`.
    A zero ``f`` gives zero coefficients.
    """
    f = np.asarray(f, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if f.ndim != 2 or rhs.ndim != 2 or f.shape[0] != rhs.shape[0]:
        raise DimensionError(f"incompatible shapes {f.shape} and {rhs.shape}")
    if not np.any(f):
        return np.zeros((f.shape[1], rhs.shape[1]))
    svd = truncated_svd(f, rel_threshold)
    return svd.v @ ((svd.u.T @ rhs) / svd.sigma[:, None])
