"""Brute-force reference via the Kronecker (vectorized) form.

With the column-stacking ``vec`` the equation becomes

    (B kron I + I kron A + sum_i M_i kron N_i) vec(X) = vec(C),

a dense ``n^2 x n^2`` system. Storage grows like ``n^4`` and the LU solve
like ``n^6``, so every entry point enforces a size cap. This module shares
no solver code with the iterative schemes and serves as their ground truth.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla

from gensylv.errors import SingularSystemError, SizeCapError

ASSEMBLE_SIZE_CAP = 60
OPERATOR_SIZE_CAP = 25


def vec(x):
    """Column-stacking vectorization."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, n):
    return np.asarray(v).reshape((n, n), order="F")


def _check_cap(n, size_cap):
    if n > size_cap:
        raise SizeCapError(f"n = {n} exceeds the oracle size cap {size_cap}")


@dataclass(frozen=True)
class KroneckerSystem:
    a_big: np.ndarray
    rhs: np.ndarray
    n: int


def sylvester_kron(a, b):
    """Matrix of ``X -> A X + X B^T`` acting on ``vec(X)``."""
    eye = np.eye(a.shape[0])
    return np.kron(b, eye) + np.kron(eye, a)


def coupling_kron(ns, ms, n):
    """Matrix of ``X -> sum_i N_i X M_i^T`` acting on ``vec(X)``."""
    out = np.zeros((n * n, n * n))
    for n_i, m_i in zip(ns, ms):
        out += np.kron(m_i, n_i)
    return out


def assemble(p, size_cap=ASSEMBLE_SIZE_CAP):
    """Kronecker form of a :class:`GeneralizedSylvesterProblem`."""
    n = p.n
    _check_cap(n, size_cap)
    a_big = sylvester_kron(p.a, p.b) + coupling_kron(p.ns, p.ms, n)
    return KroneckerSystem(a_big=a_big, rhs=vec(p.c).copy(), n=n)


def solve_direct(sys):
    """LU solve with partial pivoting, reshaped back to ``n x n``.

    Raises
    ------
    SingularSystemError
        If a pivot of the LU factorization is zero or negligible relative to
        the largest one.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spla.LinAlgWarning)
        lu, piv = spla.lu_factor(sys.a_big)
    d = np.abs(np.diagonal(lu))
    if d.min() <= sys.a_big.shape[0] * np.finfo(float).eps * d.max():
        raise SingularSystemError("Kronecker system is singular to working precision")
    return unvec(spla.lu_solve((lu, piv), sys.rhs), sys.n)


@dataclass(frozen=True)
class IterationOperator:
    """Assembled matrix of ``Y -> L_hat^{-1}(Pi_hat(Y))`` with its 2-norm and spectral radius."""

    matrix: np.ndarray
    norm: float
    spectral_radius: float

    def apply(self, y):
        n = y.shape[0]
        return unvec(self.matrix @ vec(y), n)


def iteration_operator(t, size_cap=OPERATOR_SIZE_CAP):
    """Assemble the iteration operator of a :class:`TransformedProblem`."""
    n = t.n
    _check_cap(n, size_cap)
    if t.m == 0:
        return IterationOperator(np.zeros((n * n, n * n)), 0.0, 0.0)
    l_big = sylvester_kron(t.h_a, t.h_b)
    pi_big = -coupling_kron(t.ns_hat, t.ms_hat, n)
    op = np.linalg.solve(l_big, pi_big)
    norm = float(np.linalg.norm(op, 2))
    radius = float(np.max(np.abs(np.linalg.eigvals(op))))
    return IterationOperator(matrix=op, norm=norm, spectral_radius=radius)


def iteration_operator_norm(t, size_cap=OPERATOR_SIZE_CAP):
    """2-norm of the assembled iteration operator."""
    return iteration_operator(t, size_cap).norm


def direct_solution(p, size_cap=ASSEMBLE_SIZE_CAP):
    """Shorthand for ``solve_direct(assemble(p))``."""
    return solve_direct(assemble(p, size_cap))
