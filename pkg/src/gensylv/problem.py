"""Problem data, the Schur-basis transformation and the operators acting on it.

The equation ``A X + X B^T + sum_i N_i X M_i^T = C`` is written as
``L(X) - Pi(X) = C`` with ``L(X) = A X + X B^T`` and the coupling operator
``Pi(X) = -sum_i N_i X M_i^T`` (note the sign). After one real Schur
factorization per coefficient matrix every solver works on the transformed
unknown ``Y = Q_A^T X Q_B``.
"""

from dataclasses import dataclass, field

import numpy as np

from gensylv.errors import DimensionError, ZeroMatrixError
from gensylv.linalg import SchurFactorization, SylvesterKernel, real_schur


@dataclass(frozen=True)
class GeneralizedSylvesterProblem:
    """Coefficients of ``A X + X B^T + sum_i N_i X M_i^T = C``."""

    a: np.ndarray
    b: np.ndarray
    ns: tuple
    ms: tuple
    c: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        n = a.shape[0] if a.ndim == 2 else -1
        ns = tuple(np.asarray(x, dtype=float) for x in self.ns)
        ms = tuple(np.asarray(x, dtype=float) for x in self.ms)
        if len(ns) != len(ms):
            raise DimensionError(f"got {len(ns)} N matrices but {len(ms)} M matrices")
        mats = [a, np.asarray(self.b, dtype=float), np.asarray(self.c, dtype=float), *ns, *ms]
        for mat in mats:
            if mat.shape != (n, n):
                raise DimensionError(f"all coefficients must be {n}x{n}, got {mat.shape}")
        object.__setattr__(self, "a", mats[0])
        object.__setattr__(self, "b", mats[1])
        object.__setattr__(self, "c", mats[2])
        object.__setattr__(self, "ns", ns)
        object.__setattr__(self, "ms", ms)

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def m(self):
        return len(self.ns)

    def apply(self, x):
        """Left-hand side ``A X + X B^T + sum_i N_i X M_i^T``."""
        out = self.a @ x + x @ self.b.T
        for n_i, m_i in zip(self.ns, self.ms):
            out += n_i @ x @ m_i.T
        return out

    def residual_norm(self, x):
        """Relative residual ``||lhs(X) - C||_F / ||C||_F`` in the original basis."""
        c_norm = np.linalg.norm(self.c)
        r = np.linalg.norm(self.apply(x) - self.c)
        return r / c_norm if c_norm > 0 else r

    def is_finite(self):
        return all(np.all(np.isfinite(x)) for x in (self.a, self.b, self.c, *self.ns, *self.ms))


@dataclass(frozen=True)
class TransformedProblem:
    """Schur-basis data shared by all solvers."""

    schur_a: SchurFactorization
    schur_b: SchurFactorization
    ns_hat: tuple
    ms_hat: tuple
    c_hat: np.ndarray
    c_hat_norm: float
    kernel: SylvesterKernel = field(repr=False, compare=False)

    @property
    def n(self):
        return self.c_hat.shape[0]

    @property
    def m(self):
        return len(self.ns_hat)

    @property
    def h_a(self):
        return self.schur_a.h

    @property
    def h_b(self):
        return self.schur_b.h

    @property
    def q_a(self):
        return self.schur_a.q

    @property
    def q_b(self):
        return self.schur_b.q

    def solve_l(self, rhs):
        """Apply ``L_hat^{-1}``: one quasi-triangular Sylvester solve."""
        return self.kernel.solve(rhs)


def transform(p, schur_a=None, schur_b=None):
    """Move ``p`` into the Schur basis of ``A`` and ``B``.

    ``B`` reuses the factorization of ``A`` when the two are equal, which is
    the generalized Lyapunov case. Precomputed factorizations may be passed
    in (for instance ``q = I`` when a coefficient is already quasi-triangular);
    they are trusted as given.
    """
    if schur_a is None:
        schur_a = real_schur(p.a)
    if schur_b is None:
        same = p.b is p.a or np.array_equal(p.a, p.b)
        schur_b = schur_a if same else real_schur(p.b)
    qa, qb = schur_a.q, schur_b.q
    ns_hat = tuple(qa.T @ n_i @ qa for n_i in p.ns)
    ms_hat = tuple(qb.T @ m_i @ qb for m_i in p.ms)
    c_hat = qa.T @ p.c @ qb
    return TransformedProblem(
        schur_a=schur_a,
        schur_b=schur_b,
        ns_hat=ns_hat,
        ms_hat=ms_hat,
        c_hat=c_hat,
        c_hat_norm=float(np.linalg.norm(c_hat)),
        kernel=SylvesterKernel(schur_a.h, schur_b.h, check=False),
    )


def _check_square(t, y):
    if y.shape != (t.n, t.n):
        raise DimensionError(f"expected a {t.n}x{t.n} matrix, got {y.shape}")


def apply_l_hat(t, y):
    """``H_A Y + Y H_B^T``."""
    _check_square(t, y)
    if t.kernel.diagonal:
        # symmetric A and B: both Schur factors are diagonal
        return np.diagonal(t.h_a)[:, None] * y + y * np.diagonal(t.h_b)[None, :]
    return t.h_a @ y + y @ t.h_b.T


def apply_pi_hat(t, y):
    """``-sum_i N_hat_i Y M_hat_i^T``; carries the minus sign."""
    _check_square(t, y)
    out = np.zeros_like(y, dtype=float)
    for n_i, m_i in zip(t.ns_hat, t.ms_hat):
        out -= n_i @ y @ m_i.T
    return out


def residual(t, y):
    return apply_l_hat(t, y) - apply_pi_hat(t, y) - t.c_hat


def relres_shortcut(t, y_diff):
    """Relative residual of ``Y_k`` from the step ``G(Y_k) - Y_k``.

    Uses ``L_hat(G(Y) - Y) = -R(Y)``, so only the cheap Sylvester operator is
    applied; the coupling terms are never summed.
    """
    if t.c_hat_norm == 0.0:
        raise ZeroMatrixError("relative residual undefined for C = 0 (Y = 0 solves it)")
    return float(np.linalg.norm(apply_l_hat(t, y_diff)) / t.c_hat_norm)


def back_transform(t, y):
    _check_square(t, y)
    return t.q_a @ y @ t.q_b.T


def iteration_map(t, y):
    """``L_hat^{-1}(Pi_hat(Y))``, the linear part of the fixed-point map."""
    return t.solve_l(apply_pi_hat(t, y))


@dataclass(frozen=True)
class SpectralEstimate:
    value: float
    iterations: int
    converged: bool
    history: tuple = ()

    def __float__(self):
        return self.value


def estimate_spectral_radius(t, tol=1e-4, max_iter=500, seed=0):
    """Power iteration for the spectral radius of ``L_hat^{-1} Pi_hat``.

    Each step costs one quasi-triangular solve. The estimate is the growth
    factor ``||map(Y)||_F / ||Y||_F`` of a normalized iterate; iteration
    stops once two successive estimates differ by less than ``tol`` relative
    to the current estimate (for radii near one this is the same as an
    absolute test, and it keeps small radii accurate too).
    """
    if t.m == 0:
        return SpectralEstimate(0.0, 0, True, (0.0,))
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((t.n, t.n))
    y /= np.linalg.norm(y)
    prev = np.inf
    history = []
    for it in range(1, max_iter + 1):
        z = iteration_map(t, y)
        est = float(np.linalg.norm(z))
        history.append(est)
        if est == 0.0:
            return SpectralEstimate(0.0, it, True, tuple(history))
        if abs(est - prev) < tol * est:
            return SpectralEstimate(est, it, True, tuple(history))
        prev = est
        y = z / est
    return SpectralEstimate(prev, max_iter, False, tuple(history))
