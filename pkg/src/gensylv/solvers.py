"""Iterative schemes in the Schur basis.

All methods start from ``Y_0 = 0`` and take ``Y_1 = G(Y_0)``, where

    G(Y) = L_hat^{-1}(Pi_hat(Y) + C_hat)

is the fixed-point map (one quasi-triangular Sylvester solve). Iteration
``k`` always evaluates ``g_cur = G(Y_k)`` and ``f_cur = g_cur - Y_k``; since
``L_hat(f_cur) = -R(Y_k)``, the relative residual of ``Y_k`` costs only one
application of ``L_hat`` (about ``4n^3`` flops instead of ``(4m+4)n^3``).
The methods differ in how ``Y_{k+1}`` is formed from ``g_cur``/``f_cur``:

* ``FP``: ``Y_{k+1} = g_cur``.
* ``AA``: windowed matrix Anderson acceleration.
* ``PRECONDITIONED``: ``Y_{k+1} = Y_k - P~^{-1}(R(Y_k))`` with the
  first-order Neumann preconditioner (one extra solve).
* ``AAA`` / ``PAAA``: depth-one Anderson steps alternating with plain or
  preconditioned steps.
"""

import enum
import logging
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from gensylv.errors import GenSylvError
from gensylv.linalg import least_squares_truncated
from gensylv.problem import apply_pi_hat, back_transform, relres_shortcut, transform

log = logging.getLogger(__name__)


class Method(str, enum.Enum):
    FP = "FP"
    AA = "AA"
    AAA = "AAA"
    PAAA = "PAAA"
    PRECONDITIONED = "PRECONDITIONED"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).upper().replace("-", "").replace("_", "")
        aliases = {"PRECOND": "PRECONDITIONED", "P": "PRECONDITIONED"}
        return cls(aliases.get(key, key))


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    DIVERGED = "Diverged"
    OPERATOR_ERROR = "OperatorError"


class StepKind(str, enum.Enum):
    FIXED_POINT = "FixedPoint"
    ANDERSON = "Anderson"
    PRECONDITIONED = "Preconditioned"
    # termination row: residual checked, no step taken
    STOP = "Stop"


@dataclass
class SolverConfig:
    epsilon: float = 1e-9
    max_iter: int = 500
    aa_start: int = 5
    m_max: int = 2
    beta: float = 1.0
    svd_rel_threshold: float = 0.1
    method: Method = Method.PAAA
    divergence_factor: float = 1e6
    rng_seed: int = 0

    def __post_init__(self):
        self.method = Method.parse(self.method)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if not 0 < self.svd_rel_threshold <= 1:
            raise ValueError("svd_rel_threshold must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.aa_start < 0 or self.m_max < 0:
            raise ValueError("aa_start and m_max must be non-negative")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    relres: float
    step_kind: StepKind
    elapsed: float
    kernel_solves: int


@dataclass
class SolveOutcome:
    """Result of one solve.

    ``x`` is in the original basis (``None`` if the problem could not be
    set up); ``y`` is the same iterate in the Schur basis. ``final_relres``
    is the shortcut residual of the returned iterate, ``exact_relres`` a
    direct evaluation in the original basis (filled in by :func:`solve`).
    """

    x: np.ndarray
    status: Status
    trace: list
    iterations: int
    final_relres: float
    method: Method
    y: np.ndarray = None
    kernel_solves: int = 0
    exact_relres: float = float("nan")
    message: str = ""

    @property
    def converged(self):
        return self.status is Status.CONVERGED


@dataclass
class AaWindow:
    """Stored differences ``Delta F``/``Delta G`` (one ``n x n`` block each)."""

    m_max: int
    delta_f: deque = field(default_factory=deque)
    delta_g: deque = field(default_factory=deque)
    f_old: np.ndarray = None
    g_old: np.ndarray = None

    def __post_init__(self):
        self.delta_f = deque(maxlen=max(self.m_max, 1))
        self.delta_g = deque(maxlen=max(self.m_max, 1))

    def __len__(self):
        return len(self.delta_f)

    def push(self, f_cur, g_cur):
        # deque(maxlen) drops the oldest pair: the sliding window of Alg. 2
        self.delta_f.append(f_cur - self.f_old)
        self.delta_g.append(g_cur - self.g_old)

    def remember(self, f_cur, g_cur):
        self.f_old = f_cur
        self.g_old = g_cur


def fixed_point_map(t, y):
    """``G(Y) = L_hat^{-1}(Pi_hat(Y) + C_hat)``, one kernel solve."""
    return t.solve_l(apply_pi_hat(t, y) + t.c_hat)


def apply_approx_preconditioner(t, p1):
    """First-order Neumann preconditioner applied to a residual.

    ``p1`` must be ``L_hat^{-1}(R(Y_k))``, which the iteration already has as
    ``Y_k - G(Y_k)``. Returns ``p1 + L_hat^{-1}(Pi_hat(p1))``.
    """
    return p1 + t.solve_l(apply_pi_hat(t, p1))


def anderson_update(y, g_cur, f_cur, delta_f, delta_g, beta, rel_threshold):
    """Matrix Anderson step from stacked difference blocks.

    Solves ``min ||f_cur - [dF_1 ... dF_m] gamma||_F`` for the
    ``(m n) x n`` coefficient matrix with the truncated SVD and returns
    ``(1-beta)(Y - dY gamma) + beta (g_cur - dG gamma)``, where
    ``dY = dG - dF``.
    """
    n = y.shape[1]
    gamma = least_squares_truncated(np.hstack(delta_f), f_cur, rel_threshold)
    dg_gamma = np.zeros_like(y)
    df_gamma = np.zeros_like(y)
    for i, (df, dg) in enumerate(zip(delta_f, delta_g)):
        block = gamma[i * n:(i + 1) * n]
        dg_gamma += dg @ block
        if beta != 1.0:
            df_gamma += df @ block
    if beta == 1.0:
        return g_cur - dg_gamma
    return (1 - beta) * (y - (dg_gamma - df_gamma)) + beta * (g_cur - dg_gamma)


def alternating_step_kind(k, aa_start):
    """Step schedule of the alternating schemes.

    Non-Anderson steps for ``k <= aa_start``; afterwards Anderson steps at
    even ``k`` and non-Anderson steps (which refresh the stored ``f``/``g``)
    at odd ``k``.
    """
    if k > aa_start and k % 2 == 0:
        return StepKind.ANDERSON
    return None


class _Run:
    """Bookkeeping shared by all schemes: trace, timing, solve counts, stopping."""

    def __init__(self, t, cfg):
        self.t = t
        self.cfg = cfg
        self.trace = []
        self.solves = 0
        self.t0 = time.perf_counter()
        self.relres0 = None

    def g(self, y):
        self.solves += 1
        return fixed_point_map(self.t, y)

    def precond(self, p1):
        self.solves += 1
        return apply_approx_preconditioner(self.t, p1)

    def record(self, k, relres, kind):
        self.trace.append(
            TraceRecord(k, relres, kind, time.perf_counter() - self.t0, self.solves)
        )

    def outcome(self, y, status, k, relres, message=""):
        x = back_transform(self.t, y)
        return SolveOutcome(
            x=x, status=status, trace=self.trace, iterations=k, final_relres=relres,
            method=self.cfg.method, y=y, kernel_solves=self.solves, message=message,
        )

    def check(self, k, relres):
        """Status if iteration must stop at ``k`` before stepping, else None."""
        cfg = self.cfg
        if relres < cfg.epsilon:
            return Status.CONVERGED
        if not np.isfinite(relres) or relres > cfg.divergence_factor * self.relres0:
            return Status.DIVERGED
        if k >= cfg.max_iter:
            return Status.MAX_ITERATIONS
        return None


def _drive(t, cfg, step, callback=None):
    """Common outer loop; ``step(run, k, y, g_cur, f_cur)`` returns ``(y_next, kind)``.

    ``callback(k, y_k)``, if given, sees every iterate ``k >= 1`` (Schur
    basis) before its residual is checked.
    """
    run = _Run(t, cfg)
    y = np.zeros((t.n, t.n))
    if t.c_hat_norm == 0.0:
        run.record(0, 0.0, StepKind.STOP)
        return run.outcome(y, Status.CONVERGED, 0, 0.0)
    try:
        y1 = run.g(y)
        run.relres0 = relres_shortcut(t, y1 - y)
        y = y1
        k = 1
        while True:
            if callback is not None:
                callback(k, y)
            g_cur = run.g(y)
            f_cur = g_cur - y
            relres = relres_shortcut(t, f_cur)
            status = run.check(k, relres)
            if status is not None:
                run.record(k, relres, StepKind.STOP)
                return run.outcome(y, status, k, relres)
            y, kind = step(run, k, y, g_cur, f_cur)
            run.record(k, relres, kind)
            k += 1
    except GenSylvError as exc:
        return SolveOutcome(
            x=None, status=Status.OPERATOR_ERROR, trace=run.trace,
            iterations=len(run.trace), final_relres=float("nan"), method=cfg.method,
            kernel_solves=run.solves, message=str(exc),
        )


def solve_fp(t, cfg, callback=None):
    """Plain fixed-point iteration ``Y_{k+1} = G(Y_k)``."""

    def step(run, k, y, g_cur, f_cur):
        return g_cur, StepKind.FIXED_POINT

    return _drive(t, cfg, step, callback)


def solve_preconditioned(t, cfg, callback=None):
    """``Y_{k+1} = Y_k - P~^{-1}(R(Y_k))``; the error contracts by ``(L_hat^{-1} Pi_hat)^2``."""

    def step(run, k, y, g_cur, f_cur):
        return y - run.precond(-f_cur), StepKind.PRECONDITIONED

    return _drive(t, cfg, step, callback)


def solve_aa(t, cfg, callback=None):
    """Windowed matrix Anderson acceleration with delayed start."""
    window = AaWindow(cfg.m_max)

    def step(run, k, y, g_cur, f_cur):
        if cfg.m_max > 0 and k > cfg.aa_start and window.f_old is not None:
            window.push(f_cur, g_cur)
        window.remember(f_cur, g_cur)
        if cfg.m_max == 0 or k < cfg.aa_start or len(window) == 0:
            return g_cur, StepKind.FIXED_POINT
        y_next = anderson_update(
            y, g_cur, f_cur, window.delta_f, window.delta_g, cfg.beta, cfg.svd_rel_threshold
        )
        return y_next, StepKind.ANDERSON

    return _drive(t, cfg, step, callback)


def _solve_alternating(t, cfg, preconditioned, callback=None):
    window = AaWindow(1)

    def plain(run, y, g_cur, f_cur):
        if preconditioned:
            return y - run.precond(-f_cur), StepKind.PRECONDITIONED
        return g_cur, StepKind.FIXED_POINT

    def step(run, k, y, g_cur, f_cur):
        if alternating_step_kind(k, cfg.aa_start) is StepKind.ANDERSON and window.f_old is not None:
            delta_f = f_cur - window.f_old
            if np.any(delta_f):
                delta_g = g_cur - window.g_old
                y_next = anderson_update(
                    y, g_cur, f_cur, (delta_f,), (delta_g,), cfg.beta, cfg.svd_rel_threshold
                )
                return y_next, StepKind.ANDERSON
            log.info("iteration %d: zero residual difference, taking a non-Anderson step", k)
        window.remember(f_cur, g_cur)
        return plain(run, y, g_cur, f_cur)

    return _drive(t, cfg, step, callback)


def solve_paaa(t, cfg, callback=None):
    """Preconditioned alternating Anderson acceleration (depth-one window)."""
    return _solve_alternating(t, cfg, preconditioned=True, callback=callback)


def solve_aaa(t, cfg, callback=None):
    """Alternating Anderson acceleration with plain fixed-point steps."""
    return _solve_alternating(t, cfg, preconditioned=False, callback=callback)


_DISPATCH = {
    Method.FP: solve_fp,
    Method.AA: solve_aa,
    Method.AAA: solve_aaa,
    Method.PAAA: solve_paaa,
    Method.PRECONDITIONED: solve_preconditioned,
}


def solve_transformed(t, cfg, callback=None):
    return _DISPATCH[cfg.method](t, cfg, callback)


def solve(p, cfg=None, transformed=None, callback=None):
    """Transform ``p``, run ``cfg.method`` and verify the result in the original basis.

    Lower-level failures (Schur, singular kernel blocks) come back as an
    outcome with status ``OperatorError`` and the error text in ``message``.
    """
    cfg = cfg or SolverConfig()
    try:
        t = transformed if transformed is not None else transform(p)
    except GenSylvError as exc:
        return SolveOutcome(
            x=None, status=Status.OPERATOR_ERROR, trace=[], iterations=0,
            final_relres=float("nan"), method=cfg.method, message=f"transform failed: {exc}",
        )
    out = solve_transformed(t, cfg, callback)
    if out.x is not None:
        out.exact_relres = float(p.residual_norm(out.x))
    return out
