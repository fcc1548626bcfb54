"""Seeded generators for the benchmark families.

Random draws use NumPy's ``default_rng(seed)`` (PCG64 bit generator). Each
generator documents the order of its draws, so an identical ``(family,
parameters, seed)`` triple reproduces the problem bit for bit. MATLAB's
``rand``/``randn`` streams are not reproduced.

Two families are stand-ins for benchmarks whose exact constants are defined
elsewhere. The HEAT1 family carries one scale factor, fitted once with
``scripts/calibrate.py`` to a spectral radius of 0.93 and frozen below. The
Carleman-linearized RC ladder uses the textbook diode expansion and is not
fitted at all.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gensylv.problem import GeneralizedSylvesterProblem

FAMILIES = (
    "Heat1",
    "SyntheticRand",
    "BilinearTridiag",
    "CarlemanRc",
    "LowRankLyap",
    "HelmholtzShifted",
)

# frozen by scripts/calibrate.py (spectral radius 0.93 at n0 = 30)
HEAT1_COUPLING_SCALE = 0.9524


def tridiag(sub, diag, sup, n):
    """Toeplitz tridiagonal matrix (MATLAB-style argument order)."""
    return (
        np.diag(np.full(n - 1, float(sub)), -1)
        + np.diag(np.full(n, float(diag)))
        + np.diag(np.full(n - 1, float(sup)), 1)
    )


def _require(cond, msg):
    if not cond:
        raise ValueError(msg)


def _meta(family, seed, **params):
    return {"family": family, "seed": seed, "params": params}


def laplacian_2d(n0):
    """Dirichlet 5-point stencil ``T kron I + I kron T`` with ``T = tridiag(1,-2,1)``."""
    t = tridiag(1, -2, 1, n0)
    eye = np.eye(n0)
    return np.kron(t, eye) + np.kron(eye, t)


def heat1_coupling(n):
    """Symmetric pentadiagonal coupling matrix with stencil ``(-0.05, -1, 8, -1, -0.05)``."""
    return (
        np.diag(np.full(n, 8.0))
        + np.diag(np.full(n - 1, -1.0), 1)
        + np.diag(np.full(n - 1, -1.0), -1)
        + np.diag(np.full(n - 2, -0.05), 2)
        + np.diag(np.full(n - 2, -0.05), -2)
    )


def gen_heat1(n0, coupling_scale=None, rhs_rank=5, seed=0):
    """HEAT1-type generalized Lyapunov problem of size ``n = n0**2``.

    ``A = coupling_scale * (n0+1)**2 * laplacian_2d(n0)``, ``B = A``,
    ``N_1 = M_1 = heat1_coupling(n)``, ``C = F F^T`` with
    ``F = rng.standard_normal((n, rhs_rank))``.

    The ``(n0+1)**2`` mesh factor keeps the spectral radius nearly
    independent of ``n0``; ``coupling_scale`` defaults to the calibrated
    value giving a radius of about 0.93.
    """
    _require(n0 >= 2, "n0 must be >= 2")
    _require(rhs_rank >= 1, "rhs_rank must be >= 1")
    if coupling_scale is None:
        coupling_scale = HEAT1_COUPLING_SCALE
    n = n0 * n0
    rng = np.random.default_rng(seed)
    a = coupling_scale * (n0 + 1) ** 2 * laplacian_2d(n0)
    n1 = heat1_coupling(n)
    f = rng.standard_normal((n, rhs_rank))
    return GeneralizedSylvesterProblem(
        a=a, b=a, ns=(n1,), ms=(n1,), c=f @ f.T,
        meta=_meta("Heat1", seed, n0=n0, coupling_scale=coupling_scale, rhs_rank=rhs_rank),
    )


def gen_synthetic_rand(n, seed=0, rhs_rank=10):
    """Random symmetric problem with a dominant diagonal shift.

    Draw order: ``R = 1.6*rng.random((n,n))``, ``S = 2.4*rng.random((n,n))``,
    ``F = rng.random((n, rhs_rank))``. Then ``A = -(R+R^T)/2 - (n/8) I``,
    ``N_1 = -(2(S+S^T) + (3n/4) I)/100``, ``B = A``, ``M_1 = N_1``,
    ``C = F F^T``.
    """
    _require(n >= 2, "n must be >= 2")
    rng = np.random.default_rng(seed)
    r = 1.6 * rng.random((n, n))
    s = 2.4 * rng.random((n, n))
    f = rng.random((n, rhs_rank))
    eye = np.eye(n)
    a = -(r + r.T) / 2 - (n / 8) * eye
    n1 = -(2 * (s + s.T) + (3 * n / 4) * eye) / 1e2
    return GeneralizedSylvesterProblem(
        a=a, b=a, ns=(n1,), ms=(n1,), c=f @ f.T,
        meta=_meta("SyntheticRand", seed, n=n, rhs_rank=rhs_rank),
    )


def gen_bilinear_tridiag(n, gamma=1 / 3, seed=0, rhs_cols=2):
    """Bilinear-system Lyapunov problem ``A X + X A^T + gamma^2 sum N_i X N_i^T = C C^T``.

    ``A = tridiag(2,-5,2)``, ``N_1 = tridiag(3,0,-3)``, ``N_2 = -N_1 + I``.
    The factor ``gamma`` is stored on both sides of each coupling term.
    ``C`` is ``rng.standard_normal((n, rhs_cols))`` with unit-norm columns.
    """
    _require(n >= 2, "n must be >= 2")
    _require(rhs_cols >= 1, "rhs_cols must be >= 1")
    rng = np.random.default_rng(seed)
    a = tridiag(2, -5, 2, n)
    n1 = tridiag(3, 0, -3, n)
    n2 = -n1 + np.eye(n)
    c = rng.standard_normal((n, rhs_cols))
    c /= np.linalg.norm(c, axis=0)
    ns = (gamma * n1, gamma * n2)
    return GeneralizedSylvesterProblem(
        a=a, b=a, ns=ns, ms=ns, c=c @ c.T,
        meta=_meta("BilinearTridiag", seed, n=n, gamma=gamma, rhs_cols=rhs_cols),
    )


def rc_ladder(n0):
    """Linear and quadratic parts of the diode RC ladder ``x' = A_1 x + A_2 (x kron x) + b u``.

    Each diode has ``g(v) = exp(40 v) + v - 1 ~ 41 v + 800 v^2``. Node 1 is
    grounded through a diode and driven by the input; the last node is open.
    Returns ``(A_1, A_2, b)`` with ``b = e_1``.
    """
    g1, g2 = 41.0, 800.0
    a1 = np.zeros((n0, n0))
    a2 = np.zeros((n0, n0 * n0))

    def quad(row, i, j, sign):
        # sign * g2 * (x_i - x_j)^2 ; j < 0 means ground
        a2[row, i * n0 + i] += sign * g2
        if j >= 0:
            a2[row, j * n0 + j] += sign * g2
            a2[row, i * n0 + j] -= sign * g2
            a2[row, j * n0 + i] -= sign * g2

    def lin(row, i, j, sign):
        a1[row, i] += sign * g1
        if j >= 0:
            a1[row, j] -= sign * g1

    # node 0: -g(v0) - g(v0 - v1) + u
    lin(0, 0, -1, -1.0)
    quad(0, 0, -1, -1.0)
    for k in range(n0 - 1):
        # diode between node k and k+1 carries g(v_k - v_{k+1})
        lin(k, k, k + 1, -1.0)
        quad(k, k, k + 1, -1.0)
        lin(k + 1, k, k + 1, 1.0)
        quad(k + 1, k, k + 1, 1.0)
    b = np.zeros(n0)
    b[0] = 1.0
    return a1, a2, b


def gen_carleman_rc(n0, input_scale=1.0):
    """Second-order Carleman bilinearization of the RC ladder, ``n = n0 + n0**2``.

    ``A = [[A_1, A_2], [0, A_1 kron I + I kron A_1]]``,
    ``N_1 = [[0, 0], [b kron I + I kron b, 0]]``, ``C = -[b; 0][b; 0]^T``,
    ``B = A``, ``M_1 = N_1``, with ``b = input_scale * e_1``. Deterministic.
    With the default unit input the spectral radius at ``n0 = 30`` is about
    1.22, so plain fixed-point iteration diverges.
    """
    _require(n0 >= 2, "n0 must be >= 2")
    a1, a2, b = rc_ladder(n0)
    b = input_scale * b
    n = n0 + n0 * n0
    eye = np.eye(n0)
    a = np.zeros((n, n))
    a[:n0, :n0] = a1
    a[:n0, n0:] = a2
    a[n0:, n0:] = np.kron(a1, eye) + np.kron(eye, a1)
    n1 = np.zeros((n, n))
    n1[n0:, :n0] = np.kron(b[:, None], eye) + np.kron(eye, b[:, None])
    v = np.zeros(n)
    v[:n0] = b
    return GeneralizedSylvesterProblem(
        a=a, b=a, ns=(n1,), ms=(n1,), c=-np.outer(v, v),
        meta=_meta("CarlemanRc", None, n0=n0, input_scale=input_scale),
    )


def gen_lowrank_lyap(n, ell=40, alpha=1.70e-4, seed=0, rhs_rank=5):
    """Lyapunov problem with a low-rank coupling ``N_1 = alpha U U^T``.

    Draw order: ``U = rng.standard_normal((n, ell))``, then
    ``F = rng.standard_normal((n, rhs_rank))``. ``A = tridiag(1,-2,1)``,
    ``B = A``, ``M_1 = N_1``, ``C = F F^T``. ``alpha`` sets the size of the
    coupling; at ``(n, ell, alpha) = (500, 40, 1.7e-4)`` the spectral radius
    is below one.
    """
    _require(n >= 2, "n must be >= 2")
    _require(1 <= ell <= n, "ell must satisfy 1 <= ell <= n")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n, ell))
    f = rng.standard_normal((n, rhs_rank))
    a = tridiag(1, -2, 1, n)
    n1 = alpha * (u @ u.T)
    return GeneralizedSylvesterProblem(
        a=a, b=a, ns=(n1,), ms=(n1,), c=f @ f.T,
        meta=_meta("LowRankLyap", seed, n=n, ell=ell, alpha=alpha, rhs_rank=rhs_rank),
    )


def helmholtz_matrices(n):
    """``(A_raw, B, N_1, c)`` of the periodic Helmholtz discretization (``rhs_scale = 1``)."""
    h = 1.0 / (n - 1)
    b = -tridiag(1, -2, 1, n) / h**2
    corner = np.zeros((n, n))
    corner[0, n - 1] = corner[n - 1, 0] = 1.0
    a_raw = b - corner / h**2
    n1 = np.zeros((n, n))
    n1[n // 2:, n // 2:] = np.eye(n - n // 2)
    c = np.zeros(n)
    # 1-based interval [n/4, n/2]
    c[n // 4 - 1: n // 2] = 10.0
    return a_raw, b, n1, c


def gen_helmholtz_shifted(n, rhs_scale=1.0):
    """Shifted form ``(A+I) X + X B^T + N_1 X N_1^T - X = c c^T`` of the Helmholtz problem.

    ``A`` itself is singular; the ``-X`` term is stored as the coupling pair
    ``(I, -I)``. Deterministic.
    """
    _require(n >= 4 and n % 4 == 0, "n must be a positive multiple of 4")
    a_raw, b, n1, c = helmholtz_matrices(n)
    c = rhs_scale * c
    eye = np.eye(n)
    return GeneralizedSylvesterProblem(
        a=a_raw + eye, b=b, ns=(n1, eye), ms=(n1, -eye), c=np.outer(c, c),
        meta=_meta("HelmholtzShifted", None, n=n, rhs_scale=rhs_scale),
    )


_GENERATORS = {
    "Heat1": gen_heat1,
    "SyntheticRand": gen_synthetic_rand,
    "BilinearTridiag": gen_bilinear_tridiag,
    "CarlemanRc": gen_carleman_rc,
    "LowRankLyap": gen_lowrank_lyap,
    "HelmholtzShifted": gen_helmholtz_shifted,
}

_SEEDED = {"Heat1", "SyntheticRand", "BilinearTridiag", "LowRankLyap"}


@dataclass(frozen=True)
class ProblemSpec:
    """Family name, generator keyword arguments and seed."""

    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in _GENERATORS:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")


def make_problem(spec):
    gen = _GENERATORS[spec.family]
    kwargs = dict(spec.params)
    if spec.family in _SEEDED:
        kwargs["seed"] = spec.seed
    return gen(**kwargs)


def random_problem(n, m, seed=0, target_norm=0.5, b_equals_a=False, symmetric=False):
    """Small random problem whose iteration operator has a prescribed size.

    ``A`` and ``B`` are shifted random matrices with spectra in the open left
    half plane; the couplings are random and rescaled so that
    ``||N_i|| * ||M_i||`` summed over ``i`` equals ``target_norm`` times the
    smallest singular value of the Kronecker form of ``L``, which bounds the
    operator norm of ``L^{-1} Pi`` by ``target_norm``.

    With ``symmetric=True``, ``A = B`` is symmetric negative definite and
    ``N_i = M_i`` are symmetric positive definite, so the iteration operator
    is similar to a symmetric positive definite matrix and has a real,
    positive spectrum.

    Draw order: ``A``, ``B`` (unless shared), then ``N_i, M_i`` pairs (one
    draw per pair when symmetric), then ``C``.
    """
    rng = np.random.default_rng(seed)
    eye = np.eye(n)
    ns, ms = [], []
    if symmetric:
        g = rng.standard_normal((n, n))
        a = -(g @ g.T / n + eye)
        b = a
        for _ in range(m):
            h = rng.standard_normal((n, n))
            ns.append(h @ h.T / n + 0.1 * eye)
            ms.append(ns[-1])
    else:
        a = rng.standard_normal((n, n)) - 2.0 * np.sqrt(n) * eye
        b = a if b_equals_a else rng.standard_normal((n, n)) - 2.0 * np.sqrt(n) * eye
        for _ in range(m):
            ns.append(rng.standard_normal((n, n)))
            ms.append(rng.standard_normal((n, n)))
    c = rng.standard_normal((n, n))
    if m:
        l_kron = np.kron(eye, a) + np.kron(b, eye)
        smin = np.linalg.svd(l_kron, compute_uv=False)[-1]
        total = sum(np.linalg.norm(x, 2) * np.linalg.norm(y, 2) for x, y in zip(ns, ms))
        s = np.sqrt(target_norm * smin / total)
        ns = [s * x for x in ns]
        ms = [s * y for y in ms]
    return GeneralizedSylvesterProblem(
        a=a, b=b, ns=tuple(ns), ms=tuple(ms), c=c,
        meta=_meta("Random", seed, n=n, m=m, target_norm=target_norm, b_equals_a=b_equals_a,
                   symmetric=symmetric),
    )


def scale_coupling(p, factor):
    """Copy of ``p`` with every coupling term multiplied by ``factor``.

    Both ``N_i`` and ``M_i`` are scaled by ``sqrt(|factor|)`` (``M_i`` also
    takes the sign), so the iteration operator scales by ``factor``.
    """
    r = np.sqrt(abs(factor))
    sign = 1.0 if factor >= 0 else -1.0
    meta = dict(p.meta or {})
    meta["params"] = {**meta.get("params", {}), "coupling_factor": factor}
    return GeneralizedSylvesterProblem(
        a=p.a, b=p.b, ns=tuple(r * x for x in p.ns), ms=tuple(sign * r * y for y in p.ms),
        c=p.c, meta=meta,
    )


# Problem files are plain text:
#
#   gensylv-problem 1
#   family <name>
#   params <JSON object>
#   seed <int or null>
#   n <int>
#   m <int>
#   matrix <name> <rows> <cols>
#   <rows lines of cols numbers, %.17g>
#   ...
#
# Matrices appear in the order A, B, N1, M1, ..., Nm, Mm, C. Numbers are
# written with 17 significant digits, so a round trip is exact.
_MAGIC = "gensylv-problem 1"


def _write_matrix(fh, name, x):
    fh.write(f"matrix {name} {x.shape[0]} {x.shape[1]}\n")
    np.savetxt(fh, x, fmt="%.17g")


def save_problem(p, path):
    """Write ``p`` (including its ``meta`` header) to a text file."""
    meta = p.meta or {}
    names = [("A", p.a), ("B", p.b)]
    for i, (n_i, m_i) in enumerate(zip(p.ns, p.ms), start=1):
        names += [(f"N{i}", n_i), (f"M{i}", m_i)]
    names.append(("C", p.c))
    with open(path, "w") as fh:
        fh.write(_MAGIC + "\n")
        fh.write(f"family {meta.get('family', 'Custom')}\n")
        fh.write(f"params {json.dumps(meta.get('params', {}), sort_keys=True)}\n")
        fh.write(f"seed {json.dumps(meta.get('seed'))}\n")
        fh.write(f"n {p.n}\nm {p.m}\n")
        for name, x in names:
            _write_matrix(fh, name, x)


def load_problem(path):
    """Read a file written by :func:`save_problem`."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise ValueError(f"{path}: not a gensylv problem file")
    header = {}
    pos = 1
    for key in ("family", "params", "seed", "n", "m"):
        tag, _, value = lines[pos].partition(" ")
        if tag != key:
            raise ValueError(f"{path}:{pos + 1}: expected {key!r}, found {tag!r}")
        header[key] = value
        pos += 1
    n, m = int(header["n"]), int(header["m"])
    mats = {}
    while pos < len(lines):
        if not lines[pos].strip():
            pos += 1
            continue
        tag, name, rows, cols = lines[pos].split()
        if tag != "matrix":
            raise ValueError(f"{path}:{pos + 1}: expected a matrix header")
        rows, cols = int(rows), int(cols)
        body = lines[pos + 1:pos + 1 + rows]
        mats[name] = np.array([[float(v) for v in row.split()] for row in body]).reshape(rows, cols)
        pos += 1 + rows
    expected = ["A", "B", "C"] + [f"{k}{i}" for i in range(1, m + 1) for k in "NM"]
    missing = [k for k in expected if k not in mats]
    if missing:
        raise ValueError(f"{path}: missing matrices {missing}")
    meta = {
        "family": header["family"],
        "params": json.loads(header["params"]),
        "seed": json.loads(header["seed"]),
    }
    return GeneralizedSylvesterProblem(
        a=mats["A"], b=mats["B"],
        ns=tuple(mats[f"N{i}"] for i in range(1, m + 1)),
        ms=tuple(mats[f"M{i}"] for i in range(1, m + 1)),
        c=mats["C"], meta=meta,
    )
