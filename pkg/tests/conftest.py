import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gensylv.oracle import iteration_operator
from gensylv.problem import transform
from gensylv.problems import random_problem, scale_coupling

settings.register_profile(
    "default", max_examples=50, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def problem_with_norm(n, m, seed, norm, **kw):
    """Random problem rescaled so that ||L_hat^{-1} Pi_hat||_2 equals ``norm`` (oracle)."""
    p = random_problem(n, m, seed=seed, **kw)
    if m == 0:
        return p
    current = iteration_operator(transform(p)).norm
    return scale_coupling(p, norm / current)


def problem_with_radius(n, m, seed, radius, **kw):
    """Random problem rescaled so that the spectral radius equals ``radius`` (oracle)."""
    p = random_problem(n, m, seed=seed, **kw)
    if m == 0:
        return p
    current = iteration_operator(transform(p)).spectral_radius
    return scale_coupling(p, radius / current)


def rel(a, b):
    nb = np.linalg.norm(b)
    return np.linalg.norm(a - b) / (nb if nb > 0 else 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES = []


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
