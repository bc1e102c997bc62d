import itertools

import numpy as np
import pytest

from stekopt.poly import MonomialPoly, NormalQuartic


def all_exponents(n, max_deg=4):
    return [e for e in itertools.product(range(max_deg + 1), repeat=n) if sum(e) <= max_deg]


def random_monomial(rng, n, density=0.6, scale=2.0):
    exps = all_exponents(n)
    keep = rng.random(len(exps)) < density
    terms = {e: rng.uniform(-scale, scale) for e, k in zip(exps, keep) if k}
    return MonomialPoly(n, terms)


def random_normal_quartic(rng, n, ib=(-1.0, 1.0)):
    a = rng.uniform(1.0, 2.0, n)
    B = rng.uniform(*ib, (n, n))
    B = 0.5 * (B + B.T)
    np.fill_diagonal(B, rng.uniform(-1.0, 1.0, n))
    return NormalQuartic(a, B, rng.uniform(-1.0, 1.0, n))


def fd_gradient(fun, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def fd_jacobian(fun, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((fun(x + e) - fun(x - e)) / (2 * h))
    return np.column_stack(cols)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test marks it PASS only if it reaches ``done``."""

    class Recorder:
        def __init__(self):
            self.detail = ""
            self.ok = False

        def done(self, detail):
            self.detail = detail
            self.ok = True

    rec = Recorder()
    yield rec
    number = request.node.get_closest_marker("criterion").args[0]
    failed = getattr(request.node, "rep_call", None) is None or request.node.rep_call.failed
    status = "PASS" if rec.ok and not failed else "FAIL"
    line = f"criterion {number:>2} {status}: {request.node.name}" + (f" ({rec.detail})" if rec.detail else "")
    _ACCEPTANCE_LINES.append((number, line))
    print("\n" + line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
