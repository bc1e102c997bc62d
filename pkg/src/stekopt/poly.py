"""Quartic polynomial representations.

Two concrete forms answer the same interface:

* :class:`MonomialPoly` -- a sparse map from exponent vectors to coefficients,
  for arbitrary quartics in a handful of variables;
* :class:`NormalQuartic` -- ``sum_i a_i x_i^4 + x^T B x + d^T x + c``, which
  keeps memory and work at O(n^2) for large n.

Both provide value, gradient and Hessian, plus the three pieces of the box
average: the trace-of-Hessian quadratic ``q(x) = sum_i d^2 f/dx_i^2``, the
constant quartic tail ``kappa`` and the constant matrix ``C = Hess q``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .linalg import as_symmetric

__all__ = [
    "ParseError",
    "QuadraticPoly",
    "MonomialPoly",
    "NormalQuartic",
    "Polynomial",
    "parse_poly",
    "load_poly",
    "format_poly",
    "evaluate",
    "gradient",
    "hessian",
    "trace_hessian_poly",
    "quartic_tail_kappa",
    "c_matrix",
]

MAX_DEGREE = 4


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def _as_point(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"expected a point of dimension {n}, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class QuadraticPoly:
    """``c0 + g^T x + x^T M x`` with symmetric M."""

    c0: float
    g: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "M", as_symmetric(self.M, name="M"))
        object.__setattr__(self, "c0", float(self.c0))
        if self.M.shape != (g.size, g.size):
            raise ValueError("QuadraticPoly: g and M dimensions disagree")

    @property
    def n(self) -> int:
        return self.g.size

    def evaluate(self, x) -> float:
        x = _as_point(x, self.n)
        return float(self.c0 + self.g @ x + x @ self.M @ x)

    def gradient(self, x) -> np.ndarray:
        x = _as_point(x, self.n)
        return self.g + 2.0 * (self.M @ x)

    def hessian(self) -> np.ndarray:
        return 2.0 * self.M


class MonomialPoly:
    """Sparse quartic ``sum_e c_e prod_i x_i^{e_i}`` with total degree at most 4.

    Terms with a zero coefficient are dropped; duplicate exponents are summed.
    Terms are kept in lexicographic exponent order.
    """

    def __init__(self, n: int, terms: Mapping[tuple[int, ...], float]):
        if n < 1:
            raise ValueError("MonomialPoly needs at least one variable")
        merged: dict[tuple[int, ...], float] = {}
        for exps, coef in terms.items():
            e = tuple(int(v) for v in exps)
            if len(e) != n:
                raise ValueError(f"exponent vector {e} has length {len(e)}, expected {n}")
            if min(e) < 0:
                raise ValueError(f"negative exponent in {e}")
            if sum(e) > MAX_DEGREE:
                raise ValueError(f"degree exceeds {MAX_DEGREE}: term {e}")
            merged[e] = merged.get(e, 0.0) + float(coef)
        self._n = n
        self._terms = {e: c for e, c in sorted(merged.items()) if c != 0.0}
        m = len(self._terms)
        self._E = np.array(list(self._terms), dtype=np.int64).reshape(m, n)
        self._c = np.array(list(self._terms.values()), dtype=float)
        self._cols = np.arange(n)
        self._grad_parts = [self._derive(self._E, self._c, i) for i in range(n)]
        self._hess_parts = {}
        for i in range(n):
            Ei, ci = self._grad_parts[i]
            for j in range(i, n):
                self._hess_parts[i, j] = self._derive(Ei, ci, j)

    @staticmethod
    def _derive(E, c, i):
        mask = E[:, i] > 0
        Ed = E[mask].copy()
        cd = c[mask] * Ed[:, i]
        Ed[:, i] -= 1
        return Ed, cd

    @classmethod
    def from_terms(cls, n: int, rows) -> "MonomialPoly":
        """Build from an iterable of ``(coeff, exponents)`` pairs, summing duplicates."""
        acc: dict[tuple[int, ...], float] = {}
        for coef, exps in rows:
            e = tuple(int(v) for v in exps)
            acc[e] = acc.get(e, 0.0) + float(coef)
        return cls(n, acc)

    @property
    def n(self) -> int:
        return self._n

    @property
    def terms(self) -> dict[tuple[int, ...], float]:
        return dict(self._terms)

    @property
    def degree(self) -> int:
        return int(self._E.sum(axis=1).max()) if len(self._c) else 0

    def __repr__(self) -> str:
        return f"MonomialPoly(n={self._n}, terms={len(self._terms)})"

    def _sum(self, E, c, P) -> float:
        if c.size == 0:
            return 0.0
        return float(c @ np.prod(P[E, self._cols], axis=1))

    def _powers(self, x) -> np.ndarray:
        return np.vander(x, MAX_DEGREE + 1, increasing=True).T

    def evaluate(self, x) -> float:
        x = _as_point(x, self._n)
        return self._sum(self._E, self._c, self._powers(x))

    def gradient(self, x) -> np.ndarray:
        P = self._powers(_as_point(x, self._n))
        return np.array([self._sum(E, c, P) for E, c in self._grad_parts])

    def hessian(self, x) -> np.ndarray:
        P = self._powers(_as_point(x, self._n))
        H = np.empty((self._n, self._n))
        for (i, j), (E, c) in self._hess_parts.items():
            H[i, j] = H[j, i] = self._sum(E, c, P)
        return H

    def trace_hessian_poly(self) -> QuadraticPoly:
        n = self._n
        c0 = 0.0
        g = np.zeros(n)
        M = np.zeros((n, n))
        for i in range(n):
            E, c = self._hess_parts[i, i]
            for e, coef in zip(E, c):
                nz = np.flatnonzero(e)
                deg = int(e.sum())
                if deg == 0:
                    c0 += coef
                elif deg == 1:
                    g[nz[0]] += coef
                elif len(nz) == 1:
                    M[nz[0], nz[0]] += coef
                else:
                    j, k = nz
                    M[j, k] += 0.5 * coef
                    M[k, j] += 0.5 * coef
        return QuadraticPoly(c0, g, M)

    def quartic_tail_kappa(self) -> float:
        kappa = 0.0
        for e, coef in self._terms.items():
            if sum(e) != 4:
                continue
            nz = [i for i, v in enumerate(e) if v]
            if len(nz) == 1:
                kappa += 24.0 * coef / 120.0
            elif len(nz) == 2 and e[nz[0]] == 2 and e[nz[1]] == 2:
                kappa += 4.0 * coef / 36.0
        return kappa

    def c_matrix(self) -> np.ndarray:
        return self.trace_hessian_poly().hessian()

    def to_monomial(self) -> "MonomialPoly":
        return self

    def to_normal(self) -> "NormalQuartic | None":
        """The equivalent :class:`NormalQuartic`, or ``None`` if the terms do not fit that form."""
        n = self._n
        a = np.zeros(n)
        B = np.zeros((n, n))
        d = np.zeros(n)
        c = 0.0
        for e, coef in self._terms.items():
            nz = [i for i, v in enumerate(e) if v]
            deg = sum(e)
            if deg == 0:
                c += coef
            elif deg == 1:
                d[nz[0]] += coef
            elif deg == 2 and len(nz) == 1:
                B[nz[0], nz[0]] += coef
            elif deg == 2:
                i, j = nz
                B[i, j] += 0.5 * coef
                B[j, i] += 0.5 * coef
            elif deg == 4 and len(nz) == 1:
                a[nz[0]] += coef
            else:
                return None
        return NormalQuartic(a, B, d, c)


@dataclass(frozen=True, eq=False)
class NormalQuartic:
    """``sum_i a_i x_i^4 + x^T B x + d^T x + c``.

    `a` is stored as given; the convexification routines insist on
    ``min(a) > 0`` themselves.
    """

    a: np.ndarray
    B: np.ndarray
    d: np.ndarray
    c: float = 0.0
    _twoB: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).ravel()
        d = np.asarray(self.d, dtype=float).ravel()
        B = as_symmetric(self.B, name="B")
        if not (a.size == d.size == B.shape[0]):
            raise ValueError(f"dimension mismatch: len(a)={a.size}, len(d)={d.size}, B is {B.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "_twoB", 2.0 * B)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def degree(self) -> int:
        if np.any(self.a):
            return 4
        if np.any(self.B):
            return 2
        return 1 if np.any(self.d) else 0

    def evaluate(self, x) -> float:
        x = _as_point(x, self.n)
        x2 = x * x
        return float(self.a @ (x2 * x2) + x @ self.B @ x + self.d @ x + self.c)

    def gradient(self, x) -> np.ndarray:
        x = _as_point(x, self.n)
        return 4.0 * self.a * x**3 + self._twoB @ x + self.d

    def hessian(self, x) -> np.ndarray:
        x = _as_point(x, self.n)
        H = self._twoB.copy()
        H.flat[:: self.n + 1] += 12.0 * self.a * x * x
        return H

    def trace_hessian_poly(self) -> QuadraticPoly:
        return QuadraticPoly(2.0 * np.trace(self.B), np.zeros(self.n), np.diag(12.0 * self.a))

    def quartic_tail_kappa(self) -> float:
        return float(self.a.sum() / 5.0)

    def c_matrix(self) -> np.ndarray:
        return np.diag(24.0 * self.a)

    def to_monomial(self) -> MonomialPoly:
        n = self.n
        terms: dict[tuple[int, ...], float] = {}

        def unit(*idx):
            e = [0] * n
            for i in idx:
                e[i] += 1
            return tuple(e)

        for i in range(n):
            terms[unit(i, i, i, i)] = self.a[i]
            terms[unit(i, i)] = self.B[i, i]
            terms[unit(i)] = self.d[i]
        for i, j in itertools.combinations(range(n), 2):
            terms[unit(i, j)] = 2.0 * self.B[i, j]
        terms[(0,) * n] = self.c
        return MonomialPoly(n, terms)

    def to_normal(self) -> "NormalQuartic":
        return self


Polynomial = Union[MonomialPoly, NormalQuartic]


def evaluate(f: Polynomial, x) -> float:
    return f.evaluate(x)


def gradient(f: Polynomial, x) -> np.ndarray:
    return f.gradient(x)


def hessian(f: Polynomial, x) -> np.ndarray:
    return f.hessian(x)


def trace_hessian_poly(f: Polynomial) -> QuadraticPoly:
    """The quadratic ``q(x) = trace(Hess f(x))``."""
    return f.trace_hessian_poly()


def quartic_tail_kappa(f: Polynomial) -> float:
    """``(1/120) sum_i f_iiii + (1/36) sum_{i<j} f_iijj`` (constants for a quartic)."""
    return f.quartic_tail_kappa()


def c_matrix(f: Polynomial) -> np.ndarray:
    """The constant matrix ``C = sum_i Hess(f_ii)``."""
    return f.c_matrix()


# -- text formats ----------------------------------------------------------------

def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _floats(tokens, lineno, count=None):
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"malformed number ({exc})", lineno) from None
    if count is not None and len(vals) != count:
        raise ParseError(f"dimension mismatch: expected {count} values, got {len(vals)}", lineno)
    return vals


def parse_poly(text: str) -> Polynomial:
    """Parse the ``mqp`` (sparse monomial) or ``normal`` text format."""
    lines = list(_content_lines(text))
    if not lines:
        raise ParseError("empty polynomial description")
    lineno, header = lines[0]
    if len(header) != 2 or header[0] not in ("mqp", "normal"):
        raise ParseError("header must be 'mqp <n>' or 'normal <n>'", lineno)
    try:
        n = int(header[1])
    except ValueError:
        raise ParseError(f"bad dimension {header[1]!r}", lineno) from None
    if n < 1:
        raise ParseError("dimension must be positive", lineno)
    body = lines[1:]
    if header[0] == "mqp":
        return _parse_mqp(n, body)
    return _parse_normal(n, body)


def _parse_mqp(n, body) -> MonomialPoly:
    rows = []
    for lineno, tok in body:
        if len(tok) != n + 1:
            raise ParseError(f"dimension mismatch: expected coefficient and {n} exponents, got {len(tok)} fields", lineno)
        coef = _floats(tok[:1], lineno)[0]
        try:
            exps = [int(t) for t in tok[1:]]
        except ValueError:
            raise ParseError("exponents must be non-negative integers", lineno) from None
        if min(exps) < 0:
            raise ParseError("exponents must be non-negative integers", lineno)
        if sum(exps) > MAX_DEGREE:
            raise ParseError(f"degree exceeds {MAX_DEGREE} (term degree {sum(exps)})", lineno)
        rows.append((coef, exps))
    return MonomialPoly.from_terms(n, rows)


def _parse_normal(n, body) -> NormalQuartic:
    a = d = None
    c = 0.0
    rows = []
    last = 0
    for lineno, tok in body:
        last = lineno
        key = tok[0]
        if key == "a":
            if a is not None:
                raise ParseError("duplicate 'a' line", lineno)
            a = _floats(tok[1:], lineno, n)
        elif key == "B":
            if len(rows) == n:
                raise ParseError(f"too many B rows (expected {n})", lineno)
            rows.append((lineno, _floats(tok[1:], lineno, n)))
        elif key == "d":
            if d is not None:
                raise ParseError("duplicate 'd' line", lineno)
            d = _floats(tok[1:], lineno, n)
        elif key == "c":
            c = _floats(tok[1:], lineno, 1)[0]
        else:
            raise ParseError(f"unknown line tag {key!r} (expected a, B, d or c)", lineno)
    if a is None or d is None:
        raise ParseError("normal format needs both an 'a' and a 'd' line", last or None)
    if len(rows) != n:
        raise ParseError(f"dimension mismatch: expected {n} B rows, got {len(rows)}", last or None)
    B = np.array([r for _, r in rows])
    for i in range(n):
        for j in range(i + 1, n):
            if abs(B[i, j] - B[j, i]) > 1e-12 * (1.0 + abs(B[i, j])):
                raise ParseError(f"asymmetric B: B[{i}][{j}]={B[i, j]} but B[{j}][{i}]={B[j, i]}", rows[j][0])
    return NormalQuartic(a, 0.5 * (B + B.T), d, c)


def load_poly(path) -> Polynomial:
    with open(path, encoding="utf-8") as fh:
        return parse_poly(fh.read())


def format_poly(f: Polynomial) -> str:
    """Serialize to the text format that :func:`parse_poly` reads back exactly."""
    if isinstance(f, NormalQuartic):
        out = [f"normal {f.n}", "a " + " ".join(repr(float(v)) for v in f.a)]
        out += ["B " + " ".join(repr(float(v)) for v in row) for row in f.B]
        out.append("d " + " ".join(repr(float(v)) for v in f.d))
        if f.c:
            out.append(f"c {f.c!r}")
        return "\n".join(out) + "\n"
    out = [f"mqp {f.n}"]
    out += [f"{coef!r} " + " ".join(map(str, e)) for e, coef in f.terms.items()]
    return "\n".join(out) + "\n"
