"""Box averages of quartics and their derivatives.

For a quartic f the average of f over the cube ``[x - t, x + t]^n`` is again a
polynomial,

    mu(x, t) = f(x) + (t^2 / 6) q(x) + kappa t^4,

where ``q`` is the trace of the Hessian of f and ``kappa`` collects the constant
fourth derivatives.  :func:`quadrature_oracle` computes the same average by
direct tensor-product Gauss-Legendre integration and is kept as an
independent check of the closed form.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .poly import Polynomial, QuadraticPoly

__all__ = [
    "SteklovCoeffs",
    "steklov_build",
    "steklov_eval",
    "steklov_grad_x",
    "steklov_hess_x",
    "steklov_grad_tx",
    "quadrature_oracle",
    "ORACLE_MAX_DIM",
]

ORACLE_MAX_DIM = 6


@dataclass(frozen=True, eq=False)
class SteklovCoeffs:
    f: Polynomial
    q: QuadraticPoly
    kappa: float

    @property
    def n(self) -> int:
        return self.f.n

    @cached_property
    def C(self) -> np.ndarray:
        C = self.q.hessian()
        C.flags.writeable = False
        return C


def steklov_build(f: Polynomial) -> SteklovCoeffs:
    return SteklovCoeffs(f=f, q=f.trace_hessian_poly(), kappa=f.quartic_tail_kappa())


def _check_t(t) -> float:
    t = float(t)
    if t < 0.0:
        raise ValueError(f"smoothing parameter must be non-negative, got {t}")
    return t


def steklov_eval(S: SteklovCoeffs, x, t) -> float:
    t = _check_t(t)
    t2 = t * t
    return S.f.evaluate(x) + (t2 / 6.0) * S.q.evaluate(x) + S.kappa * t2 * t2


def steklov_grad_x(S: SteklovCoeffs, x, t) -> np.ndarray:
    t = _check_t(t)
    return S.f.gradient(x) + (t * t / 6.0) * S.q.gradient(x)


def steklov_hess_x(S: SteklovCoeffs, x, t) -> np.ndarray:
    t = _check_t(t)
    return S.f.hessian(x) + (t * t / 6.0) * S.C


def steklov_grad_tx(S: SteklovCoeffs, x, t) -> np.ndarray:
    """d/dt of the x-gradient: ``(t / 3) grad q(x)``."""
    t = _check_t(t)
    return (t / 3.0) * S.q.gradient(x)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(3)


def quadrature_oracle(f: Polynomial, x, t) -> float:
    """Average of f over the box ``prod_i [x_i - t, x_i + t]`` by 3-point Gauss-Legendre.

    The rule is exact for degree <= 5 per axis, so for quartics this agrees
    with :func:`steklov_eval` up to roundoff.  Cost is ``3**n`` evaluations.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n > ORACLE_MAX_DIM:
        raise ValueError(f"quadrature oracle is limited to n <= {ORACLE_MAX_DIM} (got n={n})")
    t = float(t)
    if t <= 0.0:
        raise ValueError("quadrature oracle needs t > 0")
    total = 0.0
    for idx in itertools.product(range(3), repeat=n):
        idx = list(idx)
        w = np.prod(_GL_WEIGHTS[idx])
        total += w * f.evaluate(x + t * _GL_NODES[idx])
    # weights sum to 2 per axis
    return total / 2.0**n
