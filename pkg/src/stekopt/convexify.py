"""When and how strongly the box average convexifies a quartic.

The smoothing adds ``(t^2 / 6) C`` to the Hessian, with ``C`` the constant
Hessian of the trace quadratic.  So convexification is only possible when C is
positive semidefinite and non-zero, and with C positive definite a threshold
``t0 = sqrt(6 |theta_L| / lambda_min(C))`` suffices on the ball of radius L,
where ``theta_L`` is the smallest Hessian eigenvalue of f over that ball.
For normal quartics the threshold is global in x and has a closed form.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import sym_eig, sym_eigvals
from .poly import NormalQuartic, Polynomial

__all__ = [
    "Classification",
    "SpectrumInfo",
    "ConvexifyPlan",
    "PlanMode",
    "NotNormalError",
    "BallBoundInapplicable",
    "NullSpaceConditionInapplicable",
    "ThetaEstimate",
    "classify_C",
    "t0_normal",
    "theta_L_estimate",
    "t0_ball",
    "ball_radius_normal",
    "null_space_condition_sample",
    "psd_tolerance",
]

DEFAULT_MARGIN = 0.1


class NotNormalError(ValueError):
    """The quartic diagonal ``a`` is not strictly positive."""


class BallBoundInapplicable(ValueError):
    """The ball threshold needs ``lambda_min(C) > 0``."""


class NullSpaceConditionInapplicable(ValueError):
    """The null-space sampler only applies to singular, non-zero PSD C."""


class Classification(str, enum.Enum):
    NOT_PSD = "NotPSD"
    ZERO = "Zero"
    SINGULAR_PSD = "SingularPSD"
    POSITIVE_DEFINITE = "PositiveDefinite"


def psd_tolerance(lambda_max: float) -> float:
    return 1e-10 * (1.0 + abs(lambda_max))


@dataclass(frozen=True)
class SpectrumInfo:
    lambda_min_C: float
    lambda_max_C: float
    classification: Classification
    null_dim_estimate: int

    @property
    def note(self) -> str:
        return {
            Classification.NOT_PSD: "C has a negative eigenvalue: no smoothing level makes the average convex",
            Classification.ZERO: "C = 0: the average is convex iff f itself is convex",
            Classification.SINGULAR_PSD: "C is singular PSD: convexifiability hinges on the Hessian restricted to N(C)",
            Classification.POSITIVE_DEFINITE: "C is positive definite: a finite convexifying t0 exists on every ball",
        }[self.classification]


class PlanMode(str, enum.Enum):
    NORMAL_FORM = "NormalForm"
    BALL = "BallTheorem3"
    USER = "UserSupplied"


@dataclass(frozen=True)
class ConvexifyPlan:
    t0: float
    mode: PlanMode
    bound: float
    margin: float = 0.0
    L: float | None = None
    theta_L: float | None = None
    theta_guaranteed: bool | None = None
    note: str = ""

    def __post_init__(self):
        if not self.t0 > 0.0:
            raise ValueError(f"t0 must be positive, got {self.t0}")
        if self.mode is PlanMode.BALL and (self.L is None or self.theta_L is None):
            raise ValueError("a ball plan needs both L and theta_L")


def classify_C(f: Polynomial) -> SpectrumInfo:
    w = sym_eigvals(f.c_matrix())
    lo, hi = float(w[0]), float(w[-1])
    tol = psd_tolerance(hi)
    null_dim = int(np.sum(np.abs(w) <= tol))
    if lo < -tol:
        cls = Classification.NOT_PSD
    elif hi <= tol:
        cls = Classification.ZERO
    elif abs(lo) <= tol:
        cls = Classification.SINGULAR_PSD
    else:
        cls = Classification.POSITIVE_DEFINITE
    return SpectrumInfo(lo, hi, cls, null_dim)


def _require_normal(f: NormalQuartic) -> float:
    if not isinstance(f, NormalQuartic):
        raise TypeError("expected a NormalQuartic")
    a_min = float(f.a.min())
    if not a_min > 0.0:
        raise NotNormalError(f"quartic coefficients must be positive (min a_i = {a_min})")
    return a_min


def t0_normal(f: NormalQuartic, margin: float = DEFAULT_MARGIN) -> ConvexifyPlan:
    """Global threshold ``sqrt(|lambda_min(B)| / (2 min a)) + margin`` for a normal quartic."""
    a_min = _require_normal(f)
    lam = float(sym_eigvals(f.B)[0])
    if lam >= 0.0:
        if not margin > 0.0:
            raise ValueError("f is already convex; a positive margin is needed to pick t0")
        return ConvexifyPlan(t0=margin, mode=PlanMode.NORMAL_FORM, bound=0.0, margin=margin,
                             note="already convex: B is positive semidefinite")
    bound = math.sqrt(-lam / (2.0 * a_min))
    return ConvexifyPlan(t0=bound + margin, mode=PlanMode.NORMAL_FORM, bound=bound, margin=margin)


@dataclass(frozen=True)
class ThetaEstimate:
    value: float
    guaranteed: bool
    witness: np.ndarray | None = field(default=None, compare=False)


def _uniform_ball(rng, count, n, L):
    z = rng.standard_normal((count, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = L * rng.random(count) ** (1.0 / n)
    return z * r[:, None]


def _project_ball(x, L):
    nrm = np.linalg.norm(x)
    return x if nrm <= L else x * (L / nrm)


def theta_L_estimate(f: Polynomial, L: float, *, num_samples: int = 2000, refinements: int = 10,
                     safety: float = 1.1, rng=None) -> ThetaEstimate:
    """Lower estimate of ``min_{|x| <= L} lambda_min(Hess f(x))``.

    Normal quartics get the guaranteed bound ``2 lambda_min(B)``.  Otherwise the
    minimum is searched by sampling plus compass-search refinement of the best
    samples, then inflated by `safety` when negative; the result is heuristic.
    """
    if not L > 0.0:
        raise ValueError("L must be positive")
    if isinstance(f, NormalQuartic):
        return ThetaEstimate(2.0 * float(sym_eigvals(f.B)[0]), True)
    rng = np.random.default_rng(rng)
    n = f.n

    def lam(x):
        return float(np.linalg.eigvalsh(f.hessian(x))[0])

    pts = np.vstack([np.zeros((1, n)), _uniform_ball(rng, num_samples, n, L)])
    vals = np.array([lam(p) for p in pts])
    order = np.argsort(vals)[:refinements]
    best_val, best_x = float(vals[order[0]]), pts[order[0]]
    for k in order:
        x, v = pts[k].copy(), float(vals[k])
        step = 0.25 * L
        while step > 1e-9 * L:
            moved = False
            for i in range(n):
                for sgn in (1.0, -1.0):
                    y = x.copy()
                    y[i] += sgn * step
                    y = _project_ball(y, L)
                    vy = lam(y)
                    if vy < v:
                        x, v, moved = y, vy, True
            if not moved:
                step *= 0.5
        if v < best_val:
            best_val, best_x = v, x
    value = best_val * safety if best_val < 0.0 else best_val
    return ThetaEstimate(value, False, best_x)


def t0_ball(theta_L: float, lambda_min_C: float, margin: float = DEFAULT_MARGIN, *,
            L: float | None = None, theta_guaranteed: bool | None = None) -> ConvexifyPlan:
    """Threshold ``sqrt(6 |theta_L| / lambda_min(C)) + margin`` valid on the ball of radius L."""
    if not lambda_min_C > 0.0:
        raise BallBoundInapplicable(f"needs lambda_min(C) > 0, got {lambda_min_C}")
    if theta_L >= 0.0:
        bound = 0.0
        note = "Hessian already PSD on the ball"
    else:
        bound = math.sqrt(6.0 * abs(theta_L) / lambda_min_C)
        note = ""
    t0 = bound + margin
    if not t0 > 0.0:
        raise ValueError("theta_L >= 0 gives a zero bound; a positive margin is needed")
    return ConvexifyPlan(t0=t0, mode=PlanMode.BALL, bound=bound, margin=margin,
                         L=L if L is not None else math.inf, theta_L=theta_L,
                         theta_guaranteed=theta_guaranteed, note=note)


def ball_radius_normal(f: NormalQuartic) -> tuple[float, float]:
    """``(L_inf, eps_hat)``: every global minimizer satisfies ``|x|_inf <= L_inf``.

    ``L(eps) = max(|d|_1 / eps, sqrt((n rho(B) + eps) / a_min))`` is minimized
    where the two branches cross, i.e. at the positive root of
    ``eps^2 (n rho + eps) = |d|_1^2 a_min``.
    """
    a_min = _require_normal(f)
    n = f.n
    w = sym_eigvals(f.B)
    rho = float(max(abs(w[0]), abs(w[-1])))
    d1 = float(np.abs(f.d).sum())
    nr = n * rho
    if d1 == 0.0:
        return math.sqrt(nr / a_min), 0.0
    target = d1 * d1 * a_min

    def g(eps):
        return eps * eps * (nr + eps) - target

    lo, hi = 0.0, max(d1 * math.sqrt(a_min / max(nr, 1e-300)), 1.0)
    while g(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    eps = 0.5 * (lo + hi)
    L = max(d1 / eps, math.sqrt((nr + eps) / a_min))
    return L, eps


def null_space_condition_sample(f: Polynomial, L: float, num_samples: int = 1000, rng=None):
    """Sample ``phi(alpha, x) = alpha^T N^T Hess f(x) N alpha`` over unit alpha and ``|x| <= L``.

    N is an orthonormal eigenbasis of the null space of C.  Returns the
    smallest sampled value and its witness ``(alpha, x)``.  A positive minimum
    is evidence, not proof, that the restricted Hessian stays positive.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    info = classify_C(f)
    if info.classification is not Classification.SINGULAR_PSD:
        raise NullSpaceConditionInapplicable(f"C is {info.classification.value}, not singular PSD")
    w, V = sym_eig(f.c_matrix())
    N = V[:, np.abs(w) <= psd_tolerance(w[-1])]
    rng = np.random.default_rng(rng)
    alphas = rng.standard_normal((num_samples, N.shape[1]))
    alphas /= np.linalg.norm(alphas, axis=1, keepdims=True)
    xs = _uniform_ball(rng, num_samples, f.n, L)
    best = (math.inf, None, None)
    for alpha, x in zip(alphas, xs):
        v = N @ alpha
        phi = float(v @ f.hessian(x) @ v)
        if phi < best[0]:
            best = (phi, alpha, x)
    return best[0], (best[1], best[2])
