"""Convexify, minimize, then track the stationary path back to t = 0.

Given a convexifying level t0, the minimizer x0 of ``mu(., t0)`` is found by
damped Newton.  Differentiating ``grad_x mu(x(t), t) = 0`` in t gives

    x'(t) = -(t / 3) [Hess f(x) + (t^2 / 6) C]^{-1} grad q(x),

which is integrated from (x0, t0) down to t = 0; ``x(0)`` is the estimate of a
global minimizer of f.
"""
from __future__ import annotations

import csv
import enum
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from . import convexify as cvx
from .linalg import NearSingularError, factor_sym, is_positive_definite, solve_sym, sym_eigvals
from .ode import StepLimitExceeded, StepSizeUnderflow, dopri5
from .poly import NormalQuartic, Polynomial
from .steklov import SteklovCoeffs, steklov_build, steklov_grad_x, steklov_hess_x

__all__ = [
    "SolverConfig",
    "TrajectoryStatus",
    "TrajectoryResult",
    "SolveReport",
    "EndpointCertificate",
    "NewtonFailure",
    "minimize_convexified",
    "trajectory",
    "certify_endpoint",
    "choose_t0",
    "run_algorithm1",
    "write_trace_csv",
    "FAILURE_GRAD_TOL",
]

log = logging.getLogger(__name__)

FAILURE_GRAD_TOL = 1e-6
_EPS = float(np.finfo(float).eps)
# a path that advances t by less than _STALL_PROGRESS * t0 over _STALL_WINDOW steps has stalled;
# so has one taking steps below _TINY_STEP * t0 next to a near-singular Hessian
_STALL_WINDOW = 100
_STALL_PROGRESS = 1e-9
_TINY_STEP = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for a single solve.

    ``t0_mode`` is ``"auto"`` (closed-form threshold for normal quartics, ball
    threshold otherwise), ``"ball"`` or ``"user"`` (uses ``t0``).
    ``stall_rcond`` defaults to ``sqrt(max(ode_rtol, ode_atol))``: how close
    the integrator creeps to a fold before stalling depends on the tolerance.
    """

    t0_mode: str = "auto"
    t0: float | None = None
    margin: float = cvx.DEFAULT_MARGIN
    L: float | None = None
    newton_tol: float = 1e-12
    newton_max_iters: int = 200
    ode_rtol: float = 1e-12
    ode_atol: float = 1e-12
    rcond_threshold: float = 1e-12
    stall_rcond: float | None = None
    max_steps: int = 200_000
    polish: bool = False
    invariant_check: bool = True
    trace_every: int | None = 1
    theta_samples: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.t0_mode not in ("auto", "ball", "user"):
            raise ValueError(f"unknown t0_mode {self.t0_mode!r}")
        if self.t0_mode == "user" and not (self.t0 is not None and self.t0 > 0):
            raise ValueError("t0_mode='user' needs a positive t0")
        for name in ("newton_tol", "ode_rtol", "ode_atol", "rcond_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.stall_rcond is not None and not self.stall_rcond > 0:
            raise ValueError("stall_rcond must be positive")
        if self.newton_max_iters < 1:
            raise ValueError("newton_max_iters must be >= 1")

    @property
    def stall_rcond_value(self) -> float:
        if self.stall_rcond is not None:
            return self.stall_rcond
        return math.sqrt(max(self.ode_rtol, self.ode_atol))

    @classmethod
    def batch_defaults(cls, **overrides) -> "SolverConfig":
        """Settings used for the random-instance statistics."""
        params = dict(ode_rtol=1e-8, ode_atol=1e-8, newton_tol=1e-10, trace_every=None)
        params.update(overrides)
        return cls(**params)


class NewtonFailure(RuntimeError):
    pass


def minimize_convexified(S: SteklovCoeffs, t0: float, cfg: SolverConfig = SolverConfig(),
                         x_start=None) -> np.ndarray:
    """Damped Newton on ``grad_x mu(., t0) = 0`` with a backtracking merit line search.

    Raises :class:`NewtonFailure` on the iteration cap and lets
    :class:`~stekopt.linalg.NearSingularError` through (t0 was not convexifying).
    """
    x = np.zeros(S.n) if x_start is None else np.array(x_start, dtype=float)
    g = steklov_grad_x(S, x, t0)
    merit = g @ g
    for _ in range(cfg.newton_max_iters):
        if np.abs(g).max() <= cfg.newton_tol:
            return x
        step = solve_sym(steklov_hess_x(S, x, t0), g, rcond_threshold=cfg.rcond_threshold).x
        if np.abs(step).max() <= 4 * np.finfo(float).eps * (1.0 + np.abs(x).max()):
            # roundoff floor: the residual cannot be reduced further in double precision
            return x - step
        alpha = 1.0
        for _ in range(31):
            x_new = x - alpha * step
            g_new = steklov_grad_x(S, x_new, t0)
            merit_new = g_new @ g_new
            if merit_new <= (1.0 - 2e-4 * alpha) * merit:
                break
            alpha *= 0.5
        x, g, merit = x_new, g_new, merit_new
    if np.abs(g).max() <= cfg.newton_tol:
        return x
    raise NewtonFailure(
        f"Newton did not reach |grad|_inf <= {cfg.newton_tol:g} in {cfg.newton_max_iters} iterations "
        f"(residual {np.abs(g).max():.3e})"
    )


class TrajectoryStatus(str, enum.Enum):
    REACHED_ZERO = "ReachedZero"
    NEAR_SINGULAR = "NearSingularHessian"
    STEP_FAILURE = "StepFailure"


@dataclass
class TrajectoryResult:
    t: np.ndarray
    x: np.ndarray
    status: TrajectoryStatus
    t_stop: float
    x_final: np.ndarray
    min_rcond: float
    message: str = ""
    n_steps: int = 0
    n_rhs: int = 0

    @property
    def samples(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.t.tolist(), self.x))


class _Abort(Exception):
    def __init__(self, status, t, x, message):
        self.status, self.t, self.x, self.message = status, t, x, message
        super().__init__(message)


def trajectory(S: SteklovCoeffs, x0, t0: float, cfg: SolverConfig = SolverConfig()) -> TrajectoryResult:
    """Integrate the stationary path from ``(x0, t0)`` down to ``t = 0``.

    The path is abandoned as ``NearSingularHessian`` when (a) a Hessian solve
    has rcond below ``cfg.rcond_threshold``, (b) the Hessian at an accepted
    step stops being positive definite after having been so (an eigenvalue
    crossed zero in between), or (c) the step controller stalls (step size
    underflow, or no progress in t over many steps) at a point whose Hessian
    rcond is below ``cfg.stall_rcond_value``.  Any other stall is a
    ``StepFailure``.

    With ``cfg.invariant_check`` each step must also keep the Newton distance
    back to ``grad_x mu = 0`` within the ODE tolerance.
    """
    x0 = np.array(x0, dtype=float)
    state = {"min_rcond": math.inf, "pd": is_positive_definite(steklov_hess_x(S, x0, t0)), "t_prev": t0}
    ts, xs = [float(t0)], [x0.copy()]

    memo = {"key": None, "fac": None}

    def factor(t, x):
        # the last stage, the defect and the step hook all land on the same point
        key = (t, x.tobytes())
        if memo["key"] != key:
            memo["key"], memo["fac"] = key, factor_sym(steklov_hess_x(S, x, t))
        return memo["fac"]

    def solve_at(t, x, b):
        try:
            sol = factor(t, x).solve(b, rcond_threshold=cfg.rcond_threshold)
        except NearSingularError as exc:
            state["min_rcond"] = min(state["min_rcond"], exc.rcond)
            raise _Abort(TrajectoryStatus.NEAR_SINGULAR, t, x,
                         f"Hessian near-singular at t={t:.6g} (rcond={exc.rcond:.2e})") from None
        state["min_rcond"] = min(state["min_rcond"], sol.rcond)
        return sol

    def rhs(t, x):
        return -solve_at(t, x, (t / 3.0) * S.q.gradient(x)).x

    def defect(t, x):
        # Newton displacement back to grad_x mu = 0: first-order global error of x(t);
        # rounding in the gradient is amplified by the condition number
        sol = solve_at(t, x, steklov_grad_x(S, x, t))
        return sol.x, 16.0 * _EPS * max(1.0, float(np.abs(x).max())) / sol.rcond

    def on_step(t, x):
        pd = factor(t, x).positive_definite
        if state["pd"] and not pd:
            raise _Abort(TrajectoryStatus.NEAR_SINGULAR, t, x,
                         f"Hessian became singular between t={state['t_prev']:.6g} and t={t:.6g} "
                         "(lost positive definiteness)")
        state["pd"] = pd
        state["t_prev"] = t
        ts.append(t)
        xs.append(x.copy())
        tiny = abs(ts[-2] - t) < _TINY_STEP * t0
        stuck = len(ts) > _STALL_WINDOW and abs(ts[-1 - _STALL_WINDOW] - t) < _STALL_PROGRESS * t0
        if not (tiny or stuck):
            return
        rc = _rcond_at(S, x, t)
        state["min_rcond"] = min(state["min_rcond"], rc)
        if rc < cfg.stall_rcond_value:
            raise _Abort(TrajectoryStatus.NEAR_SINGULAR, t, x,
                         f"integration stalled at t={t:.6g} with near-singular Hessian (rcond={rc:.2e})")
        if stuck:
            raise _Abort(TrajectoryStatus.STEP_FAILURE, t, x,
                         f"no progress over {_STALL_WINDOW} steps at t={t:.6g} (Hessian rcond={rc:.2e})")

    n_rhs = -1
    try:
        res = dopri5(rhs, t0, 0.0, x0, rtol=cfg.ode_rtol, atol=cfg.ode_atol,
                     max_steps=cfg.max_steps, on_step=on_step,
                     defect=defect if cfg.invariant_check else None)
    except _Abort as ab:
        status, t_stop, x_stop, msg = ab.status, ab.t, np.array(ab.x), ab.message
    except (StepSizeUnderflow, StepLimitExceeded) as exc:
        t_stop, x_stop = exc.t, np.array(exc.y)
        rc = _rcond_at(S, x_stop, t_stop)
        state["min_rcond"] = min(state["min_rcond"], rc)
        if rc < cfg.stall_rcond_value:
            status = TrajectoryStatus.NEAR_SINGULAR
            msg = f"integration stalled at t={t_stop:.6g} with near-singular Hessian (rcond={rc:.2e})"
        else:
            status = TrajectoryStatus.STEP_FAILURE
            msg = f"{exc} (Hessian rcond={rc:.2e})"
    else:
        status, t_stop, x_stop, msg = TrajectoryStatus.REACHED_ZERO, 0.0, res.y[-1].copy(), ""
        n_rhs = res.n_rhs
    n_steps = len(ts) - 1
    if status is not TrajectoryStatus.REACHED_ZERO and t_stop != ts[-1]:
        ts.append(float(t_stop))
        xs.append(x_stop.copy())
    t_arr, x_arr = _thin(np.array(ts), np.array(xs), cfg.trace_every)
    return TrajectoryResult(t_arr, x_arr, status, float(t_stop), x_stop, state["min_rcond"], msg, n_steps, n_rhs)


def _rcond_at(S, x, t) -> float:
    try:
        return solve_sym(steklov_hess_x(S, x, t), np.zeros(S.n), rcond_threshold=None).rcond
    except NearSingularError:
        return 0.0


def _thin(ts, xs, every):
    if every is None:
        keep = [0, len(ts) - 1] if len(ts) > 1 else [0]
    else:
        keep = list(range(0, len(ts), max(1, every)))
        if keep[-1] != len(ts) - 1:
            keep.append(len(ts) - 1)
    return ts[keep], xs[keep]


class EndpointCertificate(NamedTuple):
    grad_inf: float
    hessian_pd: bool
    eig_min: float


def certify_endpoint(f: Polynomial, x_star) -> EndpointCertificate:
    """Gradient infinity-norm and smallest Hessian eigenvalue at `x_star`."""
    grad_inf = float(np.abs(f.gradient(x_star)).max())
    eig_min = float(sym_eigvals(f.hessian(x_star))[0])
    return EndpointCertificate(grad_inf, eig_min > 0.0, eig_min)


def choose_t0(f: Polynomial, cfg: SolverConfig) -> cvx.ConvexifyPlan:
    """Pick the smoothing level according to ``cfg.t0_mode``."""
    if cfg.t0_mode == "user":
        return cvx.ConvexifyPlan(t0=cfg.t0, mode=cvx.PlanMode.USER, bound=math.nan)
    normal = f.to_normal()
    if cfg.t0_mode == "auto" and normal is not None:
        return cvx.t0_normal(normal, cfg.margin)
    info = cvx.classify_C(f)
    L = cfg.L
    if L is None:
        if normal is None:
            raise ValueError("the ball threshold needs a radius L for a general quartic")
        L = math.sqrt(f.n) * cvx.ball_radius_normal(normal)[0]
    theta = cvx.theta_L_estimate(normal if normal is not None else f, L,
                                 num_samples=cfg.theta_samples, rng=cfg.seed)
    return cvx.t0_ball(theta.value, info.lambda_min_C, cfg.margin, L=L, theta_guaranteed=theta.guaranteed)


@dataclass
class SolveReport:
    x_star: list | None
    f_star: float | None
    grad_inf: float | None
    hessian_pd: bool | None
    eig_min: float | None
    t0_used: float | None
    t0_bound: float | None
    x0: list | None
    status: str
    reason: str
    trajectory_status: str | None
    t_stop: float | None
    wall_time: float
    trajectory: TrajectoryResult | None = field(default=None, repr=False, compare=False)

    @property
    def success(self) -> bool:
        return self.status == "Success"

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("trajectory")
        return d


def _failure(reason, t0=None, bound=None, x0=None, start=None, **extra) -> SolveReport:
    base = dict(x_star=None, f_star=None, grad_inf=None, hessian_pd=None, eig_min=None,
                t0_used=t0, t0_bound=bound, x0=None if x0 is None else np.asarray(x0).tolist(),
                status="Failure", reason=reason, trajectory_status=None, t_stop=None,
                wall_time=time.perf_counter() - start)
    base.update(extra)
    return SolveReport(**base)


def _polish(f: Polynomial, x, steps=5):
    for _ in range(steps):
        g = f.gradient(x)
        if np.abs(g).max() == 0.0:
            break
        try:
            x = x - solve_sym(f.hessian(x), g, rcond_threshold=1e-14).x
        except NearSingularError:
            break
    return x


def run_algorithm1(f: Polynomial, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Full pipeline: pick t0, minimize the smoothed function, track the path to t = 0, certify."""
    start = time.perf_counter()
    if cfg.t0_mode != "user":
        info = cvx.classify_C(f)
        if info.classification is not cvx.Classification.POSITIVE_DEFINITE:
            return _failure(f"refused: C is {info.classification.value} ({info.note})", start=start)
    try:
        plan = choose_t0(f, cfg)
    except (ValueError, cvx.BallBoundInapplicable) as exc:
        return _failure(f"t0 selection failed: {exc}", start=start)
    t0 = plan.t0
    bound = None if math.isnan(plan.bound) else plan.bound
    S = steklov_build(f)
    try:
        x0 = minimize_convexified(S, t0, cfg)
    except NearSingularError as exc:
        return _failure(f"newton: near-singular smoothed Hessian at t0 (rcond={exc.rcond:.2e}); "
                        "t0 is probably not convexifying", t0, bound, start=start)
    except NewtonFailure as exc:
        return _failure(f"newton: {exc}", t0, bound, start=start)
    traj = trajectory(S, x0, t0, cfg)
    x_star = traj.x_final
    if cfg.polish and traj.status is TrajectoryStatus.REACHED_ZERO:
        x_star = _polish(f, x_star)
    cert = certify_endpoint(f, x_star)
    if traj.status is not TrajectoryStatus.REACHED_ZERO:
        status, reason = "Failure", f"trajectory: {traj.status.value}: {traj.message}"
    elif not cert.grad_inf <= FAILURE_GRAD_TOL:
        status, reason = "Failure", f"endpoint gradient {cert.grad_inf:.3e} exceeds {FAILURE_GRAD_TOL:g}"
    else:
        status, reason = "Success", ""
    return SolveReport(
        x_star=x_star.tolist(), f_star=f.evaluate(x_star), grad_inf=cert.grad_inf,
        hessian_pd=cert.hessian_pd, eig_min=cert.eig_min, t0_used=t0, t0_bound=bound,
        x0=x0.tolist(), status=status, reason=reason, trajectory_status=traj.status.value,
        t_stop=traj.t_stop, wall_time=time.perf_counter() - start, trajectory=traj,
    )


def write_trace_csv(traj: TrajectoryResult, path) -> None:
    """Write ``t,x1,...,xn`` rows at 17 significant digits."""
    n = traj.x.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)])
        for t, x in zip(traj.t, traj.x):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in x])
