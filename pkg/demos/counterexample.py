"""A quartic on which path tracking breaks down.

Along the trajectory the Hessian of the smoothed function loses positive
definiteness: the path reaches a fold and cannot be continued.  The solver
reports the smoothing level where this happened instead of returning a
wrong answer.
"""
from stekopt import SolverConfig, builtin_problem, run_algorithm1

spec = builtin_problem("counterexample")
print(f"f = {spec.polynomial}")
for tol in (1e-12, 1e-8):
    cfg = SolverConfig(t0_mode="user", t0=spec.t0_hint, ode_rtol=tol, ode_atol=tol)
    rep = run_algorithm1(spec.polynomial, cfg)
    print(f"\ntolerance {tol:g}: {rep.status} / {rep.trajectory_status}")
    print(f"  stopped at t = {rep.t_stop:.6f}")
    print(f"  reason: {rep.reason}")
