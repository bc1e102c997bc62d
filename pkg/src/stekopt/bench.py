"""Built-in test problems, random normal quartics and batch statistics.

Problem data (coefficients, printed minimizers and values) are transcribed
from the published experiments; ``known_source`` says where each number came
from.  Random instances draw

    a_i ~ U[1, 2],  b_ii ~ U[-1, 1],  b_ij ~ U(I_B) for i < j,  d_i ~ U[-1, 1]

from numpy's PCG64 generator, in exactly that order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .poly import MonomialPoly, NormalQuartic, Polynomial
from .solve import SolveReport, SolverConfig, certify_endpoint, run_algorithm1

__all__ = [
    "ProblemSpec",
    "BatchStats",
    "UnknownProblemError",
    "QING_TABLE",
    "PROBLEM_NAMES",
    "builtin_problem",
    "run_problem",
    "instance_seed",
    "random_normal",
    "batch_run",
    "emit_report",
    "BATCH_CSV_HEADER",
]


class UnknownProblemError(KeyError):
    def __str__(self):
        return f"unknown problem {self.args[0]!r}; known: {', '.join(PROBLEM_NAMES)}"


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    name: str
    polynomial: Polynomial
    known_value: float | None = None
    known_source: str = ""
    known_point: np.ndarray | None = None
    t0_hint: float | None = None
    alt_value: float | None = None
    alt_point: np.ndarray | None = None
    stationary_points: tuple = ()
    notes: str = ""

    def __post_init__(self):
        if self.known_value is not None and self.known_point is not None:
            gap = abs(self.polynomial.evaluate(self.known_point) - self.known_value)
            if gap > 1e-6:
                raise ValueError(f"{self.name}: known point evaluates {gap:.2e} away from known value")


# n -> (t0, f*) as printed for the modified Qing family
QING_TABLE = {
    3: (1.761, -5.274573029462e0),
    5: (2.354, -2.425189606694e1),
    10: (3.283, -1.937676325137e2),
    50: (7.196, -2.434927308593e4),
    100: (10.13, -1.951017166604e5),
    500: (22.50, -2.442736975195e7),
    1000: (31.78, -1.954665241231e8),
    2000: (44.90, -1.563932649564e9),
    5000: (70.93, -2.443840227592e10),
}

_F1_POINTS = (
    (-1.128494496206, -1.477960288995),
    (1.088972069872, 1.442265902284),
    (0.792628798894, -1.398008585572),
    (-0.888779137505, 1.352613115554),
    (0.044197271094, 0.033651793151),
)

_F2_POINTS = (
    (-1.231880992829, -1.542141914625, -1.815208552194),
    (1.200891943571, 1.520648288507, 1.799146668019),
    (-1.061403679498, 1.252794736408, -1.734795374831),
    (1.011826545657, -1.292021024871, 1.715303007762),
    (-1.003166837343, -1.398250342156, 1.647600096313),
    (0.943957956849, 1.367695525599, -1.669626761827),
    (1.094178773491, -0.229820026863, 1.748687472905),
    (0.382758186693, 0.143935301337, -1.724978996067),
    (-0.246629494866, -0.103884348800, 1.713187106741),
    (-1.117077740844, -1.465384771470, 0.168916876633),
    (1.079895855992, 1.442371632342, -0.131218726998),
    (0.804174488540, -1.388617599449, 0.050802887760),
    (0.313255479037, -1.409450159727, 0.080787110272),
    (-0.889314043601, 1.359163492610, -0.010741630991),
    (-0.190950603913, 1.390428579020, -0.053353507188),
    (-1.009359542642, 0.107877288339, 0.069364378484),
    (0.965079959377, -0.056352609214, -0.036358449952),
    (0.044327774003, 0.019995236114, 0.012915209173),
)

_Q6 = {
    "q61": dict(
        a=[9, 2, 6, 4, 8, 7],
        B=[[4, 4, 9, 3, 4, 1], [4, 3, 7, 9, 9, 2], [9, 7, 4, 7, 6, 6],
           [3, 9, 7, 4, 2, 6], [4, 9, 6, 2, 8, 3], [1, 2, 6, 6, 3, 5]],
        d=[2, 6, 5, 0, 0, 2],
        t0=1.540,
        x=[0.545218813388, -1.464410189792, -0.720606654276, 1.178144265592, 0.794065108243, -0.465794119448],
        f=-28.94281730403047,
    ),
    "q62": dict(
        a=[4, 1, 8, 4, 6, 7],
        B=[[4, 0, 0, 3, 0, 3], [0, 0, 0, 6, 6, 0], [0, 0, 5, 0, 3, 6],
           [3, 6, 0, 4, 4, 3], [0, 6, 3, 4, 4, 5], [3, 0, 6, 3, 5, 2]],
        d=[8, 7, 7, 8, 6, 2],
        t0=1.940,
        x=[-0.654664171603, -1.869516007115, -0.368135071982, 0.819086646324, 0.775622316964, -0.531322790207],
        f=-23.0056478266632,
    ),
    "q63": dict(
        a=[9, 7, 1, 4, 9, 9],
        B=[[8, 0, 1, 3, 9, 9], [0, 0, 9, 5, 2, 6], [1, 9, 4, 1, 1, 8],
           [3, 5, 1, 0, 8, 0], [9, 2, 1, 8, 2, 1], [9, 6, 8, 0, 1, 8]],
        d=[5, 8, 6, 9, 9, 0],
        t0=2.271,
        x=[-0.677847258779, 0.915757213506, -1.676567471092, -1.129390429402, 0.769478574815, 0.740933617859],
        f=-31.78036928464823,
        alt_f=-16.27241852,
        notes="an earlier report gives a worse local minimizer with value -16.27241852",
    ),
    "q64": dict(
        a=[1, 2, 1, 6, 2, 1],
        B=[[4, 1, 4, 2, 4, 4], [1, 1, 4, 0, 1, 7], [4, 4, 4, 6, 6, 7],
           [2, 0, 6, 6, 7, 9], [4, 1, 6, 7, 3, 0], [4, 7, 7, 9, 0, 3]],
        d=[8, 7, 6, 4, 7, 6],
        t0=2.340,
        x=[0.707423237483, 1.239514850400, 1.260381219594, 1.082078205488, -1.644024006236, -2.351712409938],
        f=-60.614291716400,
        alt_f=-70.87818171,
        alt_x=[-1.350391459, -1.483150332, -1.369006772, -1.10594118, 1.54353024, 2.33088412],
        notes="the trajectory ends at a local minimizer; a better one with value -70.87818171 is known",
    ),
}

PROBLEM_NAMES = ("f1", "f2", "qing:N", "q61", "q62", "q63", "q64", "counterexample", "rosenbrock:N")


def _qing(n: int, d_last=None) -> NormalQuartic:
    """``sum (x_i^2 - i)^2 - 0.7 sum_{i<j} x_i x_j + 0.2 sum x_i``."""
    i = np.arange(1, n + 1, dtype=float)
    B = np.full((n, n), -0.35)
    np.fill_diagonal(B, -2.0 * i)
    d = np.full(n, 0.2)
    if d_last is not None:
        d[-1] = d_last
    return NormalQuartic(np.ones(n), B, d, float(np.sum(i * i)))


def _rosenbrock(n: int) -> MonomialPoly:
    """``sum_{i<n} (1 - x_i)^2 + 100 (x_{i+1} - x_i^2)^2`` expanded into monomials."""
    rows = []

    def e(**powers):
        v = [0] * n
        for k, p in powers.items():
            v[int(k[1:])] += p
        return v

    for i in range(n - 1):
        j = i + 1
        rows += [
            (1.0, [0] * n),
            (-2.0, e(**{f"x{i}": 1})),
            (1.0, e(**{f"x{i}": 2})),
            (100.0, e(**{f"x{j}": 2})),
            (-200.0, e(**{f"x{i}": 2, f"x{j}": 1})),
            (100.0, e(**{f"x{i}": 4})),
        ]
    return MonomialPoly.from_terms(n, rows)


def _parse_size(name: str, prefix: str) -> int:
    try:
        n = int(name[len(prefix):])
    except ValueError:
        raise UnknownProblemError(name) from None
    if n < 2:
        raise ValueError(f"{name}: dimension must be >= 2")
    return n


def builtin_problem(name: str) -> ProblemSpec:
    """Look up a built-in problem; parametric families are ``qing:N`` and ``rosenbrock:N``."""
    key = name.strip().lower()
    if key == "f1":
        f = _qing(2, d_last=0.3)
        return ProblemSpec(
            "f1", f, known_value=-1.727802817222, known_source="stationary point table, global row",
            known_point=np.array(_F1_POINTS[0]), t0_hint=math.sqrt(2.1),
            stationary_points=tuple(np.array(p) for p in _F1_POINTS),
            notes="four local minima and one local maximum",
        )
    if key == "f2":
        spec = builtin_problem("qing:3")
        return ProblemSpec("f2", spec.polynomial, spec.known_value, spec.known_source,
                           spec.known_point, spec.t0_hint,
                           stationary_points=tuple(np.array(p) for p in _F2_POINTS))
    if key.startswith("qing:"):
        n = _parse_size(key, "qing:")
        f = _qing(n)
        t0_hint = None
        known = point = None
        source = ""
        if n == 3:
            t0_hint = math.sqrt(3.1)
            known, point = -5.274573029462, np.array(_F2_POINTS[0])
            source = "stationary point table for n = 3, global row"
        elif n in QING_TABLE:
            known = QING_TABLE[n][1]
            source = "qing performance table (13 significant digits)"
        return ProblemSpec(f"qing:{n}", f, known_value=known, known_source=source,
                           known_point=point, t0_hint=t0_hint)
    if key in _Q6:
        r = _Q6[key]
        f = NormalQuartic(r["a"], r["B"], r["d"])
        alt_x = r.get("alt_x")
        return ProblemSpec(
            key, f, known_value=r["f"], known_source="six-variable test set, trajectory result",
            known_point=np.array(r["x"]), t0_hint=r["t0"], alt_value=r.get("alt_f"),
            alt_point=None if alt_x is None else np.array(alt_x), notes=r.get("notes", ""),
        )
    if key == "counterexample":
        f = NormalQuartic([1.05, 1.96], [[-0.670, -0.442], [-0.442, -0.436]], [0.08911, -0.2315])
        return ProblemSpec("counterexample", f, t0_hint=0.694,
                           notes="the smoothed Hessian turns singular near t = 0.6271 along the path")
    if key.startswith("rosenbrock:"):
        n = _parse_size(key, "rosenbrock:")
        return ProblemSpec(f"rosenbrock:{n}", _rosenbrock(n), known_value=0.0,
                           known_source="closed form", known_point=np.ones(n),
                           notes="C is singular: N(C) is spanned by the last coordinate")
    raise UnknownProblemError(name)


def run_problem(spec: ProblemSpec, cfg: SolverConfig | None = None) -> SolveReport:
    """Solve a built-in problem, using its ``t0_hint`` unless `cfg` picks t0 itself.

    With a hint the report still carries the closed-form bound when f is normal.
    """
    cfg = cfg or SolverConfig()
    if spec.t0_hint is None or cfg.t0_mode != "auto":
        return run_algorithm1(spec.polynomial, cfg)
    params = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    params.update(t0_mode="user", t0=spec.t0_hint)
    report = run_algorithm1(spec.polynomial, SolverConfig(**params))
    normal = spec.polynomial.to_normal()
    if normal is not None:
        from .convexify import t0_normal

        report.t0_bound = t0_normal(normal, 0.0 if cfg.margin <= 0 else cfg.margin).bound
    return report


# ---------------------------------------------------------------- random batches

def instance_seed(batch_seed: int, index: int) -> int:
    """64-bit seed of instance `index` in a batch; replay with ``random_normal(n, ib, seed)``."""
    return int(np.random.SeedSequence([batch_seed, index]).generate_state(1, np.uint64)[0])


def random_normal(n: int, interval_IB, seed) -> NormalQuartic:
    if n < 2:
        raise ValueError("n must be >= 2")
    lo, hi = map(float, interval_IB)
    if lo > hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    a = rng.uniform(1.0, 2.0, n)
    B = np.diag(rng.uniform(-1.0, 1.0, n))
    iu = np.triu_indices(n, 1)
    B[iu] = rng.uniform(lo, hi, iu[0].size)
    B.T[iu] = B[iu]
    d = rng.uniform(-1.0, 1.0, n)
    return NormalQuartic(a, B, d)


@dataclass
class BatchStats:
    n: int
    interval_IB: tuple[float, float]
    count: int
    failures: int
    failure_rate: float
    seeds_of_failures: list[int] = field(default_factory=list)
    mean_wall_time: float = 0.0
    batch_seed: int | None = None
    nonpd_successes: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interval_IB"] = list(self.interval_IB)
        return d


def _run_chunk(args):
    n, ib, batch_seed, indices, cfg = args
    out = []
    for i in indices:
        s = instance_seed(batch_seed, i)
        f = random_normal(n, ib, s)
        rep = run_algorithm1(f, cfg)
        pd = rep.success and certify_endpoint(f, np.array(rep.x_star)).hessian_pd
        out.append((i, s, rep.success, rep.wall_time, rep.success and not pd))
    return out


def batch_run(n: int, interval_IB, count: int, seed: int, cfg: SolverConfig | None = None,
              jobs: int = 1) -> BatchStats:
    """Solve `count` random instances and tally failures.

    A failure is any non-Success report, i.e. the path did not reach t = 0 or
    ``|grad f(x(0))|_inf > 1e-6``.  Successes whose endpoint Hessian is not
    positive definite are counted separately in ``nonpd_successes``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    cfg = cfg or SolverConfig.batch_defaults()
    ib = (float(interval_IB[0]), float(interval_IB[1]))
    idx = list(range(count))
    if jobs == 1:
        rows = _run_chunk((n, ib, seed, idx, cfg))
    else:
        nchunks = min(count, 4 * jobs)
        chunks = [idx[k::nchunks] for k in range(nchunks)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = [r for part in pool.map(_run_chunk, [(n, ib, seed, c, cfg) for c in chunks]) for r in part]
    rows.sort()
    failed = [s for _, s, ok, _, _ in rows if not ok]
    return BatchStats(
        n=n, interval_IB=ib, count=count, failures=len(failed), failure_rate=len(failed) / count,
        seeds_of_failures=failed, mean_wall_time=float(np.mean([r[3] for r in rows])),
        batch_seed=seed, nonpd_successes=sum(r[4] for r in rows),
    )


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("STEKLOV_JOBS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------- reports

BATCH_CSV_HEADER = ["n", "ib_lo", "ib_hi", "count", "failures", "rate", "mean_time"]
_REPORT_CSV_HEADER = ["status", "f_star", "grad_inf", "hessian_pd", "eig_min", "t0_used", "t0_bound",
                      "trajectory_status", "t_stop", "wall_time", "x_star", "reason"]


def _as_dict(item) -> dict:
    if isinstance(item, (BatchStats, SolveReport)):
        return item.to_dict()
    raise TypeError(f"cannot report a {type(item).__name__}")


def emit_report(items, fmt: str = "csv") -> str:
    """Render BatchStats or SolveReports (one object or a list) as CSV or JSON text.

    JSON floats are written with ``repr`` precision, so parsing gives back
    bit-identical numbers.  An empty list gives a header-only batch CSV.
    """
    single = isinstance(items, (BatchStats, SolveReport))
    seq = [items] if single else list(items)
    if fmt == "json":
        payload = _as_dict(seq[0]) if single else [_as_dict(x) for x in seq]
        return json.dumps(payload, indent=2, allow_nan=True) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if not seq or isinstance(seq[0], BatchStats):
        w.writerow(BATCH_CSV_HEADER)
        for s in seq:
            w.writerow([s.n, repr(s.interval_IB[0]), repr(s.interval_IB[1]), s.count, s.failures,
                        f"{s.failure_rate:.6g}", f"{s.mean_wall_time:.6g}"])
    else:
        w.writerow(_REPORT_CSV_HEADER)
        for r in seq:
            d = _as_dict(r)
            d["x_star"] = "" if d["x_star"] is None else " ".join(repr(v) for v in d["x_star"])
            w.writerow(["" if d[k] is None else d[k] for k in _REPORT_CSV_HEADER])
    return buf.getvalue()
