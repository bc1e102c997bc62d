"""Failure rates of the method on random normal quartics.

Each instance has a_i in [1, 2], cross terms of B drawn from I_B, and the
linear term in [-1, 1].  A run counts as a failure when the endpoint is
not a stationary point to 1e-6.  Pass a worker count as the first argument.
"""
import sys

from stekopt import batch_run, emit_report

jobs = int(sys.argv[1]) if len(sys.argv) > 1 else 1
cells = [(2, (-0.1, 0.1)), (2, (-1.0, 1.0)), (5, (-1.0, 1.0)), (5, (-5.0, 5.0))]
stats = [batch_run(n, ib, 500, seed=2024, jobs=jobs) for n, ib in cells]
print(emit_report(stats, "csv"), end="")
for s in stats:
    if s.seeds_of_failures:
        print(f"n={s.n} I_B={s.interval_IB}: replay with "
              f"`stekopt solve --seed-instance {s.seeds_of_failures[0]} --random-n {s.n} --ib={s.interval_IB[0]},{s.interval_IB[1]}`")
