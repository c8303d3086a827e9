"""How big does the log need to be? Closed-form bound vs simulation.

For a few (MAC rate, link rate, branch rate) points, print the
closed-form bound, the stall-aware estimate and the smallest cf_size at
which a simulated CARAMEL run shows no T4 wait. Link latency and TCB
dispatch cost are zeroed so only the throughput terms matter.

    python demos/log_sizing.py
"""

from cfaudit.sim.sizing import (SizingParams, contention_threshold, min_contention_free_log_size,
                                stall_aware_log_size)

POINTS = [(8000, 11520, 50), (8000, 11520, 400), (14000, 11520, 1200), (8000, 960, 100),
          (2000, 960, 1000)]

print(f"{'M':>6} {'B':>6} {'b':>6} {'R*l':>6} {'formula':>9} {'stall':>6} {'sim':>6}")
for M, B, b in POINTS:
    p = SizingParams(M, B, b)
    print(f"{M:6} {B:6} {b:6} {p.R * p.l:6.2f} {min_contention_free_log_size(p)!s:>9} "
          f"{stall_aware_log_size(p)!s:>6} {contention_threshold(p)!s:>6}")
