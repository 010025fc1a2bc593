"""Observed order of accuracy of the Couette start-up at t = 1.

Errors are measured with the node-mean relative error against the series
solution; the order is the least-squares slope of log(error) vs log(h).

Run:  python demos/04_grid_convergence.py
"""
import numpy as np

from bgkfd.cases import CouetteConfig, average_error, convergence_order, couette_exact_field, couette_params
from bgkfd.stepper import StopRule, run_until

t_end = 1.0
for closure in ("proposed", "guo"):
    rows = []
    for nx, ny in ((10, 20), (20, 40), (40, 80)):
        cfg = CouetteConfig(nx=nx, ny=ny, closure=closure)
        grid, params, boundary, state = couette_params(cfg)
        s = run_until(state, params, boundary, StopRule("time", t_end=t_end)).state
        exact = couette_exact_field(cfg, grid, s.time)
        e = average_error(s.u, exact, floor=1e-12 * cfg.u0)
        rows.append((grid.dy, e, np.abs(s.u[0] - exact[0]).max() / cfg.u0))
    print(f"\n{closure}:")
    print("        h    average error   max error/u0")
    for h, e, m in rows:
        print(f"  {h:.5f}     {e:.4e}     {m:.3e}")
    print("  fitted order:", round(convergence_order([r[:2] for r in rows]), 3))
