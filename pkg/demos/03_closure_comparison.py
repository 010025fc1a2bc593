"""Wall closures on coarse grids: proposed vs. non-equilibrium extrapolation.

The proposed closure estimates the wall's non-equilibrium populations from
derivatives of the wall equilibrium; the extrapolation ("guo") closure copies
them from the neighbouring fluid node.  The difference matters most on coarse
grids, where the neighbour is far from the wall.

Run:  python demos/03_closure_comparison.py
"""
from bgkfd.cases import CouetteConfig, run_couette

times = (0.5, 1.0, 2.0, 5.0)
print("average error of the Couette start-up at t =", times)
print(f"{'grid':>7} {'closure':>13}  " + "  ".join(f"{t:>9g}" for t in times))
for nx, ny in ((5, 10), (10, 20), (20, 40)):
    cfg = CouetteConfig(nx=nx, ny=ny, sample_times=times)
    rep = run_couette(cfg, closures=("proposed", "guo", "higher_order"))
    for closure, hist in rep.error_history.items():
        print(f"{nx:>3}x{ny:<3} {closure:>13}  " + "  ".join(f"{e:9.3e}" for _, e in hist))
