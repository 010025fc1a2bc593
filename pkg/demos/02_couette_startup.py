"""Start-up Couette flow: the top plate starts moving at t = 0.

The fluid between a resting bottom plate and the moving top plate develops
from rest toward the linear profile u_x = u0 y / H.  Profiles at several times
are compared with the Fourier-series solution.

Run:  python demos/02_couette_startup.py
"""
import numpy as np

from bgkfd.cases import CouetteConfig, run_couette

cfg = CouetteConfig(nx=20, ny=40, Re=10.0, u0=0.1)
print(f"Re = {cfg.Re}, nu = {cfg.nu}, tau = {cfg.tau:.4f}, grid {cfg.nx}x{cfg.ny}")

report = run_couette(cfg)
y = report.y
for t, num, ana in report.profiles["proposed"]:
    print(f"\nt = {t:g}   max |u_num - u_exact| / u0 = {np.abs(num - ana).max() / cfg.u0:.2e}")
    print("    y      u_num/u0   u_exact/u0")
    for k in range(0, len(y), 6):
        print(f"  {y[k]:.3f}   {num[k] / cfg.u0:9.5f}   {ana[k] / cfg.u0:9.5f}")

print("\naverage error history:")
for t, e in report.error_history["proposed"]:
    print(f"  t = {t:5g}   {e:.4e}")
