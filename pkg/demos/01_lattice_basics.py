"""The D2Q9 lattice, its equilibrium and the auxiliary distribution.

Run:  python demos/01_lattice_basics.py
"""
import numpy as np

from bgkfd.lattice import D2Q9, SchemeParams, equilibrium, f_from_g, g_from_f, moments

# Nine velocities: rest, four axis neighbours, four diagonals.
print("velocities:\n", D2Q9.velocities)
print("weights:", D2Q9.weights)

# The identities that make the lattice recover Navier-Stokes: weights sum to
# one, odd moments vanish, the second moment is isotropic with c_s^2 = 1/3.
w, e = D2Q9.weights, D2Q9.velocities
print("sum w        =", w.sum())
print("sum w e      =", w @ e)
print("sum w e e^T  =\n", np.einsum("i,ia,ib->ab", w, e, e), " (c_s^2 =", D2Q9.cs2, ")")

# Equilibrium populations for a moving fluid parcel reproduce its moments.
rho, u = 1.02, np.array([0.08, -0.03])
feq = equilibrium(rho, u)
m = moments(feq)
print(f"\nequilibrium at rho={rho}, u={u}:\n", feq)
print("recovered rho, u:", m.rho, m.u)

# The implicit collision term is removed by working with
#   g = f + pi*theta*(f - feq),  pi = dt/tau.
# The map is exactly invertible.
params = SchemeParams(tau=0.03, dt=0.0025)
f = feq * (1 + 0.01 * np.random.default_rng(1).standard_normal(9))
g = g_from_f(f, feq, params)
print("\npi =", params.pi_ratio, " theta =", params.theta)
print("max |f - f_from_g(g_from_f(f))| =", np.abs(f - f_from_g(g, feq, params)).max())
