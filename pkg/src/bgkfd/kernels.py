"""Compiled loops for the interior update.

These compute exactly what the array code in :mod:`bgkfd.stepper` computes
(reconstruction of ``f``, blended advection, ``g`` update, moments, new
equilibria) and are checked against it in the test suite.  Loops are laid
out so the innermost index is the contiguous y axis.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _axis_advection(f, out, e, axis, delta, zeta, periodic):
    """Accumulate ``e * d f / d axis`` into ``out`` at the interior nodes of ``axis``."""
    nx, ny = f.shape
    n = nx if axis == 0 else ny
    m = n - 1
    inv = 1.0 / (2.0 * delta)
    s = 1 if e >= 0 else -1
    k0 = 0 if periodic else 1
    for k in range(k0, n - 1):
        km = k - 1
        kp = k + 1
        k2 = k - 2 * s
        if periodic:
            km = km % m
            kp = kp % m
            k2 = k2 % m
            has_up = True
        else:
            # second upwind sample outside the domain: central only
            has_up = 0 <= k2 <= n - 1
        k1 = km if s > 0 else kp
        if axis == 0:
            for y in range(ny):
                cen = (f[kp, y] - f[km, y]) * inv
                up = s * (3.0 * f[k, y] - 4.0 * f[k1, y] + f[k2, y]) * inv if has_up else cen
                out[k, y] += e * (zeta * cen + (1.0 - zeta) * up)
        else:
            for x in range(nx):
                cen = (f[x, kp] - f[x, km]) * inv
                up = s * (3.0 * f[x, k] - 4.0 * f[x, k1] + f[x, k2]) * inv if has_up else cen
                out[x, k] += e * (zeta * cen + (1.0 - zeta) * up)


@njit(cache=True)
def _row_derivative(row, k, n, s, inv, zeta, periodic):
    """Blended derivative at index ``k`` of a 1-D row (general case, with wrap)."""
    m = n - 1
    km = k - 1
    kp = k + 1
    k2 = k - 2 * s
    if periodic:
        km = km % m
        kp = kp % m
        k2 = k2 % m
    cen = (row[kp] - row[km]) * inv
    if not periodic and (k2 < 0 or k2 > n - 1):
        return cen
    k1 = km if s > 0 else kp
    up = s * (3.0 * row[k] - 4.0 * row[k1] + row[k2]) * inv
    return zeta * cen + (1.0 - zeta) * up


@njit(cache=True)
def _y_advection(f, out, e, delta, zeta, periodic):
    """Accumulate ``e * d f / dy`` row by row; the bulk loop has fixed offsets."""
    nx, ny = f.shape
    inv = 1.0 / (2.0 * delta)
    s = 1 if e >= 0 else -1
    c = 1.0 - zeta
    k0 = 0 if periodic else 1
    lo = min(2, ny - 1)
    hi = max(ny - 3, lo)
    for x in range(nx):
        row = f[x]
        o = out[x]
        for k in range(k0, lo):
            o[k] += e * _row_derivative(row, k, ny, s, inv, zeta, periodic)
        if s > 0:
            for k in range(lo, hi):
                cen = (row[k + 1] - row[k - 1]) * inv
                up = (3.0 * row[k] - 4.0 * row[k - 1] + row[k - 2]) * inv
                o[k] += e * (zeta * cen + c * up)
        else:
            for k in range(lo, hi):
                cen = (row[k + 1] - row[k - 1]) * inv
                up = -(3.0 * row[k] - 4.0 * row[k + 1] + row[k + 2]) * inv
                o[k] += e * (zeta * cen + c * up)
        for k in range(hi, ny - 1):
            o[k] += e * _row_derivative(row, k, ny, s, inv, zeta, periodic)


@njit(cache=True)
def interior_step(g, feq, ex, ey, w, cs2, dt, pi, theta, zeta, dx, dy, px, py, g_out, rho, u, feq_out):
    """Advance interior nodes; writes ``g_out``, ``rho``, ``u`` and ``feq_out`` there.

    On a periodic axis the seam copy (last index) is left untouched.
    """
    q, nx, ny = g.shape
    a = pi * theta
    c_f = 1.0 - pi + a
    c_eq = pi - a
    inv_a = 1.0 / (1.0 + a)
    x0 = 0 if px else 1
    y0 = 0 if py else 1
    f = np.empty_like(g)
    for i in range(q):
        for x in range(nx):
            for y in range(ny):
                f[i, x, y] = (g[i, x, y] + a * feq[i, x, y]) * inv_a
    adv = np.empty((nx, ny))
    for i in range(q):
        adv[:, :] = 0.0
        if ex[i] != 0.0:
            _axis_advection(f[i], adv, ex[i], 0, dx, zeta, px)
        if ey[i] != 0.0:
            _y_advection(f[i], adv, ey[i], dy, zeta, py)
        for x in range(x0, nx - 1):
            for y in range(y0, ny - 1):
                g_out[i, x, y] = -dt * adv[x, y] + c_f * f[i, x, y] + c_eq * feq[i, x, y]
    # moments and equilibria one x-row at a time, contiguous along y
    inv_cs2 = 1.0 / cs2
    r = np.empty(ny)
    ux = np.empty(ny)
    uy = np.empty(ny)
    base = np.empty(ny)
    for x in range(x0, nx - 1):
        r[:] = 0.0
        ux[:] = 0.0
        uy[:] = 0.0
        for i in range(q):
            for y in range(y0, ny - 1):
                gi = g_out[i, x, y]
                r[y] += gi
                ux[y] += ex[i] * gi
                uy[y] += ey[i] * gi
        for y in range(y0, ny - 1):
            ux[y] = ux[y] / r[y]
            uy[y] = uy[y] / r[y]
            rho[x, y] = r[y]
            u[0, x, y] = ux[y]
            u[1, x, y] = uy[y]
            base[y] = 1.0 - 0.5 * (ux[y] * ux[y] + uy[y] * uy[y]) * inv_cs2
        for i in range(q):
            for y in range(y0, ny - 1):
                eu = (ex[i] * ux[y] + ey[i] * uy[y]) * inv_cs2
                feq_out[i, x, y] = r[y] * w[i] * (base[y] + eu + 0.5 * eu * eu)


@njit(cache=True)
def _dmix(f, i, x, y, axis, e, delta, zeta, n, periodic):
    """Blended derivative of population ``i`` at one node along ``axis``."""
    k = x if axis == 0 else y
    m = n - 1
    km = (k - 1) % m if periodic else k - 1
    kp = (k + 1) % m if periodic else k + 1
    if axis == 0:
        fm, fp = f[i, km, y], f[i, kp, y]
    else:
        fm, fp = f[i, x, km], f[i, x, kp]
    cen = (fp - fm) / (2.0 * delta)
    s = 1 if e >= 0 else -1
    k2 = k - 2 * s
    if not periodic and (k2 < 0 or k2 > n - 1):
        return cen
    if periodic:
        k2 = k2 % m
    f2 = f[i, k2, y] if axis == 0 else f[i, x, k2]
    f1 = fm if s > 0 else fp
    up = s * (3.0 * f[i, x, y] - 4.0 * f1 + f2) / (2.0 * delta)
    return zeta * cen + (1.0 - zeta) * up


@njit(cache=True)
def mixed_gradient_at(f, xs, ys, ex, ey, dx, dy, zeta, px, py):
    """Blended ``(df/dx, df/dy)`` of every population at the listed interior nodes."""
    q, nx, ny = f.shape
    m = xs.shape[0]
    gx = np.empty((q, m))
    gy = np.empty((q, m))
    for j in range(m):
        for i in range(q):
            gx[i, j] = _dmix(f, i, xs[j], ys[j], 0, ex[i], dx, zeta, nx, px)
            gy[i, j] = _dmix(f, i, xs[j], ys[j], 1, ey[i], dy, zeta, ny, py)
    return gx, gy
