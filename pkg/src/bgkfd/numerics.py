"""Finite-difference operators on a vertex-centred structured grid.

Scalar operators (``central_diff`` and friends) act on individual samples and
are used for verification.  The array operators act on fields of shape
``(q, nx, ny)``: axis 1 is x, axis 2 is y.

Periodic axes store the seam twice (node 0 and node N-1 are the same point),
so stencils wrap over the N-1 distinct nodes.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .lattice import D2Q9

__all__ = [
    "GridSpec",
    "central_diff",
    "upwind2_diff",
    "mixed_diff",
    "boundary_space_diff",
    "boundary_time_diff",
    "axis_mixed_derivative",
    "axis_wall_derivative",
    "mixed_gradient",
    "wall_gradient",
    "advection",
    "gradient_at_interior",
    "sync_periodic",
]


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    dx: float
    dy: float
    periodic_x: bool = False
    periodic_y: bool = False

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise InvalidInputError(f"grid needs at least 3 nodes per direction, got {self.nx}x{self.ny}")
        if self.dx <= 0 or self.dy <= 0:
            raise InvalidInputError("grid spacings must be positive")

    @classmethod
    def from_extent(cls, nx, ny, lx=1.0, ly=1.0, periodic_x=False, periodic_y=False):
        return cls(nx, ny, lx / (nx - 1), ly / (ny - 1), periodic_x, periodic_y)

    @property
    def shape(self):
        return (self.nx, self.ny)

    def coords(self):
        """Node coordinates ``(x, y)`` as 1-D arrays."""
        return np.arange(self.nx) * self.dx, np.arange(self.ny) * self.dy

    def spacing(self, axis):
        return self.dx if axis == 0 else self.dy

    def periodic(self, axis):
        return self.periodic_x if axis == 0 else self.periodic_y

    def size(self, axis):
        return self.nx if axis == 0 else self.ny

    def interior_mask(self):
        """True at nodes that are updated by the interior scheme."""
        m = np.ones(self.shape, dtype=bool)
        if not self.periodic_x:
            m[0, :] = m[-1, :] = False
        if not self.periodic_y:
            m[:, 0] = m[:, -1] = False
        return m


def central_diff(f_minus, f_plus, delta):
    return (f_plus - f_minus) / (2.0 * delta)


def upwind2_diff(f0, f1, f2, delta, sign):
    """Second-order upwind derivative.

    ``f0, f1, f2`` are the samples at x, x - s*delta and x - 2*s*delta where
    ``s`` is +1 for ``sign >= 0`` and -1 otherwise; the result is the
    derivative along +x in both cases.
    """
    d = (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * delta)
    return d if sign >= 0 else -d


def mixed_diff(central_val, upwind_val, zeta):
    return zeta * central_val + (1.0 - zeta) * upwind_val


def boundary_space_diff(feq0, feq1, feq2, delta, inward_sign):
    """One-sided second-order derivative at a wall along the +axis direction.

    ``feq1`` and ``feq2`` are one and two nodes into the domain; ``inward_sign``
    is +1 when the domain lies on the +axis side of the wall.
    """
    return -inward_sign * (3.0 * feq0 - 4.0 * feq1 + feq2) / (2.0 * delta)


def boundary_time_diff(feq_new, feq_old, dt):
    return (feq_new - feq_old) / dt


def _sl(axis, s):
    """Index tuple selecting slice ``s`` along grid ``axis`` of a (q, nx, ny) array."""
    idx = [slice(None)] * 3
    idx[axis + 1] = s
    return tuple(idx)


def _wrap(f, axis):
    """Drop the duplicated seam node of a periodic axis."""
    return f[_sl(axis, slice(0, -1))]


def _unwrap(d, axis):
    return np.concatenate([d, d[_sl(axis, slice(0, 1))]], axis=axis + 1)


def _wall_fill(f, d, axis, delta):
    """Fill index 0 and N-1 of ``d`` with the one-sided boundary form."""
    n = f.shape[axis + 1]
    g = lambda k: f[_sl(axis, k)]
    d[_sl(axis, 0)] = boundary_space_diff(g(0), g(1), g(2), delta, +1)
    d[_sl(axis, n - 1)] = boundary_space_diff(g(n - 1), g(n - 2), g(n - 3), delta, -1)


def axis_wall_derivative(f, axis, delta, periodic):
    """Derivative for boundary equilibria: central inside, one-sided at the ends."""
    f = np.asarray(f, dtype=float)
    if periodic:
        w = _wrap(f, axis)
        ax = axis + 1
        return _unwrap((np.roll(w, -1, ax) - np.roll(w, 1, ax)) / (2.0 * delta), axis)
    d = np.empty_like(f)
    d[_sl(axis, slice(1, -1))] = central_diff(f[_sl(axis, slice(0, -2))], f[_sl(axis, slice(2, None))], delta)
    _wall_fill(f, d, axis, delta)
    return d


def axis_mixed_derivative(f, axis, delta, zeta, signs, periodic):
    """Central/second-order-upwind blend along one grid axis.

    Parameters
    ----------
    f : ndarray, shape (q, nx, ny)
    signs : array_like of length q
        Velocity component along ``axis`` for each population; selects the
        upwind side (``>= 0`` looks backward).

    On a walled axis the upwind stencil at the first interior node would
    leave the domain; the central value is used there.  Wall nodes receive
    the one-sided boundary form.
    """
    f = np.asarray(f, dtype=float)
    pos = np.asarray(signs) >= 0
    neg = ~pos
    ax = axis + 1
    if periodic:
        w = _wrap(f, axis)
        cen = (np.roll(w, -1, ax) - np.roll(w, 1, ax)) / (2.0 * delta)
        up = np.empty_like(w)
        wp, wn = w[pos], w[neg]
        up[pos] = (3.0 * wp - 4.0 * np.roll(wp, 1, ax) + np.roll(wp, 2, ax)) / (2.0 * delta)
        up[neg] = -(3.0 * wn - 4.0 * np.roll(wn, -1, ax) + np.roll(wn, -2, ax)) / (2.0 * delta)
        return _unwrap(mixed_diff(cen, up, zeta), axis)

    n = f.shape[ax]
    d = np.empty_like(f)
    cen = central_diff(f[_sl(axis, slice(0, -2))], f[_sl(axis, slice(2, None))], delta)
    up = cen.copy()  # index k here is node k+1
    if n >= 4:
        fp, fn = f[pos], f[neg]
        # backward stencil fits at nodes 2..n-2, forward at nodes 1..n-3
        upp = up[pos]
        upp[_sl(axis, slice(1, None))] = (
            3.0 * fp[_sl(axis, slice(2, -1))] - 4.0 * fp[_sl(axis, slice(1, -2))] + fp[_sl(axis, slice(0, -3))]
        ) / (2.0 * delta)
        up[pos] = upp
        upn = up[neg]
        upn[_sl(axis, slice(0, -1))] = -(
            3.0 * fn[_sl(axis, slice(1, -2))] - 4.0 * fn[_sl(axis, slice(2, -1))] + fn[_sl(axis, slice(3, None))]
        ) / (2.0 * delta)
        up[neg] = upn
    d[_sl(axis, slice(1, -1))] = mixed_diff(cen, up, zeta)
    _wall_fill(f, d, axis, delta)
    return d


def mixed_gradient(f, grid, zeta, model=D2Q9):
    """``(df/dx, df/dy)`` of every population with the interior blended stencil."""
    gx = axis_mixed_derivative(f, 0, grid.dx, zeta, model.ex, grid.periodic_x)
    gy = axis_mixed_derivative(f, 1, grid.dy, zeta, model.ey, grid.periodic_y)
    return gx, gy


def wall_gradient(f, grid):
    """``(df/dx, df/dy)`` using central differences inside and one-sided ends."""
    gx = axis_wall_derivative(f, 0, grid.dx, grid.periodic_x)
    gy = axis_wall_derivative(f, 1, grid.dy, grid.periodic_y)
    return gx, gy


def advection(f, grid, zeta, model=D2Q9):
    """``e_i . grad f_i`` with the blended stencil, shape ``(q, nx, ny)``."""
    gx, gy = mixed_gradient(f, grid, zeta, model)
    return model.ex[:, None, None] * gx + model.ey[:, None, None] * gy


def gradient_at_interior(field, node, velocity_index, params, grid, model=D2Q9):
    """Pointwise blended gradient of one population at one interior node.

    Samples are gathered one by one, independently of :func:`mixed_gradient`,
    so the two paths can check each other.
    """
    ix, iy = node
    if not (0 <= ix < grid.nx and 0 <= iy < grid.ny):
        raise InvalidInputError(f"node {node} outside grid {grid.nx}x{grid.ny}")
    if not grid.interior_mask()[ix, iy]:
        raise InvalidInputError(f"node {node} lies on a wall")
    e = model.velocities[velocity_index]
    out = []
    for axis, k in ((0, ix), (1, iy)):
        n = grid.size(axis)
        delta = grid.spacing(axis)
        periodic = grid.periodic(axis)

        def sample(j):
            if periodic:
                j = j % (n - 1)
            elif not 0 <= j < n:
                return None
            return field[velocity_index, j, iy] if axis == 0 else field[velocity_index, ix, j]

        cen = central_diff(sample(k - 1), sample(k + 1), delta)
        s = 1 if e[axis] >= 0 else -1
        far = sample(k - 2 * s)
        if far is None:
            up = cen
        else:
            up = upwind2_diff(sample(k), sample(k - s), far, delta, e[axis])
        out.append(mixed_diff(cen, up, params.zeta))
    return tuple(out)


def sync_periodic(a, grid, lead=1):
    """Copy node 0 onto node N-1 along every periodic axis, in place.

    ``lead`` is the number of leading non-grid axes of ``a``.
    """
    if grid.periodic_x:
        idx = (slice(None),) * lead
        a[idx + (-1,)] = a[idx + (0,)]
    if grid.periodic_y:
        idx = (slice(None),) * lead + (slice(None),)
        a[idx + (-1,)] = a[idx + (0,)]
    return a
