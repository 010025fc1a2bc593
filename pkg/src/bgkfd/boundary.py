"""Wall closures and edge bookkeeping.

A wall population is split into an equilibrium part, built from the adjacent
flow node's density and the prescribed wall velocity, and a non-equilibrium
part.  The closures differ only in how they estimate the latter:

``proposed``
    ``-tau_star * (d/dt + e.grad) feq`` evaluated at the wall.
``guo``
    the flow neighbour's non-equilibrium part ``f - feq``.
``higher_order``
    the proposed estimate plus the flow neighbour's residual
    ``f - feq + tau_star * (d/dt + e.grad) feq``.

Every closure function works on a batch of wall nodes: arrays carry the
population index first and the wall-node index second, shape ``(9, M)``.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import InvalidInputError
from .lattice import D2Q9, _equilibrium, equilibrium, g_from_f, f_from_g
from .kernels import mixed_gradient_at
from .numerics import GridSpec

__all__ = [
    "Periodic",
    "Wall",
    "BoundarySpec",
    "WallLayout",
    "WallNodeContext",
    "CLOSURES",
    "wall_equilibrium",
    "transport_derivative",
    "f1_correction",
    "close_proposed",
    "close_higher_order",
    "close_guo",
    "apply_boundaries",
]

CLOSURES = ("proposed", "higher_order", "guo")
EDGES = ("bottom", "top", "left", "right")


@dataclass(frozen=True)
class Periodic:
    pass


@dataclass(frozen=True)
class Wall:
    """Solid wall moving with velocity ``u``: a pair or a callable of time."""

    u: Union[tuple, Callable] = (0.0, 0.0)

    def velocity(self, t):
        u = self.u(t) if callable(self.u) else self.u
        return np.asarray(u, dtype=float)


@dataclass
class BoundarySpec:
    bottom: object = field(default_factory=Wall)
    top: object = field(default_factory=Wall)
    left: object = field(default_factory=Periodic)
    right: object = field(default_factory=Periodic)
    closure: str = "proposed"
    tau_star: Optional[float] = None

    def __post_init__(self):
        if self.closure not in CLOSURES:
            raise InvalidInputError(f"closure must be one of {CLOSURES}, got {self.closure!r}")
        for a, b in (("left", "right"), ("bottom", "top")):
            pa = isinstance(getattr(self, a), Periodic)
            pb = isinstance(getattr(self, b), Periodic)
            if pa != pb:
                raise InvalidInputError(f"periodic edges must come in pairs: {a}/{b}")
        if self.tau_star is not None and not self.tau_star > 0:
            raise InvalidInputError("tau_star must be positive")

    @property
    def periodic_x(self):
        return isinstance(self.left, Periodic)

    @property
    def periodic_y(self):
        return isinstance(self.bottom, Periodic)

    def make_grid(self, nx, ny, lx=1.0, ly=1.0):
        return GridSpec.from_extent(nx, ny, lx, ly, self.periodic_x, self.periodic_y)

    @classmethod
    def couette(cls, u0, closure="proposed", tau_star=None):
        return cls(bottom=Wall((0.0, 0.0)), top=Wall((u0, 0.0)), left=Periodic(), right=Periodic(),
                   closure=closure, tau_star=tau_star)

    @classmethod
    def cavity(cls, u_lid=(0.1, 0.0), closure="proposed", tau_star=None):
        return cls(bottom=Wall(), top=Wall(tuple(u_lid)), left=Wall(), right=Wall(),
                   closure=closure, tau_star=tau_star)

    @classmethod
    def all_periodic(cls):
        return cls(bottom=Periodic(), top=Periodic(), left=Periodic(), right=Periodic())


_CENTRAL = (-0.5, 0.0, 0.5)
_FORWARD = (-1.5, 2.0, -0.5)
_BACKWARD = (1.5, -2.0, 0.5)


def _axis_stencil(k, n, periodic):
    m = len(k)
    idx = np.empty((3, m), dtype=np.intp)
    coef = np.empty((3, m))
    for j, kk in enumerate(k):
        if periodic:
            idx[:, j] = [(kk - 1) % (n - 1), kk, (kk + 1) % (n - 1)]
            coef[:, j] = _CENTRAL
        elif kk == 0:
            idx[:, j] = [0, 1, 2]
            coef[:, j] = _FORWARD
        elif kk == n - 1:
            idx[:, j] = [n - 1, n - 2, n - 3]
            coef[:, j] = _BACKWARD
        else:
            idx[:, j] = [kk - 1, kk, kk + 1]
            coef[:, j] = _CENTRAL
    return idx, coef


@dataclass
class WallLayout:
    """Indices of the wall nodes and of their inward flow neighbours."""

    ix: np.ndarray
    iy: np.ndarray
    fx: np.ndarray
    fy: np.ndarray
    # for every edge, a boolean mask over the M wall nodes
    on_edge: dict
    # per axis: (index, coefficient) arrays of shape (3, M); the derivative of
    # a field at the wall nodes is sum(coef * field[index]) / spacing
    stencils: tuple = ()
    _cache: object = field(default=None, repr=False, compare=False)

    @property
    def size(self):
        return len(self.ix)

    def derivatives(self, fld, grid):
        """``(dfld/dx, dfld/dy)`` at the wall nodes, each of shape ``(q, M)``.

        Central along the wall, one-sided second order across it, so a
        corner gets one-sided forms in both directions.
        """
        (kx, cx), (ky, cy) = self.stencils
        vx = fld[:, kx, self.iy[None, :]]
        vy = fld[:, self.ix[None, :], ky]
        return (cx * vx).sum(axis=1) / grid.dx, (cy * vy).sum(axis=1) / grid.dy

    @classmethod
    def build(cls, grid, spec):
        walls = {e: isinstance(getattr(spec, e), Wall) for e in EDGES}
        ix, iy = np.nonzero(~grid.interior_mask())
        on_edge = {
            "left": walls["left"] & (ix == 0),
            "right": walls["right"] & (ix == grid.nx - 1),
            "bottom": walls["bottom"] & (iy == 0),
            "top": walls["top"] & (iy == grid.ny - 1),
        }
        nx_in = on_edge["left"].astype(int) - on_edge["right"].astype(int)
        ny_in = on_edge["bottom"].astype(int) - on_edge["top"].astype(int)
        stencils = (
            _axis_stencil(ix, grid.nx, grid.periodic_x),
            _axis_stencil(iy, grid.ny, grid.periodic_y),
        )
        return cls(ix=ix, iy=iy, fx=ix + nx_in, fy=iy + ny_in, on_edge=on_edge, stencils=stencils)

    def velocities(self, spec, t):
        """Prescribed wall velocity at every wall node, shape ``(2, M)``.

        A node shared by two walls takes the slower wall's velocity.
        """
        steady = not any(callable(getattr(getattr(spec, e), "u", None)) for e in EDGES)
        key = (id(spec), spec.bottom, spec.top, spec.left, spec.right)
        if steady and self._cache is not None and self._cache[0] == key:
            return self._cache[1]
        u = np.zeros((2, self.size))
        speed = np.full(self.size, np.inf)
        for e in EDGES:
            m = self.on_edge[e]
            if not m.any():
                continue
            ue = getattr(spec, e).velocity(t)
            s = np.hypot(*ue)
            take = m & (s < speed)
            u[:, take] = ue[:, None]
            speed[take] = s
        if steady:
            self._cache = (key, u)
        return u


@dataclass
class WallNodeContext:
    """Everything a closure needs at a batch of wall nodes.

    Derivative fields are derivatives of the equilibrium populations.  The
    ``flow_*`` entries describe the inward neighbour ``x_f`` and are only
    needed by the ``guo`` and ``higher_order`` closures.
    """

    feq: np.ndarray
    feq_prev: Optional[np.ndarray]
    dfeq_dx: np.ndarray
    dfeq_dy: np.ndarray
    dt: float
    f_flow: Optional[np.ndarray] = None
    feq_flow: Optional[np.ndarray] = None
    feq_flow_prev: Optional[np.ndarray] = None
    dfeq_flow_dx: Optional[np.ndarray] = None
    dfeq_flow_dy: Optional[np.ndarray] = None


def wall_equilibrium(rho_flow, u_wall, model=D2Q9):
    return equilibrium(rho_flow, u_wall, model)


def _tau_star(params, tau_star):
    return params.tau_star if tau_star is None else tau_star


def transport_derivative(feq, feq_prev, dfdx, dfdy, dt, model=D2Q9):
    """``(d/dt + e_i . grad) feq_i``; the time part is dropped when there is no history."""
    sh = (-1,) + (1,) * (feq.ndim - 1)
    out = model.ex.reshape(sh) * dfdx + model.ey.reshape(sh) * dfdy
    if feq_prev is not None:
        out = out + (feq - feq_prev) / dt
    return out


def f1_correction(ctx, params, model=D2Q9, tau_star=None):
    """``tau_star * f1 = -tau_star * (d/dt + e.grad) feq`` at the wall."""
    ts = _tau_star(params, tau_star)
    return -ts * transport_derivative(ctx.feq, ctx.feq_prev, ctx.dfeq_dx, ctx.dfeq_dy, ctx.dt, model)


def close_proposed(ctx, params, model=D2Q9, tau_star=None):
    return ctx.feq + f1_correction(ctx, params, model, tau_star)


def close_higher_order(ctx, params, model=D2Q9, tau_star=None):
    ts = _tau_star(params, tau_star)
    d_flow = transport_derivative(ctx.feq_flow, ctx.feq_flow_prev, ctx.dfeq_flow_dx, ctx.dfeq_flow_dy, ctx.dt, model)
    residual = ctx.f_flow + ts * d_flow - ctx.feq_flow
    return close_proposed(ctx, params, model, tau_star) + residual


def close_guo(ctx, model=D2Q9):
    return ctx.feq + (ctx.f_flow - ctx.feq_flow)


def apply_boundaries(state, feq_new, spec, params, model=D2Q9):
    """Close every wall node of ``state`` in place and return it.

    Expects the interior part of the step to be complete: ``state.g``,
    ``state.rho``, ``state.u`` and ``feq_new`` hold time level n+1 at interior
    nodes while ``state.feq`` still holds level n.  On return ``state.feq`` is
    ``feq_new`` with its wall entries filled, and the wall entries of ``g``,
    ``rho`` and ``u`` are set.
    """
    layout = state.layout
    if layout.size == 0:
        state.feq = feq_new
        return state
    ix, iy, fx, fy = layout.ix, layout.iy, layout.fx, layout.fy
    grid = state.grid

    feq_prev = state.feq
    u_wall = layout.velocities(spec, state.time)
    rho_flow = state.rho[fx, fy]
    # unchecked: a non-finite flow density is reported by the caller as a blow-up
    feq_wall = _equilibrium(rho_flow, u_wall, model)
    feq_new[:, ix, iy] = feq_wall

    ddx, ddy = layout.derivatives(feq_new, grid)
    ctx = WallNodeContext(
        feq=feq_wall,
        feq_prev=feq_prev[:, ix, iy],
        dfeq_dx=ddx,
        dfeq_dy=ddy,
        dt=params.dt,
    )
    if spec.closure != "proposed":
        ctx.feq_flow = feq_new[:, fx, fy]
        ctx.f_flow = f_from_g(state.g[:, fx, fy], ctx.feq_flow, params)
    if spec.closure == "higher_order":
        ctx.feq_flow_prev = feq_prev[:, fx, fy]
        ctx.dfeq_flow_dx, ctx.dfeq_flow_dy = mixed_gradient_at(
            feq_new, fx, fy, model.ex, model.ey, grid.dx, grid.dy, params.zeta, grid.periodic_x, grid.periodic_y
        )

    if spec.closure == "proposed":
        f_wall = close_proposed(ctx, params, model, spec.tau_star)
    elif spec.closure == "higher_order":
        f_wall = close_higher_order(ctx, params, model, spec.tau_star)
    else:
        f_wall = close_guo(ctx, model)

    state.g[:, ix, iy] = g_from_f(f_wall, feq_wall, params)
    rho_w = f_wall.sum(axis=0)
    state.rho[ix, iy] = rho_w
    state.u[:, ix, iy] = (model.velocities.T @ f_wall) / rho_w
    state.feq = feq_new
    return state
