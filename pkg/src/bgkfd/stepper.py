"""Simulation state and the implicit-explicit time step.

One step, with ``a = pi * theta`` and ``pi = dt / tau``:

1. ``f = (g + a feq) / (1 + a)`` at every node,
2. blended gradients of the frozen ``f``,
3. ``g' = -dt e.grad f + (1 - pi + a) f + pi (1 - theta) feq`` at interior nodes,
4. density and velocity from ``g'`` at interior nodes,
5. wall closure using the new interior moments,
6. periodic seams synchronised.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from .boundary import BoundarySpec, WallLayout, apply_boundaries
from .errors import BlowUpError, InvalidInputError
from .lattice import D2Q9, _equilibrium, equilibrium
from . import kernels
from .numerics import GridSpec, advection, sync_periodic

__all__ = [
    "DENSITY_FLOOR",
    "SimState",
    "StopRule",
    "RunResult",
    "initialize",
    "step",
    "run_until",
    "total_mass",
]

logger = logging.getLogger(__name__)

DENSITY_FLOOR = 1e-6


@dataclass
class SimState:
    """Fields of one simulation at time level ``step_index``.

    ``feq`` holds the equilibria the populations relax toward at this level;
    on wall nodes these are the wall equilibria, which the next step's time
    derivative needs.  ``rho`` and ``u`` are the moments of ``g`` on interior
    nodes and of the closed wall populations on wall nodes.
    """

    grid: GridSpec
    layout: WallLayout
    g: np.ndarray
    feq: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    step_index: int = 0
    time: float = 0.0

    def copy(self):
        return SimState(self.grid, self.layout, self.g.copy(), self.feq.copy(), self.rho.copy(),
                        self.u.copy(), self.step_index, self.time)

    def f(self, params):
        """Physical populations reconstructed from ``g``."""
        a = params.pi_ratio * params.theta
        return (self.g + a * self.feq) / (1.0 + a)


def initialize(grid, boundary, params, rho0=1.0, u0=None, model=D2Q9):
    """Start from equilibrium with density ``rho0`` and velocity field ``u0``.

    Wall nodes take their prescribed wall velocity regardless of ``u0``.
    Since ``f = feq`` the auxiliary distribution equals ``f``.
    """
    if (boundary.periodic_x, boundary.periodic_y) != (grid.periodic_x, grid.periodic_y):
        raise InvalidInputError("grid periodicity does not match the boundary spec")
    layout = WallLayout.build(grid, boundary)
    rho = np.broadcast_to(np.asarray(rho0, dtype=float), grid.shape).copy()
    u = np.zeros((2,) + grid.shape) if u0 is None else np.array(u0, dtype=float)
    if u.shape != (2,) + grid.shape:
        raise InvalidInputError(f"initial velocity must have shape {(2,) + grid.shape}, got {u.shape}")
    if layout.size:
        u[:, layout.ix, layout.iy] = layout.velocities(boundary, 0.0)
    sync_periodic(rho, grid, lead=0)
    sync_periodic(u, grid)
    feq = equilibrium(rho, u, model)
    return SimState(grid=grid, layout=layout, g=feq.copy(), feq=feq, rho=rho, u=u)


def _check(state):
    if np.isfinite(state.u.sum()) and state.rho.min() >= DENSITY_FLOOR:
        return
    bad = ~(state.rho >= DENSITY_FLOOR) | ~np.all(np.isfinite(state.u), axis=0)
    if bad.any():
        node = tuple(int(k) for k in np.argwhere(bad)[0])
        raise BlowUpError(
            f"blow-up at step {state.step_index}, node {node}: rho={float(state.rho[node])!r}",
            step=state.step_index, node=node,
        )


def _interior_numpy(state, params, model, interior):
    pi = params.pi_ratio
    a = pi * params.theta
    f = (state.g + a * state.feq) / (1.0 + a)
    adv = advection(f, state.grid, params.zeta, model)
    g_new = -params.dt * adv + (1.0 - pi + a) * f + (pi - a) * state.feq
    g_new[:, ~interior] = state.g[:, ~interior]
    rho = g_new.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.tensordot(model.velocities.T, g_new, axes=(1, 0)) / rho
    feq_new = np.empty_like(state.feq)
    feq_new[:, interior] = _equilibrium(rho[interior], u[:, interior], model)
    return g_new, rho, u, feq_new


def _interior_numba(state, params, model, interior):
    grid = state.grid
    # every entry the kernel skips is written by the closure or the seam sync
    g_new = np.empty_like(state.g)
    rho = np.empty_like(state.rho)
    u = np.empty_like(state.u)
    feq_new = np.empty_like(state.feq)
    kernels.interior_step(
        state.g, state.feq, model.ex, model.ey, model.weights, model.cs2, params.dt, params.pi_ratio,
        params.theta, params.zeta, grid.dx, grid.dy, grid.periodic_x, grid.periodic_y, g_new, rho, u, feq_new,
    )
    return g_new, rho, u, feq_new


BACKENDS = {"numpy": _interior_numpy, "numba": _interior_numba}


def step(state, params, boundary, model=D2Q9, backend="numba"):
    """Advance ``state`` by one time step and return the new state.

    ``backend`` selects the interior update: ``"numba"`` (compiled loops) or
    ``"numpy"`` (array expressions, slower, kept as a cross-check).  The
    input state is not modified.
    """
    grid = state.grid
    interior = grid.interior_mask()
    g_new, rho, u, feq_new = BACKENDS[backend](state, params, model, interior)
    new = SimState(grid, state.layout, g_new, state.feq, rho, u, state.step_index + 1,
                   (state.step_index + 1) * params.dt)
    # flow neighbours of wall nodes may sit on a periodic seam
    for arr, lead in ((g_new, 1), (feq_new, 1), (rho, 0), (u, 1)):
        sync_periodic(arr, grid, lead)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        apply_boundaries(new, feq_new, boundary, params, model)
    for arr, lead in ((new.g, 1), (new.feq, 1), (new.rho, 0), (new.u, 1)):
        sync_periodic(arr, grid, lead)
    _check(new)
    return new


def total_mass(state):
    """Sum of ``g`` over the distinct nodes (periodic seams counted once)."""
    g = state.g
    if state.grid.periodic_x:
        g = g[:, :-1]
    if state.grid.periodic_y:
        g = g[:, :, :-1]
    return float(g.sum())


@dataclass
class StopRule:
    """When to stop a run.

    ``kind`` is ``"time"`` (stop at ``t_end``), ``"steps"`` (after ``n_steps``)
    or ``"steady"`` (max nodal velocity change per step, relative to
    ``u_ref``, below ``tol``; checked every ``check_every`` steps and capped
    at ``max_steps``).
    """

    kind: str = "steady"
    t_end: float = None
    n_steps: int = None
    tol: float = 1e-10
    u_ref: float = 1.0
    check_every: int = 100
    max_steps: int = 10**7

    def __post_init__(self):
        if self.kind not in ("time", "steps", "steady"):
            raise InvalidInputError(f"unknown stop rule {self.kind!r}")
        if self.kind == "time" and (self.t_end is None or self.t_end < 0):
            raise InvalidInputError("time stop rule needs t_end >= 0")
        if self.kind == "steps" and (self.n_steps is None or self.n_steps < 0):
            raise InvalidInputError("steps stop rule needs n_steps >= 0")


@dataclass
class RunResult:
    state: SimState
    history: list = field(default_factory=list)
    converged: bool = True
    residuals: list = field(default_factory=list)


def run_until(state, params, boundary, stop, sample_times=(), sample_every=None, model=D2Q9, callback=None,
              backend="numba"):
    """Step ``state`` until ``stop`` fires.

    History entries are ``(step, time, rho, u)`` snapshots taken at the steps
    nearest to ``sample_times`` and, if given, every ``sample_every`` steps.
    For the steady rule ``residuals`` collects ``(step, max relative change)``
    at each check.
    """
    sample_steps = {int(round(t / params.dt)) for t in sample_times}
    result = RunResult(state=state)

    def record(s):
        if s.step_index in sample_steps or (sample_every and s.step_index % sample_every == 0):
            result.history.append((s.step_index, s.time, s.rho.copy(), s.u.copy()))

    if stop.kind == "time":
        n_target = int(round(stop.t_end / params.dt))
    elif stop.kind == "steps":
        n_target = stop.n_steps
    else:
        n_target = stop.max_steps

    record(state)
    while state.step_index < n_target:
        check = stop.kind == "steady" and (state.step_index + 1) % stop.check_every == 0
        u_old = state.u if check else None
        state = step(state, params, boundary, model, backend)
        record(state)
        if callback is not None:
            callback(state)
        if check:
            change = float(np.max(np.abs(state.u - u_old))) / stop.u_ref
            result.residuals.append((state.step_index, change))
            logger.debug("step %d t=%.4f residual %.3e", state.step_index, state.time, change)
            if change < stop.tol:
                result.state = state
                return result
    result.state = state
    if stop.kind == "steady":
        result.converged = False
        logger.warning("steady rule not met after %d steps", state.step_index)
    return result
