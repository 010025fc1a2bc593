"""Benchmark problems and the verification math around them.

Couette flow between a fixed bottom plate and a moving top plate (periodic
in x) is checked against its series solution; the lid-driven cavity is
checked through the location of its primary vortex.
"""
from dataclasses import dataclass, field
import logging
import math
import warnings

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .boundary import BoundarySpec
from .errors import InvalidInputError, MetricUndefinedError
from .lattice import D2Q9, SchemeParams, tau_from_viscosity
from .numerics import GridSpec
from .stepper import StopRule, initialize, run_until, total_mass

__all__ = [
    "CouetteConfig",
    "CavityConfig",
    "VortexCenter",
    "CAVITY_REFERENCE_CENTERS",
    "couette_analytic",
    "average_error",
    "convergence_order",
    "streamfunction",
    "find_vortex_centers",
    "couette_params",
    "couette_exact_field",
    "cavity_params",
    "CouetteReport",
    "CavityReport",
    "run_couette",
    "run_cavity",
    "smooth_periodic_field",
    "PeriodicConfig",
    "PeriodicReport",
    "periodic_params",
    "run_periodic",
]

logger = logging.getLogger(__name__)

# primary vortex centres reported for the 128x128 runs
CAVITY_REFERENCE_CENTERS = {
    400: (0.5563, 0.6103),
    1000: (0.5334, 0.5759),
    3000: (0.5224, 0.5581),
    5000: (0.5210, 0.5543),
}


def couette_analytic(y, t, nu, H=1.0, u0=1.0, tol=1e-12, max_terms=10_000):
    """Start-up Couette velocity ``u_x(y, t)``; the top plate moves at ``u0`` from t=0.

    The Fourier series is truncated once the bound on the next term,
    ``2 / (lambda_k H) * exp(-nu lambda_k^2 t)``, drops below ``tol``.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y > H * (1 + 1e-12)) or t < 0 or tol <= 0:
        raise InvalidInputError("couette_analytic: need 0 <= y <= H, t >= 0, tol > 0")
    s = y / H
    for k in range(1, max_terms + 1):
        lam = k * math.pi / H
        decay = math.exp(-nu * lam * lam * t)
        bound = 2.0 / (lam * H) * decay
        if bound < tol:
            break
        s = s + 2.0 * (-1) ** k / (lam * H) * decay * np.sin(lam * y)
    else:
        warnings.warn(f"couette_analytic: series capped at {max_terms} terms before reaching tol={tol}",
                      RuntimeWarning, stacklevel=2)
    return u0 * s


def average_error(u_num, u_ana, floor=1e-12):
    """Node-mean relative L2 velocity error.

    ``u_num`` and ``u_ana`` have the velocity component first, shape
    ``(2, ...)``.  Nodes where ``|u_ana| < floor`` are skipped; ``floor`` is
    an absolute speed, so pass ``1e-12 * u0``.
    """
    u_num = np.asarray(u_num, dtype=float)
    u_ana = np.asarray(u_ana, dtype=float)
    if u_num.shape != u_ana.shape:
        raise InvalidInputError(f"shape mismatch {u_num.shape} vs {u_ana.shape}")
    ref = np.sqrt((u_ana**2).sum(axis=0))
    keep = ref >= floor
    if not keep.any():
        raise MetricUndefinedError("average_error: no node with a non-zero reference velocity")
    diff = np.sqrt(((u_num - u_ana) ** 2).sum(axis=0))
    return float(np.mean(diff[keep] / ref[keep]))


def convergence_order(errors):
    """Least-squares slope of ``log e`` against ``log h`` for ``[(h, e), ...]``."""
    if len(errors) < 2:
        raise InvalidInputError("convergence_order needs at least two grid levels")
    h = np.array([p[0] for p in errors], dtype=float)
    e = np.array([p[1] for p in errors], dtype=float)
    d = np.diff(h)
    if not (np.all(d < 0) or np.all(d > 0)):
        raise InvalidInputError("grid spacings must be strictly monotone")
    if np.any(h <= 0) or np.any(e <= 0):
        raise InvalidInputError("spacings and errors must be positive")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


def streamfunction(u, grid):
    """Streamfunction with ``u_x = dpsi/dy`` and ``u_y = -dpsi/dx``, zero at the origin.

    The bottom row is integrated from ``-u_y`` along x, then every column
    from ``u_x`` along y, both with the trapezoid rule.  With no normal flow
    through the bottom wall the bottom row is identically zero.
    """
    u = np.asarray(u, dtype=float)
    bottom = -cumulative_trapezoid(u[1, :, 0], dx=grid.dx, initial=0.0)
    return bottom[:, None] + cumulative_trapezoid(u[0], dx=grid.dy, axis=1, initial=0.0)


@dataclass
class VortexCenter:
    position: tuple
    strength: float
    sense: int  # +1 counter-clockwise (psi maximum), -1 clockwise (psi minimum)


def _refine(patch):
    """Stationary point of a least-squares quadratic through a 3x3 patch.

    Returns the offset in cells from the patch centre and the fitted value,
    or ``None`` if the fit is degenerate or leaves the patch.
    """
    o = np.array([-1.0, 0.0, 1.0])
    X, Y = np.meshgrid(o, o, indexing="ij")
    X, Y, z = X.ravel(), Y.ravel(), patch.ravel()
    A = np.column_stack([np.ones(9), X, Y, X * X, X * Y, Y * Y])
    c, *_ = np.linalg.lstsq(A, z, rcond=None)
    H = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
    if abs(np.linalg.det(H)) < 1e-300:
        return None
    off = np.linalg.solve(H, -c[1:3])
    if np.any(np.abs(off) > 1.0):
        return None
    val = c[0] + c[1] * off[0] + c[2] * off[1] + c[3] * off[0] ** 2 + c[4] * off[0] * off[1] + c[5] * off[1] ** 2
    return off, val


def find_vortex_centers(psi, grid, noise=1e-4):
    """Strict interior extrema of ``psi``, refined to sub-cell position.

    Strength is measured from the mean of ``psi`` on the domain edge, so the
    result does not change when a constant is added to ``psi``.  Extrema
    weaker than ``noise`` times the strongest deviation are dropped.  Sorted
    strongest first.
    """
    psi = np.asarray(psi, dtype=float)
    nx, ny = psi.shape
    edge = np.concatenate([psi[0], psi[-1], psi[1:-1, 0], psi[1:-1, -1]])
    ref = edge.mean()
    scale = np.abs(psi - ref).max()
    if scale == 0:
        return []
    c = psi[1:-1, 1:-1]
    is_max = np.ones(c.shape, dtype=bool)
    is_min = np.ones(c.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            nb = psi[1 + di:nx - 1 + di, 1 + dj:ny - 1 + dj]
            is_max &= c > nb
            is_min &= c < nb
    out = []
    for (i, j) in np.argwhere(is_max | is_min):
        ix, iy = i + 1, j + 1
        val = psi[ix, iy]
        pos = np.array([ix * grid.dx, iy * grid.dy])
        fit = _refine(psi[ix - 1:ix + 2, iy - 1:iy + 2])
        if fit is not None:
            off, val = fit
            pos = pos + off * np.array([grid.dx, grid.dy])
        if abs(val - ref) < noise * scale:
            continue
        out.append(VortexCenter(position=(float(pos[0]), float(pos[1])), strength=float(val),
                                sense=1 if is_max[i, j] else -1))
    out.sort(key=lambda v: -abs(v.strength - ref))
    return out


@dataclass
class CouetteConfig:
    """Start-up Couette flow, periodic in x.  Grid sizes count nodes."""

    nx: int = 20
    ny: int = 40
    Re: float = 10.0
    u0: float = 0.1
    L: float = 1.0
    H: float = 1.0
    zeta: float = 0.9
    theta: float = 0.5
    cfl: float = 0.1
    tau_star_ratio: float = 1.0
    closure: str = "proposed"
    sample_times: tuple = (0.5, 5.0, 10.0, 30.0)

    def __post_init__(self):
        if not (self.Re > 0 and self.u0 > 0 and self.L > 0 and self.H > 0):
            raise InvalidInputError("Couette: Re, u0, L and H must be positive")

    @property
    def nu(self):
        return self.L * self.u0 / self.Re

    @property
    def tau(self):
        return tau_from_viscosity(self.nu)


@dataclass
class CavityConfig:
    """Lid-driven square cavity with the lid moving along +x."""

    n: int = 128
    Re: float = 400.0
    L: float = 1.0
    u_lid: tuple = (0.1, 0.0)
    rho0: float = 1.0
    zeta: float = 0.9
    theta: float = 0.5
    cfl: float = 0.1
    tau_star_ratio: float = 1.0
    closure: str = "proposed"
    steady_tol: float = 1e-10
    check_every: int = 100
    max_steps: int = 10**7

    def __post_init__(self):
        if not (self.Re > 0 and self.L > 0):
            raise InvalidInputError("cavity: Re and L must be positive")

    @property
    def u_ref(self):
        return float(np.hypot(*self.u_lid))

    @property
    def nu(self):
        return self.L * self.u_ref / self.Re

    @property
    def tau(self):
        return tau_from_viscosity(self.nu)


def _params(cfg, grid):
    dt = cfg.cfl * min(grid.dx, grid.dy)
    return SchemeParams(tau=cfg.tau, dt=dt, dx=grid.dx, dy=grid.dy, theta=cfg.theta, zeta=cfg.zeta,
                        tau_star=getattr(cfg, "tau_star_ratio", 1.0) * cfg.tau)


def couette_params(cfg, closure=None):
    """Grid, scheme parameters, boundary spec and initial state for a Couette run.

    The fluid starts at rest with unit density; the top plate moves from t=0.
    """
    boundary = BoundarySpec.couette(cfg.u0, closure=closure or cfg.closure)
    grid = boundary.make_grid(cfg.nx, cfg.ny, cfg.L, cfg.H)
    params = _params(cfg, grid)
    state = initialize(grid, boundary, params, rho0=1.0)
    return grid, params, boundary, state


def couette_exact_field(cfg, grid, t):
    """Analytical velocity on the grid, shape ``(2, nx, ny)``."""
    _, y = grid.coords()
    ux = couette_analytic(y, t, cfg.nu, cfg.H, cfg.u0)
    u = np.zeros((2,) + grid.shape)
    u[0] = ux[None, :]
    return u


@dataclass
class CouetteReport:
    config: CouetteConfig
    y: np.ndarray
    # closure -> list of (t, u_x numerical at x=0, u_x analytical)
    profiles: dict = field(default_factory=dict)
    # closure -> list of (t, average error)
    error_history: dict = field(default_factory=dict)
    # rows of (h, error, order) when several grids were run
    convergence: list = field(default_factory=list)


def run_couette(cfg, closures=None, error_times=None, backend="numba"):
    """Run Couette flow up to the last sample time for each closure.

    Profiles are stored at ``cfg.sample_times``; the average error is
    recorded at the union of the sample times and ``error_times``.
    """
    closures = closures or (cfg.closure,)
    times = sorted(set(cfg.sample_times) | set(error_times or ()))
    report = None
    for closure in closures:
        grid, params, boundary, state = couette_params(cfg, closure)
        if report is None:
            report = CouetteReport(config=cfg, y=grid.coords()[1])
        stop = StopRule("time", t_end=max(times) if times else 0.0)
        res = run_until(state, params, boundary, stop, sample_times=times, backend=backend)
        profiles, errors = [], []
        for _, t, _, u in res.history:
            t_req = min(times, key=lambda s: abs(s - t)) if times else t
            if abs(t_req - t) > params.dt:
                continue
            ana = couette_exact_field(cfg, grid, t)
            if any(abs(t - s) <= params.dt / 2 for s in cfg.sample_times):
                profiles.append((t, u[0, 0].copy(), ana[0, 0].copy()))
            errors.append((t, average_error(u, ana, floor=1e-12 * cfg.u0)))
        report.profiles[closure] = profiles
        report.error_history[closure] = errors
        logger.info("couette %s %dx%d done, %d error samples", closure, cfg.nx, cfg.ny, len(errors))
    return report


@dataclass
class CavityReport:
    config: CavityConfig
    grid: GridSpec
    state: object
    psi: np.ndarray
    centers: list
    residuals: list
    converged: bool

    @property
    def primary(self):
        """Strongest clockwise vortex, or ``None``."""
        cw = [c for c in self.centers if c.sense < 0]
        return cw[0] if cw else None


def cavity_params(cfg, closure=None):
    boundary = BoundarySpec.cavity(cfg.u_lid, closure=closure or cfg.closure)
    grid = boundary.make_grid(cfg.n, cfg.n, cfg.L, cfg.L)
    params = _params(cfg, grid)
    state = initialize(grid, boundary, params, rho0=cfg.rho0)
    return grid, params, boundary, state


def run_cavity(cfg, callback=None, backend="numba", stop=None):
    """Run the cavity until the steady rule fires and locate its vortices.

    ``stop`` replaces the steady rule built from ``cfg`` (useful for short
    runs); ``converged`` then only reflects that rule.
    """
    grid, params, boundary, state = cavity_params(cfg)
    if stop is None:
        stop = StopRule("steady", tol=cfg.steady_tol, u_ref=cfg.u_ref, check_every=cfg.check_every,
                        max_steps=cfg.max_steps)
    res = run_until(state, params, boundary, stop, callback=callback, backend=backend)
    psi = streamfunction(res.state.u, grid)
    centers = find_vortex_centers(psi, grid)
    logger.info("cavity Re=%g: %d steps, converged=%s", cfg.Re, res.state.step_index, res.converged)
    return CavityReport(cfg, grid, res.state, psi, centers, res.residuals, res.converged)


def smooth_periodic_field(grid, rng, amplitude, n_modes=3):
    """Random sum of low Fourier modes, periodic over the distinct nodes, shape ``(nx, ny)``."""
    x, y = grid.coords()
    lx = (grid.nx - 1) * grid.dx
    ly = (grid.ny - 1) * grid.dy
    X, Y = np.meshgrid(2 * np.pi * x / lx, 2 * np.pi * y / ly, indexing="ij")
    out = np.zeros(grid.shape)
    for kx in range(n_modes + 1):
        for ky in range(n_modes + 1):
            if kx == ky == 0:
                continue
            a, b = rng.standard_normal(2)
            out += a * np.cos(kx * X + ky * Y) + b * np.sin(kx * X - ky * Y)
    return amplitude * out / np.abs(out).max()


@dataclass
class PeriodicConfig:
    """Fully periodic box started from a random smooth state (mass conservation check)."""

    nx: int = 64
    ny: int = 64
    Re: float = 100.0
    u0: float = 0.05
    L: float = 1.0
    zeta: float = 0.9
    theta: float = 0.5
    cfl: float = 0.1
    n_steps: int = 1000
    seed: int = 0
    sample_every: int = 100

    def __post_init__(self):
        if not (self.Re > 0 and self.u0 > 0 and self.L > 0):
            raise InvalidInputError("periodic: Re, u0 and L must be positive")

    @property
    def nu(self):
        return self.L * self.u0 / self.Re

    @property
    def tau(self):
        return tau_from_viscosity(self.nu)


@dataclass
class PeriodicReport:
    config: PeriodicConfig
    state: object
    # (step, time, total mass)
    mass: list

    @property
    def max_drift(self):
        m0 = self.mass[0][2]
        return max(abs(m - m0) for _, _, m in self.mass) / abs(m0)


def periodic_params(cfg):
    boundary = BoundarySpec.all_periodic()
    grid = boundary.make_grid(cfg.nx, cfg.ny, cfg.L, cfg.L)
    params = _params(cfg, grid)
    rng = np.random.default_rng(cfg.seed)
    rho = 1.0 + smooth_periodic_field(grid, rng, 0.01)
    u = np.stack([smooth_periodic_field(grid, rng, cfg.u0), smooth_periodic_field(grid, rng, cfg.u0)])
    state = initialize(grid, boundary, params, rho0=rho, u0=u)
    return grid, params, boundary, state


def run_periodic(cfg, backend="numba"):
    """Step the periodic box for ``cfg.n_steps`` and record the total mass."""
    grid, params, boundary, state = periodic_params(cfg)
    mass = [(0, 0.0, total_mass(state))]

    def track(s):
        if s.step_index % cfg.sample_every == 0 or s.step_index == cfg.n_steps:
            mass.append((s.step_index, s.time, total_mass(s)))

    res = run_until(state, params, boundary, StopRule("steps", n_steps=cfg.n_steps), callback=track,
                    backend=backend)
    return PeriodicReport(cfg, res.state, mass)
