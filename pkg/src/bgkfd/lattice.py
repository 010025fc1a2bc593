"""D2Q9 velocity set, equilibrium distribution and the f/g change of variables.

Populations are stored with the velocity index first, so a single node is a
length-9 vector and a grid is an array of shape ``(9, nx, ny)``.  Every
function here broadcasts over the trailing node axes.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDensityError, InvalidInputError

__all__ = [
    "LatticeModel",
    "D2Q9",
    "MacroState",
    "SchemeParams",
    "equilibrium",
    "moments",
    "g_from_f",
    "f_from_g",
    "tau_from_viscosity",
]


@dataclass(frozen=True)
class LatticeModel:
    """Discrete velocity set with its quadrature weights.

    Velocity 0 is the rest velocity, 1-4 the axis velocities
    (+x, +y, -x, -y) and 5-8 the diagonals (+x+y, -x+y, -x-y, +x-y).
    """

    velocities: np.ndarray
    weights: np.ndarray
    cs2: float
    opposite: np.ndarray = field(repr=False)

    @property
    def q(self):
        return len(self.weights)

    @property
    def sound_speed(self):
        return np.sqrt(self.cs2)

    @property
    def ex(self):
        return self.velocities[:, 0]

    @property
    def ey(self):
        return self.velocities[:, 1]


def _make_d2q9():
    e = np.array(
        [[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1], [1, 1], [-1, 1], [-1, -1], [1, -1]],
        dtype=float,
    )
    w = np.array([4 / 9] + [1 / 9] * 4 + [1 / 36] * 4)
    opp = np.array([0, 3, 4, 1, 2, 7, 8, 5, 6])
    for arr in (e, w, opp):
        arr.setflags(write=False)
    return LatticeModel(velocities=e, weights=w, cs2=1 / 3, opposite=opp)


D2Q9 = _make_d2q9()


@dataclass
class MacroState:
    """Density and velocity, either at one node or over a grid.

    ``u`` has the velocity component on its first axis: shape ``(2,) + rho.shape``.
    """

    rho: np.ndarray
    u: np.ndarray


@dataclass
class SchemeParams:
    """Parameters of the time/space discretisation.

    ``pi_ratio`` is derived from ``dt`` and ``tau`` on every access, so it can
    never go stale when either is changed.
    """

    tau: float
    dt: float
    dx: float = 1.0
    dy: float = 1.0
    theta: float = 0.5
    zeta: float = 0.9
    tau_star: float = None

    def __post_init__(self):
        if self.tau_star is None:
            self.tau_star = self.tau
        self.validate()

    @property
    def pi_ratio(self):
        return self.dt / self.tau

    def validate(self):
        for name in ("tau", "tau_star", "dt", "dx", "dy"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise InvalidInputError(f"{name} must be a finite positive number, got {v!r}")
        for name in ("theta", "zeta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1], got {v!r}")


def equilibrium(rho, u, model=D2Q9):
    """Second-order equilibrium populations for density ``rho`` and velocity ``u``.

    Parameters
    ----------
    rho : float or ndarray
        Density, any shape ``S``.
    u : array_like
        Velocity of shape ``(2,) + S``.

    Returns
    -------
    ndarray of shape ``(9,) + S``
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(u))):
        raise InvalidInputError("equilibrium: non-finite density or velocity")
    if np.any(rho <= 0):
        raise InvalidInputError("equilibrium: density must be positive")
    return _equilibrium(rho, u, model)


def _equilibrium(rho, u, model):
    cs2 = model.cs2
    eu = np.tensordot(model.velocities, u, axes=(1, 0))
    usq = u[0] ** 2 + u[1] ** 2
    w = model.weights.reshape((-1,) + (1,) * rho.ndim)
    return rho * w * (1.0 + eu / cs2 + eu**2 / (2 * cs2**2) - usq / (2 * cs2))


def moments(f, model=D2Q9):
    """Density and velocity of a population set (sum over the first axis)."""
    f = np.asarray(f, dtype=float)
    rho = f.sum(axis=0)
    if np.any(rho <= 0):
        raise DegenerateDensityError("moments: non-positive density")
    j = np.tensordot(model.velocities.T, f, axes=(1, 0))
    return MacroState(rho=rho, u=j / rho)


def g_from_f(f, feq, params):
    """Auxiliary distribution ``g = f + pi*theta*(f - feq)`` with ``pi = dt/tau``."""
    a = params.pi_ratio * params.theta
    return f + a * (f - feq)


def f_from_g(g, feq, params):
    """Inverse of :func:`g_from_f` for the same equilibrium."""
    a = params.pi_ratio * params.theta
    return (g + a * feq) / (1.0 + a)


def tau_from_viscosity(nu, model=D2Q9):
    """Relaxation time giving kinematic viscosity ``nu`` (``nu = tau * cs^2``)."""
    if not np.isfinite(nu) or nu <= 0:
        raise InvalidInputError(f"viscosity must be positive, got {nu!r}")
    return nu / model.cs2
