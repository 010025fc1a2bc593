"""Finite-difference lattice Boltzmann (BGK, D2Q9) solver on structured grids.

Populations are advanced with an implicit-explicit time step on a blended
central/upwind stencil; walls are closed with a Chapman-Enskog based
non-equilibrium estimate.  Benchmarks: start-up Couette flow and the
lid-driven cavity.
"""
from .errors import BGKError, BlowUpError, ConfigError, DegenerateDensityError, InvalidInputError, MetricUndefinedError
from .lattice import D2Q9, LatticeModel, MacroState, SchemeParams, equilibrium, moments, f_from_g, g_from_f
from .numerics import GridSpec
from .boundary import BoundarySpec, Periodic, Wall
from .stepper import SimState, StopRule, initialize, run_until, step, total_mass

__version__ = "0.1.0"
