"""Numerical continuity method for omega = omega_0 - t Ric(omega).

Supported geometries are flat complex tori (n = 1, 2) and the axisymmetric
round sphere.  The path is tracked through the scalar Monge-Ampère equation
solved by damped Newton with an Euler tangent predictor.
"""
from .class_tracker import ClassPath, class_path, class_volume, degeneration_type, max_time
from .config import RunConfig, load_config, parse_config
from .continuation import ContinuationState, PathRecord, picard_bootstrap, run
from .errors import (Breakdown, ConfigError, ContinuityError, GaugeError, GeometryError,
                     LinearSolveError, MonitorFailure, NewtonStall, NoContraction, NonPositiveMetric)
from .gauge import Gauge, default_gauge, make_gauge, manufactured_gauge, shifted_gauge
from .geometry import AXISYM_SPHERE, FLAT_TORUS, Geometry, build_geometry
from .ma_core import MAProblem, apply_linearization, ma_residual, newton_solve, solve_shifted_laplace

__version__ = "0.1.0"
