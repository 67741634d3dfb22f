"""Cohomological bookkeeping along the class path [omega_0] - t c_1(M)."""
from __future__ import annotations

import math
from dataclasses import dataclass

NONCOLLAPSED = "noncollapsed"
COLLAPSED = "collapsed"
NONE = "none"


@dataclass(frozen=True)
class ClassPath:
    """Class data derived from the geometry.

    ``volume_coeffs`` are the coefficients of V(t) in increasing powers of
    t, where V(t) is the total volume of the class [omega_0] - t c_1 under
    the volume form omega^n / n!.
    """

    kind: str
    n: int
    volume0: float
    c1_pairing: float
    T: float
    volume_coeffs: tuple

    def volume(self, t) -> float:
        return float(sum(c * t**k for k, c in enumerate(self.volume_coeffs)))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "volume0": self.volume0,
            "c1_pairing": self.c1_pairing,
            "T": "inf" if math.isinf(self.T) else self.T,
            "volume_coeffs": list(self.volume_coeffs),
            "degeneration": degeneration_from_path(self),
        }


def class_path(geom, gauge=None) -> ClassPath:
    """Class data for the supported geometries.

    The gauge only changes representatives, never classes, so it is
    accepted for interface symmetry and otherwise ignored.
    """
    if geom.is_torus:
        # omega_0 = flat + ddbar phi0 is cohomologous to the flat metric; c_1 = 0
        return ClassPath(geom.kind, geom.n, geom.area, 0.0, math.inf, (geom.area,))
    c1 = 4.0 * math.pi  # Gauss-Bonnet
    return ClassPath(geom.kind, 1, geom.area, c1, geom.area / c1, (geom.area, -c1))


def max_time(geom, gauge=None) -> float:
    """T = sup{t : [omega_0] - t c_1 > 0}; +inf on the torus."""
    return class_path(geom, gauge).T


def class_volume(geom, gauge, t) -> float:
    if t < 0:
        raise ValueError("class volume is defined for t >= 0")
    return class_path(geom, gauge).volume(t)


def degeneration_from_path(cp: ClassPath) -> str:
    if math.isinf(cp.T):
        return NONE
    return COLLAPSED if cp.volume(cp.T) <= 1e-12 * cp.volume0 else NONCOLLAPSED


def degeneration_type(geom, gauge=None) -> str:
    """``none`` if T is infinite, ``collapsed`` if V(T) = 0, else ``noncollapsed``.

    ``noncollapsed`` (a nef-and-big limit class) is not reachable with the
    torus and the sphere.
    """
    return degeneration_from_path(class_path(geom, gauge))
