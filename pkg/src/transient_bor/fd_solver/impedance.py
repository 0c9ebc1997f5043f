"""Leontovich surface impedance of a dielectric layer on a conductor."""
from __future__ import annotations

import math

from ..excitation import C0, ETA0

POLE_GUARD = 1e-3


class ImpedancePoleError(ValueError):
    """The layer is electrically a quarter-wave (plus half-waves) thick."""


def pole_distance(epsilon: float, d: float, f: float) -> float:
    """Distance of k1*d from the nearest pi/2 + n*pi."""
    x = 2 * math.pi * f * math.sqrt(epsilon) / C0 * d
    return abs(math.remainder(x - math.pi / 2, math.pi))


def layer_surface_impedance(epsilon: float, d: float, f: float) -> complex:
    """Zs = j eta1 tan(k1 d) for a layer of permittivity ``epsilon`` and thickness ``d``."""
    if not epsilon >= 1:
        raise ValueError("epsilon must be >= 1")
    if not d > 0:
        raise ValueError("layer thickness d must be positive")
    if not f >= 0:
        raise ValueError("frequency must be non-negative")
    n = math.sqrt(epsilon)
    k1d = 2 * math.pi * f * n / C0 * d
    if pole_distance(epsilon, d, f) < POLE_GUARD:
        raise ImpedancePoleError(
            f"k1*d = {k1d:.6g} is within {POLE_GUARD:g} of a tangent pole; "
            "use a thinner layer or shift the frequency grid")
    return 1j * (ETA0 / n) * math.tan(k1d)
