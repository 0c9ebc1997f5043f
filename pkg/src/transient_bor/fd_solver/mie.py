"""Exact backscatter of a perfectly conducting sphere (Mie series)."""
from __future__ import annotations

import math

import numpy as np
from scipy.special import spherical_jn, spherical_yn

from ..excitation import C0


def mie_n_max(ka: float) -> int:
    return int(math.ceil(ka + 4.0 * ka ** (1.0 / 3.0) + 2.0))


def mie_backscatter_amplitude(a: float, f: float, n_max: int | None = None) -> complex:
    """Sum over n of (-1)^n (n + 1/2)(b_n - a_n) for a PEC sphere."""
    if not f > 0:
        raise ValueError("frequency must be positive")
    ka = 2 * math.pi * f * a / C0
    n_max = mie_n_max(ka) if n_max is None else n_max
    n = np.arange(1, n_max + 1)
    jn = spherical_jn(n, ka)
    jnp = spherical_jn(n, ka, derivative=True)
    yn = spherical_yn(n, ka)
    ynp = spherical_yn(n, ka, derivative=True)
    hn = jn - 1j * yn
    # derivative of x h_n(x) and x j_n(x)
    xhn_p = hn + ka * (jnp - 1j * ynp)
    xjn_p = jn + ka * jnp
    a_n = xjn_p / xhn_p
    b_n = jn / hn
    return complex(np.sum((-1.0) ** n * (n + 0.5) * (b_n - a_n)))


def mie_rcs_oracle(a: float, f: float, n_max: int | None = None) -> float:
    """Monostatic radar cross section (m^2) of a PEC sphere of radius ``a``."""
    k = 2 * math.pi * f / C0
    s = mie_backscatter_amplitude(a, f, n_max)
    return float(4 * math.pi / k**2 * abs(s) ** 2)
