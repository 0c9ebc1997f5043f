"""Frequency grid planning and inverse-FFT synthesis of transient fields."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .excitation import C0, CONVENTION, Waveform, effective_bandwidth, waveform_spectrum
from .fd_solver.response import FrequencyResponse

REALNESS_TOL = 1e-10


class SynthesisError(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform FFT grid: N samples, bin spacing df.

    ``band`` is the highest frequency that carries signal; bins above it
    are zero-filled, so only bins up to ``band`` need a solve.
    """

    N: int
    df: float
    band: float

    def __post_init__(self):
        if self.N < 2 or self.N & (self.N - 1):
            raise SynthesisError(f"N must be a power of two, got {self.N}")
        if not self.df > 0:
            raise SynthesisError("df must be positive")

    @property
    def f_max(self) -> float:
        return self.N // 2 * self.df

    @property
    def T(self) -> float:
        return 1.0 / self.df

    @property
    def dt(self) -> float:
        return 1.0 / (self.N * self.df)

    @property
    def positive_bins(self) -> np.ndarray:
        return self.df * np.arange(1, self.N // 2 + 1)

    @property
    def solve_bins(self) -> np.ndarray:
        n = min(self.N // 2, int(math.floor(self.band / self.df * (1 + 1e-12))))
        return self.df * np.arange(1, n + 1)


def minimum_window(w: Waveform, D: float) -> float:
    return (w.t0 or 0.0) + w.tau + 10.0 * D / C0


def plan_grid(w: Waveform, D: float, h_mesh: float, floor_db: float = -60.0,
              t_min: float | None = None) -> FrequencyGrid:
    """Grid resolving ``w`` down to ``floor_db`` over a window of at least ``t_min``.

    The default window covers the pulse plus ten transits of a body of
    diameter ``D``.  The band may not exceed c/(10 h_mesh), except for the
    test impulse, whose band is set to that cap.
    """
    if not D > 0:
        raise SynthesisError("body diameter D must be positive")
    cap = C0 / (10.0 * h_mesh)
    if w.kind == "impulse":
        band = cap
    else:
        band = effective_bandwidth(w, floor_db)
        if band > cap * (1 + 1e-12):
            raise SynthesisError(
                f"pulse band {band:.4g} Hz exceeds the mesh limit c/(10 h) = {cap:.4g} Hz; "
                f"refine the mesh to h <= {C0 / (10 * band):.4g} m")
    T = minimum_window(w, D) if t_min is None else max(t_min, minimum_window(w, D))
    df = 1.0 / T
    N = 2
    while N * df < 2.0 * band:
        N *= 2
    return FrequencyGrid(N, df, band)


@dataclass
class TransientField:
    """Range-normalised scattered field r E_scat per unit incident field."""

    t: np.ndarray
    e: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("# t_s, e_scat_m\n")
        for key in sorted(self.metadata):
            out.write(f"# {key}: {json.dumps(self.metadata[key], sort_keys=True)}\n")
        for t, e in zip(self.t, self.e):
            out.write(f"{t:.17g}, {e:.17g}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> TransientField:
        rows = [[float(x) for x in ln.split(",")] for ln in text.splitlines()
                if ln.strip() and not ln.startswith("#")]
        arr = np.array(rows).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])


def _spectrum(H: FrequencyResponse, w: Waveform, grid: FrequencyGrid, taper: bool,
              h0: complex) -> np.ndarray:
    """One-sided product spectrum on bins 0..N/2, zero-filled past the response grid."""
    if H.convention != CONVENTION:
        raise SynthesisError(f"convention mismatch: response uses {H.convention!r}, "
                             f"synthesis expects {CONVENTION!r}")
    bins = grid.positive_bins
    n = H.frequencies.size
    if n > bins.size or not np.allclose(H.frequencies, bins[:n], rtol=1e-12, atol=0):
        raise SynthesisError("response grid does not match the planned positive bins")
    if n < grid.solve_bins.size:
        raise SynthesisError("response grid stops short of the planned band")
    S = np.zeros(grid.N // 2 + 1, dtype=complex)
    S[0] = h0 * waveform_spectrum(w, 0.0)
    S[1:n + 1] = H.values * waveform_spectrum(w, H.frequencies)
    if taper:
        f = grid.df * np.arange(grid.N // 2 + 1)
        f1 = 0.8 * grid.band
        x = np.clip((f - f1) / (grid.band - f1), 0.0, 1.0)
        S *= 0.5 * (1 + np.cos(np.pi * x))
    return S


def synthesize(H: FrequencyResponse, w: Waveform, grid: FrequencyGrid, delay: float = 0.0,
               taper: bool = False, h0: float = 0.0) -> TransientField:
    """Inverse transform of H(f) W(f) on ``grid``.

    Output sample n sits at physical time n dt - ``delay``; pass a delay of
    at least the largest advance in H so nothing wraps to the end of the
    record.  ``h0`` is the response at DC, zero for a scattered far field.
    """
    S = _spectrum(H, w, grid, taper, h0)
    N = grid.N
    f = grid.df * np.arange(N // 2 + 1)
    S = S * np.exp(-2j * np.pi * f * delay)
    full = np.zeros(N, dtype=complex)
    full[:N // 2 + 1] = S
    full[N // 2] = S[N // 2].real
    full[N // 2 + 1:] = np.conj(S[1:N // 2][::-1])
    s = np.fft.ifft(full) * N * grid.df
    peak = np.abs(s).max()
    residue = float(np.abs(s.imag).max() / peak) if peak > 0 else 0.0
    if residue > REALNESS_TOL:
        raise SynthesisError("synthesized signal is not real to 1e-10")
    t = grid.dt * np.arange(N) - delay
    meta = dict(H.metadata)
    meta.update({"waveform": w.kind, "tau_s": w.tau, "N": N, "df_hz": grid.df, "delay_s": delay,
                 "imag_residue": residue})
    return TransientField(t, s.real.copy(), meta)


def evaluate(H: FrequencyResponse, w: Waveform, grid: FrequencyGrid, t,
             taper: bool = False, h0: float = 0.0) -> np.ndarray:
    """Band-limited value of the synthesized field at arbitrary physical times ``t``."""
    S = _spectrum(H, w, grid, taper, h0)
    t = np.asarray(t, dtype=float)
    f = grid.df * np.arange(S.size)
    wgt = np.full(S.size, 2.0)
    wgt[0] = 1.0
    wgt[-1] = 1.0
    Sw = np.where(np.arange(S.size) == S.size - 1, S.real, S) * wgt * grid.df
    out = np.empty(t.shape)
    for i, ti in np.ndenumerate(t):
        out[i] = float(np.real(Sw @ np.exp(2j * np.pi * f * ti)))
    return out
