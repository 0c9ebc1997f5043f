"""Incident plane-wave pulses with exact time samples and closed-form spectra.

Spectral convention: W(f) = integral of w(t) exp(-j 2 pi f t) dt, so the
suppressed time factor is exp(+j 2 pi f t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

C0 = 2.99792458e8
ETA0 = 376.730313668
MU0 = ETA0 / C0
EPS0 = 1.0 / (ETA0 * C0)

CONVENTION = "exp(+j2pift)"


@dataclass(frozen=True)
class Waveform:
    """One of the supported incident time signatures.

    kind: ``gaussian_video`` (tau is the FWHM, t0 the peak time),
    ``rect_video`` (on for 0 <= t <= tau), ``rect_radio`` (rect_video times
    sin(2 pi f_c t), f_c = n_cycles / tau) or ``impulse`` (unit spectrum,
    for testing).
    """

    kind: str
    tau: float = 1.0
    t0: float | None = None
    n_cycles: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian_video", "rect_video", "rect_radio", "impulse"):
            raise ValueError(f"unknown waveform kind {self.kind!r}")
        if not self.tau > 0:
            raise ValueError("pulse duration tau must be positive")
        if self.n_cycles < 0:
            raise ValueError("n_cycles must be >= 0")
        if self.kind == "gaussian_video":
            if self.t0 is None:
                object.__setattr__(self, "t0", 3.0 * self.tau)
            if self.t0 < 3.0 * self.tau * (1 - 1e-12):
                raise ValueError("gaussian peak time t0 must be >= 3 tau")

    @property
    def T(self) -> float:
        """Gaussian 1/e half width."""
        return self.tau / (2.0 * math.sqrt(math.log(2.0)))

    @property
    def f_c(self) -> float:
        return self.n_cycles / self.tau if self.kind == "rect_radio" else 0.0

    @property
    def support_end(self) -> float:
        """Time after which the waveform is (numerically) zero."""
        if self.kind == "gaussian_video":
            return self.t0 + 3.0 * self.tau
        if self.kind == "impulse":
            return 0.0
        return self.tau

    def scaled(self, factor: float) -> Waveform:
        return Waveform(self.kind, self.tau, self.t0, self.n_cycles, self.amplitude * factor)


def gaussian_video(tau: float, t0: float | None = None, amplitude: float = 1.0) -> Waveform:
    return Waveform("gaussian_video", tau, t0, 0.0, amplitude)


def rect_video(tau: float, amplitude: float = 1.0) -> Waveform:
    return Waveform("rect_video", tau, None, 0.0, amplitude)


def rect_radio(tau: float, n_cycles: float, amplitude: float = 1.0) -> Waveform:
    return Waveform("rect_radio", tau, None, n_cycles, amplitude)


def waveform_value(w: Waveform, t, ramp: float = 0.0):
    """Time samples of the waveform.

    The gaussian is truncated to zero for t < 0.  ``ramp`` > 0 replaces the
    rectangular on/off jumps by linear ramps of that duration centred on the
    jump (used only by the time-domain backend).
    """
    t = np.asarray(t, dtype=float)
    E0 = w.amplitude
    if w.kind == "gaussian_video":
        out = E0 * np.exp(-(((t - w.t0) / w.T) ** 2))
        return np.where(t >= 0.0, out, 0.0)
    if w.kind == "impulse":
        return np.where(t == 0.0, E0, 0.0)
    if ramp > 0.0:
        gate = np.clip((t + ramp / 2) / ramp, 0.0, 1.0) - np.clip((t - w.tau + ramp / 2) / ramp, 0.0, 1.0)
    else:
        gate = ((t >= 0.0) & (t <= w.tau)).astype(float)
    if w.kind == "rect_video":
        return E0 * gate
    return E0 * gate * np.sin(2 * np.pi * w.f_c * t)


def _rect_spectrum(tau: float, f):
    x = np.pi * f * tau
    return tau * np.sinc(f * tau) * np.exp(-1j * x)


def waveform_spectrum(w: Waveform, f):
    f = np.asarray(f, dtype=float)
    E0 = w.amplitude
    if w.kind == "gaussian_video":
        T = w.T
        return E0 * T * math.sqrt(math.pi) * np.exp(-((np.pi * f * T) ** 2)) * np.exp(-2j * np.pi * f * w.t0)
    if w.kind == "impulse":
        return E0 * np.ones_like(f, dtype=complex)
    if w.kind == "rect_video":
        return E0 * _rect_spectrum(w.tau, f)
    fc = w.f_c
    return E0 / 2j * (_rect_spectrum(w.tau, f - fc) - _rect_spectrum(w.tau, f + fc))


def effective_bandwidth(w: Waveform, floor_db: float = -60.0) -> float:
    """Frequency above which |W| stays below ``floor_db`` relative to its peak."""
    if floor_db >= 0:
        raise ValueError("floor_db must be negative")
    ratio = 10.0 ** (floor_db / 20.0)
    if w.kind == "gaussian_video":
        return math.sqrt(-math.log(ratio)) / (math.pi * w.T)
    if w.kind == "impulse":
        return math.inf
    f_video = 1.0 / (math.pi * w.tau * ratio)
    return f_video + w.f_c


@dataclass(frozen=True)
class IncidentPlaneWavePulse:
    k_hat: tuple[float, float, float]
    e_hat: tuple[float, float, float]
    waveform: Waveform

    def __post_init__(self):
        k = np.asarray(self.k_hat, float)
        e = np.asarray(self.e_hat, float)
        if abs(np.linalg.norm(k) - 1) > 1e-12 or abs(np.linalg.norm(e) - 1) > 1e-12:
            raise ValueError("k_hat and e_hat must be unit vectors")
        if abs(k @ e) > 1e-12:
            raise ValueError("polarization must be orthogonal to propagation direction")

    @property
    def h_hat(self) -> np.ndarray:
        return np.cross(self.k_hat, self.e_hat)

    def rotated(self, R: np.ndarray) -> IncidentPlaneWavePulse:
        k = R @ np.asarray(self.k_hat, float)
        e = R @ np.asarray(self.e_hat, float)
        e = e - (e @ k) * k
        return IncidentPlaneWavePulse(tuple(k / np.linalg.norm(k)), tuple(e / np.linalg.norm(e)), self.waveform)


def broadside_incidence(waveform: Waveform, e_parallel_axis: bool = True) -> IncidentPlaneWavePulse:
    e = (0.0, 0.0, 1.0) if e_parallel_axis else (0.0, 1.0, 0.0)
    return IncidentPlaneWavePulse((1.0, 0.0, 0.0), e, waveform)


def axial_incidence(waveform: Waveform) -> IncidentPlaneWavePulse:
    """Nose-on for a cone whose vertex points along +z."""
    return IncidentPlaneWavePulse((0.0, 0.0, -1.0), (1.0, 0.0, 0.0), waveform)
