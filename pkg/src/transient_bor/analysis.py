"""Envelopes, pulse-event detection and shape correlation for transient records."""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.signal import hilbert

EDGE_FRACTION = 0.05


@dataclass(frozen=True)
class PulseEvent:
    t_peak: float
    amplitude: float
    width: float
    start: int = 0
    stop: int = 0


def envelope(values, mode: str = "video") -> np.ndarray:
    """Non-negative envelope on the input grid.

    ``radio``: magnitude of the analytic signal.  ``video``: |s| smoothed by
    a centred 3-sample moving average.
    """
    s = np.asarray(values, dtype=float)
    if s.size == 0:
        raise ValueError("empty series")
    if mode == "radio":
        return np.abs(hilbert(s))
    if mode != "video":
        raise ValueError(f"unknown envelope mode {mode!r}")
    a = np.abs(s)
    if a.size < 3:
        return a.copy()
    out = np.convolve(a, np.ones(3) / 3.0, mode="same")
    out[0] = (a[0] + a[1]) / 2.0
    out[-1] = (a[-1] + a[-2]) / 2.0
    return out


def _crossing(env: np.ndarray, t: np.ndarray, i: int, level: float, step: int, limit: int) -> float:
    """Time where env falls to ``level`` walking from i in direction ``step``; clipped at ``limit``."""
    j = i
    while j != limit and env[j + step] >= level:
        j += step
    if j == limit:
        return t[j]
    a, b = env[j], env[j + step]
    frac = (a - level) / (a - b)
    return t[j] + frac * (t[j + step] - t[j])


def _bounds(env: np.ndarray, i: int, level: float, lo: int, hi: int) -> tuple[int, int]:
    a = i
    while a > lo and env[a - 1] >= level:
        a -= 1
    b = i
    while b < hi and env[b + 1] >= level:
        b += 1
    return a, b + 1


def detect_pulses(env, t, rel_threshold: float = 0.1, min_separation: float | None = None
                  ) -> list[PulseEvent]:
    """Local maxima of ``env`` above ``rel_threshold`` of its peak, merged within ``min_separation``.

    Each event carries its full width at half its own peak, measured no
    further than the valleys towards its neighbours.  ``start:stop`` index
    the samples around the event above 5% of its peak, within the same
    valleys.
    """
    if not 0 < rel_threshold < 1:
        raise ValueError("rel_threshold must be in (0, 1)")
    env = np.asarray(env, dtype=float)
    t = np.asarray(t, dtype=float)
    n = env.size
    if n < 3 or env.max() <= 0:
        return []
    dt = t[1] - t[0]
    if min_separation is None:
        min_separation = 2 * dt
    thr = rel_threshold * env.max()
    cand = [i for i in range(n)
            if env[i] >= thr
            and (i == 0 or env[i] > env[i - 1])
            and (i == n - 1 or env[i] >= env[i + 1])]
    # strongest first; earlier index breaks ties
    kept: list[int] = []
    for i in sorted(cand, key=lambda i: (-env[i], i)):
        if all(abs(t[i] - t[j]) >= min_separation for j in kept):
            kept.append(i)
    kept.sort()
    events = []
    for k, i in enumerate(kept):
        lo = 0 if k == 0 else kept[k - 1] + int(np.argmin(env[kept[k - 1]:i + 1]))
        hi = n - 1 if k == len(kept) - 1 else i + int(np.argmin(env[i:kept[k + 1] + 1]))
        half = env[i] / 2.0
        width = _crossing(env, t, i, half, 1, hi) - _crossing(env, t, i, half, -1, lo)
        a, b = _bounds(env, i, EDGE_FRACTION * env[i], lo, hi)
        events.append(PulseEvent(float(t[i]), float(env[i]), float(max(width, dt)), a, b))
    return events


def _ncc_max(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("zero-energy input")
    return float(np.max(np.correlate(a, b, mode="full")) / (na * nb))


def event_window(values, t, mode: str = "video", rel_threshold: float = 0.1,
                 min_separation: float | None = None) -> np.ndarray:
    """Envelope restricted to the first detected event."""
    env = envelope(values, mode)
    ev = detect_pulses(env, t, rel_threshold, min_separation)
    if not ev:
        raise ValueError("zero-energy input")
    return env[ev[0].start:ev[0].stop]


def envelope_correlation(ref, test, t_ref, t_test, mode: str = "video",
                         rel_threshold: float = 0.1, min_separation: float | None = None) -> float:
    """Best normalised cross-correlation over lags of the first-event envelopes.

    Both series must share one sample spacing.  The score lies in [0, 1].
    """
    a = event_window(ref, t_ref, mode, rel_threshold, min_separation)
    b = event_window(test, t_test, mode, rel_threshold, min_separation)
    return min(1.0, _ncc_max(b, a))


def waveform_correlation(ref, test) -> float:
    """Best |normalised cross-correlation| over lags of two signed waveforms."""
    a = np.asarray(ref, dtype=float)
    b = np.asarray(test, dtype=float)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("zero-energy input")
    return float(np.max(np.abs(np.correlate(b, a, mode="full"))) / (na * nb))


def events_to_csv(events: list[PulseEvent]) -> str:
    out = io.StringIO()
    out.write("# t_peak_s, amplitude, width_s\n")
    for e in events:
        out.write(f"{e.t_peak:.17g}, {e.amplitude:.17g}, {e.width:.17g}\n")
    return out.getvalue()
