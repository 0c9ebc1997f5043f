import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transient_bor.analysis import (PulseEvent, detect_pulses, envelope, envelope_correlation,
                                    events_to_csv, waveform_correlation)


def _gauss(t, t0, fwhm):
    return np.exp(-4 * np.log(2) * ((t - t0) / fwhm) ** 2)


T = np.arange(-5e-9, 12e-9, 0.01e-9)


def test_two_gaussians():
    s = _gauss(T, 0.0, 1e-9) + 0.4 * _gauss(T, 6e-9, 1e-9)
    ev = detect_pulses(s, T, 0.1)
    assert len(ev) == 2
    assert ev[0].t_peak == pytest.approx(0.0, abs=0.02e-9)
    assert ev[1].t_peak == pytest.approx(6e-9, rel=0.02)
    assert ev[0].amplitude == pytest.approx(1.0, rel=0.02)
    assert ev[1].amplitude == pytest.approx(0.4, rel=0.02)
    for e in ev:
        assert e.width == pytest.approx(1e-9, rel=0.02)


def test_flat_and_single():
    assert detect_pulses(np.zeros(100), T[:100]) == []
    ev = detect_pulses(_gauss(T, 2e-9, 1e-9), T)
    assert len(ev) == 1 and ev[0].t_peak == pytest.approx(2e-9, abs=0.01e-9)
    with pytest.raises(ValueError):
        detect_pulses(_gauss(T, 0, 1e-9), T, 1.5)


def test_merge_keeps_larger():
    s = _gauss(T, 0.0, 0.3e-9) + 0.8 * _gauss(T, 0.5e-9, 0.3e-9)
    ev = detect_pulses(s, T, 0.1, min_separation=1e-9)
    assert len(ev) == 1 and ev[0].t_peak == pytest.approx(0.0, abs=0.05e-9)


def test_radio_envelope():
    t = np.arange(0, 200e-9, 0.05e-9)
    env = envelope(2.0 * np.sin(2 * np.pi * 1e9 * t), "radio")
    mid = slice(len(t) // 10, -len(t) // 10)
    assert np.max(np.abs(env[mid] - 2.0)) <= 0.04
    assert np.all(envelope(np.zeros(50), "radio") == 0)
    assert np.allclose(envelope(3 * np.cos(t * 1e9), "video"), 3 * envelope(np.cos(t * 1e9), "video"))
    with pytest.raises(ValueError):
        envelope([], "video")
    with pytest.raises(ValueError):
        envelope([1.0, 2.0], "fancy")


def test_correlation_self_and_delay():
    s = _gauss(T, 0.0, 1e-9)
    assert envelope_correlation(s, s, T, T) == pytest.approx(1.0, abs=1e-12)
    d = np.roll(s, 200)
    assert envelope_correlation(s, d, T, T) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        envelope_correlation(s, np.zeros_like(s), T, T)


def test_gaussian_vs_rectangle_regression():
    # brute-force normalised correlation of the two shapes as the oracle
    dt = 0.01e-9
    t = np.arange(-3e-9, 3e-9, dt)
    g = _gauss(t, 0, 1e-9)
    r = (np.abs(t) <= 0.5e-9).astype(float)
    best = max(np.sum(g * np.roll(r, k)) for k in range(-100, 101))
    oracle = best / (np.linalg.norm(g) * np.linalg.norm(r))
    assert waveform_correlation(g, r) == pytest.approx(oracle, rel=1e-12)
    assert 0.9 < oracle < 1.0


def test_events_csv():
    text = events_to_csv([PulseEvent(1e-9, 0.5, 2e-10)])
    assert text.splitlines()[0] == "# t_peak_s, amplitude, width_s"
    assert len(text.splitlines()) == 2


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(1e-3, 1e3), a2=st.floats(0.05, 0.95), sep=st.floats(2e-9, 8e-9))
def test_scaling_invariance_and_threshold_monotonicity(scale, a2, sep):
    s = _gauss(T, 0.0, 1e-9) + a2 * _gauss(T, sep, 1e-9)
    ev = detect_pulses(s, T, 0.1)
    ev2 = detect_pulses(scale * s, T, 0.1)
    assert [e.t_peak for e in ev] == [e.t_peak for e in ev2]
    assert np.allclose([scale * e.amplitude for e in ev], [e.amplitude for e in ev2])
    counts = [len(detect_pulses(s, T, thr)) for thr in (0.05, 0.2, 0.5, 0.9)]
    assert counts == sorted(counts, reverse=True)
