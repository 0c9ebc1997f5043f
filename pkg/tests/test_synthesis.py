import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transient_bor.excitation import C0, Waveform, gaussian_video, rect_radio, rect_video, waveform_spectrum, waveform_value
from transient_bor.fd_solver import FrequencyResponse
from transient_bor.synthesis import (FrequencyGrid, SynthesisError, TransientField, evaluate, minimum_window,
                                     plan_grid, synthesize)


def _unit(grid, fn=lambda f: np.ones_like(f, dtype=complex)):
    f = grid.solve_bins
    return FrequencyResponse(f, fn(f))


def test_plan_grid_rules():
    w = gaussian_video(3.35e-9)
    g = plan_grid(w, 5.385, 0.05)
    assert g.df == pytest.approx(1 / minimum_window(w, 5.385))
    assert g.N & (g.N - 1) == 0 and g.N * g.df >= 2 * g.band
    assert (g.N // 2) * g.df >= g.band
    assert g.band == pytest.approx(4.158e8, rel=1e-3)
    assert g.solve_bins[-1] <= g.band and g.solve_bins[-1] + g.df > g.band
    with pytest.raises(SynthesisError):
        plan_grid(w, 5.0, 0.5)          # band above c/(10 h)
    with pytest.raises(SynthesisError):
        plan_grid(w, 0.0, 0.05)
    imp = plan_grid(Waveform("impulse"), 1.0, 0.1)
    assert imp.band == pytest.approx(C0 / 1.0)
    with pytest.raises(SynthesisError):
        FrequencyGrid(100, 1e6, 1e8)


def test_identity_response_reproduces_gaussian():
    w = gaussian_video(3.35e-9)
    g = plan_grid(w, 1.0, 0.01, floor_db=-200)
    out = synthesize(_unit(g), w, g, h0=1.0)
    ref = waveform_value(w, out.t)
    assert np.max(np.abs(out.e - ref)) <= 1e-6 * np.max(ref)
    assert out.metadata["imag_residue"] <= 1e-10


def test_delay_theorem_within_one_sample():
    w = gaussian_video(2e-9)
    g = plan_grid(w, 1.0, 0.01, floor_db=-200)
    delta = 3.3e-9
    a = synthesize(_unit(g), w, g, h0=1.0)
    b = synthesize(_unit(g, lambda f: np.exp(-2j * np.pi * f * delta)), w, g, h0=1.0)
    shift = a.t[np.argmax(b.e)] - a.t[np.argmax(a.e)]
    assert abs(shift - delta) <= g.dt


def test_linearity_in_waveform():
    g = FrequencyGrid(512, 5e6, 1.2e9)
    f = g.solve_bins
    rng = np.random.default_rng(3)
    H = FrequencyResponse(f, rng.normal(size=f.size) + 1j * rng.normal(size=f.size))
    w1, w2 = rect_video(1e-9), rect_video(1e-9, amplitude=2.5)
    s1 = synthesize(H, w1, g).e
    s2 = synthesize(H, w2, g).e
    assert np.max(np.abs(s2 - 2.5 * s1)) <= 1e-12 * np.max(np.abs(s2))


def test_parseval_on_grid():
    g = FrequencyGrid(1024, 4e6, 2e9)
    w = rect_radio(1e-9, 2)
    f = g.solve_bins
    H = FrequencyResponse(f, np.exp(-2j * np.pi * f * 2e-9) / (1 + 1j * f / 5e8))
    s = synthesize(H, w, g)
    S = np.zeros(g.N // 2 + 1, complex)
    S[1:f.size + 1] = H.values * waveform_spectrum(w, f)
    S[-1] = S[-1].real
    e_f = (2 * np.sum(np.abs(S[1:-1]) ** 2) + np.abs(S[0]) ** 2 + np.abs(S[-1]) ** 2) * g.df
    e_t = np.sum(s.e**2) * g.dt
    assert e_t == pytest.approx(e_f, rel=1e-6)


def test_causal_response_has_no_precursor():
    w = gaussian_video(3.35e-9)
    g = plan_grid(w, 2.0, 0.02)
    # single scatterer 1 m in front of the origin: arrives at -2/c
    s = synthesize(_unit(g, lambda f: np.exp(2j * np.pi * f * 2 / C0)), w, g, delay=2 / C0 + 20e-9, h0=1.0)
    pre = s.t < -2 / C0
    assert pre.sum() > 10
    assert np.max(np.abs(s.e[pre])) < 0.01 * np.max(np.abs(s.e))


def test_evaluate_matches_synthesis_on_grid():
    w = gaussian_video(3.35e-9)
    g = plan_grid(w, 2.0, 0.05)
    H = _unit(g, lambda f: 0.3 * np.exp(-2j * np.pi * f * 4e-9))
    s = synthesize(H, w, g, delay=1e-9)
    idx = np.arange(0, g.N, 37)
    assert np.allclose(evaluate(H, w, g, s.t[idx]), s.e[idx], atol=1e-12 * np.abs(s.e).max())


def test_convention_and_grid_mismatch_rejected():
    w = gaussian_video(3.35e-9)
    g = plan_grid(w, 2.0, 0.05)
    bad = FrequencyResponse(g.solve_bins, np.ones(g.solve_bins.size), convention="exp(-iwt)")
    with pytest.raises(SynthesisError):
        synthesize(bad, w, g)
    with pytest.raises(SynthesisError):
        synthesize(FrequencyResponse(g.solve_bins * 1.01, np.ones(g.solve_bins.size)), w, g)
    with pytest.raises(SynthesisError):
        synthesize(FrequencyResponse(g.solve_bins[:-3], np.ones(g.solve_bins.size - 3)), w, g)


def test_taper_only_touches_top_of_band():
    g = FrequencyGrid(1024, 4e6, 2e9)
    w = rect_video(1e-9)
    H = _unit(g)
    a = synthesize(H, w, g, taper=False).e
    b = synthesize(H, w, g, taper=True).e
    assert not np.allclose(a, b)
    # tapering removes energy only
    assert np.sum(b**2) < np.sum(a**2)


def test_transient_csv_round_trip():
    t = np.linspace(-1e-9, 1e-9, 11)
    tf = TransientField(t, np.sin(t * 1e9), {"scenario": "x"})
    text = tf.to_csv()
    assert text.startswith("# t_s, e_scat_m\n")
    back = TransientField.from_csv(text)
    assert np.array_equal(back.t, t) and np.array_equal(back.e, tf.e)


@settings(max_examples=20, deadline=None)
@given(delay=st.floats(0, 50e-9), phase=st.floats(0, 6.28))
def test_realness_property(delay, phase):
    g = FrequencyGrid(256, 1e7, 1.2e9)
    f = g.solve_bins
    H = FrequencyResponse(f, np.exp(1j * phase - 2j * np.pi * f * delay))
    s = synthesize(H, rect_video(1e-9), g)
    assert s.metadata["imag_residue"] <= 1e-10
