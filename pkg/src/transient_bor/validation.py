"""Self-check suites behind ``transient-bor validate``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .excitation import C0, Waveform, gaussian_video, waveform_spectrum, waveform_value
from .fd_solver import FrequencyResponse, assemble_and_solve, make_basis, mie_rcs_oracle, monostatic, rcs_from_H
from .geometry import discretize, make_shape
from .synthesis import FrequencyGrid, plan_grid, synthesize

MIE_KA = (0.5, 1.0, 2.0, 5.0)
MIE_TOL = 0.02


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def mie_suite(radius: float = 1.0, seg_per_wavelength: float = 20.0) -> list[Check]:
    """Sphere monostatic RCS against the Mie series at the standard ka points."""
    sphere = make_shape("sphere", radius=radius)
    out = []
    for ka in MIE_KA:
        f = ka * C0 / (2 * np.pi * radius)
        lam = C0 / f
        h = min(lam / seg_per_wavelength, radius / 20)
        basis = make_basis(discretize(sphere, h))
        sol = assemble_and_solve(basis, None, f, 0.0, (0.0, 0.0, -1.0), (1.0, 0.0, 0.0))
        got = rcs_from_H(monostatic(sol))
        ref = mie_rcs_oracle(radius, f)
        err = abs(got - ref) / ref
        out.append(Check(f"mie ka={ka:g}", err <= MIE_TOL,
                         f"sigma={got:.6g} m^2, Mie={ref:.6g} m^2, rel err={err:.2e}"))
    return out


def _identity_error() -> float:
    w = gaussian_video(3.35e-9)
    grid = plan_grid(w, 1.0, 0.01, floor_db=-200.0)
    H = FrequencyResponse(grid.solve_bins, np.ones(grid.solve_bins.size))
    tr = synthesize(H, w, grid, h0=1.0)
    ref = waveform_value(w, tr.t)
    return float(np.abs(tr.e - ref).max() / np.abs(ref).max())


def _delay_shift() -> float:
    w = gaussian_video(3.35e-9)
    grid = plan_grid(w, 1.0, 0.01, floor_db=-200.0)
    H = FrequencyResponse(grid.solve_bins, np.ones(grid.solve_bins.size))
    d = 7 * grid.dt
    Hd = FrequencyResponse(grid.solve_bins, np.exp(-2j * np.pi * grid.solve_bins * d))
    a = synthesize(H, w, grid, h0=1.0)
    b = synthesize(Hd, w, grid, h0=1.0)
    shift = (np.argmax(b.e) - np.argmax(a.e)) * grid.dt
    return abs(shift - d) / grid.dt


def _parseval_error() -> float:
    w = gaussian_video(3.35e-9)
    dt = w.tau / 200
    t = np.arange(0, 2 * w.t0, dt)
    x = waveform_value(w, t)
    f = np.fft.rfftfreq(20 * t.size, dt)
    X = waveform_spectrum(w, f)
    e_t = np.sum(x**2) * dt
    df = f[1] - f[0]
    e_f = 2 * np.sum(np.abs(X[1:]) ** 2) * df + np.abs(X[0]) ** 2 * df
    return abs(e_t - e_f) / e_t


def _realness() -> float:
    w = Waveform("rect_video", 1e-9)
    grid = FrequencyGrid(256, 1e7, 1.28e9)
    f = grid.solve_bins
    H = FrequencyResponse(f, np.exp(-2j * np.pi * f * 3e-9) * (1 + 0.3j))
    tr = synthesize(H, w, grid)
    return float(tr.metadata.get("imag_residue", 0.0))


def properties_suite() -> list[Check]:
    e1 = _identity_error()
    e2 = _delay_shift()
    e3 = _realness()
    e4 = _parseval_error()
    return [
        Check("identity response", e1 <= 1e-6, f"max rel error {e1:.2e}"),
        Check("delay theorem", e2 <= 1.0, f"shift error {e2:.3g} samples"),
        Check("realness", e3 <= 1e-10, f"imaginary residue {e3:.2e}"),
        Check("parseval", e4 <= 1e-6, f"relative mismatch {e4:.2e}"),
    ]


SUITES = {"mie": mie_suite, "properties": properties_suite}
