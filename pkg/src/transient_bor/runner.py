"""Run a scenario through either backend and write its outputs."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import td_solver as td
from .analysis import PulseEvent, detect_pulses, envelope, events_to_csv
from .cache import ResponseCache
from .excitation import C0, ETA0
from .fd_solver import SOLVER_INVOCATIONS, SOLVER_REVISION, FrequencyResponse, Observation, sweep_many
from .geometry import discretize, revolve
from .plots import line_plot
from .scenarios import Scenario, check_derived_radius, first_arrival
from .synthesis import FrequencyGrid, TransientField, evaluate, plan_grid, synthesize

log = logging.getLogger(__name__)

FLUSH_EVERY = 16
CROSSVAL_TRANSITS = 5.0


@dataclass
class ProbeSeries:
    """Surface current at one probe; j_l along t_hat, j_t along phi_hat (A/m per V/m)."""

    name: str
    t: np.ndarray
    j_l: np.ndarray
    j_t: np.ndarray

    def to_csv(self, h_inc_peak: float) -> str:
        rec = td.SurfaceCurrentRecord(self.t, self.j_l, self.j_t, {"probe": self.name}, h_inc_peak)
        return rec.to_csv()


@dataclass
class ScenarioResult:
    scenario: Scenario
    files: dict[str, Path] = field(default_factory=dict)
    grid: FrequencyGrid | None = None
    responses: dict[str, FrequencyResponse] = field(default_factory=dict)
    far_field: TransientField | None = None
    probes: list[ProbeSeries] = field(default_factory=list)
    events: list[PulseEvent] = field(default_factory=list)
    td_far_field: TransientField | None = None
    td_probes: list[ProbeSeries] = field(default_factory=list)
    td_history: td.CurrentHistory | None = None
    solver_invocations: int = 0
    crossval: dict | None = None


def probe_points(s: Scenario) -> list[tuple[str, float, float, float]]:
    """Generatrix-centre probes on the cylinder wall, lit (phi = pi) and shadow (phi = 0)."""
    if s.geometry.kind != "cylinder":
        return []
    a = s.geometry.radius
    return [("lit", a, 0.0, math.pi), ("shadow", a, 0.0, 0.0)]


def envelope_mode(s: Scenario) -> str:
    return "radio" if s.pulse.kind == "rect_radio" else "video"


def find_events(s: Scenario, f: TransientField) -> list[PulseEvent]:
    """Events at 10% of peak, one per incident-pulse duration: merged within max(2 dt, tau)."""
    sep = max(2 * (f.t[1] - f.t[0]), s.pulse.tau)
    return detect_pulses(envelope(f.e, envelope_mode(s)), f.t, 0.1, sep)


def _family_fields(mesh, inc, obs: Observation) -> dict:
    return {"geometry": mesh.profile.fingerprint(), "mesh_h_max": mesh.h_max,
            "n_segments": mesh.n_segments, "k_hat": list(inc.k_hat), "e_hat": list(inc.e_hat),
            "observation": obs.fingerprint(), "formulation": "auto",
            "solver_revision": SOLVER_REVISION}


def fd_responses(s: Scenario, cache: ResponseCache | None) -> tuple[FrequencyGrid, dict[str, FrequencyResponse]]:
    profile = s.geometry.profile()
    mesh = discretize(profile, s.solver.h_max)
    inc = s.incident()
    grid = plan_grid(s.pulse, profile.diameter(), s.solver.h_max, s.solver.floor_db)
    obs = {"far_field": Observation()}
    for name, rho, z, phi in probe_points(s):
        obs[f"{name}_t"] = Observation("probe", rho, z, phi, "t")
        obs[f"{name}_phi"] = Observation("probe", rho, z, phi, "phi")
    names = list(obs)
    lookup = store = None
    fams = []
    if cache is not None:
        fams = [cache.family(_family_fields(mesh, inc, obs[n])) for n in names]
        solved = [0]

        def lookup(f):
            vals = [fam.get(f) for fam in fams]
            return None if any(v is None for v in vals) else vals

        def store(f, vals):
            for fam, v in zip(fams, vals):
                fam.put(f, v)
            solved[0] += 1
            if solved[0] % FLUSH_EVERY == 0:
                for fam in fams:
                    fam.flush()

    try:
        out = sweep_many(mesh, inc, [obs[n] for n in names], grid.solve_bins, lookup, store)
    finally:
        for fam in fams:
            fam.flush()
    return grid, dict(zip(names, out))


def _probe_series(name: str, jl: TransientField, jt: TransientField) -> ProbeSeries:
    return ProbeSeries(name, jl.t, jl.e, jt.e)


def run_fd(s: Scenario, result: ScenarioResult, cache: ResponseCache | None) -> None:
    before = SOLVER_INVOCATIONS.value
    grid, resp = fd_responses(s, cache)
    result.solver_invocations += SOLVER_INVOCATIONS.value - before
    result.grid = grid
    result.responses = resp
    r_ref = s.geometry.profile().bounding_radius()
    ff = synthesize(resp["far_field"], s.pulse, grid, delay=2 * r_ref / C0)
    ff.metadata.update({"scenario": s.name, "backend": "fd", "quantity": "r E_scat (copolar backscatter)"})
    result.far_field = ff
    result.events = find_events(s, ff)
    for name, *_ in probe_points(s):
        jl = synthesize(resp[f"{name}_t"], s.pulse, grid, delay=r_ref / C0)
        jt = synthesize(resp[f"{name}_phi"], s.pulse, grid, delay=r_ref / C0)
        result.probes.append(_probe_series(name, jl, jt))


def run_td(s: Scenario, result: ScenarioResult) -> None:
    if s.geometry.coating_epsilon is not None:
        raise td.TDError("the time-domain backend handles bare conductors only")
    profile = s.geometry.profile()
    pm = revolve(discretize(profile, s.solver.td_h_max), s.solver.n_phi)
    dt = td.explicit_dt(pm)
    tables = td.build_tables(pm, dt)
    cfg = td.MOTConfig(dt, s.solver.td_transits * profile.diameter() / C0,
                       smoothing_every=s.solver.smoothing_every)
    inc = s.incident()
    pts = probe_points(s)
    records, hist = td.run_mot(pm, tables, inc, cfg, [(r, z, p) for _, r, z, p in pts])
    result.td_history = hist
    result.td_probes = [ProbeSeries(n, rec.t, rec.j_l, rec.j_t) for (n, *_), rec in zip(pts, records)]
    ff = td.far_field_td(hist, -np.asarray(inc.k_hat), inc.e_hat)
    ff.metadata.update({"scenario": s.name, "backend": "td"})
    result.td_far_field = ff
    if not result.events:
        result.events = find_events(s, ff)


def nrms(test: np.ndarray, ref: np.ndarray) -> float:
    return float(np.linalg.norm(test - ref) / np.linalg.norm(ref))


def cross_validate(s: Scenario, result: ScenarioResult) -> dict:
    """TD vs FD-synthesized far field from first arrival to +5 (generatrix length)/c."""
    ff = result.td_far_field
    t0 = first_arrival(s)
    t1 = t0 + CROSSVAL_TRANSITS * s.geometry.profile().length / C0
    win = (ff.t >= t0) & (ff.t <= t1)
    fd = evaluate(result.responses["far_field"], s.pulse, result.grid, ff.t[win])
    out = {"nrms_far_field": nrms(ff.e[win], fd), "window_start_s": t0, "window_end_s": t1,
           "samples": int(win.sum())}
    for p in result.td_probes:
        ref = evaluate(result.responses[f"{p.name}_t"], s.pulse, result.grid, p.t)
        out[f"nrms_probe_{p.name}"] = nrms(p.j_l, ref)
    return out


def _write(path: Path, text: str, files: dict, key: str) -> None:
    path.write_text(text)
    files[key] = path


def emit_outputs(result: ScenarioResult, out_dir: Path) -> dict[str, Path]:
    s = result.scenario
    out_dir.mkdir(parents=True, exist_ok=True)
    files = result.files
    h_peak = s.pulse.amplitude / ETA0
    csv = "csv" in s.formats
    svg = "svg" in s.formats
    if csv:
        if result.far_field is not None:
            _write(out_dir / "transient.csv", result.far_field.to_csv(), files, "transient")
            _write(out_dir / "response.txt", result.responses["far_field"].to_text(), files, "response")
        if result.td_far_field is not None:
            _write(out_dir / "transient_td.csv", result.td_far_field.to_csv(), files, "transient_td")
        if result.far_field is not None or result.td_far_field is not None:
            _write(out_dir / "events.csv", events_to_csv(result.events), files, "events")
        for tag, probes in (("", result.probes), ("td_", result.td_probes)):
            for p in probes:
                _write(out_dir / f"currents_{tag}{p.name}.csv", p.to_csv(h_peak), files,
                       f"currents_{tag}{p.name}")
    if result.crossval is not None:
        text = "".join(f"{k}: {v!r}\n" for k, v in sorted(result.crossval.items()))
        _write(out_dir / "crossval.txt", text, files, "crossval")
    if svg:
        series = []
        if result.far_field is not None:
            series.append(("frequency domain", result.far_field.t, result.far_field.e))
        if result.td_far_field is not None:
            series.append(("time domain", result.td_far_field.t, result.td_far_field.e))
        if series:
            marks = []
            ref = result.far_field or result.td_far_field
            for ev in result.events:
                marks.append((ev.t_peak, float(np.interp(ev.t_peak, ref.t, ref.e))))
            _write(out_dir / "transient.svg",
                   line_plot(s.title or s.name, series, "time (ns)", "r E_scat / E0 (m)", marks, 1e9),
                   files, "transient_svg")
        cur = [(f"{p.name} J_l", p.t, p.j_l * ETA0) for p in result.probes]
        cur += [(f"{p.name} J_l (td)", p.t, p.j_l * ETA0) for p in result.td_probes]
        if cur:
            _write(out_dir / "currents.svg",
                   line_plot(f"{s.title or s.name}: surface current", cur, "time (ns)",
                             "J / |H_inc| peak", (), 1e9), files, "currents_svg")
    return files


def run_scenario(s: Scenario, out_dir: str | Path | None = None,
                 cache: ResponseCache | None = None) -> ScenarioResult:
    """FD path: grid, cached sweep, synthesis, pulse detection.  TD path: march and far field.

    ``backend = both`` also writes crossval.txt.  Pass ``cache=None`` to
    solve every frequency afresh.
    """
    check_derived_radius(s)
    if s.solver.backend in ("td", "both") and s.geometry.coating_epsilon is not None:
        raise td.TDError("the time-domain backend handles bare conductors only; "
                         "coated bodies need backend = fd")
    result = ScenarioResult(s)
    if s.solver.backend in ("fd", "both"):
        run_fd(s, result, cache)
    if s.solver.backend in ("td", "both"):
        run_td(s, result)
    if s.solver.backend == "both":
        result.crossval = cross_validate(s, result)
        log.info("cross-validation NRMS %.4f", result.crossval["nrms_far_field"])
    emit_outputs(result, Path(out_dir if out_dir is not None else s.output_dir))
    return result
