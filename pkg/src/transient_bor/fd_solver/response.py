"""Frequency sweeps and the FrequencyResponse record."""
from __future__ import annotations

import hashlib
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..excitation import C0, CONVENTION, IncidentPlaneWavePulse
from ..geometry import SegmentMesh
from .bor import (Basis, SolverError, assemble_and_solve, make_basis, monostatic, probe_current,
                  required_modes)
from .impedance import ImpedancePoleError, layer_surface_impedance

log = logging.getLogger(__name__)

PERTURBATION = 1e-3
MIN_SEG_PER_LAMBDA = 6.0


class _Counter:
    """Process-wide count of single-frequency solves."""

    def __init__(self):
        self.value = 0

    def increment(self) -> None:
        self.value += 1

    def reset(self) -> None:
        self.value = 0


SOLVER_INVOCATIONS = _Counter()


@dataclass(frozen=True)
class Observation:
    """What a response samples.

    ``kind='monostatic'``: copolarized backscatter H in meters.
    ``kind='probe'``: surface current component (``'t'`` or ``'phi'``) at
    (rho, z, phi), in A/m per V/m.
    """

    kind: str = "monostatic"
    rho: float = 0.0
    z: float = 0.0
    phi: float = 0.0
    component: str = "t"

    def __post_init__(self):
        if self.kind not in ("monostatic", "probe"):
            raise ValueError(f"unknown observation kind {self.kind!r}")
        if self.component not in ("t", "phi"):
            raise ValueError("probe component must be 't' or 'phi'")

    def fingerprint(self) -> dict:
        if self.kind == "monostatic":
            return {"kind": "monostatic"}
        return {"kind": "probe", "rho": self.rho, "z": self.z, "phi": self.phi,
                "component": self.component}


@dataclass
class FrequencyResponse:
    frequencies: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)
    convention: str = CONVENTION

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.frequencies.shape != self.values.shape or self.frequencies.ndim != 1:
            raise ValueError("frequencies and values must be 1-D arrays of equal length")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequency grid must be strictly ascending")

    def __len__(self) -> int:
        return self.frequencies.size

    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"# convention: {self.convention}\n")
        for key in sorted(self.metadata):
            out.write(f"# {key}: {json.dumps(self.metadata[key], sort_keys=True)}\n")
        out.write("# f_hz, re_H_m, im_H_m\n")
        for f, v in zip(self.frequencies, self.values):
            out.write(f"{f:.17g}, {v.real:.17g}, {v.imag:.17g}\n")
        return out.getvalue()

    @classmethod
    def from_text(cls, text: str) -> FrequencyResponse:
        meta = {}
        convention = None
        rows = []
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, sep, val = body.partition(": ")
                if not sep:
                    continue
                if key == "convention":
                    convention = val
                else:
                    meta[key] = json.loads(val)
                continue
            rows.append([float(x) for x in line.split(",")])
        if convention is None:
            raise ValueError("response record has no convention tag")
        arr = np.array(rows, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1] + 1j * arr[:, 2], meta, convention)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def _observe(sol, obs: Observation) -> complex:
    if obs.kind == "monostatic":
        return monostatic(sol)
    r = probe_current(sol, obs.rho, obs.z, obs.phi)
    return r.j_t if obs.component == "t" else r.j_phi


def probe_current_response(sol, rho: float, z: float, phi: float, component: str = "t") -> complex:
    return _observe(sol, Observation("probe", rho, z, phi, component))


def surface_impedance_for(mesh: SegmentMesh, f: float) -> complex:
    c = mesh.profile.coating
    if c is None:
        return 0.0
    return layer_surface_impedance(c.epsilon, c.thickness_d, f)


def solve_point(basis: Basis, incidence: IncidentPlaneWavePulse, observations, f: float,
                formulation: str = "auto") -> list[complex]:
    """Observed values at one frequency.

    The frequency is nudged by 0.1% (up to twice) off impedance poles and
    ill-conditioned points; the nudge is logged.
    """
    for attempt in range(3):
        f_eff = f * (1 + PERTURBATION) ** attempt
        try:
            zs = surface_impedance_for(basis.mesh, f_eff)
            SOLVER_INVOCATIONS.increment()
            sol = assemble_and_solve(basis, None, f_eff, zs, incidence.k_hat, incidence.e_hat,
                                     check_sampling=False, formulation=formulation)
        except (ImpedancePoleError, SolverError) as exc:
            if isinstance(exc, SolverError) and "ill-conditioned" not in str(exc):
                raise
            log.warning("%s; retrying at %.9g Hz", exc, f * (1 + PERTURBATION) ** (attempt + 1))
            continue
        if attempt:
            log.warning("value for %.9g Hz taken from perturbed frequency %.9g Hz", f, f_eff)
        return [_observe(sol, o) for o in observations]
    raise SolverError(f"no well-posed solve near {f:.9g} Hz after perturbation")


def response_metadata(mesh: SegmentMesh, incidence: IncidentPlaneWavePulse, obs: Observation,
                      f_max: float) -> dict:
    k = 2 * math.pi * f_max / C0
    return {
        "geometry_hash": mesh.profile.content_hash(),
        "mesh_h_max": mesh.h_max,
        "n_segments": mesh.n_segments,
        "n_modes": len(required_modes(k, float(mesh.nodes[:, 0].max()), incidence.k_hat)),
        "incidence": {"k_hat": list(incidence.k_hat), "e_hat": list(incidence.e_hat)},
        "observation": obs.fingerprint(),
    }


def check_mesh_for(mesh: SegmentMesh, f_max: float) -> None:
    spl = C0 / f_max / mesh.lengths.max()
    if spl < MIN_SEG_PER_LAMBDA:
        raise SolverError(f"mesh too coarse: {spl:.2f} segments per wavelength at {f_max:.4g} Hz "
                          f"(need >= {MIN_SEG_PER_LAMBDA:g}); reduce h_max")
    if spl < 10:
        log.warning("mesh has only %.1f segments per wavelength at %.4g Hz", spl, f_max)


def sweep_many(mesh: SegmentMesh, incidence: IncidentPlaneWavePulse, observations, f_grid,
               lookup: Callable[[float], list | None] | None = None,
               store: Callable[[float, list], None] | None = None,
               formulation: str = "auto") -> list[FrequencyResponse]:
    """One response per observation on ``f_grid`` (ascending, all > 0), one solve per frequency.

    ``lookup(f)`` may return cached values (one per observation) to skip a
    solve; ``store(f, values)`` receives freshly computed ones.
    """
    observations = list(observations)
    f_grid = np.asarray(f_grid, dtype=float)
    if f_grid.ndim != 1 or f_grid.size == 0:
        raise ValueError("frequency grid must be a non-empty 1-D array")
    if f_grid[0] <= 0 or np.any(np.diff(f_grid) <= 0):
        raise ValueError("frequency grid must be strictly ascending and positive (DC is implicit)")
    check_mesh_for(mesh, float(f_grid[-1]))
    basis = None
    values = np.empty((len(observations), f_grid.size), dtype=complex)
    for i, f in enumerate(f_grid):
        v = lookup(float(f)) if lookup is not None else None
        if v is None:
            if basis is None:
                basis = make_basis(mesh)
            v = solve_point(basis, incidence, observations, float(f), formulation)
            if store is not None:
                store(float(f), v)
        values[:, i] = v
    return [FrequencyResponse(f_grid.copy(), values[j],
                              response_metadata(mesh, incidence, o, float(f_grid[-1])))
            for j, o in enumerate(observations)]


def sweep(mesh: SegmentMesh, incidence: IncidentPlaneWavePulse, obs: Observation, f_grid,
          formulation: str = "auto") -> FrequencyResponse:
    """Sample H for one observation on ``f_grid``."""
    return sweep_many(mesh, incidence, [obs], f_grid, formulation=formulation)[0]
