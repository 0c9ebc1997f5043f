"""Explicit marching-on-in-time solver for the time-domain magnetic-field equation.

Each patch carries the two tangential current components (t_hat, phi_hat).
The update is

    J_p(t) = 2 n_p x H_inc(r_p, t)
             + 1/(2 pi) n_p x sum_q A_q [dJ_q/dt / (c R) + J_q / R^2](t - R/c) x R_hat

with R_hat pointing from q to p.  Because the body is a body of revolution
the coupling between (segment s, azimuth j) and (segment s', azimuth j')
depends only on (s, s', j' - j), which is all the tables store.

Pairs closer than a few patch sizes are integrated over the source patch,
and the self patch contributes an instantaneous 2x2 term (nonzero only on
curved patches), which is folded in by a per-segment inverse.

Time axis: simulation step n sits at physical time n dt - R_ref/c, where
R_ref is the bounding radius, so the incident front never reaches the body
before step 0.
"""
from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .excitation import C0, ETA0, MU0, IncidentPlaneWavePulse, waveform_value
from .geometry import PatchMesh
from .synthesis import TransientField

log = logging.getLogger(__name__)

EXPLICIT_SAFETY = 0.8
# the central difference reads half a step earlier, so it needs c dt < spacing / 1.5
CENTRAL_SAFETY = 0.64
ZERO_COUPLING = 1e-12
DIVERGENCE_FACTOR = 1e6
# pairs closer than NEAR_FACTOR source-patch sizes are integrated over the source patch
NEAR_FACTOR = 3.0
NEAR_POINTS = 8
SELF_POINTS = 32


class TDError(RuntimeError):
    pass


@dataclass(frozen=True)
class MOTConfig:
    dt: float
    end_time: float
    smoothing: str = "three_point_average"
    smoothing_every: int = 2
    ramp_rect_edges: bool = True

    def __post_init__(self):
        if not self.dt > 0 or not self.end_time > 0:
            raise ValueError("dt and end_time must be positive")
        if self.smoothing not in ("off", "three_point_average"):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")
        if self.smoothing_every < 1:
            raise ValueError("smoothing_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.end_time / self.dt))


def reference_radius(mesh: PatchMesh) -> float:
    return float(np.linalg.norm(mesh.centroids, axis=1).max())


def _pair_geometry(mesh: PatchMesh):
    """Geometry for observation patches at azimuth index 0 against every source patch."""
    S = mesh.segments.n_segments
    nphi = mesh.n_phi
    obs = np.arange(S) * nphi
    rp = mesh.centroids[obs][:, None, :]                      # (S, 1, 3)
    rq = mesh.centroids.reshape(S, nphi, 3)[None, :, :, :]   # (1, S, nphi, 3)
    d = rp[:, :, None, :] - rq                                # (S, S, nphi, 3)
    R = np.linalg.norm(d, axis=-1)
    return obs, d, R


def _couplings(mesh: PatchMesh, obs: np.ndarray, d: np.ndarray, R: np.ndarray):
    """C[s, s', dj, a, b] = e_a(p) . [e_b(q)(n_p . R_hat) - R_hat (n_p . e_b(q))]."""
    S = mesh.segments.n_segments
    nphi = mesh.n_phi
    with np.errstate(invalid="ignore", divide="ignore"):
        Rh = d / R[..., None]
    n_p = mesh.normals[obs][:, None, None, :]
    e_p = np.stack([mesh.t_hat[obs], mesh.phi_hat[obs]], axis=1)[:, None, None]   # (S,1,1,2,3)
    e_q = np.stack([mesh.t_hat, mesh.phi_hat], axis=1).reshape(S, nphi, 2, 3)[None]  # (1,S,nphi,2,3)
    n_dot_R = np.sum(n_p * Rh, axis=-1)                       # (S,S,nphi)
    n_dot_eq = np.einsum("pk,sjbk->psjb", mesh.normals[obs], e_q[0])  # (S,S,nphi,2)
    ep_dot_eq = np.einsum("pak,sjbk->psjab", e_p[:, 0, 0], e_q[0])
    ep_dot_R = np.einsum("pak,psjk->psja", e_p[:, 0, 0], Rh)
    C = ep_dot_eq * n_dot_R[..., None, None] - ep_dot_R[..., :, None] * n_dot_eq[..., None, :]
    return C


def _patch_integrals(mesh: PatchMesh, s_obs, s_src, dj, m: int):
    """Source-patch integrals of C/R^2 and C/R over an m x m midpoint grid.

    Returns (static, deriv), each (n, 2, 2), including the 1/(2 pi) factor.
    Source tangent vectors turn with the azimuth inside the patch.
    """
    seg = mesh.segments
    nphi = mesh.n_phi
    dphi = 2 * np.pi / nphi
    g = (np.arange(m) + 0.5) / m
    obs = np.asarray(s_obs) * nphi
    rp = mesh.centroids[obs]
    n_p = mesh.normals[obs]
    e_p = np.stack([mesh.t_hat[obs], mesh.phi_hat[obs]], axis=1)       # (n,2,3)
    a = seg.nodes[np.asarray(s_src)]
    b = seg.nodes[np.asarray(s_src) + 1]
    rho = a[:, None, 0] + (b[:, 0] - a[:, 0])[:, None] * g             # (n,m)
    z = a[:, None, 1] + (b[:, 1] - a[:, 1])[:, None] * g
    tan = seg.tangents[np.asarray(s_src)]
    phi0 = mesh.phi[: nphi][np.asarray(dj)] - mesh.phi[0]               # observation sits at phi_0
    ph = mesh.phi[0] + phi0[:, None] + (g - 0.5) * dphi                 # (n,m)
    c, sn = np.cos(ph)[:, None, :], np.sin(ph)[:, None, :]              # (n,1,m)
    rq = np.stack([rho[:, :, None] * c, rho[:, :, None] * sn,
                   np.broadcast_to(z[:, :, None], rho.shape + (m,))], axis=-1)  # (n,m,m,3)
    tq = np.stack([tan[:, 0, None, None] * c, tan[:, 0, None, None] * sn,
                   np.broadcast_to(tan[:, 1, None, None], c.shape)], axis=-1)
    tq = np.broadcast_to(tq, rq.shape)
    fq = np.broadcast_to(np.stack([-sn, c, np.zeros_like(c)], axis=-1), rq.shape)
    e_q = np.stack([tq, fq], axis=-2)                                   # (n,m,m,2,3)
    dA = (rho * seg.lengths[np.asarray(s_src)][:, None] / m)[:, :, None] * (dphi / m)
    d = rp[:, None, None, :] - rq
    R = np.linalg.norm(d, axis=-1)
    Rh = d / R[..., None]
    n_dot_R = np.einsum("nk,nijk->nij", n_p, Rh)
    n_dot_eq = np.einsum("nk,nijbk->nijb", n_p, e_q)
    ep_dot_eq = np.einsum("nak,nijbk->nijab", e_p, e_q)
    ep_dot_R = np.einsum("nak,nijk->nija", e_p, Rh)
    C = ep_dot_eq * n_dot_R[..., None, None] - ep_dot_R[..., :, None] * n_dot_eq[..., None, :]
    w = dA / (2 * np.pi)
    static = np.einsum("nij,nijab->nab", w / R**2, C)
    deriv = np.einsum("nij,nijab->nab", w / R, C)
    return static, deriv


def self_terms(mesh: PatchMesh, m: int = SELF_POINTS) -> np.ndarray:
    """Instantaneous self-patch coupling, (S, 2, 2); zero on flat patches."""
    S = mesh.segments.n_segments
    idx = np.arange(S)
    static, _ = _patch_integrals(mesh, idx, idx, np.zeros(S, int), m)
    return static


@dataclass
class InteractionTable:
    """Retarded couplings indexed by (observation segment, source segment, azimuth offset).

    ``W[s, s', dj, k]`` is the 2x2 matrix multiplying the source history
    sample ``n - delay[s, s', dj] - k`` (k = 0, 1, 2) in the update of step n;
    it folds together linear delay interpolation, the backward time
    difference and the area/1/(2 pi) factors.  Uncoupled pairs (same flat
    face, same straight generatrix line) are marked in ``coupled``.
    """

    mesh: PatchMesh
    dt: float
    delay: np.ndarray
    frac: np.ndarray
    W: np.ndarray
    coupled: np.ndarray
    self_inv: np.ndarray

    @property
    def pair_count(self) -> int:
        P = self.mesh.n_patches
        return P * (P - 1)

    @property
    def max_delay(self) -> int:
        return int(self.delay[self.coupled].max()) if self.coupled.any() else 0


def min_coupled_spacing(mesh: PatchMesh) -> tuple[float, tuple[int, int]]:
    """Smallest centroid distance over coupled pairs, with one pair attaining it."""
    obs, d, R = _pair_geometry(mesh)
    C = _couplings(mesh, obs, d, R)
    nphi = mesh.n_phi
    self_mask = np.zeros(R.shape, bool)
    for s in range(R.shape[0]):
        self_mask[s, s, 0] = True
    ok = (np.abs(C).max(axis=(-1, -2)) > ZERO_COUPLING) & ~self_mask
    Rm = np.where(ok, R, np.inf)
    idx = np.unravel_index(int(np.argmin(Rm)), Rm.shape)
    s, s2, dj = (int(i) for i in idx)
    return float(Rm[idx]), (s * nphi, s2 * nphi + dj)


def explicit_dt(mesh: PatchMesh, safety: float | None = None, derivative: str = "central") -> float:
    if safety is None:
        safety = CENTRAL_SAFETY if derivative == "central" else EXPLICIT_SAFETY
    return safety * min_coupled_spacing(mesh)[0] / C0


def build_tables(mesh: PatchMesh, dt: float, derivative: str = "central") -> InteractionTable:
    if not dt > 0:
        raise ValueError("dt must be positive")
    obs, d, R = _pair_geometry(mesh)
    C = _couplings(mesh, obs, d, R)
    S = mesh.segments.n_segments
    self_mask = np.zeros(R.shape, bool)
    self_mask[np.arange(S), np.arange(S), 0] = True
    coupled = (np.abs(C).max(axis=(-1, -2)) > ZERO_COUPLING) & ~self_mask
    Rc = np.where(coupled, R, np.inf)
    bound = EXPLICIT_SAFETY * Rc.min()
    if C0 * dt > bound * (1 + 1e-12):
        s, s2, dj = np.unravel_index(int(np.argmin(Rc)), Rc.shape)
        raise TDError(f"dt = {dt:.4g} s violates c dt <= {EXPLICIT_SAFETY} x spacing for patch pair "
                      f"({s * mesh.n_phi}, {s2 * mesh.n_phi + dj}) at {Rc.min():.4g} m; "
                      f"use dt <= {bound / C0:.4g} s")
    Rs = np.where(coupled, R, 1.0)
    x = Rs / (C0 * dt)
    area = mesh.areas.reshape(S, mesh.n_phi)[None, :, :]
    a_static = (area / (2 * np.pi * Rs**2))[..., None, None] * C
    a_deriv = (area / (2 * np.pi * C0 * Rs * dt))[..., None, None] * C
    seg = mesh.segments
    size = np.maximum(seg.lengths, seg.midpoints[:, 0] * 2 * np.pi / mesh.n_phi)
    near = coupled & (R < NEAR_FACTOR * size[None, :, None])
    if near.any():
        so, ss, dd = np.nonzero(near)
        st, de = _patch_integrals(mesh, so, ss, dd, NEAR_POINTS)
        a_static[near] = st
        a_deriv[near] = de / (C0 * dt)
    self_inv = np.linalg.inv(np.eye(2)[None] - self_terms(mesh))
    W = np.zeros(R.shape + (3, 2, 2))
    if derivative == "backward":
        delay = np.floor(x).astype(np.int64)
        frac = x - delay
        f = frac[..., None, None]
        W[..., 0, :, :] = (1 - f) * (a_static + a_deriv)
        W[..., 1, :, :] = f * a_static + (2 * f - 1) * a_deriv
        W[..., 2, :, :] = -f * a_deriv
    else:
        # dJ/dt at the retarded time from samples half a step either side
        y = x - 0.5
        delay = np.floor(y).astype(np.int64)
        frac = y - delay
        f = frac[..., None, None]
        W[..., 0, :, :] = (1 - f) * a_deriv
        W[..., 1, :, :] = (2 * f - 1) * a_deriv
        W[..., 2, :, :] = -f * a_deriv
        lo = f < 0.5
        g = f + 0.5
        W[..., 0, :, :] += np.where(lo, (1 - g) * a_static, 0.0)
        W[..., 1, :, :] += np.where(lo, g * a_static, (2 - g) * a_static)
        W[..., 2, :, :] += np.where(lo, 0.0, (g - 1) * a_static)
    if np.any(delay[coupled] < 1):
        raise TDError("a coupled pair has a delay under one step; the central derivative needs "
                      f"c dt < spacing / 1.5, i.e. dt <= {CENTRAL_SAFETY * Rc.min() / C0:.4g} s")
    W[~coupled] = 0.0
    delay[~coupled] = 0
    return InteractionTable(mesh, dt, delay, frac, W, coupled, self_inv)


@dataclass
class CurrentHistory:
    """J[p, n, c]: component c (0 = t_hat, 1 = phi_hat) of patch p at step n."""

    mesh: PatchMesh
    dt: float
    t_start: float
    J: np.ndarray

    @property
    def t(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.J.shape[1])


@dataclass
class SurfaceCurrentRecord:
    """Probe time series; j_l is the t_hat component, j_t the phi_hat component."""

    t: np.ndarray
    j_l: np.ndarray
    j_t: np.ndarray
    metadata: dict = field(default_factory=dict)
    h_inc_peak: float = 1.0 / ETA0

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("# t_s, J_l_A_per_m, J_t_A_per_m, J_l_norm, J_t_norm\n")
        for key in sorted(self.metadata):
            out.write(f"# {key}: {json.dumps(self.metadata[key], sort_keys=True)}\n")
        for t, a, b in zip(self.t, self.j_l, self.j_t):
            out.write(f"{t:.17g}, {a:.17g}, {b:.17g}, {a / self.h_inc_peak:.17g}, "
                      f"{b / self.h_inc_peak:.17g}\n")
        return out.getvalue()


@nb.njit(cache=True)
def _march(J, inc, arrival, seg_of, j_of, nphi, delay, W, coupled, self_inv, smooth_every, limit):
    P = J.shape[0]
    n_steps = J.shape[1]
    for n in range(n_steps):
        for p in range(P):
            if n < arrival[p]:
                continue
            sp = seg_of[p]
            jp = j_of[p]
            a0 = inc[p, n, 0]
            a1 = inc[p, n, 1]
            for q in range(P):
                sq = seg_of[q]
                dj = j_of[q] - jp
                if dj < 0:
                    dj += nphi
                if not coupled[sp, sq, dj]:
                    continue
                m = n - delay[sp, sq, dj]
                if m < 0:
                    continue
                for k in range(3):
                    mk = m - k
                    if mk < 0:
                        break
                    x0 = J[q, mk, 0]
                    x1 = J[q, mk, 1]
                    a0 += W[sp, sq, dj, k, 0, 0] * x0 + W[sp, sq, dj, k, 0, 1] * x1
                    a1 += W[sp, sq, dj, k, 1, 0] * x0 + W[sp, sq, dj, k, 1, 1] * x1
            J[p, n, 0] = self_inv[sp, 0, 0] * a0 + self_inv[sp, 0, 1] * a1
            J[p, n, 1] = self_inv[sp, 1, 0] * a0 + self_inv[sp, 1, 1] * a1
        peak = 0.0
        for p in range(P):
            v = abs(J[p, n, 0]) + abs(J[p, n, 1])
            if not (v == v) or v > limit:
                return n
            if v > peak:
                peak = v
        if smooth_every > 0 and n >= 2 and n % smooth_every == 0:
            for p in range(P):
                if n - 2 < arrival[p]:
                    continue
                for c in range(2):
                    J[p, n - 1, c] = 0.25 * (J[p, n - 2, c] + 2.0 * J[p, n - 1, c] + J[p, n, c])
    return -1


def snap_probe(mesh: PatchMesh, rho: float, z: float, phi: float) -> int:
    mids = mesh.segments.midpoints
    s = int(np.argmin(np.hypot(mids[:, 0] - rho, mids[:, 1] - z)))
    dphi = np.angle(np.exp(1j * (mesh.phi[: mesh.n_phi] - phi)))
    return mesh.index(s, int(np.argmin(np.abs(dphi))))


def incident_drive(mesh: PatchMesh, pulse: IncidentPlaneWavePulse, t: np.ndarray,
                   r_ref: float, ramp: float) -> np.ndarray:
    """2 n x H_inc projected on (t_hat, phi_hat), shape (P, n_steps, 2)."""
    k = np.asarray(pulse.k_hat, float)
    h = pulse.h_hat / ETA0
    nxh = np.cross(mesh.normals, h)
    proj = 2 * np.stack([np.sum(nxh * mesh.t_hat, 1), np.sum(nxh * mesh.phi_hat, 1)], axis=1)
    retard = (mesh.centroids @ k + r_ref) / C0
    w = waveform_value(pulse.waveform, t[None, :] - retard[:, None], ramp=ramp)
    return w[:, :, None] * proj[:, None, :]


def run_mot(mesh: PatchMesh, tables: InteractionTable, pulse: IncidentPlaneWavePulse,
            config: MOTConfig, probes=()) -> tuple[list[SurfaceCurrentRecord], CurrentHistory]:
    """March the currents; ``probes`` are (rho, z, phi) surface points."""
    if tables.mesh is not mesh or abs(tables.dt - config.dt) > 1e-15 * config.dt:
        raise TDError("tables were built for a different mesh or time step")
    dt = config.dt
    n_steps = config.n_steps + 1
    r_ref = reference_radius(mesh)
    t_sim = dt * np.arange(n_steps)
    rect = pulse.waveform.kind in ("rect_video", "rect_radio")
    ramp = 2 * dt if (rect and config.ramp_rect_edges) else 0.0
    inc = np.ascontiguousarray(incident_drive(mesh, pulse, t_sim, r_ref, ramp))
    k = np.asarray(pulse.k_hat, float)
    # first step at or after the geometric arrival of the incident plane
    arrival = np.ceil(((mesh.centroids @ k + r_ref) / C0) / dt - 1e-9).astype(np.int64)
    S, nphi = mesh.segments.n_segments, mesh.n_phi
    seg_of = np.repeat(np.arange(S), nphi).astype(np.int64)
    j_of = np.tile(np.arange(nphi), S).astype(np.int64)
    J = np.zeros((mesh.n_patches, n_steps, 2))
    peak_inc = float(np.abs(inc).max()) if inc.size else 0.0
    limit = DIVERGENCE_FACTOR * max(peak_inc, 1e-300)
    smooth = config.smoothing_every if config.smoothing == "three_point_average" else 0
    bad = _march(J, inc, arrival, seg_of, j_of, nphi, tables.delay, tables.W, tables.coupled,
                 tables.self_inv, smooth, limit)
    if bad >= 0:
        raise TDError(f"march diverged at step {bad} (t = {bad * dt:.4g} s)")
    hist = CurrentHistory(mesh, dt, -r_ref / C0, J)
    records = []
    h_peak = pulse.waveform.amplitude / ETA0
    for rho, z, phi in probes:
        p = snap_probe(mesh, rho, z, phi)
        meta = {"probe": [rho, z, phi], "patch": p,
                "patch_centroid": [float(x) for x in mesh.centroids[p]],
                "n_patches": mesh.n_patches, "dt_s": dt}
        records.append(SurfaceCurrentRecord(hist.t, J[p, :, 0].copy(), J[p, :, 1].copy(), meta,
                                            h_peak))
    return records, hist


def far_field_td(history: CurrentHistory, direction, pol) -> TransientField:
    """Copolarised r E_scat . pol in direction ``direction``.

    Output step n sits at physical time n dt - 2 R_ref/c, matching a
    frequency-domain synthesis delayed by 2 R_ref/c.
    """
    r_hat = np.asarray(direction, float)
    nr = np.linalg.norm(r_hat)
    if not nr > 1e-12:
        raise ValueError("degenerate observation direction")
    r_hat = r_hat / nr
    pol = np.asarray(pol, float)
    pol = pol - (pol @ r_hat) * r_hat
    if np.linalg.norm(pol) < 1e-12:
        raise ValueError("polarization is parallel to the observation direction")
    pol /= np.linalg.norm(pol)
    mesh = history.mesh
    dt = history.dt
    r_ref = -history.t_start * C0
    J = history.J
    n = J.shape[1]
    # transverse copolar current moment, sampled on the output grid
    proj = np.stack([mesh.t_hat @ pol, mesh.phi_hat @ pol], axis=1) * mesh.areas[:, None]
    lag = (r_ref - mesh.centroids @ r_hat) / (C0 * dt)
    M = np.zeros(n)
    steps = np.arange(n)
    for p in range(mesh.n_patches):
        x = J[p] @ proj[p]
        M += np.interp(steps - lag[p], steps, x, left=0.0, right=0.0)
    dM = np.gradient(M, dt)
    e = -MU0 / (4 * np.pi) * dM
    t = dt * steps + history.t_start - r_ref / C0
    return TransientField(t, e, {"direction": r_hat.tolist(), "pol": pol.tolist(), "dt_s": dt})
