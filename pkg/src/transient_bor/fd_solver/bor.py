"""Per-mode method-of-moments solution for bodies of revolution.

Currents are expanded as

    J = sum_m exp(j m phi) sum_q [a_mq t_hat + b_mq phi_hat] T_q(t) / rho(t)

with triangle functions T_q on the interior generatrix nodes, Galerkin-tested
with the same functions times exp(-j m phi).  Closed bare conductors use the
combined-field equation, impedance surfaces the electric-field equation with
a Leontovich term.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.special import jv

from ..excitation import C0, ETA0, MU0
from ..geometry import SegmentMesh
from .kernels import assemble_partials, gauss_legendre01

log = logging.getLogger(__name__)

# bump when a change alters solved values, so cached responses are not reused
SOLVER_REVISION = 2
CFIE_ALPHA = 0.5
COND_LIMIT = 1e8


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Basis:
    """Observation quadrature and triangle-basis sampling on a segment mesh."""

    mesh: SegmentMesh
    pts: np.ndarray       # (n_obs, 2) rho, z
    tan: np.ndarray       # (n_obs, 2)
    seg: np.ndarray       # (n_obs,) segment index
    B_T: np.ndarray       # (n_basis, n_obs) weight * T_p
    B_Td: np.ndarray      # weight * dT_p/dt
    B_Tr: np.ndarray      # weight * T_p / rho
    T_at: np.ndarray      # (n_basis, n_obs) unweighted T_p / rho at quad points
    gram: np.ndarray      # int T_p T_q / rho dt

    @property
    def n_basis(self) -> int:
        return self.B_T.shape[0]


def make_basis(mesh: SegmentMesh, n_quad: int = 2) -> Basis:
    u, w = gauss_legendre01(n_quad)
    nodes = mesh.nodes
    n_seg = mesh.n_segments
    n_b = n_seg - 1
    if n_b < 1:
        raise SolverError("mesh needs at least two segments")
    L = mesh.lengths
    tan = mesh.tangents
    pts, tans, segs, ws, us = [], [], [], [], []
    for s in range(n_seg):
        for uq, wq in zip(u, w):
            pts.append(nodes[s] + uq * (nodes[s + 1] - nodes[s]))
            tans.append(tan[s])
            segs.append(s)
            ws.append(wq * L[s])
            us.append(uq)
    pts = np.array(pts)
    tans = np.array(tans)
    segs = np.array(segs)
    ws = np.array(ws)
    us = np.array(us)
    n_obs = len(pts)
    T = np.zeros((n_b, n_obs))
    Td = np.zeros((n_b, n_obs))
    for i in range(n_obs):
        s = segs[i]
        if s - 1 >= 0:
            T[s - 1, i] = 1.0 - us[i]
            Td[s - 1, i] = -1.0 / L[s]
        if s < n_b:
            T[s, i] = us[i]
            Td[s, i] = 1.0 / L[s]
    rho = pts[:, 0]
    B_T = T * ws
    B_Td = Td * ws
    B_Tr = T * ws / rho
    gram = B_Tr @ T.T
    return Basis(mesh, pts, tans, segs, B_T, B_Td, B_Tr, T / rho, gram)


def plane_wave_modal_coeffs(basis: Basis, k: float, k_hat, vec, modes) -> tuple[np.ndarray, np.ndarray]:
    """Tested azimuthal coefficients of a plane wave vec * exp(-jk k_hat.r).

    Returns (c_t, c_phi), each (n_modes, n_basis):
    c[m, p] = int T_p(t) int_0^{2pi} (b_hat . F) exp(-j m phi) dphi dt.
    The azimuthal integrals use the Jacobi-Anger expansion.
    """
    k_hat = np.asarray(k_hat, float)
    vec = np.asarray(vec, complex)
    modes = np.asarray(modes)
    st = math.hypot(k_hat[0], k_hat[1])
    ct = k_hat[2]
    phi_i = math.atan2(k_hat[1], k_hat[0]) if st > 0 else 0.0
    rho, z = basis.pts[:, 0], basis.pts[:, 1]
    tr, tz = basis.tan[:, 0], basis.tan[:, 1]
    zphase = np.exp(-1j * k * z * ct)

    def P(n):
        return (-1j) ** (n % 4) * jv(n, k * rho * st) * np.exp(-1j * n * phi_i) * zphase

    Fx, Fy, Fz = vec
    c_t = np.empty((len(modes), basis.n_basis), complex)
    c_p = np.empty_like(c_t)
    for a, m in enumerate(modes):
        Pm, Pl, Pu = P(m), P(m - 1), P(m + 1)
        cos_part = 0.5 * (Pl + Pu)
        sin_part = (Pl - Pu) / 2j
        e_rho = Fx * cos_part + Fy * sin_part
        e_phi = -Fx * sin_part + Fy * cos_part
        f_t = 2 * np.pi * (tr * e_rho + tz * Fz * Pm)
        f_p = 2 * np.pi * e_phi
        c_t[a] = basis.B_T @ f_t
        c_p[a] = basis.B_T @ f_p
    return c_t, c_p


@dataclass
class ModalCurrentSolution:
    """Modal current coefficients (per unit incident amplitude).

    ``coeffs[m]`` is the length-2N vector [a_m, b_m] for t_hat and phi_hat.
    """

    basis: Basis
    frequency: float
    k_hat: tuple
    e_hat: tuple
    amplitude: float
    zs: complex
    coeffs: dict[int, np.ndarray] = field(default_factory=dict)
    cond: dict[int, float] = field(default_factory=dict)
    residual: dict[int, float] = field(default_factory=dict)

    @property
    def modes(self) -> list[int]:
        return sorted(self.coeffs)


def required_modes(k: float, rho_max: float, k_hat, extra: int = 6) -> list[int]:
    st = math.hypot(k_hat[0], k_hat[1])
    if st < 1e-14:
        return [-1, 1]
    M = int(math.ceil(k * rho_max * st)) + extra
    return list(range(-M, M + 1))


def _mode_matrices(basis: Basis, k: float, modes_pos, zs: complex, want_m: bool, n_src_quad: int):
    """Full system matrices (for m >= 0) keyed by mode."""
    omega = k * C0
    need_k = want_m or zs != 0
    acc = assemble_partials(basis.pts, basis.tan, basis.mesh.nodes, np.asarray(modes_pos), k,
                            need_k, n_src_quad=n_src_quad)
    B_T, B_Td, B_Tr = basis.B_T, basis.B_Td, basis.B_Tr
    jwmu = 1j * omega * MU0
    two_pi = 2 * np.pi
    out = {}
    for a, m in enumerate(modes_pos):
        A = acc[:, a]
        ZE = np.empty((2 * basis.n_basis,) * 2, complex)
        nb_ = basis.n_basis
        ZE[:nb_, :nb_] = B_T @ A[0] - (B_Td @ A[4]) / k**2
        ZE[:nb_, nb_:] = 1j * (B_T @ A[1]) - (1j * m) * (B_Td @ A[9]) / k**2
        ZE[nb_:, :nb_] = 1j * (B_T @ A[2]) + (1j * m) * (B_Tr @ A[4]) / k**2
        ZE[nb_:, nb_:] = B_T @ A[3] - m * m * (B_Tr @ A[9]) / k**2
        ZE *= jwmu * two_pi
        if need_k:
            # tested n x K(X) on the outer surface, K(X) = curl int G X
            ZM = np.empty_like(ZE)
            ZM[:nb_, :nb_] = 0.5 * basis.gram + B_T @ A[5]
            ZM[:nb_, nb_:] = 1j * (B_T @ A[6])
            ZM[nb_:, :nb_] = 1j * (B_T @ A[7])
            ZM[nb_:, nb_:] = 0.5 * basis.gram + B_T @ A[8]
            ZM *= two_pi
        if want_m:
            Z = CFIE_ALPHA * ZE + (1 - CFIE_ALPHA) * ETA0 * ZM
        else:
            G2 = np.zeros_like(ZE)
            G2[:nb_, :nb_] = basis.gram
            G2[nb_:, nb_:] = basis.gram
            Z = ZE + zs * two_pi * G2
            if zs != 0:
                # magnetic current M = -zs n x J has coefficients zs (-x_phi, x_t).  Its
                # field -K(M) tests as (P_phi, -P_t), where P = n x K on the outer
                # surface = 1/2 + n x PV K, i.e. the identity minus the MFIE operator.
                P = two_pi * G2 - ZM
                Pt, Pp = P[:nb_], P[nb_:]
                EM = np.block([[Pp[:, nb_:], -Pp[:, :nb_]],
                               [-Pt[:, nb_:], Pt[:, :nb_]]])
                Z = Z - zs * EM
        out[m] = Z
    return out


def _rhs(basis: Basis, k: float, k_hat, e_hat, modes, use_cfie: bool):
    e_hat = np.asarray(e_hat, float)
    ct, cp = plane_wave_modal_coeffs(basis, k, k_hat, e_hat, modes)
    rhs = np.concatenate([ct, cp], axis=1)
    if use_cfie:
        h = np.cross(k_hat, e_hat) / ETA0
        ht, hp = plane_wave_modal_coeffs(basis, k, k_hat, h, modes)
        # n x H tested: t-component <- H.phi, phi-component <- -H.t
        rhs_h = np.concatenate([hp, -ht], axis=1)
        rhs = CFIE_ALPHA * rhs + (1 - CFIE_ALPHA) * ETA0 * rhs_h
    return rhs


def _flip(n_b: int) -> np.ndarray:
    return np.concatenate([np.ones(n_b), -np.ones(n_b)])


def _condition(lu_piv, anorm: float) -> float:
    lu, _ = lu_piv
    rcond, info = sla.lapack.zgecon(lu, anorm, norm="1")
    return math.inf if rcond == 0 else 1.0 / rcond


def assemble_and_solve(mesh_or_basis, m_list, frequency: float, zs: complex, k_hat, e_hat,
                       amplitude: float = 1.0, n_src_quad: int = 2,
                       check_sampling: bool = True, formulation: str = "auto") -> ModalCurrentSolution:
    """Solve the modal systems for every mode in ``m_list`` (None: automatic).

    ``formulation`` is ``"cfie"`` (bare conductor only), ``"efie"`` or
    ``"auto"``, which picks the CFIE when ``zs == 0`` and the EFIE otherwise.
    """
    basis = mesh_or_basis if isinstance(mesh_or_basis, Basis) else make_basis(mesh_or_basis)
    if not frequency > 0:
        raise SolverError("frequency must be positive")
    k = 2 * np.pi * frequency / C0
    k_hat = tuple(float(x) for x in k_hat)
    e_hat = tuple(float(x) for x in e_hat)
    mesh = basis.mesh
    seg_per_lambda = (2 * np.pi / k) / mesh.lengths.max()
    if check_sampling and seg_per_lambda < 10:
        log.warning("mesh has %.1f segments per wavelength at %.4g Hz (< 10)", seg_per_lambda, frequency)
    rho_max = float(mesh.nodes[:, 0].max())
    if m_list is None:
        m_list = required_modes(k, rho_max, k_hat)
    m_list = sorted(set(int(m) for m in m_list))
    pos = sorted(set(abs(m) for m in m_list))
    if formulation == "auto":
        use_cfie = zs == 0
    elif formulation in ("cfie", "efie"):
        use_cfie = formulation == "cfie"
        if use_cfie and zs != 0:
            raise SolverError("the CFIE is only available for a bare conductor (zs = 0)")
    else:
        raise ValueError(f"unknown formulation {formulation!r}")
    mats = _mode_matrices(basis, k, pos, zs, use_cfie, n_src_quad)
    rhs = _rhs(basis, k, k_hat, e_hat, m_list, use_cfie) * amplitude
    D = _flip(basis.n_basis)
    sol = ModalCurrentSolution(basis, frequency, k_hat, e_hat, amplitude, zs)
    for mp in pos:
        Z = mats[mp]
        # symmetric Jacobi scaling; the raw EFIE blocks drift apart like 1/(ka)^2
        sc = 1.0 / np.sqrt(np.abs(np.diag(Z)))
        Zs = sc[:, None] * Z * sc[None, :]
        anorm = np.abs(Zs).sum(axis=0).max()
        lu_piv = sla.lu_factor(Zs, check_finite=True)
        cond = _condition(lu_piv, anorm)
        if cond > COND_LIMIT:
            raise SolverError(f"modal matrix m={mp} at {frequency:.6g} Hz is ill-conditioned "
                              f"(condition estimate {cond:.3g})")
        for m in (mp, -mp) if mp else (0,):
            if m not in m_list:
                continue
            b = rhs[m_list.index(m)]
            if m >= 0:
                x = sc * sla.lu_solve(lu_piv, sc * b)
                res = np.linalg.norm(Z @ x - b)
            else:
                y = sc * sla.lu_solve(lu_piv, sc * D * b)
                x = D * y
                res = np.linalg.norm(Z @ y - D * b)
            bn = np.linalg.norm(b)
            rel = res / bn if bn > 0 else 0.0
            if rel > 1e-10:
                raise SolverError(f"residual {rel:.3g} exceeds 1e-10 for m={m}")
            sol.coeffs[m] = x
            sol.cond[m] = cond
            sol.residual[m] = rel
    return sol


def _unit(v) -> np.ndarray:
    v = np.asarray(v, float)
    n = np.linalg.norm(v)
    if not n > 0 or not np.isfinite(n):
        raise ValueError("direction is not normalizable")
    return v / n


def direction(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def far_field_component(sol: ModalCurrentSolution, r_hat, pol) -> complex:
    """Range-normalized far field r exp(jkr) E_scat . pol, per unit incident amplitude.

    ``pol`` is projected onto the plane transverse to ``r_hat``.
    """
    r_hat = _unit(r_hat)
    pol = np.asarray(pol, float)
    pol = pol - (pol @ r_hat) * r_hat
    if np.linalg.norm(pol) == 0:
        return 0.0j
    k = 2 * np.pi * sol.frequency / C0
    modes = sol.modes
    ct, cp = plane_wave_modal_coeffs(sol.basis, k, -r_hat, pol, [-m for m in modes])
    total = 0.0j
    nb_ = sol.basis.n_basis
    for a, m in enumerate(modes):
        x = sol.coeffs[m]
        total += ct[a] @ x[:nb_] + cp[a] @ x[nb_:]
    if sol.zs != 0:
        # impedance surface: M = -zs n x J radiates -r_hat x L
        mt, mp = plane_wave_modal_coeffs(sol.basis, k, -r_hat, np.cross(pol, r_hat), [-m for m in modes])
        for a, m in enumerate(modes):
            x = sol.coeffs[m]
            total -= sol.zs / ETA0 * (mt[a] @ -x[nb_:] + mp[a] @ x[:nb_])
    # the tested coefficients carry the 2 pi of the azimuthal integral already
    return complex(-1j * k * ETA0 / (4 * np.pi) * total / sol.amplitude)


def far_field(sol: ModalCurrentSolution, theta: float, phi: float) -> tuple[complex, complex]:
    """(theta_hat, phi_hat) components of the range-normalized far field."""
    r = direction(theta, phi)
    th = np.array([math.cos(theta) * math.cos(phi), math.cos(theta) * math.sin(phi), -math.sin(theta)])
    ph = np.array([-math.sin(phi), math.cos(phi), 0.0])
    return far_field_component(sol, r, th), far_field_component(sol, r, ph)


def monostatic(sol: ModalCurrentSolution) -> complex:
    """Copolarized backscatter H = lim r exp(jkr) E_scat . e_hat / E_inc (meters)."""
    return far_field_component(sol, -np.asarray(sol.k_hat), sol.e_hat)


def rcs_from_H(H) -> float:
    return 4 * np.pi * np.abs(H) ** 2


@dataclass(frozen=True)
class ProbeReading:
    j_t: complex        # t_hat (generatrix) component, A/m
    j_phi: complex      # phi_hat component, A/m
    segment: int
    snap_distance: float


def probe_current(sol: ModalCurrentSolution, rho: float, z: float, phi: float) -> ProbeReading:
    """Surface current at the segment midpoint nearest to (rho, z), azimuth phi."""
    mesh = sol.basis.mesh
    mids = mesh.midpoints
    d = np.hypot(mids[:, 0] - rho, mids[:, 1] - z)
    s = int(np.argmin(d))
    if d[s] > mesh.h_max / 2 + 1e-12:
        raise ValueError(f"probe ({rho}, {z}) is {d[s]:.3g} m off the surface (> h_max/2)")
    n_b = sol.basis.n_basis
    rho_s = mids[s, 0]
    Tv = np.zeros(n_b)
    if s - 1 >= 0:
        Tv[s - 1] = 0.5
    if s < n_b:
        Tv[s] = 0.5
    Tv /= rho_s
    jt = 0.0j
    jp = 0.0j
    for m, x in sol.coeffs.items():
        e = np.exp(1j * m * phi)
        jt += e * (Tv @ x[:n_b])
        jp += e * (Tv @ x[n_b:])
    return ProbeReading(complex(jt), complex(jp), s, float(d[s]))
