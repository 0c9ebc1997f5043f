"""Azimuthal (ring) integrals of the free-space kernels for BoR assembly.

All integrands handled here are even in the source azimuth phi' once the
cos(m phi') / sin(m phi') factor is attached, so integrals over [0, 2 pi)
are evaluated as twice the integral over [0, pi].

Output slots of :func:`ring_integrals` (per mode m >= 0), with observation
point at azimuth 0, G = exp(-jkR)/(4 pi R), g = (1 + jkR) exp(-jkR)/(4 pi R^3):

====  ===========================================================
0     int cos(m p) G (t_rho t_rho' cos p + t_z t_z')
1     int sin(m p) G (-t_rho sin p)
2     int sin(m p) G (t_rho' sin p)
3     int cos(m p) G cos p
4     int cos(m p) G
5-8   magnetic-field kernel, t-t, t-phi, phi-t, phi-phi blocks
====  ===========================================================

Slots 1, 2, 6, 7 pick up a factor j (and flip sign for negative m) when
combined into the exp(j m phi') modal integral.
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np

N_SLOTS = 9
INV4PI = 1.0 / (4.0 * math.pi)

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[n]


@nb.njit(cache=True, fastmath=True)
def _accumulate(phi, cphi, sphi, wphi, nphi, modes, rho, z, tr, tz, rs, zs, trs, tzs, k, want_m, out, wk):
    """Ring sums for one node set; ``modes`` must be ascending and >= 0.

    Pass one stores the mode-independent factors per node in ``wk``; pass
    two sweeps the modes with scalar accumulators, stepping cos(m p) and
    sin(m p) by rotation.
    """
    dz = z - zs
    nr = tz
    nz = -tr
    for q in range(nphi):
        c = cphi[q]
        sn = sphi[q]
        dx = rho - rs * c
        dy = -rs * sn
        R2 = dx * dx + dy * dy + dz * dz
        R = math.sqrt(R2)
        kr = k * R
        ck = math.cos(kr)
        sk = math.sin(kr)
        sc = INV4PI / R * wphi[q]
        wk[0, q] = ck * sc
        wk[1, q] = -sk * sc
        wk[2, q] = tr * trs * c + tz * tzs
        wk[3, q] = -tr * sn
        wk[4, q] = trs * sn
        if want_m:
            sc3 = sc / R2
            wk[5, q] = (ck + kr * sk) * sc3
            wk[6, q] = (kr * ck - sk) * sc3
            n_d = nr * dx + nz * dz
            wt_d = tr * dx + tz * dz
            n_ts = nr * trs * c + nz * tzs
            n_ps = -nr * sn
            wk[7, q] = wt_d * n_ts - wk[2, q] * n_d
            wk[8, q] = wt_d * n_ps - wk[3, q] * n_d
            wk[9, q] = dy * n_ts - wk[4, q] * n_d
            wk[10, q] = dy * n_ps - c * n_d
        wk[11, q] = 1.0
        wk[12, q] = 0.0
    m_cur = 0
    for a in range(modes.shape[0]):
        mm = modes[a]
        while m_cur < mm:
            for q in range(nphi):
                cm = wk[11, q]
                sm = wk[12, q]
                wk[11, q] = cm * cphi[q] - sm * sphi[q]
                wk[12, q] = sm * cphi[q] + cm * sphi[q]
            m_cur += 1
        a0r = a0i = a1r = a1i = a2r = a2i = a3r = a3i = a4r = a4i = 0.0
        for q in range(nphi):
            cm = wk[11, q]
            sm = wk[12, q]
            gr = wk[0, q]
            gi = wk[1, q]
            cg = cm * gr
            cgi = cm * gi
            sg = sm * gr
            sgi = sm * gi
            a0r += cg * wk[2, q]
            a0i += cgi * wk[2, q]
            a1r += sg * wk[3, q]
            a1i += sgi * wk[3, q]
            a2r += sg * wk[4, q]
            a2i += sgi * wk[4, q]
            a3r += cg * cphi[q]
            a3i += cgi * cphi[q]
            a4r += cg
            a4i += cgi
        out[a, 0] = complex(a0r, a0i)
        out[a, 1] = complex(a1r, a1i)
        out[a, 2] = complex(a2r, a2i)
        out[a, 3] = complex(a3r, a3i)
        out[a, 4] = complex(a4r, a4i)
        if want_m:
            b5r = b5i = b6r = b6i = b7r = b7i = b8r = b8i = 0.0
            for q in range(nphi):
                cm = wk[11, q]
                sm = wk[12, q]
                ch = cm * wk[5, q]
                chi = cm * wk[6, q]
                sh = sm * wk[5, q]
                shi = sm * wk[6, q]
                b5r += ch * wk[7, q]
                b5i += chi * wk[7, q]
                b6r += sh * wk[8, q]
                b6i += shi * wk[8, q]
                b7r += sh * wk[9, q]
                b7i += shi * wk[9, q]
                b8r += ch * wk[10, q]
                b8i += chi * wk[10, q]
            out[a, 5] = complex(b5r, b5i)
            out[a, 6] = complex(b6r, b6i)
            out[a, 7] = complex(b7r, b7i)
            out[a, 8] = complex(b8r, b8i)


@nb.njit(cache=True)
def _near_nodes(b, omega, gl_s, gw_s, gl_p, gw_p, phi, cphi, sphi, wphi):
    """Graded azimuth nodes on [0, pi] for a nearly singular ring.

    A sinh map resolves the peak of width ~b at phi = 0; geometrically
    growing Gauss panels (capped by the oscillation scale) cover the rest.
    Returns the node count; weights include the factor 2 for [0, 2 pi).
    """
    phi1 = min(math.pi, 1.0 / (omega + 1.0))
    n = 0
    tmax = math.asinh(phi1 / b)
    for q in range(gl_s.shape[0]):
        t = tmax * gl_s[q]
        phi[n] = b * math.sinh(t)
        wphi[n] = 2.0 * tmax * gw_s[q] * b * math.cosh(t)
        n += 1
    lmax = 12.0 / (omega + 1.0)
    a = phi1
    while a < math.pi - 1e-14:
        ln = min(a, lmax, math.pi - a)
        for q in range(gl_p.shape[0]):
            phi[n] = a + ln * gl_p[q]
            wphi[n] = 2.0 * ln * gw_p[q]
            n += 1
        a += ln
    for q in range(n):
        cphi[q] = math.cos(phi[q])
        sphi[q] = math.sin(phi[q])
    return n


@nb.njit(cache=True)
def _ring(rho, z, tr, tz, rs, zs, trs, tzs, k, modes, want_m,
          uphi, ucos, usin, uw, n_u, gl_s, gw_s, gl_p, gw_p, omega, phi_buf, c_buf, s_buf, w_buf, out, acc):
    delta2 = (rho - rs) ** 2 + (z - zs) ** 2
    rr = rho * rs
    chi = 1.0 + delta2 / (2.0 * rr)
    strip = math.log(chi + math.sqrt(chi * chi - 1.0))
    if strip * n_u >= 15.0:
        _accumulate(uphi, ucos, usin, uw, uphi.shape[0], modes, rho, z, tr, tz, rs, zs, trs, tzs, k, want_m, out, acc)
    else:
        b = math.sqrt(delta2 / rr)
        b = max(b, 1e-300)
        n = _near_nodes(b, omega, gl_s, gw_s, gl_p, gw_p, phi_buf, c_buf, s_buf, w_buf)
        _accumulate(phi_buf, c_buf, s_buf, w_buf, n, modes, rho, z, tr, tz, rs, zs, trs, tzs, k, want_m, out, acc)


def _check_modes(modes) -> np.ndarray:
    modes = np.asarray(modes, dtype=np.int64)
    if modes.size == 0 or modes[0] < 0 or np.any(np.diff(modes) <= 0):
        raise ValueError("modes must be non-negative and strictly ascending")
    return modes


def uniform_nodes(n_u: int) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid nodes on [0, pi] (n_u intervals), doubled for [0, 2 pi)."""
    phi = np.linspace(0.0, np.pi, n_u + 1)
    w = np.full(n_u + 1, 2.0 * np.pi / n_u)
    w[0] *= 0.5
    w[-1] *= 0.5
    return phi, w


def azimuth_resolution(k: float, rho_max: float, m_max: int) -> int:
    """Trapezoid interval count on [0, pi] for far (regular) rings."""
    n = int(math.ceil(0.6 * (k * rho_max + m_max) + 12))
    return 8 * int(math.ceil(n / 8))


def _buffers(omega: float):
    gl_s, gw_s = gauss_legendre01(20)
    gl_p, gw_p = gauss_legendre01(10)
    n_pan = int(60 + 3.0 * (omega + 1.0) + 40)
    size = gl_s.size + gl_p.size * n_pan
    return gl_s, gw_s, gl_p, gw_p, np.empty(size), np.empty(size), np.empty(size), np.empty(size)


def _work(n_u: int, near_size: int) -> np.ndarray:
    return np.empty((13, max(n_u + 1, near_size)))


def ring_integrals(obs, src, k: float, modes, want_m: bool = True,
                   n_u: int | None = None) -> np.ndarray:
    """All ring integrals for one observation/source pair.

    ``obs`` and ``src`` are (rho, z, t_rho, t_z) tuples.  Returns a complex
    array of shape (len(modes), 9).
    """
    modes = _check_modes(modes)
    rho_max = max(obs[0], src[0])
    m_max = int(np.abs(modes).max())
    omega = float(m_max + k * rho_max)
    if n_u is None:
        n_u = azimuth_resolution(k, rho_max, m_max)
    uphi, uw = uniform_nodes(n_u)
    gl_s, gw_s, gl_p, gw_p, pb, cb, sb, wb = _buffers(omega)
    out = np.zeros((modes.size, N_SLOTS), dtype=np.complex128)
    _ring(obs[0], obs[1], obs[2], obs[3], src[0], src[1], src[2], src[3], k, modes, want_m,
          uphi, np.cos(uphi), np.sin(uphi), uw, n_u, gl_s, gw_s, gl_p, gw_p, omega, pb, cb, sb, wb, out,
          _work(n_u, pb.size))
    return out


def modal_kernel(m: int, src: tuple[float, float], obs: tuple[float, float], k: float,
                 singular: bool = True) -> complex:
    """Azimuthal Fourier coefficient of the free-space Green's function.

    G_m = int_0^{2 pi} exp(-jkR)/(4 pi R) cos(m phi') dphi', with the
    observation point at azimuth 0 and the source ring at (rho', z').
    """
    if k < 0:
        raise ValueError("wavenumber must be >= 0")
    rs, zs = src
    rho, z = obs
    if rs == 0.0 or rho == 0.0:
        if m != 0:
            return 0.0j
        R = math.hypot(rho - rs, z - zs)
        if R == 0.0:
            raise ValueError("coincident observation and source points")
        return 2 * math.pi * complex(math.cos(k * R), -math.sin(k * R)) * INV4PI / R
    if rs == rho and zs == z:
        if not singular:
            raise ValueError("observation point lies on the source ring")
        raise ValueError("modal kernel diverges when the observation point lies on the source ring")
    if not singular:
        n_u = azimuth_resolution(k, max(rho, rs), abs(m))
        phi, w = uniform_nodes(n_u)
        R = np.sqrt(rho**2 + rs**2 - 2 * rho * rs * np.cos(phi) + (z - zs) ** 2)
        return complex(np.sum(w * np.exp(-1j * k * R) / (4 * np.pi * R) * np.cos(m * phi)))
    out = ring_integrals((rho, z, 1.0, 0.0), (rs, zs, 1.0, 0.0), k, [abs(m)], want_m=False)
    return complex(out[0, 4])


@nb.njit(cache=True)
def _assemble(o_rho, o_z, o_tr, o_tz, nodes, modes, k, want_m,
              sq_u, sq_w, near_factor, gr_u, gr_w,
              uphi, ucos, usin, uw, n_u, gl_s, gw_s, gl_p, gw_p, omega, phi_buf, c_buf, s_buf, w_buf, work, acc):
    """Source-side accumulation of ring integrals against the basis shapes.

    acc[slot, mode, obs, basis]; slots 0-3 and 5-8 are weighted by the
    triangle T_q, slot 4 by dT_q/dt and slot 9 by T_q / rho'.
    """
    n_obs = o_rho.shape[0]
    n_seg = nodes.shape[0] - 1
    n_b = n_seg - 1
    nm = modes.shape[0]
    ring = np.zeros((nm, N_SLOTS), dtype=np.complex128)
    max_ref = 2 * gr_u.shape[0]
    su = np.empty(max(max_ref, sq_u.shape[0]))
    sw = np.empty(max(max_ref, sq_u.shape[0]))
    for i in range(n_obs):
        px = o_rho[i]
        pz = o_z[i]
        for s in range(n_seg):
            ax = nodes[s, 0]
            az = nodes[s, 1]
            bx = nodes[s + 1, 0]
            bz = nodes[s + 1, 1]
            ex = bx - ax
            ez = bz - az
            L = math.sqrt(ex * ex + ez * ez)
            trs = ex / L
            tzs = ez / L
            u_star = ((px - ax) * ex + (pz - az) * ez) / (L * L)
            u_star = min(1.0, max(0.0, u_star))
            cx = ax + u_star * ex - px
            cz = az + u_star * ez - pz
            dist = math.sqrt(cx * cx + cz * cz)
            if dist < near_factor * L:
                n_src = 0
                if u_star > 1e-12:
                    for q in range(gr_u.shape[0]):
                        v = gr_u[q]
                        su[n_src] = u_star - u_star * v * v * v
                        sw[n_src] = u_star * 3.0 * v * v * gr_w[q]
                        n_src += 1
                if u_star < 1.0 - 1e-12:
                    for q in range(gr_u.shape[0]):
                        v = gr_u[q]
                        su[n_src] = u_star + (1.0 - u_star) * v * v * v
                        sw[n_src] = (1.0 - u_star) * 3.0 * v * v * gr_w[q]
                        n_src += 1
            else:
                n_src = sq_u.shape[0]
                for q in range(n_src):
                    su[q] = sq_u[q]
                    sw[q] = sq_w[q]
            for q in range(n_src):
                u = su[q]
                w = sw[q] * L
                rs = ax + u * ex
                zs = az + u * ez
                _ring(px, pz, o_tr[i], o_tz[i], rs, zs, trs, tzs, k, modes, want_m,
                      uphi, ucos, usin, uw, n_u, gl_s, gw_s, gl_p, gw_p, omega, phi_buf, c_buf, s_buf,
                      w_buf, ring, work)
                # basis s-1 falls (1-u), basis s rises (u)
                for side in range(2):
                    if side == 0:
                        bidx = s - 1
                        shape = 1.0 - u
                        dshape = -1.0 / L
                    else:
                        bidx = s
                        shape = u
                        dshape = 1.0 / L
                    if bidx < 0 or bidx >= n_b:
                        continue
                    ws = w * shape
                    wd = w * dshape
                    wr = ws / rs
                    for a in range(nm):
                        acc[0, a, i, bidx] += ws * ring[a, 0]
                        acc[1, a, i, bidx] += ws * ring[a, 1]
                        acc[2, a, i, bidx] += ws * ring[a, 2]
                        acc[3, a, i, bidx] += ws * ring[a, 3]
                        acc[4, a, i, bidx] += wd * ring[a, 4]
                        acc[9, a, i, bidx] += wr * ring[a, 4]
                        if want_m:
                            acc[5, a, i, bidx] += ws * ring[a, 5]
                            acc[6, a, i, bidx] += ws * ring[a, 6]
                            acc[7, a, i, bidx] += ws * ring[a, 7]
                            acc[8, a, i, bidx] += ws * ring[a, 8]


def assemble_partials(obs_pts: np.ndarray, obs_tan: np.ndarray, nodes: np.ndarray,
                      modes: np.ndarray, k: float, want_m: bool,
                      n_src_quad: int = 2, near_factor: float = 2.5,
                      n_refined: int = 10) -> np.ndarray:
    """Integrate ring kernels over every source segment for every observation point.

    Returns acc with shape (10, n_modes, n_obs, n_basis).
    """
    modes = _check_modes(modes)
    m_max = int(np.abs(modes).max())
    rho_max = float(nodes[:, 0].max())
    omega = float(m_max + k * rho_max)
    n_u = azimuth_resolution(k, rho_max, m_max)
    uphi, uw = uniform_nodes(n_u)
    sq_u, sq_w = gauss_legendre01(n_src_quad)
    gr_u, gr_w = gauss_legendre01(n_refined)
    gl_s, gw_s, gl_p, gw_p, pb, cb, sb, wb = _buffers(omega)
    n_b = nodes.shape[0] - 2
    acc = np.zeros((10, modes.size, obs_pts.shape[0], n_b), dtype=np.complex128)
    _assemble(np.ascontiguousarray(obs_pts[:, 0]), np.ascontiguousarray(obs_pts[:, 1]),
              np.ascontiguousarray(obs_tan[:, 0]), np.ascontiguousarray(obs_tan[:, 1]),
              np.ascontiguousarray(nodes), modes, float(k), bool(want_m),
              sq_u, sq_w, float(near_factor), gr_u, gr_w,
              uphi, np.cos(uphi), np.sin(uphi), uw, n_u, gl_s, gw_s, gl_p, gw_p, omega,
              pb, cb, sb, wb, _work(n_u, pb.size), acc)
    return acc
