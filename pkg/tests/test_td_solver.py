import numpy as np
import pytest

from transient_bor import td_solver as td
from transient_bor.excitation import C0, broadside_incidence, gaussian_video
from transient_bor.geometry import discretize, make_shape, revolve


@pytest.fixture(scope="module")
def small():
    prof = make_shape("cylinder", radius=1.0, length=5.0)
    mesh = revolve(discretize(prof, 0.5), 16)
    dt = td.explicit_dt(mesh)
    return mesh, dt, td.build_tables(mesh, dt)


def _run(mesh, tables, dt, amp=1.0, parallel=True, transits=3.0, probes=()):
    inc = broadside_incidence(gaussian_video(3.35e-9, amplitude=amp), parallel)
    cfg = td.MOTConfig(dt, transits * 7.0 / C0)
    return td.run_mot(mesh, tables, inc, cfg, probes)


def test_time_step_bound(small):
    mesh, dt, tables = small
    spacing, _ = td.min_coupled_spacing(mesh)
    assert dt == pytest.approx(td.CENTRAL_SAFETY * spacing / C0)
    with pytest.raises(td.TDError, match="violates"):
        td.build_tables(mesh, 1.01 * td.EXPLICIT_SAFETY * spacing / C0)
    with pytest.raises(td.TDError, match="central"):
        td.build_tables(mesh, 0.75 * spacing / C0)
    bw = td.build_tables(mesh, td.explicit_dt(mesh, derivative="backward"), "backward")
    assert np.all(bw.delay[bw.coupled] >= 1)
    with pytest.raises(ValueError):
        td.build_tables(mesh, 0.0)


def test_table_structure(small):
    mesh, dt, tables = small
    S = mesh.segments.n_segments
    assert tables.W.shape == (S, S, mesh.n_phi, 3, 2, 2)
    assert np.all(tables.delay[tables.coupled] >= 1)
    assert np.all(tables.W[~tables.coupled] == 0)
    assert not tables.coupled[np.arange(S), np.arange(S), 0].any()
    assert tables.self_inv.shape == (S, 2, 2)
    assert tables.pair_count == mesh.n_patches * (mesh.n_patches - 1)


def test_self_term_vanishes_on_flat_caps():
    prof = make_shape("cylinder", radius=1.0, length=5.0)
    mesh = revolve(discretize(prof, 0.5), 16)
    st = td.self_terms(mesh)
    tz = mesh.segments.tangents[:, 1]
    caps = np.abs(tz) < 1e-12
    assert caps.any() and (~caps).any()
    assert np.allclose(st[caps], 0, atol=1e-12)
    # the curved wall has a small instantaneous term
    assert 0 < np.abs(st[~caps]).max() < 0.2


def test_causality_and_linearity(small):
    mesh, dt, tables = small
    (_, shadow), h1 = _run(mesh, tables, dt, probes=[(1.0, 0.0, np.pi), (1.0, 0.0, 0.0)])
    _, h2 = _run(mesh, tables, dt, amp=2.5)
    assert np.allclose(h2.J, 2.5 * h1.J, rtol=1e-12, atol=1e-15 * np.abs(h2.J).max())
    # shadow probe: nothing before the incident front reaches it
    arrival = (1.0 - 1.0) / C0            # x = +a, front travels along +x from x = -R_ref
    before = shadow.t < arrival - 3 * dt
    assert np.all(shadow.j_l[before] == 0) and np.all(shadow.j_t[before] == 0)


def test_parity_broadside_e_parallel(small):
    mesh, dt, tables = small
    (lit,), _ = _run(mesh, tables, dt, probes=[(1.0, 0.0, np.pi)])
    assert np.max(np.abs(lit.j_t)) <= 0.01 * np.max(np.abs(lit.j_l))


def test_early_lit_current_near_physical_optics(small):
    mesh, dt, tables = small
    (lit,), _ = _run(mesh, tables, dt, probes=[(1.0, 0.0, np.pi)])
    # 2 |H_inc| at the lit generatrix for unit E0; a coarse mesh stays within 30%
    assert np.max(np.abs(lit.j_l)) == pytest.approx(2 / 376.730313668, rel=0.3)


def test_config_and_guards(small):
    mesh, dt, tables = small
    with pytest.raises(ValueError):
        td.MOTConfig(0.0, 1e-9)
    with pytest.raises(ValueError):
        td.MOTConfig(dt, 1e-9, smoothing="median")
    with pytest.raises(ValueError):
        td.MOTConfig(dt, 1e-9, smoothing_every=0)
    inc = broadside_incidence(gaussian_video(3.35e-9), True)
    with pytest.raises(td.TDError):
        td.run_mot(mesh, tables, inc, td.MOTConfig(dt / 2, 1e-9))


def test_far_field_guards_and_timing(small):
    mesh, dt, tables = small
    _, hist = _run(mesh, tables, dt)
    with pytest.raises(ValueError):
        td.far_field_td(hist, (0, 0, 0), (0, 0, 1))
    with pytest.raises(ValueError):
        td.far_field_td(hist, (0, 0, 1), (0, 0, 1))
    ff = td.far_field_td(hist, (-1, 0, 0), (0, 0, 1))
    assert ff.t[0] == pytest.approx(2 * hist.t_start)
    assert np.all(np.isfinite(ff.e)) and np.abs(ff.e).max() > 0


def test_probe_snapping(small):
    mesh, _, _ = small
    p = td.snap_probe(mesh, 1.0, 0.0, np.pi)
    c = mesh.centroids[p]
    assert c[0] < 0 and abs(c[1]) < 0.3 and abs(c[2]) < 0.3


def test_surface_current_csv():
    rec = td.SurfaceCurrentRecord(np.array([0.0, 1e-9]), np.array([1.0, 2.0]), np.array([0.0, 0.5]),
                                  {"probe": [1, 0, 0]}, h_inc_peak=0.5)
    lines = rec.to_csv().splitlines()
    assert lines[0].startswith("# t_s")
    assert lines[-1].split(", ")[3] == "4"
