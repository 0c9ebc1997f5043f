import math

import pytest

from transient_bor.excitation import C0
from transient_bor.scenarios import (BUILTINS, ScenarioError, builtin_names, check_derived_radius,
                                     first_arrival, load_scenario, parse_scenario)

MINIMAL = """
[geometry]
kind = sphere
radius = 0.5
[pulse]
kind = gaussian_video
tau = 1e-9
[incidence]
type = axial_nose_on
"""


def test_builtin_set():
    assert builtin_names() == sorted(["fig1_a", "fig1_b", "fig1_c", "fig2", "fig3",
                                      "fig4_eps1", "fig4_eps2", "fig4_eps4"])
    for name in BUILTINS:
        s = load_scenario(name)
        check_derived_radius(s)
        assert s.name == name and s.solver.backend == "fd"


def test_builtin_parameters():
    a = load_scenario("fig1_a")
    assert a.geometry.radius == pytest.approx(C0 * 3.35e-9, rel=1e-12)
    assert a.incidence == "broadside_e_parallel"
    c = load_scenario("fig1_c")
    assert c.incidence == "broadside_e_perp" and c.pulse.tau == 7.5e-9
    f2, f3 = load_scenario("fig2"), load_scenario("fig3")
    assert C0 * f2.pulse.tau / (2 * f2.geometry.radius) == pytest.approx(0.25)
    assert f2.pulse.kind == "rect_radio" and f2.pulse.n_cycles == 2
    assert f3.pulse.kind == "rect_video"
    for eps in (1, 2, 4):
        s = load_scenario(f"fig4_eps{eps}")
        assert s.geometry.coating_epsilon == eps
        assert s.geometry.coating_d == pytest.approx(0.05 * s.geometry.radius)


def test_minimal_defaults():
    s = parse_scenario(MINIMAL, "m")
    assert s.solver.backend == "fd" and s.formats == ("csv", "svg")
    assert s.geometry.kind == "sphere" and s.geometry.radius == 0.5


@pytest.mark.parametrize("patch, where", [
    (("kind = sphere", "kind = torus"), "[geometry] kind"),
    (("radius = 0.5", "radius = abc"), "[geometry] radius"),
    (("radius = 0.5", ""), "[geometry] radius"),
    (("tau = 1e-9", "tau = -1e-9"), "[pulse]"),
    (("kind = gaussian_video", "kind = chirp"), "[pulse] kind"),
    (("type = axial_nose_on", "type = oblique"), "[incidence] type"),
])
def test_errors_name_the_field(patch, where):
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(MINIMAL.replace(*patch))
    assert where in str(exc.value)


def test_solver_section_errors():
    for extra, where in (("backend = gpu", "[solver] backend"), ("floor_db = 3", "[solver] floor_db"),
                         ("n_phi = 4", "[solver] n_phi"), ("h_max = 0", "[solver] h_max")):
        with pytest.raises(ScenarioError, match=__import__("re").escape(where)):
            parse_scenario(MINIMAL + "[solver]\n" + extra + "\n")
    with pytest.raises(ScenarioError, match=r"\[output\] formats"):
        parse_scenario(MINIMAL + "[output]\nformats = pdf\n")


def test_coated_body_rejected_for_td():
    text = MINIMAL.replace("radius = 0.5", "radius = 0.5\ncoating_epsilon = 2\ncoating_d = 0.01")
    assert parse_scenario(text).geometry.coating_epsilon == 2
    with pytest.raises(ScenarioError, match="time-domain"):
        parse_scenario(text + "[solver]\nbackend = td\n")
    with pytest.raises(ScenarioError):
        parse_scenario(MINIMAL.replace("radius = 0.5", "radius = 0.5\ncoating_epsilon = 2"))


def test_derived_radius_check():
    s = parse_scenario(MINIMAL.replace("radius = 0.5", "radius = 0.5\nexpected_radius = 0.6"))
    with pytest.raises(ScenarioError, match="derived radius"):
        check_derived_radius(s)


def test_with_backend_and_file(tmp_path):
    s = load_scenario("fig1_a").with_backend("both")
    assert s.solver.backend == "both"
    with pytest.raises(ScenarioError):
        s.with_backend("gpu")
    p = tmp_path / "mine.ini"
    p.write_text(MINIMAL)
    assert load_scenario(str(p)).name == "mine"
    with pytest.raises(ScenarioError, match="no built-in"):
        load_scenario(str(tmp_path / "missing.ini"))


def test_first_arrival():
    cyl = load_scenario("fig1_a")
    w = cyl.pulse
    assert first_arrival(cyl) == pytest.approx(-2 * cyl.geometry.radius / C0 + w.t0 - 3 * w.tau)
    cone = load_scenario("fig3")
    # nose-on: k_hat = -z, so the tip (largest z) returns first
    tip = cone.geometry.profile().vertices()[:, 1].max()
    assert first_arrival(cone) == pytest.approx(-2 * tip / C0)
    assert math.isfinite(first_arrival(load_scenario("fig2")))
