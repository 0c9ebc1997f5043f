"""Scenario descriptions: INI parsing and the built-in set."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .excitation import (C0, IncidentPlaneWavePulse, Waveform, axial_incidence,
                         broadside_incidence)
from .geometry import CoatingSpec, GeneratrixProfile, make_shape

INCIDENCES = ("broadside_e_parallel", "broadside_e_perp", "axial_nose_on")
BACKENDS = ("fd", "td", "both")


class ScenarioError(ValueError):
    """Invalid scenario; the message names the offending section/field."""


@dataclass(frozen=True)
class GeometrySpec:
    kind: str
    params: tuple[tuple[str, float], ...]
    coating_epsilon: float | None = None
    coating_d: float | None = None

    def profile(self) -> GeneratrixProfile:
        coating = None
        if self.coating_epsilon is not None:
            coating = CoatingSpec(self.coating_epsilon, self.coating_d)
        return make_shape(self.kind, coating=coating, **dict(self.params))

    @property
    def radius(self) -> float:
        return dict(self.params)["radius"]


@dataclass(frozen=True)
class SolverSpec:
    backend: str = "fd"
    h_max: float = 0.05
    floor_db: float = -60.0
    td_h_max: float = 0.125
    n_phi: int = 41
    td_transits: float = 10.0
    smoothing_every: int = 2


@dataclass(frozen=True)
class Scenario:
    name: str
    geometry: GeometrySpec
    pulse: Waveform
    incidence: str
    solver: SolverSpec = field(default_factory=SolverSpec)
    title: str = ""
    output_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "svg")
    expected_radius: float | None = None

    def incident(self) -> IncidentPlaneWavePulse:
        if self.incidence == "axial_nose_on":
            return axial_incidence(self.pulse)
        return broadside_incidence(self.pulse, self.incidence == "broadside_e_parallel")

    def with_backend(self, backend: str) -> Scenario:
        if backend not in BACKENDS:
            raise ScenarioError(f"[solver] backend: expected one of {BACKENDS}, got {backend!r}")
        return replace(self, solver=replace(self.solver, backend=backend))


def _num(sec: configparser.SectionProxy, key: str, where: str, default=None) -> float | None:
    raw = sec.get(key)
    if raw is None:
        if default is None:
            return None
        return default
    try:
        return float(raw)
    except ValueError:
        raise ScenarioError(f"{where} {key}: not a number: {raw!r}") from None


def _require(cp: configparser.ConfigParser, name: str) -> configparser.SectionProxy:
    if not cp.has_section(name):
        raise ScenarioError(f"missing section [{name}]")
    return cp[name]


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse the INI scenario format (SI units, angles in degrees)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from None

    meta = cp["scenario"] if cp.has_section("scenario") else {}
    name = meta.get("name", name)
    title = meta.get("title", name)

    pul = _require(cp, "pulse")
    kind = pul.get("kind")
    if kind not in ("gaussian_video", "rect_video", "rect_radio"):
        raise ScenarioError(f"[pulse] kind: expected gaussian_video, rect_video or rect_radio, got {kind!r}")
    tau = _num(pul, "tau", "[pulse]")
    if tau is None:
        raise ScenarioError("[pulse] tau: required")
    try:
        pulse = Waveform(kind, tau, _num(pul, "t0", "[pulse]"), _num(pul, "n_cycles", "[pulse]", 0.0),
                         _num(pul, "amplitude", "[pulse]", 1.0))
    except ValueError as exc:
        raise ScenarioError(f"[pulse] {exc}") from None

    geo = _require(cp, "geometry")
    gkind = geo.get("kind")
    expected = _num(geo, "expected_radius", "[geometry]")
    radius = _num(geo, "radius", "[geometry]")
    ratio = _num(geo, "c_tau_over_a", "[geometry]")
    if radius is None and ratio is not None:
        radius = C0 * tau / ratio
    if radius is None:
        raise ScenarioError("[geometry] radius: required (or give c_tau_over_a)")
    params: dict[str, float] = {"radius": radius}
    if gkind == "cylinder":
        length = _num(geo, "length", "[geometry]")
        lor = _num(geo, "length_over_radius", "[geometry]")
        if length is None and lor is not None:
            length = lor * radius
        if length is None:
            raise ScenarioError("[geometry] length: required for a cylinder")
        params["length"] = length
    elif gkind == "cone":
        opening = _num(geo, "opening_deg", "[geometry]")
        if opening is None:
            raise ScenarioError("[geometry] opening_deg: required for a cone")
        params["opening_deg"] = opening
    elif gkind != "sphere":
        raise ScenarioError(f"[geometry] kind: expected cylinder, cone or sphere, got {gkind!r}")
    eps = _num(geo, "coating_epsilon", "[geometry]")
    d = _num(geo, "coating_d", "[geometry]")
    dr = _num(geo, "coating_d_over_a", "[geometry]")
    if d is None and dr is not None:
        d = dr * radius
    if (eps is None) != (d is None):
        raise ScenarioError("[geometry] coating_epsilon and coating thickness must be given together")
    gspec = GeometrySpec(gkind, tuple(sorted(params.items())), eps, d)
    try:
        gspec.profile()
    except ValueError as exc:
        raise ScenarioError(f"[geometry] {exc}") from None

    inc = _require(cp, "incidence").get("type", "").lower()
    if inc not in INCIDENCES:
        raise ScenarioError(f"[incidence] type: expected one of {INCIDENCES}, got {inc!r}")

    if not cp.has_section("solver"):
        cp.add_section("solver")
    sol = cp["solver"]
    backend = sol.get("backend", "fd")
    if backend not in BACKENDS:
        raise ScenarioError(f"[solver] backend: expected one of {BACKENDS}, got {backend!r}")
    base = SolverSpec()

    def length(key: str, default: float) -> float:
        v = _num(sol, key, "[solver]")
        if v is None:
            rel = _num(sol, key + "_over_a", "[solver]")
            v = rel * radius if rel is not None else default
        return v

    def opt(key, default):
        return _num(sol, key, "[solver]", default)

    h = length("h_max", base.h_max)
    td_h = length("td_h_max", base.td_h_max)
    solver = SolverSpec(backend, h, opt("floor_db", base.floor_db), td_h,
                        int(opt("n_phi", base.n_phi)), opt("td_transits", base.td_transits),
                        int(opt("smoothing_every", base.smoothing_every)))
    if solver.floor_db >= 0:
        raise ScenarioError("[solver] floor_db: must be negative")
    if solver.n_phi < 8:
        raise ScenarioError("[solver] n_phi: must be >= 8")
    if not h > 0 or not td_h > 0:
        raise ScenarioError("[solver] h_max: must be positive")
    if solver.smoothing_every < 1 or not solver.td_transits > 0:
        raise ScenarioError("[solver] smoothing_every and td_transits must be positive")
    if backend in ("td", "both") and eps is not None:
        raise ScenarioError("[solver] backend: the time-domain backend handles bare conductors only "
                            "(coated bodies are not supported there)")

    out = cp["output"] if cp.has_section("output") else {}
    formats = tuple(f.strip() for f in out.get("formats", "csv,svg").split(",") if f.strip())
    bad = [f for f in formats if f not in ("csv", "svg")]
    if bad:
        raise ScenarioError(f"[output] formats: unknown {bad}")
    return Scenario(name, gspec, pulse, inc, solver, title, out.get("directory", "out"), formats,
                    expected_radius=expected)


def load_scenario(spec: str) -> Scenario:
    """A built-in name or a path to an INI file."""
    if spec in BUILTINS:
        return parse_scenario(BUILTINS[spec], spec)
    p = Path(spec)
    if not p.is_file():
        raise ScenarioError(f"no built-in scenario or file named {spec!r}")
    return parse_scenario(p.read_text(), p.stem)


def check_derived_radius(s: Scenario) -> None:
    if s.expected_radius is None:
        return
    a = s.geometry.radius
    if abs(a - s.expected_radius) > 0.01 * s.expected_radius:
        raise ScenarioError(f"derived radius {a:.5g} m differs from {s.expected_radius:g} m by more than 1%")


_CYL = """
[scenario]
name = {name}
title = {title}
[geometry]
kind = cylinder
c_tau_over_a = {ratio}
length_over_radius = 5
expected_radius = 1.0
[pulse]
kind = gaussian_video
tau = {tau}
[incidence]
type = {inc}
[solver]
backend = fd
h_max_over_a = 0.0625
td_h_max_over_a = 0.125
n_phi = 41
floor_db = -60
[output]
directory = out/{name}
formats = csv,svg
"""

# cone base radius 1 m; c tau / 2a = 0.25
_CONE_TAU = 0.5 / C0

_CONE = """
[scenario]
name = {name}
title = {title}
[geometry]
kind = cone
radius = 1.0
opening_deg = 23
{coating}
[pulse]
kind = {kind}
tau = {tau!r}
n_cycles = {cycles}
[incidence]
type = axial_nose_on
[solver]
backend = fd
h_max = {h!r}
floor_db = {floor}
[output]
directory = out/{name}
formats = csv,svg
"""

# radio pulse band edge f_c + 1/(pi tau 10^(floor/20)) must stay below c/(10 h)
_RADIO_FLOOR = -10.0
_VIDEO_FLOOR = -19.0
_CONE_H = 1.0 / 62.0
_GAUSS_CONE_H = 1.0 / 30.0


def _builtins() -> dict[str, str]:
    b = {
        "fig1_a": _CYL.format(name="fig1_a", title="Cylinder L/a=5, gaussian c tau/a=1, E parallel",
                              ratio=1.0, tau=3.35e-9, inc="broadside_e_parallel"),
        "fig1_b": _CYL.format(name="fig1_b", title="Cylinder L/a=5, gaussian c tau/a=2.25, E parallel",
                              ratio=2.25, tau=7.5e-9, inc="broadside_e_parallel"),
        "fig1_c": _CYL.format(name="fig1_c", title="Cylinder L/a=5, gaussian c tau/a=2.25, E perpendicular",
                              ratio=2.25, tau=7.5e-9, inc="broadside_e_perp"),
        "fig2": _CONE.format(name="fig2", title="Cone 23 deg nose-on, rectangular radio pulse",
                             coating="", kind="rect_radio", tau=_CONE_TAU, cycles=2,
                             h=_CONE_H, floor=_RADIO_FLOOR),
        "fig3": _CONE.format(name="fig3", title="Cone 23 deg nose-on, rectangular video pulse",
                             coating="", kind="rect_video", tau=_CONE_TAU, cycles=0,
                             h=_CONE_H, floor=_VIDEO_FLOOR),
    }
    for eps in (1, 2, 4):
        name = f"fig4_eps{eps}"
        b[name] = _CONE.format(
            name=name, title=f"Coated cone 23 deg nose-on, gaussian pulse, eps={eps}",
            coating=f"coating_epsilon = {eps}\ncoating_d_over_a = 0.05", kind="gaussian_video",
            tau=_CONE_TAU, cycles=0, h=_GAUSS_CONE_H, floor=-60)
    return b


BUILTINS = _builtins()


def builtin_names() -> list[str]:
    return sorted(BUILTINS)


def first_arrival(s: Scenario) -> float:
    """Earliest backscatter arrival in origin-referenced time."""
    prof = s.geometry.profile()
    k = s.incident().k_hat
    pts = prof.vertices()
    if abs(k[2]) > 0.5:
        along = pts[:, 1] * k[2]
    else:
        along = -pts[:, 0] * abs(k[0])
    return 2.0 * float(along.min()) / C0 + _pulse_start(s.pulse)


def _pulse_start(w: Waveform) -> float:
    if w.kind == "gaussian_video":
        return w.t0 - 3.0 * w.tau
    return 0.0
