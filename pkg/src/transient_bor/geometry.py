"""Body-of-revolution geometry: generatrix profiles, segment meshes, patch meshes.

A body is described by its generatrix in the (rho, z) half-plane, running
from the axis (rho = 0) back to the axis.  The profile is made of straight
sections and circular arcs; section endpoints are corners and always become
mesh nodes.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratrixPoint:
    rho: float
    z: float

    def __post_init__(self):
        if self.rho < 0:
            raise GeometryError(f"rho must be >= 0, got {self.rho}")


@dataclass(frozen=True)
class CoatingSpec:
    """Thin dielectric layer over a conductor, modelled by a surface impedance."""

    epsilon: float
    thickness_d: float

    def __post_init__(self):
        if not self.epsilon >= 1.0:
            raise GeometryError(f"coating epsilon must be >= 1, got {self.epsilon}")
        if not self.thickness_d > 0.0:
            raise GeometryError(f"coating thickness must be > 0, got {self.thickness_d}")


@dataclass(frozen=True)
class Arc:
    """Circular arc in the (rho, z) plane, angles measured from +rho toward +z."""

    center: tuple[float, float]
    radius: float
    theta0: float
    theta1: float

    def point(self, theta: float) -> tuple[float, float]:
        return (
            self.center[0] + self.radius * math.cos(theta),
            self.center[1] + self.radius * math.sin(theta),
        )

    @property
    def length(self) -> float:
        return self.radius * abs(self.theta1 - self.theta0)


@dataclass(frozen=True)
class GeneratrixProfile:
    """Closed generatrix: starts and ends on the axis.

    ``arcs`` maps a section index (section i joins points i and i+1) to an
    :class:`Arc`; every other section is straight.
    """

    points: tuple[GeneratrixPoint, ...]
    coating: CoatingSpec | None = None
    arcs: dict[int, Arc] = field(default_factory=dict)
    kind: str = "custom"
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        pts = self.points
        if len(pts) < 2:
            raise GeometryError("profile needs at least two points")
        if pts[0].rho != 0.0 or pts[-1].rho != 0.0:
            raise GeometryError("profile must start and end on the axis (rho = 0)")
        for p, q in zip(pts[:-1], pts[1:]):
            if p == q:
                raise GeometryError(f"consecutive duplicate point {p}")
        _check_simple(np.array([[p.rho, p.z] for p in pts]))
        if self.coating is not None:
            rmax = float(self.vertices()[:, 0].max())
            if self.coating.thickness_d > 0.2 * rmax:
                raise GeometryError(
                    f"coating thickness {self.coating.thickness_d} exceeds 0.2 * max rho ({0.2 * rmax})"
                )

    @property
    def n_sections(self) -> int:
        return len(self.points) - 1

    def section_length(self, i: int) -> float:
        if i in self.arcs:
            return self.arcs[i].length
        p, q = self.points[i], self.points[i + 1]
        return math.hypot(q.rho - p.rho, q.z - p.z)

    @property
    def length(self) -> float:
        return sum(self.section_length(i) for i in range(self.n_sections))

    def vertices(self, n_arc: int = 64) -> np.ndarray:
        """Polyline through the profile (arcs sampled with ``n_arc`` chords)."""
        out = [[self.points[0].rho, self.points[0].z]]
        for i in range(self.n_sections):
            if i in self.arcs:
                arc = self.arcs[i]
                for th in np.linspace(arc.theta0, arc.theta1, n_arc + 1)[1:]:
                    out.append(list(arc.point(th)))
            else:
                out.append([self.points[i + 1].rho, self.points[i + 1].z])
        return np.array(out)

    def surface_area(self) -> float:
        """Analytic area of the revolved surface."""
        area = 0.0
        for i in range(self.n_sections):
            if i in self.arcs:
                arc = self.arcs[i]
                # integral of 2 pi rho ds over the arc
                rc, _ = arc.center
                th0, th1 = arc.theta0, arc.theta1
                sgn = 1.0 if th1 >= th0 else -1.0
                area += 2 * math.pi * arc.radius * sgn * (
                    rc * (th1 - th0) + arc.radius * (math.sin(th1) - math.sin(th0))
                )
            else:
                p, q = self.points[i], self.points[i + 1]
                area += math.pi * (p.rho + q.rho) * self.section_length(i)
        return area

    def max_radius(self) -> float:
        return float(self.vertices()[:, 0].max())

    def bounding_radius(self) -> float:
        """Radius of the smallest origin-centred sphere enclosing the body."""
        v = self.vertices()
        return float(np.sqrt((v**2).sum(axis=1)).max())

    def diameter(self) -> float:
        """Maximum chord of the revolved body."""
        v = self.vertices()
        drho = v[:, 0][:, None] + v[:, 0][None, :]
        dz = v[:, 1][:, None] - v[:, 1][None, :]
        return float(np.sqrt(drho**2 + dz**2).max())

    def fingerprint(self) -> dict:
        return {
            "kind": self.kind,
            "points": [[p.rho, p.z] for p in self.points],
            "arcs": {str(k): [a.center[0], a.center[1], a.radius, a.theta0, a.theta1]
                     for k, a in sorted(self.arcs.items())},
            "coating": None if self.coating is None
            else [self.coating.epsilon, self.coating.thickness_d],
        }

    def content_hash(self) -> str:
        blob = json.dumps(self.fingerprint(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def translated(self, dz: float) -> GeneratrixProfile:
        pts = tuple(GeneratrixPoint(p.rho, p.z + dz) for p in self.points)
        arcs = {k: Arc((a.center[0], a.center[1] + dz), a.radius, a.theta0, a.theta1)
                for k, a in self.arcs.items()}
        return GeneratrixProfile(pts, self.coating, arcs, self.kind, dict(self.params))


def _check_simple(xy: np.ndarray) -> None:
    """Reject self-intersecting polylines (non-adjacent sections crossing)."""
    n = len(xy) - 1

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1 and np.allclose(xy[0], xy[-1]):
                continue
            a, b, c, d = xy[i], xy[i + 1], xy[j], xy[j + 1]
            d1, d2 = cross(c, d, a), cross(c, d, b)
            d3, d4 = cross(a, b, c), cross(a, b, d)
            if d1 * d2 < 0 and d3 * d4 < 0:
                raise GeometryError(f"profile sections {i} and {j} intersect")


def make_shape(kind: str, coating: CoatingSpec | None = None, **params: float) -> GeneratrixProfile:
    """Build a closed generatrix for a canonical body.

    cylinder: ``length`` L and ``radius`` a, centred at the origin, axis along z.
    cone: base ``radius`` a and full ``opening_deg``; base disk at z = 0,
    vertex at z = a / tan(opening / 2).
    sphere: ``radius`` a, centred at the origin.
    """
    P = GeneratrixPoint
    if kind == "cylinder":
        L, a = float(params["length"]), float(params["radius"])
        if L <= 0 or a <= 0:
            raise GeometryError("cylinder length and radius must be positive")
        pts = (P(0.0, -L / 2), P(a, -L / 2), P(a, L / 2), P(0.0, L / 2))
        return GeneratrixProfile(pts, coating, {}, kind, {"length": L, "radius": a})
    if kind == "cone":
        a, opening = float(params["radius"]), float(params["opening_deg"])
        if a <= 0:
            raise GeometryError("cone radius must be positive")
        if not 0.0 < opening < 180.0:
            raise GeometryError(f"cone opening must lie in (0, 180) degrees, got {opening}")
        h = a / math.tan(math.radians(opening) / 2)
        pts = (P(0.0, 0.0), P(a, 0.0), P(0.0, h))
        return GeneratrixProfile(pts, coating, {}, kind, {"radius": a, "opening_deg": opening, "height": h})
    if kind == "sphere":
        a = float(params["radius"])
        if a <= 0:
            raise GeometryError("sphere radius must be positive")
        pts = (P(0.0, -a), P(0.0, a))
        arcs = {0: Arc((0.0, 0.0), a, -math.pi / 2, math.pi / 2)}
        return GeneratrixProfile(pts, coating, arcs, kind, {"radius": a})
    raise GeometryError(f"unknown shape kind {kind!r}")


@dataclass(frozen=True)
class SegmentMesh:
    """Straight segments along the generatrix.

    Arrays are indexed by segment; ``tangent`` and ``normal`` hold
    (rho, z) components.  ``corner`` flags nodes that are profile corners.
    """

    profile: GeneratrixProfile
    h_max: float
    nodes: np.ndarray
    corner: np.ndarray

    @property
    def n_segments(self) -> int:
        return len(self.nodes) - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self.nodes, axis=0).T)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def tangents(self) -> np.ndarray:
        d = np.diff(self.nodes, axis=0)
        return d / self.lengths[:, None]

    @property
    def normals(self) -> np.ndarray:
        t = self.tangents
        return np.column_stack([t[:, 1], -t[:, 0]])

    @property
    def arc_positions(self) -> np.ndarray:
        """Cumulative arc length at each node."""
        return np.concatenate([[0.0], np.cumsum(self.lengths)])

    def fingerprint(self) -> dict:
        return {"profile": self.profile.content_hash(), "h_max": self.h_max,
                "n_segments": self.n_segments}


def discretize(profile: GeneratrixProfile, h_max: float) -> SegmentMesh:
    """Split every profile section into equal pieces no longer than ``h_max``."""
    if not h_max > 0:
        raise GeometryError(f"h_max must be positive, got {h_max}")
    nodes = [[profile.points[0].rho, profile.points[0].z]]
    corner = [True]
    for i in range(profile.n_sections):
        n = max(1, math.ceil(profile.section_length(i) / h_max - 1e-12))
        if i in profile.arcs:
            arc = profile.arcs[i]
            for th in np.linspace(arc.theta0, arc.theta1, n + 1)[1:]:
                nodes.append(list(arc.point(th)))
                corner.append(False)
        else:
            p, q = profile.points[i], profile.points[i + 1]
            for s in np.arange(1, n + 1) / n:
                nodes.append([p.rho + s * (q.rho - p.rho), p.z + s * (q.z - p.z)])
                corner.append(False)
        # section endpoints are exact profile points
        end = profile.points[i + 1]
        nodes[-1] = [end.rho, end.z]
        corner[-1] = True
    arr = np.array(nodes, dtype=float)
    arr[:, 0] = np.maximum(arr[:, 0], 0.0)
    arr[0, 0] = arr[-1, 0] = 0.0
    return SegmentMesh(profile, float(h_max), arr, np.array(corner))


@dataclass(frozen=True)
class PatchMesh:
    """Revolved surface patches, laid out segment-major (index = seg * n_phi + j)."""

    segments: SegmentMesh
    n_phi: int
    centroids: np.ndarray
    areas: np.ndarray
    normals: np.ndarray
    t_hat: np.ndarray
    phi_hat: np.ndarray
    phi: np.ndarray

    @property
    def n_patches(self) -> int:
        return len(self.areas)

    def index(self, seg: int, j: int) -> int:
        return seg * self.n_phi + j


def revolve(mesh: SegmentMesh, n_phi: int) -> PatchMesh:
    if n_phi < 8:
        raise GeometryError(f"n_phi must be >= 8, got {n_phi}")
    phi = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    mid, tan, ln = mesh.midpoints, mesh.tangents, mesh.lengths
    cphi, sphi = np.cos(phi), np.sin(phi)
    rho = np.repeat(mid[:, 0], n_phi)
    z = np.repeat(mid[:, 1], n_phi)
    tr = np.repeat(tan[:, 0], n_phi)
    tz = np.repeat(tan[:, 1], n_phi)
    c = np.tile(cphi, mesh.n_segments)
    s = np.tile(sphi, mesh.n_segments)
    centroids = np.column_stack([rho * c, rho * s, z])
    t_hat = np.column_stack([tr * c, tr * s, tz])
    phi_hat = np.column_stack([-s, c, np.zeros_like(c)])
    normals = np.column_stack([tz * c, tz * s, -tr])
    areas = np.repeat(ln * mid[:, 0], n_phi) * (2 * np.pi / n_phi)
    return PatchMesh(mesh, n_phi, centroids, areas, normals, t_hat, phi_hat,
                     np.tile(phi, mesh.n_segments))
