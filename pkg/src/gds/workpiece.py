"""Curved-surface geometry: tangent-plane estimation, target frames, and the
drilling axis expressed in polar/azimuth angles.

Conventions
-----------
- ``surface_normal`` returns the outward geometric normal (away from the
  material). Target frames instead carry the *drilling-side* normal n_d,
  pointing into the material, so that the drilling axis
  ``a = cos(phi) n + sin(phi) (cos(theta) u + sin(theta) w)`` is the feed
  direction and the pre-drill standoff pose sits at ``point - standoff * a``
  on the operator's side.
- theta is measured from u_d toward w_d; u_d is the projection of a
  configurable global reference direction (default +x) into the tangent
  plane, which keeps theta reproducible across runs.
- Meshes and sampled patches are ingested in robot-base coordinates and
  meters (ASCII STL / OFF, CSV with an ``x,y,z`` header).

Surfaces are immutable after load and safe to share across parallel runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import GeometryError
from .geometry import Frame3, Vec3, make_frame

_GLOBAL_AXES = (Vec3(1.0, 0.0, 0.0), Vec3(0.0, 1.0, 0.0), Vec3(0.0, 0.0, 1.0))


# ---------------------------------------------------------------------------
# surfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpherePatch:
    """Solid sphere section; material is the interior."""

    center: Vec3
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise GeometryError("sphere radius must be positive")

    def closest_point(self, p: Vec3) -> Tuple[Vec3, Vec3]:
        r = p - self.center
        d = r.norm()
        if d == 0.0:
            n = Vec3(0.0, 0.0, 1.0)
        else:
            n = r.scale(1.0 / d)
        return self.center + n.scale(self.radius), n

    def signed_distance(self, p: Vec3) -> float:
        """Positive outside the material, negative inside."""
        return (p - self.center).norm() - self.radius


@dataclass(frozen=True)
class CylinderPatch:
    """Solid cylinder section; material is the interior. ``axis_dir`` is the
    cylinder axis direction (unit), ``axis_point`` a point on the axis."""

    axis_point: Vec3
    axis_dir: Vec3
    radius: float
    half_length: float = math.inf

    def __post_init__(self):
        if not self.radius > 0.0:
            raise GeometryError("cylinder radius must be positive")
        object.__setattr__(self, "axis_dir", self.axis_dir.normalized())

    def closest_point(self, p: Vec3) -> Tuple[Vec3, Vec3]:
        rel = p - self.axis_point
        h = rel.dot(self.axis_dir)
        radial = rel - self.axis_dir.scale(h)
        d = radial.norm()
        if d == 0.0:
            # on the axis: any radial direction; pick deterministically
            n = _any_perpendicular(self.axis_dir)
        else:
            n = radial.scale(1.0 / d)
        h = max(-self.half_length, min(self.half_length, h))
        foot = self.axis_point + self.axis_dir.scale(h)
        return foot + n.scale(self.radius), n

    def signed_distance(self, p: Vec3) -> float:
        rel = p - self.axis_point
        h = rel.dot(self.axis_dir)
        radial = rel - self.axis_dir.scale(h)
        return radial.norm() - self.radius


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh, consistently oriented with outward normals."""

    vertices: tuple  # of Vec3
    triangles: tuple  # of (i, j, k)
    _face_normals: tuple = field(default=(), compare=False)

    def __post_init__(self):
        nv = len(self.vertices)
        if nv < 3 or not self.triangles:
            raise GeometryError("mesh needs at least one triangle")
        normals = []
        for tri in self.triangles:
            if len(tri) != 3 or any(not (0 <= i < nv) for i in tri):
                raise GeometryError(f"triangle {tri} references invalid vertices")
            a, b, c = (self.vertices[i] for i in tri)
            n = (b - a).cross(c - a)
            if n.norm() == 0.0:
                raise GeometryError(f"degenerate triangle {tri}")
            normals.append(n.normalized())
        object.__setattr__(self, "_face_normals", tuple(normals))

    def closest_point(self, p: Vec3) -> Tuple[Vec3, Vec3]:
        best = None
        best_d2 = math.inf
        for idx, tri in enumerate(self.triangles):
            a, b, c = (self.vertices[i] for i in tri)
            q = _closest_on_triangle(p, a, b, c)
            d2 = (p - q).dot(p - q)
            if d2 < best_d2:
                best_d2 = d2
                best = (q, idx)
        q, idx = best
        return q, self._pseudo_normal(q, idx)

    def signed_distance(self, p: Vec3) -> float:
        q, n = self.closest_point(p)
        return (p - q).dot(n)

    def _pseudo_normal(self, q: Vec3, face_idx: int) -> Vec3:
        """Angle-weighted normal at the closest point: face normal in the
        interior, incident-face average at vertices/edges."""
        tol = 1e-9
        tri = self.triangles[face_idx]
        verts = [self.vertices[i] for i in tri]
        # at a vertex?
        for local, v in enumerate(verts):
            if (q - v).norm() <= tol:
                return self._vertex_normal(tri[local])
        # on an edge?
        for e0, e1 in ((0, 1), (1, 2), (2, 0)):
            a, b = verts[e0], verts[e1]
            ab = b - a
            t = (q - a).dot(ab) / ab.dot(ab)
            foot = a + ab.scale(t)
            if 0.0 <= t <= 1.0 and (q - foot).norm() <= tol:
                shared = [
                    i
                    for i, t2 in enumerate(self.triangles)
                    if tri[e0] in t2 and tri[e1] in t2
                ]
                n = Vec3.zero()
                for i in shared:
                    n = n + self._face_normals[i]
                return n.normalized()
        return self._face_normals[face_idx]

    def _vertex_normal(self, vidx: int) -> Vec3:
        total = Vec3.zero()
        for i, tri in enumerate(self.triangles):
            if vidx not in tri:
                continue
            j = tri.index(vidx)
            a = self.vertices[tri[j]]
            b = self.vertices[tri[(j + 1) % 3]]
            c = self.vertices[tri[(j + 2) % 3]]
            e1, e2 = (b - a), (c - a)
            wedge = math.atan2(e1.cross(e2).norm(), e1.dot(e2))
            total = total + self._face_normals[i].scale(wedge)
        if total.norm() == 0.0:
            raise GeometryError(f"vertex {vidx} has no incident area")
        return total.normalized()


Surface = Union[SpherePatch, CylinderPatch, TriangleMesh]


def _any_perpendicular(v: Vec3) -> Vec3:
    comps = (abs(v.x), abs(v.y), abs(v.z))
    pick = _GLOBAL_AXES[comps.index(min(comps))]
    return (pick - v.scale(pick.dot(v))).normalized()


def _closest_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3:
    # Ericson, Real-Time Collision Detection, 5.1.5
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab.dot(ap), ac.dot(ap)
    if d1 <= 0.0 and d2 <= 0.0:
        return a
    bp = p - b
    d3, d4 = ab.dot(bp), ac.dot(bp)
    if d3 >= 0.0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        return a + ab.scale(d1 / (d1 - d3))
    cp = p - c
    d5, d6 = ab.dot(cp), ac.dot(cp)
    if d6 >= 0.0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        return a + ac.scale(d2 / (d2 - d6))
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        return b + (c - b).scale((d4 - d3) / ((d4 - d3) + (d5 - d6)))
    denom = 1.0 / (va + vb + vc)
    return a + ab.scale(vb * denom) + ac.scale(vc * denom)


def surface_normal(surface: Surface, point: Vec3, tolerance: float = 0.005) -> Vec3:
    """Outward unit normal at a point on (or near) the surface.

    Faults if the point is farther than ``tolerance`` from the surface.
    """
    q, n = surface.closest_point(point)
    if (point - q).norm() > tolerance:
        raise GeometryError(
            f"point {tuple(point)} is {(point - q).norm():.4f} m from the surface "
            f"(tolerance {tolerance} m)"
        )
    return n


# ---------------------------------------------------------------------------
# sampled patches and plane fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampledPatch:
    """Points probed with the drill tip around a target, used to estimate
    the local tangent plane."""

    points: tuple  # of Vec3

    def __post_init__(self):
        if len(self.points) < 3:
            raise GeometryError("a sampled patch needs at least 3 points")


@dataclass(frozen=True)
class PlaneFit:
    centroid: Vec3
    normal: Vec3
    rms_residual: float


def fit_plane(patch: SampledPatch, orient_along: Optional[Vec3] = None) -> PlaneFit:
    """Total-least-squares plane through the patch points.

    The normal is the covariance eigenvector with the smallest eigenvalue,
    so the fit has no preferred axis and commutes with rigid transforms.
    ``orient_along`` canonicalizes the sign (the fitted normal keeps a
    non-negative dot with it); by default the normal points away from the
    robot base at the origin, i.e. along the centroid direction.
    """
    pts = np.array([[p.x, p.y, p.z] for p in patch.points], dtype=float)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered
    evals, evecs = np.linalg.eigh(cov)
    # rank check: the two largest eigenvalues must carry actual spread
    scale2 = float(np.max(evals)) if np.max(evals) > 0 else 0.0
    if scale2 <= 0.0 or evals[1] <= 1e-12 * scale2:
        raise GeometryError(
            "sampled patch is rank-deficient (points are collinear or coincident); "
            "cannot determine a tangent plane"
        )
    normal = Vec3(*evecs[:, 0])
    cvec = Vec3(*centroid)
    ref = orient_along if orient_along is not None else cvec
    if ref.norm() > 0.0 and normal.dot(ref) < 0.0:
        normal = -normal
    rms = float(np.sqrt(np.mean((centered @ np.array(normal)) ** 2)))
    return PlaneFit(cvec, normal, rms)


# ---------------------------------------------------------------------------
# target frames and the drilling axis
# ---------------------------------------------------------------------------


def build_target_frame(point: Vec3, normal: Vec3, reference: Vec3) -> Frame3:
    """Frame at a drill target: n is the supplied normal, u the reference
    direction projected into the tangent plane, w = n x u.

    A reference parallel to the normal falls back to the global basis
    vectors in order; the output never depends on the reference's magnitude
    or its component along n.
    """
    n = normal.normalized()
    candidates = (reference,) + _GLOBAL_AXES
    for ref in candidates:
        if ref.norm() == 0.0:
            continue
        r = ref.normalized()
        if abs(n.dot(r)) >= 1.0 - 1e-6:
            continue
        u = (r - n.scale(r.dot(n))).normalized()
        w = n.cross(u)
        return make_frame(point, u, w, n)
    raise GeometryError("no usable reference direction for the target frame")


def drilling_axis(frame: Frame3, phi_deg: float, theta_deg: float) -> Vec3:
    """Unit drilling axis from polar angle phi (off the frame normal) and
    azimuth theta (from u toward w)."""
    if not (0.0 <= phi_deg <= 90.0):
        raise GeometryError(f"polar angle must be in [0, 90] deg, got {phi_deg}")
    phi = math.radians(phi_deg)
    theta = math.radians(theta_deg)
    sp, cp = math.sin(phi), math.cos(phi)
    st, ct = math.sin(theta), math.cos(theta)
    ax = (
        frame.n.scale(cp)
        + frame.u.scale(sp * ct)
        + frame.w.scale(sp * st)
    )
    return ax.normalized()


def recover_angles(axis: Vec3, frame: Frame3) -> Tuple[float, float]:
    """Invert ``drilling_axis``: (phi_deg, theta_deg) of a unit axis.

    theta is reported in [0, 360) and defined as 0 when the axis is within
    numerical parallel of the normal (sin(phi) < 1e-6).
    """
    from .geometry import angle_between

    phi = math.degrees(angle_between(axis, frame.n))
    if math.sin(math.radians(phi)) < 1e-6:
        return phi, 0.0
    theta = math.degrees(math.atan2(axis.dot(frame.w), axis.dot(frame.u)))
    if theta < 0.0:
        theta += 360.0
    return phi, theta


@dataclass(frozen=True)
class DrillTarget:
    """A hole to open: point on the workpiece, its target frame (with the
    drilling-side normal), desired angles, and the derived feed axis."""

    point: Vec3
    frame: Frame3
    phi_deg: float
    theta_deg: float
    axis: Vec3 = field(init=False)

    def __post_init__(self):
        ax = drilling_axis(self.frame, self.phi_deg, self.theta_deg)
        object.__setattr__(self, "axis", ax)
        if abs(ax.dot(self.frame.n) - math.cos(math.radians(self.phi_deg))) > 1e-9:
            raise GeometryError("drilling axis does not satisfy axis . n = cos(phi)")


def make_drill_target(
    surface: Surface,
    point: Vec3,
    phi_deg: float,
    theta_deg: float,
    reference: Vec3 = Vec3(1.0, 0.0, 0.0),
    approach_side: Optional[Vec3] = None,
) -> DrillTarget:
    """Build a target on a surface: the frame normal is the surface normal
    flipped to point into the material (away from ``approach_side``, the
    direction toward the robot; defaults to the outward normal side)."""
    n_out = surface_normal(surface, point)
    n_drill = -n_out
    if approach_side is not None and n_drill.dot(approach_side) > 0.0:
        n_drill = n_out
    frame = build_target_frame(point, n_drill, reference)
    return DrillTarget(point, frame, phi_deg, theta_deg)


# ---------------------------------------------------------------------------
# file ingestion
# ---------------------------------------------------------------------------


def transform_mesh(mesh: TriangleMesh, rotation, translation: Vec3) -> TriangleMesh:
    """Rigidly transform a mesh into the robot base frame (offline
    registration for meshes scanned in another frame)."""
    from .geometry import rotate

    verts = tuple(rotate(rotation, v) + translation for v in mesh.vertices)
    return TriangleMesh(verts, mesh.triangles)


def load_stl(path: str) -> TriangleMesh:
    """ASCII STL reader (units meters, robot-base coordinates)."""
    vertices: list = []
    vmap: dict = {}
    triangles = []
    current: list = []
    with open(path, "r") as fh:
        first = fh.readline()
        if not first.lstrip().lower().startswith("solid"):
            raise GeometryError(f"{path}: not an ASCII STL file")
        for lineno, line in enumerate(fh, start=2):
            tok = line.split()
            if not tok:
                continue
            if tok[0] == "vertex":
                if len(tok) != 4:
                    raise GeometryError(f"{path}:{lineno}: malformed vertex line")
                v = (float(tok[1]), float(tok[2]), float(tok[3]))
                idx = vmap.get(v)
                if idx is None:
                    idx = len(vertices)
                    vmap[v] = idx
                    vertices.append(Vec3(*v))
                current.append(idx)
            elif tok[0] == "endfacet":
                if len(current) != 3:
                    raise GeometryError(f"{path}:{lineno}: facet without 3 vertices")
                triangles.append(tuple(current))
                current = []
    if not triangles:
        raise GeometryError(f"{path}: no facets found")
    return TriangleMesh(tuple(vertices), tuple(triangles))


def load_off(path: str) -> TriangleMesh:
    """OFF mesh reader (triangles only)."""
    with open(path, "r") as fh:
        lines = [
            ln.strip()
            for ln in fh
            if ln.strip() and not ln.strip().startswith("#")
        ]
    if not lines or lines[0] != "OFF":
        raise GeometryError(f"{path}: missing OFF header")
    nv, nf, _ = (int(x) for x in lines[1].split()[:3])
    verts = []
    for ln in lines[2 : 2 + nv]:
        x, y, z = (float(t) for t in ln.split()[:3])
        verts.append(Vec3(x, y, z))
    tris = []
    for ln in lines[2 + nv : 2 + nv + nf]:
        tok = ln.split()
        if int(tok[0]) != 3:
            raise GeometryError(f"{path}: only triangle faces supported")
        tris.append((int(tok[1]), int(tok[2]), int(tok[3])))
    return TriangleMesh(tuple(verts), tuple(tris))


def load_patch_csv(path: str) -> SampledPatch:
    """Sampled-patch reader: CSV with an ``x,y,z`` header, meters."""
    points = []
    with open(path, "r") as fh:
        header = fh.readline().strip().lower().replace(" ", "")
        if header != "x,y,z":
            raise GeometryError(f"{path}: expected header 'x,y,z', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise GeometryError(f"{path}:{lineno}: expected 3 columns")
            points.append(Vec3(float(parts[0]), float(parts[1]), float(parts[2])))
    return SampledPatch(tuple(points))


def tessellated_sphere(center: Vec3, radius: float, refinement: int) -> TriangleMesh:
    """Icosphere used by tests to check mesh-normal convergence."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    base = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [Vec3(*v).normalized() for v in base]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(refinement):
        cache: dict = {}
        new_faces = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = (verts[i] + verts[j]).scale(0.5).normalized()
                cache[key] = len(verts)
                verts.append(m)
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    final = tuple(center + v.scale(radius) for v in verts)
    return TriangleMesh(final, tuple(faces))
