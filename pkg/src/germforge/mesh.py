"""Flat cone surfaces as glued triangle charts, and the discrete operators on them.

A :class:`ConeMesh` stores every triangle in its own 2D chart.  Charts of
neighbouring faces are related by rigid maps ``p -> +-p + shift`` (rotations
by multiples of pi), which is exactly the structure of a half-translation
surface.  Vertex fields are plain ``(V,)`` arrays, face fields ``(F,)`` or
``(F, 2, 2)`` arrays.

The Laplacian convention throughout the package is the positive one,
``Delta = -div grad``; ``u @ L @ u`` approximates the Dirichlet energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import _io
from .errors import MeshError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Gluing:
    """Identifies edge ``edge_a`` of ``face_a`` with edge ``edge_b`` of ``face_b``.

    Edge ``k`` runs from corner ``k`` to corner ``k+1``.  The transition maps
    chart ``a`` to chart ``b``: ``p -> (-1)**rot_half_turns * p + shift``.
    """

    face_a: int
    edge_a: int
    face_b: int
    edge_b: int
    rot_half_turns: int = 0
    shift: tuple[float, float] = (0.0, 0.0)

    def apply(self, p):
        sign = -1.0 if self.rot_half_turns % 2 else 1.0
        return sign * np.asarray(p, dtype=float) + np.asarray(self.shift, dtype=float)


@dataclass(frozen=True, eq=False)
class ConeMesh:
    """Triangulated closed flat cone surface.

    ``marked`` maps vertex ids to target cone angles in ``(0, 2*pi)``.  The
    instance is validated on construction and its arrays are read-only.
    ``info`` carries generator metadata (vertex positions, snap distances)
    and is not part of the serialized form.
    """

    faces: np.ndarray
    charts: np.ndarray
    gluings: tuple[Gluing, ...]
    genus: int
    marked: Mapping[int, float] = field(default_factory=dict)
    n_vertices: int | None = None
    info: Mapping[str, object] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        faces = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        charts = np.array(self.charts, dtype=float).reshape(-1, 3, 2)
        faces.setflags(write=False)
        charts.setflags(write=False)
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "charts", charts)
        object.__setattr__(self, "gluings", tuple(self.gluings))
        object.__setattr__(self, "marked", {int(k): float(v) for k, v in dict(self.marked).items()})
        nv = int(faces.max()) + 1 if self.n_vertices is None else int(self.n_vertices)
        object.__setattr__(self, "n_vertices", nv)
        self._validate()

    # -- derived geometry -------------------------------------------------

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    @property
    def n_edges(self) -> int:
        return len(self.gluings)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @cached_property
    def edge_vectors(self) -> np.ndarray:
        """``(F, 3, 2)``: edge k = corner k+1 minus corner k, in the face chart."""
        return np.roll(self.charts, -1, axis=1) - self.charts

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edge_vectors, axis=2)

    @cached_property
    def face_areas(self) -> np.ndarray:
        e = self.edge_vectors
        return 0.5 * (e[:, 0, 0] * e[:, 1, 1] - e[:, 0, 1] * e[:, 1, 0])

    @cached_property
    def corner_angles(self) -> np.ndarray:
        """``(F, 3)`` interior angle at each corner."""
        e = self.edge_vectors
        out = np.empty(self.faces.shape)
        for k in range(3):
            a = e[:, k]
            b = -e[:, (k + 2) % 3]
            cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
            dot = np.einsum("ij,ij->i", a, b)
            out[:, k] = np.arctan2(cross, dot)
        return out

    @cached_property
    def vertex_areas(self) -> np.ndarray:
        """Lumped mass: one third of the incident triangle areas."""
        return np.bincount(self.faces.ravel(), weights=np.repeat(self.face_areas / 3.0, 3),
                           minlength=self.n_vertices)

    @cached_property
    def angle_defects(self) -> np.ndarray:
        s = np.bincount(self.faces.ravel(), weights=self.corner_angles.ravel(),
                        minlength=self.n_vertices)
        return TWO_PI - s

    @cached_property
    def total_area(self) -> float:
        return float(self.face_areas.sum())

    @cached_property
    def neighbors(self) -> np.ndarray:
        """``(F, 3, 2)`` int: (face, edge) glued to each edge slot."""
        nb = np.full((self.n_faces, 3, 2), -1, dtype=np.int64)
        for g in self.gluings:
            nb[g.face_a, g.edge_a] = (g.face_b, g.edge_b)
            nb[g.face_b, g.edge_b] = (g.face_a, g.edge_a)
        return nb

    @property
    def marked_vertices(self) -> list[int]:
        return sorted(self.marked)

    def target_cone_sum(self) -> float:
        """``2*pi*(2-2g) - sum(2*pi - theta_i)``: total curvature of the target metric."""
        return TWO_PI * (2 - 2 * self.genus) - sum(TWO_PI - th for th in self.marked.values())

    def with_marks(self, marks: Mapping[int, float]) -> "ConeMesh":
        return ConeMesh(self.faces, self.charts, self.gluings, self.genus, marks,
                        self.n_vertices, self.info)

    def scaled(self, lam: float) -> "ConeMesh":
        """Same surface with every chart (and gluing shift) scaled by ``lam``."""
        gl = [Gluing(g.face_a, g.edge_a, g.face_b, g.edge_b, g.rot_half_turns,
                     tuple(lam * np.asarray(g.shift))) for g in self.gluings]
        return ConeMesh(self.faces, lam * self.charts, gl, self.genus, self.marked,
                        self.n_vertices, self.info)

    # -- validation -------------------------------------------------------

    def _validate(self) -> None:
        F = self.n_faces
        if F == 0:
            raise MeshError("mesh has no faces")
        if self.faces.min() < 0 or self.faces.max() >= self.n_vertices:
            raise MeshError("face references a vertex id out of range")
        if np.unique(self.faces).size != self.n_vertices:
            raise MeshError("some vertex ids are not used by any face")
        areas = self.face_areas
        scale = float(np.max(self.edge_lengths))
        if np.any(areas < 0):
            raise MeshError("orientation mismatch: face chart is clockwise")
        if np.any(areas <= 1e-14 * scale * scale):
            raise MeshError("degenerate triangle (zero area)")

        seen = np.zeros((F, 3), dtype=np.int64)
        for g in self.gluings:
            for f, k in ((g.face_a, g.edge_a), (g.face_b, g.edge_b)):
                if not (0 <= f < F and 0 <= k < 3):
                    raise MeshError(f"gluing refers to a missing edge slot ({f}, {k})")
                seen[f, k] += 1
        if np.any(seen != 1):
            f, k = np.argwhere(seen != 1)[0]
            raise MeshError(f"non-manifold gluing: edge slot ({f}, {k}) glued {seen[f, k]} times")

        tol = 1e-9 * max(scale, 1.0)
        for g in self.gluings:
            ia, ja = self.faces[g.face_a, g.edge_a], self.faces[g.face_a, (g.edge_a + 1) % 3]
            ib, jb = self.faces[g.face_b, g.edge_b], self.faces[g.face_b, (g.edge_b + 1) % 3]
            if (ia, ja) != (jb, ib):
                raise MeshError(f"gluing {g} joins edges with different vertex ids")
            la, lb = self.edge_lengths[g.face_a, g.edge_a], self.edge_lengths[g.face_b, g.edge_b]
            if abs(la - lb) > 1e-12 * max(la, lb) + 1e-15:
                raise MeshError(f"glued edge lengths differ: {la} vs {lb}")
            pa = self.charts[g.face_a, [g.edge_a, (g.edge_a + 1) % 3]]
            pb = self.charts[g.face_b, [(g.edge_b + 1) % 3, g.edge_b]]
            if np.max(np.abs(g.apply(pa) - pb)) > tol:
                raise MeshError(f"gluing transition does not map edge ({g.face_a},{g.edge_a}) "
                                f"onto ({g.face_b},{g.edge_b})")

        chi = self.euler_characteristic
        if chi != 2 - 2 * self.genus:
            raise MeshError(f"Euler characteristic {chi} inconsistent with genus {self.genus}")
        for v, th in self.marked.items():
            if not 0 <= v < self.n_vertices:
                raise MeshError(f"marked vertex {v} out of range")
            if not 0.0 < th < TWO_PI:
                raise MeshError(f"cone angle {th} at vertex {v} outside (0, 2pi)")
        gb = float(self.angle_defects.sum())
        if abs(gb - TWO_PI * chi) > 1e-9:
            raise MeshError(f"angle defects sum to {gb}, expected {TWO_PI * chi}")

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "genus": self.genus,
            "faces": [{"v": [int(i) for i in f], "chart": c.tolist()}
                      for f, c in zip(self.faces, self.charts)],
            "gluings": [{"face_a": g.face_a, "edge_a": g.edge_a, "face_b": g.face_b,
                         "edge_b": g.edge_b, "rot_half_turns": g.rot_half_turns,
                         "shift": [float(s) for s in g.shift]} for g in self.gluings],
            "marked": [{"v": v, "theta": th} for v, th in sorted(self.marked.items())],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ConeMesh":
        try:
            faces = [f["v"] for f in data["faces"]]
            charts = [f["chart"] for f in data["faces"]]
            gl = [Gluing(int(g["face_a"]), int(g["edge_a"]), int(g["face_b"]), int(g["edge_b"]),
                         int(g.get("rot_half_turns", 0)),
                         tuple(float(s) for s in g.get("shift", (0.0, 0.0))))
                  for g in data["gluings"]]
            marks = {int(m["v"]): _io.to_float(m["theta"]) for m in data.get("marked", [])}
            genus = int(data["genus"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MeshError(f"malformed mesh JSON: {exc}") from exc
        return cls(faces, charts, gl, genus, marks)

    def save(self, path):
        return _io.write_json(path, self.to_json())

    @classmethod
    def load(cls, path) -> "ConeMesh":
        return cls.from_json(_io.read_json(path))


# -- fields -----------------------------------------------------------------

def vertex_field(mesh: ConeMesh, values, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.shape[0] != mesh.n_vertices:
        raise ValueError(f"vertex field has length {arr.shape[0]}, mesh has {mesh.n_vertices} vertices")
    return arr


def face_field(mesh: ConeMesh, values, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.shape[0] != mesh.n_faces:
        raise ValueError(f"face field has length {arr.shape[0]}, mesh has {mesh.n_faces} faces")
    if arr.ndim == 3 and not np.allclose(arr, np.swapaxes(arr, 1, 2), rtol=0, atol=1e-12 * max(1.0, np.abs(arr).max())):
        raise ValueError("matrix-valued face field is not symmetric")
    return arr


def face_average(mesh: ConeMesh, f) -> np.ndarray:
    """Corner average of a vertex field on each face."""
    return np.asarray(f)[mesh.faces].mean(axis=1)


def face_exp_integrals(mesh: ConeMesh, w) -> np.ndarray:
    """Exact ``int_f e^w da`` per face for the piecewise-linear interpolant of ``w``.

    Equals ``2 area_f`` times the second divided difference of ``exp`` at the
    corner values, read off the exponential of a bidiagonal matrix.
    """
    wf = np.asarray(w, dtype=float)[mesh.faces]
    top = wf.max(axis=1)
    M = np.zeros((mesh.n_faces, 3, 3))
    idx = np.arange(3)
    M[:, idx, idx] = wf - top[:, None]
    M[:, 0, 1] = M[:, 1, 2] = 1.0
    dd = scipy.linalg.expm(M)[:, 0, 2]
    return 2.0 * mesh.face_areas * dd * np.exp(top)


# -- operators ----------------------------------------------------------------

def cotan_laplacian(mesh: ConeMesh) -> sp.csr_matrix:
    """Cotangent stiffness matrix of the flat background metric (positive semidefinite)."""
    cot = 1.0 / np.tan(mesh.corner_angles)
    rows, cols, vals = [], [], []
    for k in range(3):
        # corner k is opposite edge (k+1, k+2)
        i = mesh.faces[:, (k + 1) % 3]
        j = mesh.faces[:, (k + 2) % 3]
        w = 0.5 * cot[:, k]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    L = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(mesh.n_vertices,) * 2).tocsr()
    L.sum_duplicates()
    # symmetric by construction; average away any summation-order asymmetry
    return ((L + L.T) * 0.5).tocsr()


def angle_defects(mesh: ConeMesh) -> np.ndarray:
    return mesh.angle_defects.copy()


def integrate(mesh: ConeMesh, f) -> float:
    """Lumped-mass quadrature ``sum_v A_v f_v``."""
    return float(mesh.vertex_areas @ vertex_field(mesh, f))


# -- polygon gluings and mesh generation ------------------------------------------

@dataclass(frozen=True)
class Patch:
    """Parallelogram ``origin + a*e1 + b*e2`` with ``a, b`` in ``[0, 1]``; planar points are complex."""

    origin: complex
    e1: complex
    e2: complex


@dataclass(frozen=True)
class SideGluing:
    """Identify boundary segment ``a`` with ``b``; both given in counter-clockwise
    boundary orientation, so ``a[0]`` is glued to ``b[1]`` and ``a[1]`` to ``b[0]``."""

    a: tuple[complex, complex]
    b: tuple[complex, complex]


@dataclass(frozen=True)
class PolygonGluing:
    """Polygon made of parallelogram patches with pairwise side identifications.

    ``marks`` lists ``(planar point, cone angle)`` pairs; points are snapped
    to the nearest grid vertex.
    """

    patches: tuple[Patch, ...]
    sides: tuple[SideGluing, ...]
    marks: tuple[tuple[complex, float], ...] = ()


class _UnionFind:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, i):
        while self.p[i] != i:
            self.p[i] = self.p[self.p[i]]
            i = self.p[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.p[max(ri, rj)] = min(ri, rj)


def _side_map(side: SideGluing, tol: float):
    a0, a1 = side.a
    b0, b1 = side.b
    da, db = a1 - a0, b0 - b1
    if abs(abs(da) - abs(db)) > tol:
        raise MeshError(f"glued sides have different lengths: {abs(da)} vs {abs(db)}")
    if abs(db - da) <= tol:
        return 0, b1 - a0
    if abs(db + da) <= tol:
        return 1, b1 + a0
    raise MeshError("transition rotation is not a multiple of pi (not a half-translation gluing)")


def _on_segment(z: complex, seg, tol: float) -> bool:
    a, b = seg
    d = b - a
    s = ((z - a) * d.conjugate()).real / abs(d) ** 2
    return -tol <= s <= 1 + tol and abs(z - (a + s * d)) <= tol


def _seg_distance(z: complex, seg) -> float:
    a, b = seg
    d = b - a
    s = min(1.0, max(0.0, ((z - a) * d.conjugate()).real / abs(d) ** 2))
    return abs(z - (a + s * d))


def build_mesh(gluing: PolygonGluing, refinement: int = 0, cone_grading: float = 1.5) -> ConeMesh:
    """Triangulate a glued polygon.

    Each patch is cut into a ``2**refinement`` square grid of cells, two
    triangles per cell, so every level quadruples the face count.  Cells
    touching a cone are split through it, so all corners at a cone are 45
    degrees and stay representable in the cone metric for large angles.  With
    ``cone_grading > 1`` grid points within a radius ``R`` of a cone or marked
    vertex are pulled in radially, ``rho -> R * (rho / R)**cone_grading``.
    """
    if refinement < 0:
        raise MeshError("refinement level must be >= 0")
    if cone_grading < 1:
        raise MeshError("cone_grading must be >= 1")
    N = 2 ** int(refinement)
    scale = max(max(abs(p.e1), abs(p.e2)) for p in gluing.patches)
    tol = 1e-9 * scale

    pts: list[complex] = []
    index: dict[tuple[int, int], int] = {}

    def key(z: complex):
        return (round(z.real / tol), round(z.imag / tol))

    def point(z: complex) -> int:
        # snap to an existing point within tolerance (grid points of adjacent patches)
        kx, ky = key(z)
        for dx in (0, -1, 1):
            for dy in (0, -1, 1):
                hit = index.get((kx + dx, ky + dy))
                if hit is not None:
                    return hit
        index[(kx, ky)] = len(pts)
        pts.append(z)
        return len(pts) - 1

    cells: list[tuple[int, int, int, int]] = []
    for patch in gluing.patches:
        if (patch.e1.conjugate() * patch.e2).imag <= 0:
            raise MeshError("patch is not positively oriented")
        grid = [[point(patch.origin + (i / N) * patch.e1 + (j / N) * patch.e2)
                 for j in range(N + 1)] for i in range(N + 1)]
        for i in range(N):
            for j in range(N):
                cells.append((grid[i][j], grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]))
    P = np.array(pts)
    tris = _split_cells(cells, set())

    maps = [(_side_map(s, tol), s) for s in gluing.sides]

    def transfer(z: complex, m: int, shift: complex) -> complex:
        return (-z if m else z) + shift

    uf = _UnionFind(len(pts))
    for (m, shift), s in maps:
        for idx, z in enumerate(pts):
            if _on_segment(z, s.a, tol):
                w = transfer(z, m, shift)
                hit = index.get(key(w))
                if hit is None:
                    hit = min(range(len(pts)), key=lambda q: abs(pts[q] - w))
                    if abs(pts[hit] - w) > 1e3 * tol:
                        raise MeshError("side gluing does not match grid points on the partner side")
                uf.union(idx, hit)

    # vertex ids in order of first appearance
    roots: dict[int, int] = {}
    vid = np.empty(len(pts), dtype=np.int64)
    for idx in range(len(pts)):
        r = uf.find(idx)
        if r not in roots:
            roots[r] = len(roots)
        vid[idx] = roots[r]

    def glue(tris):
        # edges: interior pairs share both planar endpoints; boundary pairs via side maps
        slot: dict[tuple[int, int], tuple[int, int]] = {}
        for f, t in enumerate(tris):
            for k in range(3):
                slot[(t[k], t[(k + 1) % 3])] = (f, k)
        glued: list[Gluing] = []
        done = set()
        for (p, q), (f, k) in slot.items():
            if (f, k) in done:
                continue
            if (q, p) in slot:
                fb, kb = slot[(q, p)]
                glued.append(Gluing(f, k, fb, kb, 0, (0.0, 0.0)))
                done.update({(f, k), (fb, kb)})
                continue
            zp, zq = pts[p], pts[q]
            partner = None
            for (m, shift), s in maps:
                for seg, mm, sh in ((s.a, m, shift), (s.b, m, -shift if m == 0 else shift)):
                    if _on_segment(zp, seg, tol) and _on_segment(zq, seg, tol):
                        wp, wq = transfer(zp, mm, sh), transfer(zq, mm, sh)
                        hp, hq = index.get(key(wp)), index.get(key(wq))
                        if hp is not None and hq is not None and (hq, hp) in slot:
                            partner = (slot[(hq, hp)], mm, sh)
                            break
                if partner:
                    break
            if partner is None:
                raise MeshError(f"boundary edge {zp}->{zq} is not covered by any side gluing")
            (fb, kb), mm, sh = partner
            glued.append(Gluing(f, k, fb, kb, mm, (sh.real, sh.imag)))
            done.update({(f, k), (fb, kb)})
        return glued

    glued = glue(tris)
    faces = vid[np.array(tris)]
    n_vertices = len(roots)

    # marks: snap to nearest grid point
    marks: dict[int, float] = {}
    snaps: list[float] = []
    for z, theta in gluing.marks:
        d = np.abs(P - z)
        idx = int(np.argmin(d))
        snaps.append(float(d[idx]))
        marks[int(vid[idx])] = float(theta)

    charts_flat = P[np.array(tris)]
    provisional = _assemble(faces, charts_flat, glued, n_vertices, marks)

    # the total angle at a grid point does not depend on the diagonals, so the
    # cones are known; re-split the cells at them with the diagonal through the cone
    cone = {int(v) for v in np.flatnonzero(np.abs(provisional.angle_defects) > 1e-9)} | set(marks)
    at_cone = {i for i in range(len(pts)) if vid[i] in cone}
    if at_cone:
        tris = _split_cells(cells, at_cone)
        glued = glue(tris)
        faces = vid[np.array(tris)]
    points = P.copy()
    if cone_grading > 1:
        points = _grade(P, vid, cone, gluing, cone_grading)
    charts = points[np.array(tris)]
    mesh = _assemble(faces, charts, glued, n_vertices, marks, provisional.genus)
    positions = np.empty(n_vertices, dtype=complex)
    positions[vid[::-1]] = points[::-1]
    object.__setattr__(mesh, "info", {"vertex_positions": positions, "snap_distances": snaps,
                                      "refinement": int(refinement), "cone_grading": float(cone_grading)})
    return mesh


def _split_cells(cells, special) -> list[tuple[int, int, int]]:
    """Two triangles per cell along the ``p00 - p11`` diagonal, or the other one
    when only ``p10`` or ``p01`` is in ``special``."""
    tris = []
    for p00, p10, p11, p01 in cells:
        if (p10 in special or p01 in special) and not (p00 in special or p11 in special):
            tris.append((p00, p10, p01))
            tris.append((p10, p11, p01))
        else:
            tris.append((p00, p10, p11))
            tris.append((p00, p11, p01))
    return tris


def _assemble(faces, charts_c, glued, n_vertices, marks, genus=None) -> ConeMesh:
    charts = np.stack([charts_c.real, charts_c.imag], axis=-1)
    V, E, F = n_vertices, len(glued), len(faces)
    chi = V - E + F
    if genus is None:
        if chi % 2:
            raise MeshError(f"odd Euler characteristic {chi}: gluing is not a closed oriented surface")
        genus = (2 - chi) // 2
    if genus < 1:
        raise MeshError(f"genus {genus} < 1 is not supported")
    return ConeMesh(faces, charts, glued, genus, marks, n_vertices)


def _grade(P, vid, cone, gluing: PolygonGluing, gamma: float) -> np.ndarray:
    copies = np.array([P[i] for i in range(len(P)) if vid[i] in cone])
    if copies.size == 0:
        return P.copy()
    sides = [s for sg in gluing.sides for s in (sg.a, sg.b)]
    dmin = math.inf
    for n, c in enumerate(copies):
        others = np.abs(copies - c)
        others = others[others > 1e-12]
        if others.size:
            dmin = min(dmin, float(others.min()))
        for seg in sides:
            dseg = _seg_distance(c, seg)
            if dseg > 1e-12:
                dmin = min(dmin, dseg)
    R = 0.45 * dmin
    out = P.copy()
    d = np.abs(P[:, None] - copies[None, :])
    near = np.argmin(d, axis=1)
    rho = d[np.arange(len(P)), near]
    sel = (rho < R) & (rho > 0)
    c = copies[near[sel]]
    out[sel] = c + (P[sel] - c) * (rho[sel] / R) ** (gamma - 1.0)
    return out


def torus_gluing(tau: complex = 1j, marks: Sequence[tuple[complex, float]] = ()) -> PolygonGluing:
    """Fundamental parallelogram of ``C / (Z + tau Z)``."""
    tau = complex(tau)
    return PolygonGluing(
        patches=(Patch(0j, 1 + 0j, tau),),
        sides=(SideGluing((0j, 1 + 0j), (1 + tau, tau)),
               SideGluing((1 + 0j, 1 + tau), (tau, 0j))),
        marks=tuple(marks),
    )


def lshape_gluing(a: float = 2.0, b: float = 1.0, marks: Iterable = ()) -> PolygonGluing:
    """``[0,a] x [0,1]  U  [0,1] x [1,1+b]`` with opposite sides translated together (genus 2)."""
    if not (a > 1 and b > 0):
        raise MeshError("L-shape needs a > 1 (horizontal leg length) and b > 0")
    top = 1 + b
    return PolygonGluing(
        patches=(Patch(0j, 1 + 0j, 1j), Patch(1 + 0j, (a - 1) + 0j, 1j), Patch(1j, 1 + 0j, b * 1j)),
        sides=(
            SideGluing((0j, 1 + 0j), (1 + top * 1j, top * 1j)),
            SideGluing((1 + 0j, a + 0j), (a + 1j, 1 + 1j)),
            SideGluing((a + 0j, a + 1j), (1j, 0j)),
            SideGluing((1 + 1j, 1 + top * 1j), (top * 1j, 1j)),
        ),
        marks=tuple(marks),
    )
