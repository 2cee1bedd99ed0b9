"""Per-face linear algebra for the parameterization maps: ``I^#``, ``I*``, the
morphism ``b`` between the boundary metrics, and the third-fundamental-form
duality.  Also a discrete curvature for face-constant metric fields."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse.csgraph

from . import _io
from .errors import DegenerateTransportError, MeshError, SettingError
from .germ import E2, J2, SurfaceGerm, traceless_part
from .mesh import ConeMesh, cotan_laplacian

GLUE_TOL = 1e-3


def _T(M):
    return np.swapaxes(M, -1, -2)


def pullback(G, M):
    """``G(M., M.)`` per face."""
    return _T(M) @ G @ M


@dataclass(frozen=True, eq=False)
class Metric2Field:
    """Symmetric positive-definite metric, one matrix per face chart.

    ``lengths`` optionally carries edge lengths ``(F, 3)`` measured along the
    edges in an underlying continuous metric; without it lengths come from
    the face matrices.
    """

    mesh: ConeMesh
    G: np.ndarray
    lengths: np.ndarray | None = None

    def __post_init__(self):
        G = np.array(self.G, dtype=float)
        if G.shape != (self.mesh.n_faces, 2, 2):
            raise ValueError("metric field must have one 2x2 matrix per face")
        G = 0.5 * (G + _T(G))
        if not (np.all(G[:, 0, 0] > 0) and np.all(np.linalg.det(G) > 0)):
            raise DegenerateTransportError("metric is not positive definite on some face")
        G.setflags(write=False)
        object.__setattr__(self, "G", G)
        if self.lengths is not None:
            L = np.array(self.lengths, dtype=float)
            if L.shape != (self.mesh.n_faces, 3) or not np.all(L > 0):
                raise ValueError("edge lengths must be positive, one triple per face")
            object.__setattr__(self, "lengths", L)

    @cached_property
    def chart_lengths(self) -> np.ndarray:
        """Edge lengths ``(F, 3)`` as seen from each face."""
        if self.lengths is not None:
            return self.lengths
        e = self.mesh.edge_vectors
        return np.sqrt(np.einsum("fki,fij,fkj->fk", e, self.G, e))

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        """Chart lengths averaged across each glued edge."""
        L = self.chart_lengths.copy()
        for g in self.mesh.gluings:
            m = 0.5 * (L[g.face_a, g.edge_a] + L[g.face_b, g.edge_b])
            L[g.face_a, g.edge_a] = L[g.face_b, g.edge_b] = m
        return L

    @cached_property
    def glued_disagreement(self) -> float:
        L = self.chart_lengths
        return max((abs(L[g.face_a, g.edge_a] - L[g.face_b, g.edge_b])
                    / max(L[g.face_a, g.edge_a], L[g.face_b, g.edge_b])
                    for g in self.mesh.gluings), default=0.0)

    def to_json(self) -> dict:
        out = {"faces": self.G}
        if self.lengths is not None:
            out["edge_lengths"] = self.lengths
        return out

    @classmethod
    def from_json(cls, data, mesh: ConeMesh) -> "Metric2Field":
        L = data.get("edge_lengths")
        return cls(mesh, np.array(data["faces"], dtype=float),
                   None if L is None else np.array(L, dtype=float))


def _nodes(n: int):
    """Gauss-Legendre rule on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (1 + x), 0.5 * w


def vertex_t(germ: SurfaceGerm) -> np.ndarray:
    """Area-weighted average of the face samples of ``t`` around each vertex."""
    mesh = germ.mesh
    w = np.repeat(mesh.face_areas, 3)
    V = mesh.n_vertices
    num = (np.bincount(mesh.faces.ravel(), w * np.repeat(germ.t.real, 3), V)
           + 1j * np.bincount(mesh.faces.ravel(), w * np.repeat(germ.t.imag, 3), V))
    return num / np.bincount(mesh.faces.ravel(), w, V)


def pointwise_shape(setting, u, t) -> np.ndarray:
    """Shape operator ``e^{-2u} Re(t dz^2) + H E`` at points with data ``(u, t)``."""
    return np.exp(-2 * np.asarray(u))[..., None, None] * traceless_part(t) + setting.H * E2


def cone_exponents(mesh: ConeMesh) -> dict[int, float]:
    """``beta`` with ``u ~ beta log r`` at vertices whose flat angle differs from the target."""
    out = {}
    flat = 2 * math.pi - mesh.angle_defects
    for v in range(mesh.n_vertices):
        target = mesh.marked.get(v, 2 * math.pi)
        if abs(flat[v] - target) > 1e-9:
            out[v] = target / flat[v] - 1.0
    return out


@dataclass(frozen=True)
class _Cone:
    """A cone vertex, its exponent ``beta`` and its chart images (complex)."""

    vertex: int
    beta: float
    images: np.ndarray

    def nearest(self, z):
        d = np.abs(np.asarray(z)[..., None] - self.images)
        i = d.argmin(axis=-1)
        return self.images[i], np.take_along_axis(d, i[..., None], -1)[..., 0]


def _cones(mesh: ConeMesh) -> tuple[list[_Cone], float]:
    """Cones with nonzero exponent and the radius of their developed disks."""
    betas = cone_exponents(mesh)
    if not betas:
        return [], 0.0
    z = mesh.charts[..., 0] + 1j * mesh.charts[..., 1]
    cones = [_Cone(c, b, np.unique(np.round(z[mesh.faces == c], 12))) for c, b in betas.items()]
    allpts = np.concatenate([c.images for c in cones])
    d = np.abs(allpts[:, None] - allpts[None])
    d[d < 1e-12] = np.inf
    return cones, 0.45 * float(min(d.min(), math.sqrt(mesh.total_area)))


def _integrate(germ, transform, uu, tt, dirs, jac, w):
    """``sum_i w_i jac_i e^{u_i} |T(B_i) dir_i|`` along each row."""
    B = pointwise_shape(germ.setting, uu, tt)
    img = (transform(B) @ dirs[..., None])[..., 0]
    return np.sum(w * jac * np.exp(uu) * np.linalg.norm(img, axis=-1), axis=-1)


def edge_lengths_of(germ: SurfaceGerm, transform, n: int = 6) -> np.ndarray:
    """Edge lengths in the metric ``e^{2u} T(B)^T T(B)``, ``T = transform(B)``.

    Away from cones the edge is the straight chart chord with ``u`` and ``t``
    linear along it.  Within a disk around a cone with exponent ``beta``,
    ``u = v + beta log|zeta|`` and, in the developing coordinate
    ``w = zeta^p / p`` (``p = beta + 1``), ``e^{2u}|dzeta|^2 = e^{2v}|dw|^2``
    with ``v`` regular; there the edge is the straight chord in ``w`` and
    ``v`` is linear along it.  Chart chords with ``u`` linear in ``z`` leave an
    angle error near the apex that does not shrink under refinement.
    Transition maps are +-identity on vectors, so both sides of a glued edge
    see the same integrand.
    """
    mesh = germ.mesh
    u = np.asarray(germ.u, dtype=float)
    tv = vertex_t(germ)
    P, faces = mesh.charts, mesh.faces
    s, w = _nodes(n)
    L = np.zeros((mesh.n_faces, 3))
    for k in range(3):
        k2 = (k + 1) % 3
        a, b = faces[:, k], faces[:, k2]
        uu = (1 - s) * u[a][:, None] + s * u[b][:, None]
        tt = (1 - s) * tv[a][:, None] + s * tv[b][:, None]
        e = mesh.edge_vectors[:, k]
        dirs = np.broadcast_to((e / np.linalg.norm(e, axis=-1, keepdims=True))[:, None], uu.shape + (2,))
        L[:, k] = _integrate(germ, transform, uu, tt, dirs, np.linalg.norm(e, axis=-1)[:, None], w)
    cones, radius = _cones(mesh)
    z = P[..., 0] + 1j * P[..., 1]
    for cone in cones:
        _developed_lengths(germ, transform, cone, radius, z, u, tv, L, s, w)
    for g in mesh.gluings:
        L[g.face_b, g.edge_b] = L[g.face_a, g.edge_a]
    return L


# rings around a cone whose discrete ``u`` is replaced, and rings used for the fit
NEAR_RINGS = 2
FIT_RINGS = (3, 8)


def _apex_runs(mesh: ConeMesh, apex: int):
    """Walk once around ``apex``; per chart image return ``(image, base, start, span)``.

    ``start`` is the total angle accumulated before the run of faces at that
    image begins, measured from the chart direction ``base``.
    """
    across = {}
    for g in mesh.gluings:
        across[(g.face_a, g.edge_a)] = (g.face_b, g.edge_b)
        across[(g.face_b, g.edge_b)] = (g.face_a, g.edge_a)
    z = mesh.charts[..., 0] + 1j * mesh.charts[..., 1]
    f0 = int(np.nonzero(np.any(mesh.faces == apex, axis=1))[0][0])
    f, k = f0, int(np.nonzero(mesh.faces[f0] == apex)[0][0])
    runs, total = [], 0.0
    while True:
        c = z[f, k]
        d0, d1 = z[f, (k + 1) % 3] - c, z[f, (k + 2) % 3] - c
        angle = float(np.angle(d1 / d0))
        if runs and abs(runs[-1][0] - c) < 1e-12 and abs(np.angle(d0 / runs[-1][4])) < 1e-9:
            runs[-1][3] += angle
            runs[-1][4] = d1
        else:
            runs.append([c, np.angle(d0), total, angle, d1])
        total += angle
        f, k = across[(f, (k + 2) % 3)]
        if f == f0:
            break
    return [tuple(r[:4]) for r in runs], total


def _developed_coordinates(mesh: ConeMesh, cone: _Cone, radius: float):
    """``w = r^p e^{i p Theta} / p`` at vertices within ``radius`` of the cone (NaN elsewhere)."""
    runs, total = _apex_runs(mesh, cone.vertex)
    p = cone.beta + 1.0
    wv = np.full(mesh.n_vertices, np.nan + 0j)
    z = mesh.charts[..., 0] + 1j * mesh.charts[..., 1]
    for c, base, start, span in runs:
        rel = z - c
        r = np.abs(rel)
        inside = (r < radius) & (r > 0)
        mid = base + 0.5 * span
        theta = np.angle(rel[inside] * np.exp(-1j * mid)) + 0.5 * span + start
        wv[mesh.faces[inside]] = r[inside] ** p / p * np.exp(1j * p * theta)
    wv[cone.vertex] = 0.0
    return wv


def _regular_part(mesh: ConeMesh, cone: _Cone, radius: float, u) -> np.ndarray:
    """``v = u - beta log r`` near the cone, refitted on the innermost rings.

    ``v`` is regular in the developed coordinate, so a quadratic in ``w``
    fitted on rings ``FIT_RINGS`` replaces the discrete values on the first
    ``NEAR_RINGS`` rings and at the apex, where the discrete solution carries
    an error that does not shrink under refinement.
    """
    wv = _developed_coordinates(mesh, cone, radius)
    z = mesh.charts[..., 0] + 1j * mesh.charts[..., 1]
    r = np.full(mesh.n_vertices, np.nan)
    _, d = cone.nearest(z)
    r[mesh.faces] = d
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.asarray(u, dtype=float) - cone.beta * np.log(r)
    adj = cotan_laplacian(mesh) != 0
    ring = scipy.sparse.csgraph.dijkstra(adj, indices=cone.vertex, unweighted=True,
                                        limit=FIT_RINGS[1] + 0.5)
    fit = (ring >= FIT_RINGS[0]) & (ring <= FIT_RINGS[1]) & np.isfinite(wv)
    near = ring <= NEAR_RINGS

    def basis(w):
        return np.stack([np.ones_like(w.real), w.real, w.imag, (w * w).real, (w * w).imag,
                         np.abs(w) ** 2], axis=-1)

    if fit.sum() >= 12 and np.all(np.isfinite(wv[near])):
        coef = np.linalg.lstsq(basis(wv[fit]), v[fit], rcond=None)[0]
        v[near] = basis(wv[near]) @ coef
    else:
        v[cone.vertex] = np.mean(v[ring == 1])
    return v


def _developed_lengths(germ, transform, cone, radius, z, u, tv, L, s, w):
    faces = germ.mesh.faces
    p, beta = cone.beta + 1.0, cone.beta
    vreg = _regular_part(germ.mesh, cone, radius, u)
    for k in range(3):
        k2 = (k + 1) % 3
        za, zb = z[:, k], z[:, k2]
        c, _ = cone.nearest(0.5 * (za + zb))
        ra, rb = np.abs(za - c), np.abs(zb - c)
        ref = np.exp(1j * np.angle(0.5 * (za + zb) - c))
        # an apex endpoint takes the direction of the other one
        ta = np.angle(np.where(ra > 1e-12, za - c, zb - c) / ref)
        tb = np.angle(np.where(rb > 1e-12, zb - c, za - c) / ref)
        sel = np.nonzero((ra < radius) & (rb < radius) & (p * np.abs(ta - tb) < 0.9 * math.pi))[0]
        if not sel.size:
            continue
        a, b = faces[sel, k], faces[sel, k2]
        va, vb = vreg[a], vreg[b]
        wa = ra[sel] ** p / p * np.exp(1j * p * ta[sel])
        wb = rb[sel] ** p / p * np.exp(1j * p * tb[sel])
        ws = (1 - s) * wa[:, None] + s * wb[:, None]
        zeta = (p * ws) ** (1.0 / p)
        v = (1 - s) * va[:, None] + s * vb[:, None]
        uu = v + beta * np.log(np.abs(zeta))
        tt = (1 - s) * tv[a][:, None] + s * tv[b][:, None]
        dz = ref[sel, None] * (wb - wa)[:, None] / zeta ** beta
        dirs = np.stack([dz.real, dz.imag], axis=-1) / np.abs(dz)[..., None]
        # e^u |dz| = e^v |dw|
        jac = np.abs(wb - wa)[:, None] * np.abs(zeta) ** (-beta)
        L[sel, k] = _integrate(germ, transform, uu, tt, dirs, jac, w)


@dataclass(frozen=True)
class CurvatureReport:
    defects: np.ndarray
    vertex_areas: np.ndarray
    expected: np.ndarray
    l1_error: float
    glued_disagreement: float
    degenerate_faces: int

    @property
    def curvature(self) -> np.ndarray:
        return self.defects / self.vertex_areas


def discrete_curvature(metric: Metric2Field, target=-1.0, exclude=None,
                       strict: bool = False) -> CurvatureReport:
    """Angle defects of the averaged edge lengths against ``int K da`` per vertex.

    ``target`` is a constant or per-face curvature; the expected defect of a
    vertex is a third of ``K_f a_f`` from each incident face, plus ``2 pi - theta``
    at marked cones.  ``exclude`` masks vertices out of the L1 error.
    """
    mesh = metric.mesh
    if strict and metric.glued_disagreement > GLUE_TOL:
        raise MeshError(f"glued edge lengths disagree by {metric.glued_disagreement:.3e}")
    L = metric.edge_lengths
    # edge k joins corners k, k+1; corner k is opposite edge k+1
    a = L[:, [1, 2, 0]]
    b, c = L[:, [2, 0, 1]], L[:, [0, 1, 2]]
    cosang = (b * b + c * c - a * a) / (2 * b * c)
    bad = np.any(np.abs(cosang) > 1, axis=1)
    ang = np.arccos(np.clip(cosang, -1, 1))
    s = 0.5 * L.sum(axis=1)
    area = np.sqrt(np.maximum(s * (s - L[:, 0]) * (s - L[:, 1]) * (s - L[:, 2]), 0.0))
    V = mesh.n_vertices
    defects = 2 * math.pi - np.bincount(mesh.faces.ravel(), ang.ravel(), V)
    A = np.bincount(mesh.faces.ravel(), np.repeat(area / 3, 3), V)
    K = np.broadcast_to(np.asarray(target, dtype=float), (mesh.n_faces,))
    expected = np.bincount(mesh.faces.ravel(), np.repeat(K * area / 3, 3), V)
    for v, th in mesh.marked.items():
        expected[v] += 2 * math.pi - th
    keep = np.ones(V, dtype=bool) if exclude is None else ~np.asarray(exclude, dtype=bool)
    scale = np.bincount(mesh.faces.ravel(), np.repeat(np.abs(K) * area / 3, 3), V)[keep].sum()
    err = float(np.abs(defects - expected)[keep].sum())
    # relative to the total curvature; absolute for flat targets
    err = err / scale if scale > 0 else err
    return CurvatureReport(defects, A, expected, err, metric.glued_disagreement, int(bad.sum()))


def _require_space(germ: SurfaceGerm, *spaces):
    if germ.setting.space not in spaces:
        raise SettingError(f"needs a germ in {' or '.join(spaces)}, got {germ.setting}")


def sharp_metrics(germ: SurfaceGerm) -> tuple[Metric2Field, Metric2Field]:
    """``I((E +- JB)., (E +- JB).)`` with ``J`` the quarter turn of the chart."""
    _require_space(germ, "ads")
    out = []
    for sgn in (1, -1):
        M = E2 + sgn * (J2 @ germ.B)
        if np.any(np.linalg.det(M) <= 0):
            raise DegenerateTransportError("E +- JB is singular on some face")
        L = edge_lengths_of(germ, lambda B, sgn=sgn: E2 + sgn * (J2 @ B))
        out.append(Metric2Field(germ.mesh, pullback(germ.I, M), L))
    return out[0], out[1]


def star_metrics(germ: SurfaceGerm) -> tuple[Metric2Field, Metric2Field]:
    """AdS: ``I((E +- B).)``; de Sitter: ``I((sqrt(H^2 - 1) E +- B_0).)``."""
    _require_space(germ, "ads", "ds")
    if germ.setting.space == "ads":
        c, H = 1.0, 0.0
    else:
        c, H = math.sqrt(germ.H ** 2 - 1), germ.H
    out = []
    for sgn in (1, -1):
        M = c * E2 + sgn * (germ.B - H * E2)
        if np.any(np.linalg.det(M) <= 0):
            raise DegenerateTransportError("star transport is singular on some face")
        L = edge_lengths_of(germ, lambda B, sgn=sgn: c * E2 + sgn * (B - H * E2))
        out.append(Metric2Field(germ.mesh, pullback(germ.I, M), L))
    return out[0], out[1]


@dataclass(frozen=True, eq=False)
class MorphismField:
    b: np.ndarray

    @property
    def det(self) -> np.ndarray:
        return np.linalg.det(self.b)

    def check(self, g_plus: Metric2Field | None = None, tol: float = 1e-9) -> dict:
        ev = np.linalg.eigvals(self.b)
        rep = {"det_error": float(np.abs(self.det - 1).max()),
               "eigen_real_positive": bool(np.all(np.abs(ev.imag) <= tol * np.abs(ev).max())
                                           and np.all(ev.real > 0))}
        if g_plus is not None:
            Gb = g_plus.G @ self.b
            rep["self_adjoint_error"] = float(np.abs(Gb - _T(Gb)).max())
        return rep

    def to_json(self) -> dict:
        return {"faces": self.b}


def labourie_morphism(germ: SurfaceGerm) -> MorphismField:
    """``b = (E + B)^{-1} (E - B)``, the map carrying ``I*_+`` to ``I*_-``."""
    _require_space(germ, "ads")
    if germ.H != 0:
        raise SettingError("the morphism is defined for maximal germs")
    if np.any(germ.k >= 1):
        raise DegenerateTransportError(f"k reaches {germ.k.max():.6g} >= 1")
    return MorphismField(np.linalg.solve(E2 + germ.B, E2 - germ.B))


def reconstruct_from_pair(g_plus: Metric2Field, b: MorphismField, tol: float = 1e-9):
    """Inverse of ``(I, B) -> (I*_+, b)``: ``B = (E + b)^{-1}(E - b)``, ``g = g_+((E + B)^{-1}.)``."""
    bb = np.asarray(b.b, dtype=float)
    if bb.shape != g_plus.G.shape:
        raise ValueError("morphism does not match the metric field")
    rep = b.check(tol=tol)
    if rep["det_error"] > tol or not rep["eigen_real_positive"]:
        raise DegenerateTransportError("b must have det 1 and positive real eigenvalues")
    B = np.linalg.solve(E2 + bb, E2 - bb)
    g = pullback(g_plus.G, np.linalg.inv(E2 + B))
    return Metric2Field(g_plus.mesh, g), B


@dataclass(frozen=True, eq=False)
class DualSurface:
    metric: Metric2Field | None
    III: np.ndarray
    B_dual: np.ndarray
    K_dual: np.ndarray
    flagged: np.ndarray
    cone_angles: dict

    def to_json(self) -> dict:
        return {"faces": [{"III": self.III[f], "K": float(self.K_dual[f]),
                           "flagged": bool(self.flagged[f])} for f in range(len(self.K_dual))],
                "cone_angles": [{"v": v, "theta": th} for v, th in sorted(self.cone_angles.items())]}


def dual_surface(germ: SurfaceGerm, tol: float = 1e-9) -> DualSurface:
    """Third fundamental form ``I(B., B.)`` with dual curvature ``-1 - det(B^{-1})``.

    Faces where ``B`` is (nearly) singular, or that touch a zero of the
    differential, are flagged as ramification rather than raised.
    """
    _require_space(germ, "ads")
    detB = germ.detB
    III = pullback(germ.I, germ.B)
    flagged = (np.abs(detB) < tol) | np.isin(germ.mesh.faces, list(germ.zeros)).any(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        Bd = np.where(flagged[:, None, None], np.nan, np.linalg.inv(np.where(
            (np.abs(detB) < tol)[:, None, None], E2, germ.B)))
        Kd = np.where(flagged, np.nan, -1.0 - 1.0 / detB)
    try:
        with np.errstate(divide="ignore", invalid="ignore"):
            L = edge_lengths_of(germ, lambda B: B)
        metric = Metric2Field(germ.mesh, np.where(flagged[:, None, None], germ.I, III),
                              np.where(L > 0, L, np.nan) if np.all(L > 0) else None)
    except (DegenerateTransportError, ValueError):
        metric = None
    cones = {v: 2 * math.pi - th for v, th in germ.mesh.marked.items()}
    return DualSurface(metric, III, Bd, Kd, flagged, cones)


def first_form(germ: SurfaceGerm) -> Metric2Field:
    """The germ's own metric with edge lengths from the interpolated conformal factor."""
    return Metric2Field(germ.mesh, germ.I, edge_lengths_of(germ, lambda B: np.broadcast_to(E2, B.shape)))


def save_metric_pair(path, pair):
    return _io.write_json(path, {"plus": pair[0].G, "minus": pair[1].G})
