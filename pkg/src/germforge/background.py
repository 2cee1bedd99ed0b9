"""Test geometries: a cone mesh together with a quadratic differential on it."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import _io
from .errors import HQDError, MeshError
from .mesh import ConeMesh, build_mesh, lshape_gluing, torus_gluing


@dataclass(frozen=True, eq=False)
class HQDField:
    """Per-face samples ``t_f`` of ``q = t dz^2`` plus per-vertex weights ``Q_v ~ int |t|^2``.

    ``orders`` maps vertex ids to the order of ``q`` there: ``-1`` for a simple
    pole, ``n > 0`` for a zero of order ``n``.
    """

    t: np.ndarray
    Q: np.ndarray
    orders: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        t = np.array(self.t, dtype=complex)
        Q = np.array(self.Q, dtype=float)
        t.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "orders", {int(k): int(v) for k, v in dict(self.orders).items()})
        if np.any(Q < 0) or not np.all(np.isfinite(Q)):
            raise HQDError("vertex weights Q must be finite and non-negative")
        if not np.all(np.isfinite(t)):
            raise HQDError("non-finite quadratic differential sample")
        if any(o < -1 for o in self.orders.values()):
            raise HQDError("only simple poles are allowed")

    @property
    def poles(self) -> list[int]:
        return sorted(v for v, o in self.orders.items() if o == -1)

    def pole_order(self, v: int) -> int:
        return 1 if self.orders.get(v, 0) == -1 else 0

    def check(self, mesh: ConeMesh) -> None:
        if self.t.shape != (mesh.n_faces,) or self.Q.shape != (mesh.n_vertices,):
            raise HQDError("HQD field does not match the mesh")
        for v in self.poles:
            if v not in mesh.marked:
                raise HQDError(f"pole at unmarked vertex {v}")

    def scaled(self, s: float) -> "HQDField":
        return HQDField(s * self.t, s * s * self.Q, self.orders)

    def to_json(self) -> dict:
        return {
            "faces": [{"re": float(z.real), "im": float(z.imag)} for z in self.t],
            "Q": [float(q) for q in self.Q],
            "marks": [{"v": v, "pole_order": 1 if o == -1 else 0, "zero_order": max(o, 0)}
                      for v, o in sorted(self.orders.items())],
        }

    @classmethod
    def from_json(cls, data: Mapping, mesh: ConeMesh | None = None) -> "HQDField":
        try:
            t = np.array([complex(_io.to_float(f["re"]), _io.to_float(f["im"])) for f in data["faces"]])
            orders = {}
            for m in data.get("marks", []):
                orders[int(m["v"])] = -1 if int(m.get("pole_order", 0)) else int(m.get("zero_order", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise HQDError(f"malformed HQD JSON: {exc}") from exc
        if "Q" in data:
            Q = np.array([_io.to_float(q) for q in data["Q"]])
        elif mesh is not None:
            Q = lumped_weights(mesh, t)
        else:
            raise HQDError("HQD JSON without Q needs the mesh to rebuild it")
        return cls(t, Q, orders)

    def save(self, path):
        return _io.write_json(path, self.to_json())

    @classmethod
    def load(cls, path, mesh: ConeMesh | None = None) -> "HQDField":
        return cls.from_json(_io.read_json(path), mesh)


@dataclass(frozen=True, eq=False)
class ScaledData:
    """Background mesh and HQD with a continuation scale ``s`` applied to ``t``."""

    mesh: ConeMesh
    hqd: HQDField
    s: float

    def __post_init__(self):
        if not self.s >= 0:
            raise HQDError("scale must be non-negative")

    @property
    def field(self) -> HQDField:
        return self.hqd.scaled(self.s)


def scale_hqd(data, s: float) -> ScaledData:
    """``data`` is a ``(mesh, hqd)`` pair or an existing :class:`ScaledData`."""
    if isinstance(data, ScaledData):
        return ScaledData(data.mesh, data.hqd, data.s * s)
    mesh, hqd = data
    return ScaledData(mesh, hqd, s)


def lumped_weights(mesh: ConeMesh, t) -> np.ndarray:
    """``Q_v``: one third of ``|t_f|^2 * area_f`` from each incident face."""
    w = np.abs(np.asarray(t)) ** 2 * mesh.face_areas / 3.0
    return np.bincount(mesh.faces.ravel(), weights=np.repeat(w, 3), minlength=mesh.n_vertices)


def barycenters(mesh: ConeMesh) -> np.ndarray:
    c = mesh.charts.mean(axis=1)
    return c[:, 0] + 1j * c[:, 1]


def _field_from_function(mesh: ConeMesh, fn: Callable, orders=None) -> HQDField:
    t = fn(barycenters(mesh))
    return HQDField(t, lumped_weights(mesh, t), orders or {})


def edge_midpoint_mismatch(mesh: ConeMesh, fn: Callable) -> float:
    """Largest relative difference of ``fn`` evaluated at glued edge midpoints in both charts.

    Rotation by pi leaves ``dz^2`` invariant, so a genuine quadratic
    differential agrees on both sides whatever the transition.
    """
    worst = 0.0
    for g in mesh.gluings:
        pa = mesh.charts[g.face_a, [g.edge_a, (g.edge_a + 1) % 3]].mean(axis=0)
        pb = g.apply(pa)
        ta, tb = fn(complex(*pa)), fn(complex(*pb))
        worst = max(worst, abs(ta - tb) / max(abs(ta), abs(tb), 1e-300))
    return worst


# -- generators -----------------------------------------------------------------

def torus_background(tau: complex = 1j, t_const: complex = 1.0, refinement: int = 3,
                     marks: Sequence[tuple[complex, float]] = (), cone_grading: float = 1.5):
    """Flat torus ``C/(Z + tau Z)`` with constant ``t``; optional cone marks ``(point, theta)``."""
    tau = complex(tau)
    if not tau.imag > 1e-12:
        raise MeshError("degenerate modulus: Im(tau) must be positive")
    mesh = build_mesh(torus_gluing(tau, marks), refinement, cone_grading)
    t = np.full(mesh.n_faces, complex(t_const))
    return mesh, HQDField(t, lumped_weights(mesh, t))


def lshape_background(a: float = 2.0, b: float = 1.0, refinement: int = 3,
                      cone_grading: float = 1.5):
    """Genus-2 L-shaped translation surface carrying ``q = dz^2``."""
    mesh = build_mesh(lshape_gluing(a, b), refinement, cone_grading)
    cone = [int(v) for v in np.flatnonzero(np.abs(mesh.angle_defects) > 1e-9)]
    t = np.ones(mesh.n_faces, dtype=complex)
    # cone angle 2*pi*(k+1) is a zero of order k of the abelian differential dz (stratum H(2))
    orders = {v: int(round(-mesh.angle_defects[v] / (2 * math.pi))) for v in cone}
    return mesh, HQDField(t, lumped_weights(mesh, t), orders)


def _cot(w):
    """Complex cotangent, stable for large ``|Im w|``."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    up = w.imag >= 0
    e = np.exp(2j * w[up])
    out[up] = 1j * (e + 1) / (e - 1)
    e = np.exp(-2j * w[~up])
    out[~up] = -1j * (e + 1) / (e - 1)
    return out


def _csc2(w):
    """``1 / sin(w)**2`` without overflow for large ``|Im w|``."""
    w = np.asarray(w, dtype=complex)
    s = np.where(w.imag >= 0, 1, -1)
    e = np.exp(2j * s * w)
    return -4 * e / (1 - e) ** 2


def weierstrass_zeta(z, tau: complex, truncation: int = 12):
    """Weierstrass zeta for the lattice ``Z + tau Z``.

    The absolutely convergent lattice sum is taken row by row: each row
    ``{m + n tau : m in Z}`` is summed in closed form with cotangents, and
    rows ``|n| <= truncation`` are kept, so the error decays like
    ``exp(-2 pi truncation Im tau)``.
    """
    z = np.asarray(z, dtype=complex)
    pi = math.pi
    total = pi * _cot(pi * z) + z * pi ** 2 / 3.0
    for n in range(1, truncation + 1):
        for w in (n * tau, -n * tau):
            total = total + pi * _cot(pi * (z - w)) + pi * _cot(pi * w) + z * pi ** 2 * _csc2(pi * w)
    return total


def weierstrass_zeta_direct(z, tau: complex, box: int):
    """Brute-force lattice sum over ``|m|, |n| <= box`` (slow oracle, error ~ box**-2)."""
    z = np.asarray(z, dtype=complex)
    m, n = np.meshgrid(np.arange(-box, box + 1), np.arange(-box, box + 1))
    w = (m + n * tau).ravel()
    w = w[w != 0]
    zz = z[..., None]
    return 1.0 / z + np.sum(1.0 / (zz - w) + 1.0 / w + zz / w ** 2, axis=-1)


def pole_pair_function(tau, p1, p2, c, truncation=12):
    """``t(z) = c (zeta(z - p1) - zeta(z - p2))``: elliptic, simple poles with residues ``+-c``."""
    def fn(z):
        return c * (weierstrass_zeta(np.asarray(z) - p1, tau, truncation)
                    - weierstrass_zeta(np.asarray(z) - p2, tau, truncation))
    return fn


def weierstrass_pole_pair(tau: complex = 1j, p1: complex = 0.0, p2: complex = 0.5 + 0.5j,
                          c: complex = 1.0, truncation: int = 12, refinement: int = 3,
                          theta: float = math.pi, cone_grading: float = 1.5):
    """Torus with ``t = c (zeta(z-p1) - zeta(z-p2))``; marks with angle ``theta`` at the poles.

    ``p1`` and ``p2`` are snapped to grid vertices and the poles placed at the
    snapped points; ``mesh.info['snap_distances']`` reports the shifts.
    """
    tau = complex(tau)
    if truncation < 8:
        raise HQDError("truncation must be >= 8")
    if not tau.imag > 1e-12:
        raise MeshError("degenerate modulus: Im(tau) must be positive")
    N = 2 ** refinement

    def snap(p):
        # lattice coordinates of p, reduced to the fundamental domain, rounded to the grid
        t_ = complex(p).imag / tau.imag
        s_ = complex(p).real - t_ * tau.real
        s_, t_ = (round(s_ * N) / N) % 1.0, (round(t_ * N) / N) % 1.0
        return s_ + t_ * tau

    q1, q2 = snap(p1), snap(p2)
    if abs(q1 - q2) < 1e-12:
        raise HQDError("poles coincide modulo the lattice after snapping")
    mesh = build_mesh(torus_gluing(tau, [(q1, theta), (q2, theta)]), refinement, cone_grading)
    info = dict(mesh.info)
    info["snap_distances"] = [abs(complex(p1) - q1), abs(complex(p2) - q2)]
    info["poles"] = [q1, q2]
    object.__setattr__(mesh, "info", info)
    fn = pole_pair_function(tau, q1, q2, complex(c), truncation)
    bc = barycenters(mesh)
    lattice_dist = np.min(np.abs(np.subtract.outer(bc, [q1 + a + b * tau for a in (-1, 0, 1)
                                                        for b in (-1, 0, 1)]
                                                   + [q2 + a + b * tau for a in (-1, 0, 1)
                                                      for b in (-1, 0, 1)])), axis=1)
    if lattice_dist.min() < 1e-9:
        raise HQDError("sample point too close to a pole for the requested truncation accuracy")
    v1, v2 = sorted(mesh.marked)
    return mesh, _field_from_function(mesh, fn, {v1: -1, v2: -1})


def residue(fn: Callable, center: complex, radius: float = 1e-3, n: int = 256) -> complex:
    """Contour-integral residue: ``(1 / 2 pi i) * closed integral of fn`` on a small circle."""
    th = 2 * math.pi * np.arange(n) / n
    z = center + radius * np.exp(1j * th)
    return complex(np.mean(fn(z) * (z - center)))
