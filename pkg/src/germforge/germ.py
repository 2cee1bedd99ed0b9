"""Surface germs ``(I, B)`` built from a solved conformal factor, and their diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _io
from .errors import ConvergenceError
from .gauss_solver import GaussProblem, GeometrySetting, Solution, near_mark_faces
from .mesh import ConeMesh, face_exp_integrals

E2 = np.eye(2)
J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def traceless_part(t) -> np.ndarray:
    """Matrix of ``Re(t dz^2)`` in the chart, shape ``(..., 2, 2)``."""
    t = np.asarray(t, dtype=complex)
    h = np.empty(t.shape + (2, 2))
    h[..., 0, 0] = t.real
    h[..., 0, 1] = h[..., 1, 0] = -t.imag
    h[..., 1, 1] = -t.real
    return h


def face_phi(mesh: ConeMesh, u) -> np.ndarray:
    """``phi_f = log`` of the face mean of ``e^{2u}`` (P1 interpolant, exact)."""
    return np.log(face_exp_integrals(mesh, 2 * np.asarray(u, dtype=float)) / mesh.face_areas)


def gauss_curvature_of(setting: GeometrySetting, detB) -> np.ndarray:
    """Intrinsic curvature forced by the Gauss equation of the ambient space form."""
    detB = np.asarray(detB, dtype=float)
    return {"hyperbolic": -1.0 + detB, "ads": -1.0 - detB,
            "ds": 1.0 - detB, "minkowski": -detB}[setting.space]


@dataclass(frozen=True, eq=False)
class SurfaceGerm:
    """Face-constant first fundamental form ``I = e^phi Id`` and shape operator ``B``."""

    mesh: ConeMesh
    setting: GeometrySetting
    u: np.ndarray
    phi: np.ndarray
    t: np.ndarray
    B: np.ndarray
    poles: tuple = ()
    zeros: tuple = ()

    @property
    def H(self) -> float:
        return self.setting.H

    @cached_property
    def I(self) -> np.ndarray:
        return np.exp(self.phi)[:, None, None] * E2

    @cached_property
    def II(self) -> np.ndarray:
        return self.I @ self.B

    @cached_property
    def k(self) -> np.ndarray:
        return np.exp(-self.phi) * np.abs(self.t)

    @cached_property
    def mu(self) -> np.ndarray:
        """Beltrami coefficient ``e^{-phi} conj(t)``: ``B_0 zeta = mu conj(zeta)``."""
        return np.exp(-self.phi) * np.conj(self.t)

    @cached_property
    def da(self) -> np.ndarray:
        return self.mesh.face_areas * np.exp(self.phi)

    @property
    def area(self) -> float:
        return float(self.da.sum())

    @cached_property
    def detB(self) -> np.ndarray:
        return np.linalg.det(self.B)

    @cached_property
    def K(self) -> np.ndarray:
        return gauss_curvature_of(self.setting, self.detB)

    @cached_property
    def near_marks(self) -> np.ndarray:
        return near_mark_faces(self.mesh, self.poles)

    def to_json(self) -> dict:
        return {"setting": self.setting.kind.value, "H": self.H,
                "faces": [{"B": self.B[f], "k": float(self.k[f]), "phi": float(self.phi[f])}
                          for f in range(self.mesh.n_faces)]}

    def save(self, path):
        return _io.write_json(path, self.to_json())

    def with_B(self, B) -> "SurfaceGerm":
        return SurfaceGerm(self.mesh, self.setting, self.u, self.phi, self.t, np.asarray(B),
                           self.poles, self.zeros)


def assemble_germ(solution: Solution, problem: GaussProblem) -> SurfaceGerm:
    if not solution.converged:
        raise ConvergenceError("cannot build a germ from a non-converged solution", solution)
    mesh = problem.mesh
    phi = face_phi(mesh, solution.u)
    t = np.asarray(problem.hqd.t)
    B = np.exp(-phi)[:, None, None] * traceless_part(t) + problem.setting.H * E2
    zeros = tuple(sorted(v for v, o in problem.hqd.orders.items() if o > 0))
    return SurfaceGerm(mesh, problem.setting, np.asarray(solution.u), phi, t, B,
                       tuple(problem.hqd.poles), zeros)


def germ_from_json(data, mesh: ConeMesh, t=None) -> SurfaceGerm:
    setting = GeometrySetting.parse(data["setting"], data.get("H", 0.0))
    faces = data["faces"]
    phi = np.array([_io.to_float(f["phi"]) for f in faces])
    B = np.array([f["B"] for f in faces], dtype=float)
    if t is None:
        # recover t from the traceless part; the stored B fixes it up to the chart
        B0 = B - setting.H * E2
        t = np.exp(phi) * (B0[:, 0, 0] - 1j * B0[:, 0, 1])
    return SurfaceGerm(mesh, setting, np.full(mesh.n_vertices, np.nan), phi, np.asarray(t), B)


@dataclass(frozen=True)
class GermReport:
    setting: str
    H: float
    genus: int
    area: float
    k_max: float
    k_max_interior: float
    k_max_near_marks: float
    almost_fuchsian: bool
    af_integral: float
    af_bound: float
    gauss_bonnet_target: float
    gauss_bonnet_residual: float
    gauss_bonnet_residual_faces: float
    curvature_identity: float | None
    curvature_bound: float | None
    curvature_bound_ok: bool | None

    def to_json(self) -> dict:
        return dict(self.__dict__)


def diagnostics(germ: SurfaceGerm, problem: GaussProblem | None = None) -> GermReport:
    """Pointwise and integrated checks of a germ.

    The lumped Gauss-Bonnet residual uses the vertex form of the equation (it
    is at solver tolerance); the face residual uses the germ's own ``K da`` and
    carries the discretization error.
    """
    mesh, s = germ.mesh, germ.setting
    target = mesh.target_cone_sum()
    k = germ.k
    interior = ~germ.near_marks
    k_int = float(k[interior].max()) if interior.any() else float("nan")
    k_near = float(k[~interior].max()) if (~interior).any() else 0.0
    k_max = k_int if interior.any() else float(k.max())
    if problem is not None:
        u = germ.u
        lumped = float(problem.a * problem.A @ np.exp(2 * u) + problem.b * problem.Q @ np.exp(-2 * u))
    else:
        lumped = float(germ.K @ germ.da)
    gb = abs(lumped - target)
    gb_faces = abs(float(germ.K @ germ.da) - target)
    identity = bound = ok = None
    if s.space == "hyperbolic" and s.H == 0:
        # int (1 + k^2) da = -int K da
        identity = float(((1 + k ** 2) * germ.da).sum()) + target
    if s.space == "ads":
        bound = 1.0
        ok = k_max <= 1.0 + 1e-6
    elif s.space == "ds":
        bound = math.sqrt(s.H ** 2 - 1)
        ok = k_max <= bound + 1e-6
    return GermReport(
        setting=s.kind.value, H=s.H, genus=mesh.genus, area=germ.area, k_max=k_max,
        k_max_interior=k_int, k_max_near_marks=k_near,
        almost_fuchsian=bool(s.space == "hyperbolic" and k_max < 1 - 1e-9),
        af_integral=float(np.sum(mesh.face_areas * np.abs(germ.t))),
        af_bound=2 * math.pi * (mesh.genus - 1),
        gauss_bonnet_target=target, gauss_bonnet_residual=gb,
        gauss_bonnet_residual_faces=gb_faces, curvature_identity=identity,
        curvature_bound=bound, curvature_bound_ok=ok)
