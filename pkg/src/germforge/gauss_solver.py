"""Discrete Gauss equation ``Lu + Omega = a A e^{2u} + b Q e^{-2u}`` and its Newton solver.

``L`` is the (positive) cotangent stiffness, ``A`` the lumped vertex area,
``Q`` the lumped weight of ``|t|^2`` and ``Omega`` the curvature source
(background angle defects plus cone corrections).  Critical points of

    F(u) = 1/2 u^T L u - a/2 sum A e^{2u} + Omega^T u + b/2 sum Q e^{-2u}

are exactly the solutions; ``F`` is convex when ``a <= 0 <= b``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _io
from .background import HQDField, ScaledData
from .errors import (ConvergenceError, EigenSolverError, InfeasibleError, PoleAngleError,
                     SettingError)
from .mesh import ConeMesh, cotan_laplacian, face_average


class Setting(enum.Enum):
    HYP_MINIMAL = "hyp-min"
    HYP_CMC = "hyp-cmc"
    ADS_MAXIMAL = "ads-max"
    ADS_CMC = "ads-cmc"
    DS_CMC = "ds-cmc"
    MINK_CMC = "mink-cmc"


_SPACE = {
    Setting.HYP_MINIMAL: "hyperbolic", Setting.HYP_CMC: "hyperbolic",
    Setting.ADS_MAXIMAL: "ads", Setting.ADS_CMC: "ads",
    Setting.DS_CMC: "ds", Setting.MINK_CMC: "minkowski",
}


@dataclass(frozen=True)
class GeometrySetting:
    """Ambient space form plus the (constant) mean curvature of the germ."""

    kind: Setting
    H: float = 0.0

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, Setting) else Setting(self.kind)
        object.__setattr__(self, "kind", kind)
        H = float(self.H)
        if kind in (Setting.HYP_MINIMAL, Setting.ADS_MAXIMAL):
            if H != 0.0:
                raise SettingError(f"{kind.value} has H = 0")
        elif kind is Setting.ADS_CMC and not abs(H) < 1:
            raise SettingError("ads-cmc requires |H| < 1")
        elif kind is Setting.DS_CMC and not H > 1:
            raise SettingError("ds-cmc requires H > 1")
        elif kind is Setting.MINK_CMC and not H > 0:
            raise SettingError("mink-cmc requires H > 0")
        elif not math.isfinite(H):
            raise SettingError("H must be finite")
        object.__setattr__(self, "H", H)

    @classmethod
    def parse(cls, name: str, H: float = 0.0) -> "GeometrySetting":
        try:
            kind = Setting(name)
        except ValueError:
            raise SettingError(f"unknown setting {name!r}; choose from "
                               + ", ".join(s.value for s in Setting)) from None
        return cls(kind, H if kind not in (Setting.HYP_MINIMAL, Setting.ADS_MAXIMAL) else 0.0)

    @property
    def space(self) -> str:
        return _SPACE[self.kind]

    @property
    def coefficients(self) -> tuple[float, float]:
        H2 = self.H ** 2
        return {
            Setting.HYP_MINIMAL: (-1.0, -1.0),
            Setting.HYP_CMC: (H2 - 1.0, -1.0),
            Setting.ADS_MAXIMAL: (-1.0, 1.0),
            Setting.ADS_CMC: (-(1.0 + H2), 1.0),
            Setting.DS_CMC: (1.0 - H2, 1.0),
            Setting.MINK_CMC: (-H2, 1.0),
        }[self.kind]

    @property
    def convex(self) -> bool:
        a, b = self.coefficients
        return a <= 0 and b >= 0

    @property
    def ambient_curvature(self) -> float:
        return {"hyperbolic": -1.0, "ads": -1.0, "ds": 1.0, "minkowski": 0.0}[self.space]

    def __str__(self):
        return self.kind.value if self.H == 0 else f"{self.kind.value}(H={self.H:g})"


def _as_field(hqd) -> HQDField:
    return hqd.field if isinstance(hqd, ScaledData) else hqd


@dataclass(frozen=True, eq=False)
class GaussProblem:
    setting: GeometrySetting
    mesh: ConeMesh
    hqd: HQDField
    L: sp.csr_matrix
    omega: np.ndarray
    A: np.ndarray
    Q: np.ndarray
    feasibility: dict = field(default_factory=dict)

    @property
    def a(self) -> float:
        return self.setting.coefficients[0]

    @property
    def b(self) -> float:
        return self.setting.coefficients[1]

    @property
    def convex(self) -> bool:
        return self.setting.convex

    @property
    def n(self) -> int:
        return self.mesh.n_vertices

    def energy(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(0.5 * u @ (self.L @ u) - 0.5 * self.a * self.A @ np.exp(2 * u)
                     + self.omega @ u + 0.5 * self.b * self.Q @ np.exp(-2 * u))

    def gradient(self, u) -> np.ndarray:
        """Also the residual of the discrete equation."""
        u = np.asarray(u, dtype=float)
        return (self.L @ u + self.omega - self.a * self.A * np.exp(2 * u)
                - self.b * self.Q * np.exp(-2 * u))

    def hessian_diagonal(self, u) -> np.ndarray:
        return -2 * self.a * self.A * np.exp(2 * u) + 2 * self.b * self.Q * np.exp(-2 * u)

    def hessian(self, u) -> sp.csc_matrix:
        return (self.L + sp.diags(self.hessian_diagonal(np.asarray(u, dtype=float)))).tocsc()


def assemble(setting: GeometrySetting, mesh: ConeMesh, hqd, scale: float = 1.0,
             check_feasibility: bool = True) -> GaussProblem:
    hqd = _as_field(hqd)
    if scale != 1.0:
        hqd = hqd.scaled(scale)
    hqd.check(mesh)
    for v in hqd.poles:
        if mesh.marked[v] > math.pi + 1e-12:
            raise PoleAngleError(f"simple pole at vertex {v} with cone angle "
                                 f"{mesh.marked[v]:.6g} > pi")
    omega = np.array(mesh.angle_defects, dtype=float)
    for v, th in mesh.marked.items():
        omega[v] -= 2 * math.pi - th
    a, b = setting.coefficients
    A = np.asarray(mesh.vertex_areas, dtype=float)
    Q = np.asarray(hqd.Q, dtype=float)
    total = float(omega.sum())
    # summing the equation: sum(Omega) = a sum(A e^{2u}) + b sum(Q e^{-2u})
    feas = {"sum_omega": total, "target": mesh.target_cone_sum(), "feasible": True, "reason": ""}
    q_zero = not np.any(Q > 0)
    tol = 1e-9 * max(1.0, abs(total))
    if q_zero:
        sign = np.sign(a) if a != 0 else 0.0
        ok = (total < -tol) if sign < 0 else (total > tol) if sign > 0 else abs(total) <= tol
        if not ok:
            feas.update(feasible=False, reason="sum of curvature sources has the wrong sign "
                                              "for a conformal-factor solution")
    elif a <= 0 and b < 0:
        # AM-GM: -sum(Omega) = |a| sum(A e^{2u}) + |b| sum(Q e^{-2u}) >= 2 sqrt(|a b|) sum sqrt(AQ)
        bound = 2 * math.sqrt(abs(a * b)) * float(np.sqrt(A * Q).sum())
        feas["amgm_bound"] = bound
        if not -total >= bound * (1 - 1e-12):
            feas.update(feasible=False, reason="curvature budget below the AM-GM lower bound "
                                              f"({0.0 - total:.6g} < {bound:.6g})")
    elif a >= 0 and b > 0 and total <= 0:
        feas.update(feasible=False, reason="positive right-hand side with non-positive source sum")
    if check_feasibility and not feas["feasible"]:
        raise InfeasibleError(f"{setting}: {feas['reason']}")
    return GaussProblem(setting, mesh, hqd, cotan_laplacian(mesh), omega, A, Q, feas)


@dataclass(frozen=True, eq=False)
class Solution:
    u: np.ndarray
    residual: float
    iterations: int
    converged: bool
    lambda_min: float = float("nan")
    energies: tuple = ()

    def to_json(self) -> dict:
        return {"u": self.u, "residual": self.residual, "lambda_min": self.lambda_min,
                "iterations": self.iterations, "converged": self.converged}

    @classmethod
    def from_json(cls, data) -> "Solution":
        return cls(np.array([_io.to_float(x) for x in data["u"]]), _io.to_float(data["residual"]),
                   int(data["iterations"]), bool(data.get("converged", True)),
                   _io.to_float(data.get("lambda_min", "nan")))

    def save(self, path):
        return _io.write_json(path, self.to_json())

    @classmethod
    def load(cls, path) -> "Solution":
        return cls.from_json(_io.read_json(path))


MAX_STEP = 2.0


def _factor_solve(H, rhs):
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        x = spla.splu(H).solve(rhs)
    if not np.all(np.isfinite(x)):
        raise RuntimeError("singular")
    return x


def _newton_direction(problem, u, g):
    H = problem.hessian(u)
    try:
        d = -_factor_solve(H, g)
        # nearly singular factorizations give huge, useless directions
        if g @ d < 0 and np.abs(d).max() < 1e3:
            return d
    except (RuntimeError, spla.MatrixRankWarning):
        pass
    # indefinite or singular: Levenberg shift against the mass matrix
    M = sp.diags(problem.A)
    with np.errstate(over="ignore"):
        mu = 1e-3 * min(max(float(np.abs(H.diagonal()).max() / problem.A.mean()), 1.0), 1e12)
    for _ in range(40):
        try:
            d = -_factor_solve((H + mu * M).tocsc(), g)
            if g @ d < 0:
                return d
        except (RuntimeError, spla.MatrixRankWarning):
            pass
        mu *= 10
    return -g / (problem.A * max(1.0, float(np.abs(g / problem.A).max())))


def solve(problem: GaussProblem, init="zero", tol: float = 1e-10, max_iter: int = 100,
          spectrum: bool = True) -> Solution:
    """Damped Newton iteration for the discrete equation.

    Steps are accepted on the Armijo test for ``F`` (c = 1e-4, halving); near
    convergence, where ``F`` differences drown in roundoff, a step that reduces
    the gradient norm is accepted instead.  Raises :class:`ConvergenceError`
    carrying the last iterate on failure.
    """
    n = problem.n
    if isinstance(init, str):
        if init != "zero":
            raise ValueError(f"unknown init {init!r}")
        u = np.zeros(n)
    else:
        u = np.array(init, dtype=float)
        if u.shape != (n,):
            raise ValueError("initial field has the wrong length")
    c1 = 1e-4
    F = problem.energy(u)
    g = problem.gradient(u)
    energies = [F]
    res0 = max(float(np.abs(g).max()), 1.0)
    reason = "iteration limit reached"
    for it in range(max_iter + 1):
        res = float(np.abs(g).max())
        if res <= tol:
            lam = stability_spectrum(problem, u, 1)[0] if spectrum else float("nan")
            return Solution(u, res, it, True, lam, tuple(energies))
        if it == max_iter:
            break
        if not math.isfinite(res) or res > 1e8 * res0 or np.abs(u).max() > 50:
            reason = "iterates diverged"
            break
        with np.errstate(over="ignore", invalid="ignore"):
            d = _newton_direction(problem, u, g)
        dmax = float(np.abs(d).max())
        if dmax > MAX_STEP:
            d *= MAX_STEP / dmax
        slope = float(g @ d)
        gnorm = float(np.linalg.norm(g))
        step = 1.0
        accepted = False
        with np.errstate(over="ignore", invalid="ignore"):
            while step > 1e-14:
                un = u + step * d
                Fn = problem.energy(un)
                if math.isfinite(Fn):
                    gn = problem.gradient(un)
                    if Fn <= F + c1 * step * slope or (
                            np.all(np.isfinite(gn)) and np.linalg.norm(gn) < (1 - c1 * step) * gnorm):
                        accepted = True
                        break
                step *= 0.5
        if not accepted:
            reason = "line search failed"
            break
        u, F, g = un, Fn, gn
        energies.append(F)
    partial = Solution(u, float(np.abs(g).max()), it, False, float("nan"), tuple(energies))
    raise ConvergenceError(f"{problem.setting}: {reason} at residual {partial.residual:.3e} "
                           f"after {it} iterations", partial)


def stability_spectrum(problem: GaussProblem, solution, k: int = 6) -> np.ndarray:
    """``k`` smallest eigenvalues of ``Hess F`` relative to the lumped mass, ascending."""
    u = solution.u if isinstance(solution, Solution) else np.asarray(solution, dtype=float)
    n = problem.n
    k = max(1, min(int(k), n))
    dinv = 1.0 / np.sqrt(problem.A)
    S = sp.diags(dinv) @ problem.hessian(u) @ sp.diags(dinv)
    S = ((S + S.T) * 0.5).tocsc()
    if n <= 600 or k >= n - 1:
        try:
            return scipy.linalg.eigh(S.toarray(), eigvals_only=True, subset_by_index=[0, k - 1])
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise EigenSolverError(str(exc)) from exc
    # L is semidefinite, so the Rayleigh quotient is bounded below by the diagonal term
    d = problem.hessian_diagonal(u) / problem.A
    sigma = min(float(d.min()), 0.0) - 1.0
    try:
        vals = spla.eigsh(S, k=k, sigma=sigma, which="LM", return_eigenvectors=False,
                          tol=1e-12, maxiter=5000)
    except (spla.ArpackNoConvergence, spla.ArpackError, RuntimeError) as exc:
        if n > 8000:
            raise EigenSolverError(f"shift-invert eigensolver failed: {exc}") from exc
        vals = scipy.linalg.eigh(S.toarray(), eigvals_only=True, subset_by_index=[0, k - 1])
    return np.sort(vals)


def fold_threshold(problem: GaussProblem) -> float:
    return 1e-6 * float(np.median(problem.A))


def face_curvature(mesh: ConeMesh, u, t) -> tuple[np.ndarray, np.ndarray]:
    """Per-face ``phi_f = 2 mean(u)`` and ``k_f = e^{-phi_f} |t_f|``."""
    phi = 2 * face_average(mesh, u)
    return phi, np.exp(-phi) * np.abs(t)


def near_mark_faces(mesh: ConeMesh, vertices) -> np.ndarray:
    vs = np.asarray(sorted(vertices), dtype=int)
    if vs.size == 0:
        return np.zeros(mesh.n_faces, dtype=bool)
    return np.isin(mesh.faces, vs).any(axis=1)


@dataclass(frozen=True, eq=False)
class BranchPoint:
    s: float
    u: np.ndarray
    k_max: float
    lambda_min: float
    af_integral: float
    residual: float
    iterations: int


@dataclass(frozen=True, eq=False)
class ContinuationReport:
    setting: GeometrySetting
    points: tuple
    folded: bool
    fold_s: float | None
    message: str
    af_bound: float

    @property
    def s_values(self) -> np.ndarray:
        return np.array([p.s for p in self.points])

    @property
    def lambda_mins(self) -> np.ndarray:
        return np.array([p.lambda_min for p in self.points])

    def rows(self):
        return [(p.s, p.k_max, p.lambda_min, p.af_integral, p.residual, p.iterations)
                for p in self.points]


def continuation(setting: GeometrySetting, mesh: ConeMesh, hqd, s_grid: Sequence[float],
                 tol: float = 1e-10, max_iter: int = 100, bisect: int = 0) -> ContinuationReport:
    """Warm-started solves along ``s * t``; stops at the first failure or near-zero ``lambda_min``.

    With ``bisect > 0`` the interval between the last accepted value and the
    failing one is halved that many times to localize the fold.
    """
    s_grid = [float(s) for s in s_grid]
    if any(b <= a for a, b in zip(s_grid, s_grid[1:])):
        raise ValueError("s_grid must be strictly ascending")
    if setting.space == "hyperbolic" and (not s_grid or s_grid[0] != 0.0):
        raise ValueError("hyperbolic continuation must start at s = 0")
    base = _as_field(hqd)
    skip = near_mark_faces(mesh, base.poles)
    points: list[BranchPoint] = []
    u = "zero"
    eps = None
    message = "completed"

    def attempt(s, init):
        prob = assemble(setting, mesh, base, scale=s)
        sol = solve(prob, init, tol, max_iter)
        return prob, sol

    def record(s, prob, sol):
        _, k = face_curvature(mesh, sol.u, prob.hqd.t)
        kk = k[~skip] if np.any(~skip) else k
        af = float(np.sum(mesh.face_areas * np.abs(prob.hqd.t)))
        points.append(BranchPoint(s, sol.u, float(kk.max()), sol.lambda_min, af,
                                  sol.residual, sol.iterations))

    folded, fold_s = False, None
    pending = list(s_grid)
    while pending:
        s = pending.pop(0)
        try:
            prob, sol = attempt(s, u)
            if eps is None:
                eps = fold_threshold(prob)
            ok = sol.lambda_min >= eps
            err = None if ok else f"lambda_min {sol.lambda_min:.3e} below fold threshold"
        except (ConvergenceError, InfeasibleError) as exc:
            ok, err = False, str(exc)
        if ok:
            record(s, prob, sol)
            u = sol.u
            continue
        if bisect > 0 and points:
            bisect -= 1
            mid = 0.5 * (points[-1].s + s)
            pending = [mid, s]
            continue
        folded, fold_s, message = True, s, f"fold at s = {s:.6g}: {err}"
        break
    g = mesh.genus
    return ContinuationReport(setting, tuple(points), folded, fold_s, message,
                              2 * math.pi * (g - 1))
