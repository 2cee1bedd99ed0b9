"""Three-dimensional data grown from a germ: equidistant foliations, Fock metrics,
breakdown radii, boundary metrics, the convex-core volume bound, the AdS
Hamiltonian and the presymplectic pairing."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _io
from .errors import DegenerateTransportError, SettingError
from .germ import E2, SurfaceGerm

VALID_DET = 1e-12


def transport(space: str, r: float, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form normal transport ``M(r)`` and its derivative ``M'(r)``.

    ``I_r = I(M., M.)`` and ``B_r = M^{-1} M'``.
    """
    if space in ("hyperbolic", "ds"):
        c, s = math.cosh(r), math.sinh(r)
        return c * E2 + s * B, s * E2 + c * B
    if space == "ads":
        c, s = math.cos(r), math.sin(r)
        return c * E2 + s * B, -s * E2 + c * B
    if space == "minkowski":
        return E2 + r * B, np.broadcast_to(B, np.shape(B)).copy()
    raise SettingError(f"unknown space {space!r}")


def riccati_rhs(space: str, Br: np.ndarray) -> np.ndarray:
    """``dB_r/dr`` predicted by the Riccati equation of the space form."""
    sq = Br @ Br
    return {"hyperbolic": E2 - sq, "ds": E2 - sq, "ads": -E2 - sq, "minkowski": -sq}[space]


def _inv2(M):
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    adj = np.empty_like(M)
    adj[..., 0, 0] = M[..., 1, 1]
    adj[..., 1, 1] = M[..., 0, 0]
    adj[..., 0, 1] = -M[..., 0, 1]
    adj[..., 1, 0] = -M[..., 1, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        return adj / det[..., None, None], det


@dataclass(frozen=True, eq=False)
class FoliationSample:
    r: float
    I: np.ndarray
    B: np.ndarray
    H: np.ndarray
    area_ratio: np.ndarray
    valid: np.ndarray

    @property
    def principal_curvatures(self) -> tuple[np.ndarray, np.ndarray]:
        tr = self.B[:, 0, 0] + self.B[:, 1, 1]
        det = np.linalg.det(self.B)
        disc = np.sqrt(np.maximum(0.25 * tr * tr - det, 0.0))
        return 0.5 * tr + disc, 0.5 * tr - disc

    @property
    def all_valid(self) -> bool:
        return bool(self.valid.all())


def foliate(germ: SurfaceGerm, r_values: Sequence[float]) -> list[FoliationSample]:
    """Equidistant surfaces at signed distances ``r``; invalid faces are flagged, not raised."""
    out = []
    for r in r_values:
        r = float(r)
        M, Mp = transport(germ.setting.space, r, germ.B)
        Minv, det = _inv2(M)
        Ir = np.swapaxes(M, 1, 2) @ germ.I @ M
        Br = Minv @ Mp
        if r == 0.0:
            Ir, Br = germ.I.copy(), germ.B.copy()
        out.append(FoliationSample(r, Ir, Br, 0.5 * (Br[:, 0, 0] + Br[:, 1, 1]), det,
                                   det > VALID_DET))
    return out


def foliation_rows(samples: Sequence[FoliationSample]):
    for s in samples:
        k1, k2 = s.principal_curvatures
        for f in range(len(s.H)):
            yield (s.r, f, float(s.I[f, 0, 0]), float(s.I[f, 0, 1]), float(s.I[f, 1, 1]),
                   float(s.H[f]), float(k1[f]), float(k2[f]), bool(s.valid[f]))


FOLIATION_HEADER = ("r", "face_id", "I11", "I12", "I22", "H_r", "k1_r", "k2_r", "valid")


def write_foliation_csv(path, samples):
    return _io.write_csv(path, FOLIATION_HEADER, foliation_rows(samples))


def breakdown_radius(germ: SurfaceGerm) -> dict:
    """Radius where the foliation folds, and the hyperbolic convexity radius."""
    k = float(germ.k.max())
    H = germ.H
    space = germ.setting.space
    inf = float("inf")
    rep = {"space": space, "k_max": k, "H": H}
    if space == "hyperbolic":
        rep["fold_radius"] = inf if k < 1 else (0.5 * math.log((k + 1) / (k - 1)) if k > 1 else 0.0)
        rep["convexity_radius"] = 0.5 * math.log((1 + k) / (1 - k)) if k < 1 else None
    elif space == "ads":
        rep["fold_radius"] = math.atan2(1.0, k)
    elif space == "ds":
        # folds on the past side, t = -T with coth T = k + H
        rep["fold_radius"] = math.atanh(1.0 / (k + H)) if k + H > 1 else inf
    else:
        rep["fold_radius"] = 1.0 / (H + k) if H + k > 0 else inf
    return rep


def fock_eval(germ: SurfaceGerm, face: int, r: float) -> dict:
    """Components of the 3-metric ``+-dr^2 + I(M(r)., M(r).)`` over one face."""
    if not 0 <= face < germ.mesh.n_faces:
        raise IndexError(f"face {face} out of range")
    space = germ.setting.space
    M, _ = transport(space, float(r), germ.B[face])
    return {"drdr": 1.0 if space == "hyperbolic" else -1.0, "cross": [0.0, 0.0],
            "tangential": M.T @ germ.I[face] @ M,
            "signature": "+++" if space == "hyperbolic" else "-++"}


@dataclass(frozen=True, eq=False)
class BoundaryData:
    I_plus: np.ndarray
    I_minus: np.ndarray
    mu: np.ndarray

    @property
    def mu_max(self) -> float:
        return float(np.abs(self.mu).max())

    def to_json(self) -> dict:
        return {"mu_max": self.mu_max,
                "faces": [{"I_plus": self.I_plus[f], "I_minus": self.I_minus[f],
                           "mu": [float(self.mu[f].real), float(self.mu[f].imag)]}
                          for f in range(len(self.mu))]}


def boundary_data(germ: SurfaceGerm) -> BoundaryData:
    """Asymptotic metrics ``I((E +- B)., (E +- B).)`` and the Beltrami coefficient."""
    P, Mn = E2 + germ.B, E2 - germ.B
    return BoundaryData(np.swapaxes(P, 1, 2) @ germ.I @ P,
                        np.swapaxes(Mn, 1, 2) @ germ.I @ Mn, germ.mu)


def convex_core_bound_value(k: float, area: float, genus: int) -> float:
    if not 0 <= k < 1:
        raise ValueError("the volume bound needs 0 <= k_max < 1")
    q = 1 - k * k
    return (2 * k / q) * area - 2 * math.pi * (2 * genus - 2) * (k / q + math.atanh(k))


def slab_volume(k: float, area: float, genus: int) -> float:
    """Volume between the equidistant surfaces at ``+-r`` with ``tanh r = k``.

    Integrates ``(cosh^2 r - sinh^2 r k^2) da`` over ``|r| <= r_max`` using
    ``int (1 + k^2) da = 2 pi (2g - 2)``; always non-negative.
    """
    if not 0 <= k < 1:
        raise ValueError("the slab volume needs 0 <= k_max < 1")
    q = 1 - k * k
    return (2 * k / q) * area - 2 * math.pi * (2 * genus - 2) * (k / q - math.atanh(k))


def convex_core_bound(germ: SurfaceGerm) -> float:
    if germ.setting.space != "hyperbolic":
        raise SettingError("convex-core bound needs a hyperbolic germ")
    k = float(germ.k.max())
    if not k < 1:
        raise DegenerateTransportError(f"germ is not almost-Fuchsian (k_max = {k:.6g})")
    return convex_core_bound_value(k, germ.area, germ.mesh.genus)


@dataclass(frozen=True)
class HamiltonianRow:
    t: float
    direct: float
    closed: float
    closed_chi: float

    @property
    def diff(self) -> float:
        return self.direct - self.closed


def ads_hamiltonian(germ: SurfaceGerm, t_values: Sequence[float]) -> list[HamiltonianRow]:
    """``int (cos^2 t k^2 - sin^2 t) da`` against ``A0 cos 2t + cos^2 t int K da``."""
    if germ.setting.space != "ads" or germ.H != 0:
        raise SettingError("the Hamiltonian is defined for AdS maximal germs")
    da = germ.da
    A0 = float(da.sum())
    K_int = float(np.sum(da * (-1.0 - germ.detB)))
    chi_int = germ.mesh.target_cone_sum()
    rows = []
    for t in t_values:
        c2, s2 = math.cos(t) ** 2, math.sin(t) ** 2
        direct = float(np.sum(da * (c2 * germ.k ** 2 - s2)))
        rows.append(HamiltonianRow(float(t), direct, A0 * math.cos(2 * t) + c2 * K_int,
                                   A0 * math.cos(2 * t) + c2 * chi_int))
    return rows


def write_hamiltonian_csv(path, rows):
    return _io.write_csv(path, ("t", "direct", "closed", "diff"),
                         ((r.t, r.direct, r.closed, r.diff) for r in rows))


def momentum(germ: SurfaceGerm) -> np.ndarray:
    """``pi = II - 2H I`` per face."""
    return germ.II - 2 * germ.H * germ.I


def presymplectic_pairing(germ: SurfaceGerm, delta_I, pi) -> float:
    """``sum_f da_f tr(I^{-1} pi I^{-1} delta_I)``."""
    delta_I = np.asarray(delta_I, dtype=float)
    pi = np.asarray(pi, dtype=float)
    shape = (germ.mesh.n_faces, 2, 2)
    if delta_I.shape != shape or pi.shape != shape:
        raise ValueError(f"face fields must have shape {shape}")
    Iinv = np.linalg.inv(germ.I)
    return float(np.sum(germ.da * np.trace(Iinv @ pi @ Iinv @ delta_I, axis1=1, axis2=2)))


def canonical_pairing(t, delta_mu, dA) -> float:
    """``int (t dmu + conj(t dmu))`` against the flat area element."""
    return float(np.sum(2 * np.real(np.asarray(t) * np.asarray(delta_mu)) * np.asarray(dA)))


def lattice_frame(tau: complex) -> np.ndarray:
    return np.array([[1.0, tau.real], [0.0, tau.imag]])


def linear_beltrami(P: np.ndarray) -> complex:
    """Beltrami coefficient of the real-linear map ``P`` written as ``alpha z + beta conj(z)``."""
    alpha = 0.5 * ((P[0, 0] + P[1, 1]) + 1j * (P[1, 0] - P[0, 1]))
    beta = 0.5 * ((P[0, 0] - P[1, 1]) + 1j * (P[1, 0] + P[0, 1]))
    return beta / alpha


def torus_variation(tau: complex, c: complex, dtau: complex = 0.0, dc: complex = 0.0,
                    h: float = 1e-5, refinement: int = 3) -> dict:
    """Finite-difference presymplectic pairing along the AdS torus family ``(tau, c)``.

    Germs at ``(tau, c) +- h (dtau, dc)`` are solved and pulled back to the
    base chart by the affine map fixing ``1`` and sending ``tau`` to the
    perturbed modulus.  Returns the finite-difference pairing, the canonical
    pairing evaluated with the finite-difference ``dmu`` and with the exact
    ``dmu = i dtau / (2 Im tau)``.
    """
    from .background import torus_background
    from .gauss_solver import GeometrySetting, Setting, assemble, solve
    from .germ import assemble_germ

    setting = GeometrySetting(Setting.ADS_MAXIMAL)

    def germ_at(tau_, c_):
        mesh, hqd = torus_background(tau_, c_, refinement)
        prob = assemble(setting, mesh, hqd)
        return assemble_germ(solve(prob, spectrum=False), prob)

    tau, c = complex(tau), complex(c)
    base = germ_at(tau, c)
    A0inv = np.linalg.inv(lattice_frame(tau))
    pulled, mus = [], []
    for sgn in (1, -1):
        tp = tau + sgn * h * complex(dtau)
        g = germ_at(tp, c + sgn * h * complex(dc))
        P = lattice_frame(tp) @ A0inv
        pulled.append(P.T @ g.I @ P)
        mus.append(linear_beltrami(P))
    dI = (pulled[0] - pulled[1]) / (2 * h)
    dmu_fd = (mus[0] - mus[1]) / (2 * h)
    dmu_exact = 1j * complex(dtau) / (2 * tau.imag)
    dA = base.mesh.face_areas
    theta = presymplectic_pairing(base, dI, momentum(base))
    return {"theta_fd": theta,
            "canonical_fd": canonical_pairing(base.t, dmu_fd, dA),
            "canonical": canonical_pairing(base.t, dmu_exact, dA),
            "dmu_fd": dmu_fd, "dmu_exact": dmu_exact}
