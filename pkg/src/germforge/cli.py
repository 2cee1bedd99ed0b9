"""Command-line driver: background -> solve -> germ -> space forms / maps.

Every command takes plain files and writes deterministic JSON/CSV.  Errors
are reported as one JSON object on stderr with a distinct exit code:

    0 ok, 1 other model error, 2 bad configuration, 3 infeasible,
    4 non-convergence, 5 file I/O.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _io
from .background import HQDField, lshape_background, torus_background, weierstrass_pole_pair
from .errors import (ConvergenceError, EigenSolverError, GermforgeError, HQDError,
                     InfeasibleError, MeshError, PoleAngleError, SettingError)
from .gauss_solver import GeometrySetting, Solution, assemble, continuation, solve
from .germ import assemble_germ, diagnostics
from .mesh import ConeMesh
from .spaceforms import (ads_hamiltonian, boundary_data, breakdown_radius, convex_core_bound,
                         foliate, write_foliation_csv, write_hamiltonian_csv)
from .teichmaps import (dual_surface, labourie_morphism, save_metric_pair, sharp_metrics,
                        star_metrics)

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NONCONVERGENCE, EXIT_IO = 0, 1, 2, 3, 4, 5

BACKGROUNDS = ("torus", "lshape", "polepair")
MAPS = ("sharp", "star", "morphism", "dual")


class ConfigError(GermforgeError, ValueError):
    code = "config"


# -- configuration ---------------------------------------------------------------

def _complex(x) -> complex:
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    return complex(x)


def _floats(x) -> tuple[float, ...]:
    if isinstance(x, str):
        x = [p for p in x.replace(";", ",").split(",") if p.strip()]
    if isinstance(x, (int, float)):
        x = [x]
    return tuple(float(v) for v in x)


def _marks(x) -> tuple[tuple[complex, float], ...]:
    """``"re,im,theta; re,im,theta"`` or ``[[re, im, theta], ...]``."""
    if isinstance(x, str):
        x = [[p for p in m.split(",")] for m in x.split(";") if m.strip()]
    out = []
    for m in x:
        if len(m) != 3:
            raise ConfigError(f"mark needs (re, im, theta), got {m!r}")
        out.append((complex(float(m[0]), float(m[1])), float(m[2])))
    return tuple(out)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything ``run`` needs; validated on construction."""

    background: str = "torus"
    refinement: int = 3
    cone_grading: float = 1.5
    # torus
    tau: complex = 1j
    t: complex = 1.0
    marks: tuple = ()
    # L-shape
    lshape_a: float = 2.0
    lshape_b: float = 1.0
    # pole pair
    pole1: complex = 0j
    pole2: complex = 0.5 + 0.5j
    residue: complex = 1.0
    pole_theta: float = math.pi
    truncation: int = 12
    # solve
    setting: str = "ads-max"
    H: float = 0.0
    scales: tuple = (1.0,)
    tol: float = 1e-10
    max_iter: int = 100
    restarts: int = 0
    seed: int = 0
    # outputs
    foliation_r: tuple = (-0.5, -0.25, 0.0, 0.25, 0.5)
    maps: tuple = ()
    out: str = "germforge_out"
    verbosity: int = 1

    _converters = {
        "background": str, "refinement": int, "cone_grading": float, "tau": _complex,
        "t": _complex, "marks": _marks, "lshape_a": float, "lshape_b": float,
        "pole1": _complex, "pole2": _complex, "residue": _complex, "pole_theta": float,
        "truncation": int, "setting": str, "H": float, "scales": _floats, "tol": float,
        "max_iter": int, "restarts": int, "seed": int, "foliation_r": _floats,
        "maps": lambda x: tuple(p.strip() for p in (x.split(",") if isinstance(x, str) else x)
                                if p.strip()),
        "out": str, "verbosity": int,
    }

    def __post_init__(self):
        if self.background not in BACKGROUNDS:
            raise ConfigError(f"background must be one of {BACKGROUNDS}, got {self.background!r}")
        if self.refinement < 0 or self.max_iter < 1 or self.restarts < 0:
            raise ConfigError("refinement, max_iter and restarts must be non-negative (max_iter >= 1)")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not self.scales or any(s < 0 for s in self.scales):
            raise ConfigError("scales must be a non-empty list of non-negative numbers")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ConfigError("scales must be strictly ascending")
        for m in self.maps:
            if m not in MAPS:
                raise ConfigError(f"unknown map {m!r}; choose from {MAPS}")
        GeometrySetting.parse(self.setting, self.H)

    @classmethod
    def from_mapping(cls, data) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for k, v in dict(data).items():
            if k not in known:
                raise ConfigError(f"unknown config key {k!r}")
            try:
                kwargs[k] = cls._converters[k](v)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {k!r}: {v!r} ({exc})") from exc
        return cls(**kwargs)

    @classmethod
    def load(cls, path, overrides: Sequence[str] = ()) -> "PipelineConfig":
        data = parse_config_text(Path(path).read_text()) if path else {}
        data.update(parse_overrides(overrides))
        return cls.from_mapping(data)

    @property
    def geometry(self) -> GeometrySetting:
        return GeometrySetting.parse(self.setting, self.H)

    def to_json(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, complex):
                v = [v.real, v.imag]
            elif f.name == "marks":
                v = [[z.real, z.imag, th] for z, th in v]
            out[f.name] = v
        return out


def parse_config_text(text: str) -> dict:
    """JSON object, or ``key = value`` lines with ``#`` comments."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            return json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
    data = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        k, v = line.split("=", 1)
        data[k.strip()] = v.strip()
    return data


def parse_overrides(items: Sequence[str]) -> dict:
    data = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        data[k.strip()] = v.strip()
    return data


# -- pipeline pieces -------------------------------------------------------------

def build_background(cfg: PipelineConfig) -> tuple[ConeMesh, HQDField]:
    if cfg.background == "torus":
        return torus_background(cfg.tau, cfg.t, cfg.refinement, cfg.marks, cfg.cone_grading)
    if cfg.background == "lshape":
        mesh, hqd = lshape_background(cfg.lshape_a, cfg.lshape_b, cfg.refinement, cfg.cone_grading)
        return mesh, hqd.scaled(abs(cfg.t)) if cfg.t != 1 else hqd
    return weierstrass_pole_pair(cfg.tau, cfg.pole1, cfg.pole2, cfg.residue, cfg.truncation,
                                 cfg.refinement, cfg.pole_theta, cfg.cone_grading)


def validate(cfg: PipelineConfig, mesh: ConeMesh | None = None, hqd: HQDField | None = None) -> dict:
    """Static checks: setting, cone-angle sum, pole angles and the summed-equation sign test."""
    checks = []

    def check(name, ok, detail):
        checks.append({"name": name, "ok": bool(ok), "detail": detail})

    setting = cfg.geometry
    if mesh is None or hqd is None:
        mesh, hqd = build_background(cfg)
    g = mesh.genus
    cone_sum = 2 * math.pi * (2 - 2 * g) + sum(th - 2 * math.pi for th in mesh.marked.values())
    if setting.space == "hyperbolic":
        check("cone_angle_sum", cone_sum < 0,
              f"2 pi (2 - 2g) + sum(theta - 2 pi) = {cone_sum:.6g} must be < 0 for a hyperbolic cone metric")
    else:
        check("cone_angle_sum", True, f"2 pi (2 - 2g) + sum(theta - 2 pi) = {cone_sum:.6g}")
    bad = [v for v in hqd.poles if mesh.marked.get(v, 2 * math.pi) > math.pi + 1e-12]
    check("pole_angles", not bad,
          "simple poles only at marks with cone angle <= pi; for angles in (pi, 2 pi) the "
          "differential has no pole" + (f" (violated at vertices {bad})" if bad else ""))
    for s in sorted({min(cfg.scales), max(cfg.scales)}):
        try:
            prob = assemble(setting, mesh, hqd, scale=s, check_feasibility=False)
        except PoleAngleError as exc:
            check(f"feasibility_s={s:g}", False, str(exc))
            continue
        f = prob.feasibility
        check(f"feasibility_s={s:g}", f["feasible"], f["reason"] or
              f"sum of sources {f['sum_omega']:.6g} compatible with a = {prob.a:g}, b = {prob.b:g}")
    return {"ok": all(c["ok"] for c in checks), "genus": g, "setting": setting.kind.value,
            "H": setting.H, "checks": checks}


def solve_with_restarts(problem, cfg: PipelineConfig, init="zero") -> Solution:
    """Newton from ``init``; on failure retry from seeded random starts."""
    try:
        return solve(problem, init, cfg.tol, cfg.max_iter)
    except ConvergenceError as exc:
        last = exc
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.restarts):
        u0 = 0.1 * rng.standard_normal(problem.n)
        try:
            return solve(problem, u0, cfg.tol, cfg.max_iter)
        except ConvergenceError as exc:
            last = exc
    raise last


def _scale_path(cfg: PipelineConfig) -> list[float]:
    s = list(cfg.scales)
    if cfg.geometry.space == "hyperbolic" and s[0] != 0.0:
        # the hyperbolic branch is followed from the Fuchsian point
        s = [0.0] + s
    return s


def run(cfg: PipelineConfig, out: Path | None = None) -> dict:
    """Full pipeline; returns the manifest (also written as ``manifest.json``)."""
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    mesh, hqd = build_background(cfg)
    report = validate(cfg, mesh, hqd)
    if not report["ok"]:
        failed = [c for c in report["checks"] if not c["ok"]]
        raise InfeasibleError("; ".join(c["detail"] for c in failed))
    setting = cfg.geometry
    path = _scale_path(cfg)
    cont = continuation(setting, mesh, hqd, path, cfg.tol, cfg.max_iter)
    if cont.folded and (not cont.points or cont.points[-1].s != path[-1]):
        raise ConvergenceError(cont.message)
    s_final = path[-1]
    prob = assemble(setting, mesh, hqd, scale=s_final)
    sol = solve_with_restarts(prob, cfg, cont.points[-1].u)
    germ = assemble_germ(sol, prob)
    diag = diagnostics(germ, prob)
    full = {"config": cfg.to_json(), "validation": report, "diagnostics": diag.to_json(),
            "feasibility": prob.feasibility, "breakdown": breakdown_radius(germ),
            "continuation": [{"s": r[0], "k_max": r[1], "lambda_min": r[2], "af_integral": r[3],
                              "residual": r[4], "iterations": r[5]} for r in cont.rows()]}
    files = {
        "mesh.json": lambda p: mesh.save(p),
        "hqd.json": lambda p: hqd.save(p),
        "solution.json": lambda p: sol.save(p),
        "germ.json": lambda p: germ.save(p),
        "report.json": lambda p: _io.write_json(p, full),
        "foliation.csv": lambda p: write_foliation_csv(p, foliate(germ, cfg.foliation_r)),
    }
    for name in cfg.maps:
        files[f"map_{name}.json"] = lambda p, name=name: write_map(p, germ, name)
    entries = []
    for name, writer in files.items():
        writer(out / name)
        entries.append({"file": name, "sha256": _io.sha256(out / name)})
    manifest = {"artifacts": entries, "seed": cfg.seed}
    _io.write_json(out / "manifest.json", manifest)
    return manifest


def write_map(path, germ, which: str):
    if which == "sharp":
        return save_metric_pair(path, sharp_metrics(germ))
    if which == "star":
        return save_metric_pair(path, star_metrics(germ))
    if which == "morphism":
        return _io.write_json(path, labourie_morphism(germ).to_json())
    if which == "dual":
        return _io.write_json(path, dual_surface(germ).to_json())
    raise ConfigError(f"unknown map {which!r}")


# -- command line ----------------------------------------------------------------

def _germ_args(p: argparse.ArgumentParser, out_required=True):
    p.add_argument("--mesh", required=True)
    p.add_argument("--hqd", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--setting", required=True)
    p.add_argument("--H", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", required=out_required)


def _load_germ(args):
    mesh = ConeMesh.load(args.mesh)
    hqd = HQDField.load(args.hqd, mesh)
    setting = GeometrySetting.parse(args.setting, args.H)
    prob = assemble(setting, mesh, hqd, scale=args.scale)
    sol = Solution.load(args.solution)
    if sol.u.shape != (mesh.n_vertices,):
        raise MeshError("solution does not match the mesh")
    return assemble_germ(sol, prob), prob


def _floats_arg(text):
    try:
        return _floats(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="germforge", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=None, help="seed for randomized restarts")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("background", help="write mesh.json and hqd.json")
    p.add_argument("kind", choices=BACKGROUNDS)
    p.add_argument("--config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("validate", help="static feasibility checks, no solve")
    p.add_argument("--config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--strict", action="store_true", help="exit 3 when a check fails")

    p = sub.add_parser("solve", help="solve the Gauss equation")
    p.add_argument("--setting", required=True)
    p.add_argument("--H", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--init", help="solution JSON used as the initial guess")
    p.add_argument("--mesh", required=True)
    p.add_argument("--hqd", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("analyze", help="germ JSON and diagnostics report")
    _germ_args(p)
    p.add_argument("--report")

    p = sub.add_parser("foliate", help="equidistant foliation CSV")
    _germ_args(p)
    p.add_argument("--r", type=_floats_arg, default=(-0.5, -0.25, 0.0, 0.25, 0.5))

    p = sub.add_parser("maps", help="derived metrics and morphism")
    _germ_args(p)
    p.add_argument("--which", choices=MAPS, required=True)

    p = sub.add_parser("hamiltonian", help="AdS Hamiltonian CSV")
    _germ_args(p)
    p.add_argument("--t", type=_floats_arg,
                   default=(0.0, math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2))

    p = sub.add_parser("boundary", help="asymptotic boundary metrics")
    _germ_args(p)

    p = sub.add_parser("corebound", help="convex-core volume bound")
    _germ_args(p, out_required=False)

    p = sub.add_parser("run", help="full pipeline with manifest")
    p.add_argument("--config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", help="output directory (overrides the config)")
    return ap


def _config(args, extra=()) -> PipelineConfig:
    overrides = list(args.set) + list(extra)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return PipelineConfig.load(args.config, overrides)


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "background":
        cfg = _config(args, [f"background={args.kind}"])
        mesh, hqd = build_background(cfg)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        mesh.save(out / "mesh.json")
        hqd.save(out / "hqd.json")
        return EXIT_OK
    if cmd == "validate":
        rep = validate(_config(args))
        sys.stdout.write(_io.dumps(rep))
        return EXIT_INFEASIBLE if (args.strict and not rep["ok"]) else EXIT_OK
    if cmd == "solve":
        mesh = ConeMesh.load(args.mesh)
        hqd = HQDField.load(args.hqd, mesh)
        prob = assemble(GeometrySetting.parse(args.setting, args.H), mesh, hqd, scale=args.scale)
        cfg = PipelineConfig(setting=args.setting, H=args.H, tol=args.tol, max_iter=args.max_iter,
                             restarts=args.restarts, seed=args.seed or 0)
        init = Solution.load(args.init).u if args.init else "zero"
        solve_with_restarts(prob, cfg, init).save(args.out)
        return EXIT_OK
    if cmd == "run":
        cfg = _config(args)
        manifest = run(cfg, Path(args.out) if args.out else None)
        if cfg.verbosity:
            sys.stdout.write(_io.dumps(manifest))
        return EXIT_OK
    germ, prob = _load_germ(args)
    if cmd == "analyze":
        germ.save(args.out)
        if args.report:
            _io.write_json(args.report, diagnostics(germ, prob).to_json())
    elif cmd == "foliate":
        write_foliation_csv(args.out, foliate(germ, args.r))
    elif cmd == "maps":
        write_map(args.out, germ, args.which)
    elif cmd == "hamiltonian":
        write_hamiltonian_csv(args.out, ads_hamiltonian(germ, args.t))
    elif cmd == "boundary":
        _io.write_json(args.out, boundary_data(germ).to_json())
    elif cmd == "corebound":
        rep = {"bound": convex_core_bound(germ), "k_max": float(germ.k.max()), "area": germ.area}
        if args.out:
            _io.write_json(args.out, rep)
        else:
            sys.stdout.write(_io.dumps(rep))
    return EXIT_OK


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (InfeasibleError, PoleAngleError)):
        return EXIT_INFEASIBLE
    if isinstance(exc, (ConvergenceError, EigenSolverError)):
        return EXIT_NONCONVERGENCE
    if isinstance(exc, (ConfigError, SettingError, MeshError, HQDError)):
        return EXIT_CONFIG
    if isinstance(exc, (OSError, json.JSONDecodeError)):
        return EXIT_IO
    if isinstance(exc, ValueError):
        return EXIT_CONFIG
    return EXIT_OTHER


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (GermforgeError, OSError, ValueError) as exc:
        code = exit_code_for(exc)
        err = {"error": getattr(exc, "code", "io" if code == EXIT_IO else "value"),
               "type": type(exc).__name__, "message": str(exc), "exit_code": code}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return code


if __name__ == "__main__":
    sys.exit(main())
