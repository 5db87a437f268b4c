"""Command line front end: ``phtshell run | cases | export``.

Run configurations are TOML files with the sections ``case``, ``geometry``,
``mesh``, ``optimizer``, ``material`` and ``output``.  Unknown sections or
keys are errors.  Every run writes ``manifest.json`` holding the fully
resolved configuration, which can be fed back with ``--seed-manifest``.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .cases import BUILTIN_CASES, CaseSpec, cross_line_loads, load_case
from .driver import RunConfig, optimize, read_checkpoint
from .errors import ConfigurationError, ConsistencyError, DegenerateGeometryError, SolverError
from .export import export_vtk
from .phtspace import PhtSpace
from .shellfea import MaterialParams
from .shellgeom import BUILTIN_SURFACES, MidSurface, builtin_surface, surface_from_control_net
from .tmesh import HierTMesh

log = logging.getLogger("phtshell")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SOLVER = 4
EXIT_NOT_CONVERGED = 5

OUTPUT_ROOT_ENV = "PHTSHELL_OUTPUT_ROOT"

DEFAULTS: dict[str, dict] = {
    "case": {"name": "case1", "loads": None, "fixed": None, "volume_fraction": None, "line_points": 33,
             "support": "anchor"},
    "geometry": {"surface": None, "size": 100.0, "thickness": 5.0, "nx": 10, "ny": 10, "params": {}},
    "mesh": {"nx": 10, "ny": 10},
    "optimizer": {
        "mode": "adaptive", "inheritance": "inherit", "rcc_direction": "above",
        "tol_c": 0.01, "tol_ref": 0.025, "tol_rcc": 0.15, "rho_l": 0.1, "rho_u": 0.9,
        "max_iters": 300, "max_levels": 4, "filter_radius": None, "move": 0.5, "seed": 0,
        "inherit_check_points": 1000, "record_timing": True, "checkpoint_every": 0,
    },
    "material": {"E0": 2100.0, "Emin": 1e-5, "nu": 0.3, "p": 5.0, "shear_correction": 5.0 / 6.0},
    "output": {"dir": None, "resolution": 4, "export_levels": True},
}


# ----------------------------------------------------------------- config
def merge_config(base: dict, override: dict, where: str = "config") -> dict:
    """``base`` updated section by section; unknown names raise."""
    out = copy.deepcopy(base)
    for section, values in override.items():
        if section not in DEFAULTS:
            raise ConfigurationError(f"{where}: unknown section [{section}]")
        if not isinstance(values, dict):
            raise ConfigurationError(f"{where}: [{section}] must be a table")
        for key, value in values.items():
            if key not in DEFAULTS[section]:
                raise ConfigurationError(f"{where}: unknown key {section}.{key}")
            out[section][key] = value
    return out


def read_config(path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            data = json.loads(raw)
            data = data.get("config", data)
        else:
            data = tomllib.loads(raw.decode())
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return data


def resolve(config: dict) -> tuple[CaseSpec, MidSurface, RunConfig]:
    """Case, surface and driver settings described by a merged config."""
    c, g = config["case"], config["geometry"]
    spec = load_case(c["name"], size=float(g["size"]), line_points=int(c["line_points"])) \
        if c["name"] in BUILTIN_CASES else None
    if spec is None and (c["loads"] is None or c["fixed"] is None):
        raise ConfigurationError(
            f"unknown case {c['name']!r}; available: {', '.join(BUILTIN_CASES)} "
            "(or give case.loads and case.fixed)")
    geometry = g["surface"] or (spec.geometry if spec else "flat_plate")
    params = dict(spec.geometry_params) if spec and geometry == spec.geometry else {"size": float(g["size"])}
    params.update(g["params"] or {})
    loads = spec.loads if spec else []
    if c["loads"] is not None:
        loads = _parse_loads(c["loads"], int(c["line_points"]))
    fixed = spec.fixed_points if spec else []
    if c["fixed"] is not None:
        fixed = [tuple(p) for p in c["fixed"]]
    vf = c["volume_fraction"] if c["volume_fraction"] is not None else (spec.volume_fraction if spec else 0.3)
    case = CaseSpec(c["name"], geometry if geometry in BUILTIN_SURFACES else str(geometry),
                    params if geometry in BUILTIN_SURFACES else {}, loads, fixed, float(vf),
                    support=str(c["support"]))
    surf = _surface(geometry, params, g)
    o, m = config["optimizer"], config["material"]
    try:
        run = RunConfig(nx=int(config["mesh"]["nx"]), ny=int(config["mesh"]["ny"]), volume_fraction=float(vf),
                        material=MaterialParams(**{k: float(v) for k, v in m.items()}), **o)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
    return case, surf, run


def _parse_loads(entries, line_points):
    """Loads as ``[s, t, gx, gy, gz]`` points or ``{"cross_lines": G}``."""
    out = []
    for k, item in enumerate(entries):
        if isinstance(item, dict) and set(item) == {"cross_lines"}:
            out += cross_line_loads(float(item["cross_lines"]), line_points)
        elif isinstance(item, (list, tuple)) and len(item) == 5:
            out.append(((item[0], item[1]), tuple(item[2:])))
        else:
            raise ConfigurationError(f"case.loads[{k}]: expected [s, t, gx, gy, gz] or {{cross_lines = G}}")
    return out


def _surface(geometry, params, g) -> MidSurface:
    h = float(g["thickness"])
    if geometry in BUILTIN_SURFACES:
        return builtin_surface(geometry, int(g["nx"]), int(g["ny"]), h=h, **params)
    path = Path(geometry)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"geometry {geometry!r} is neither a built-in nor a readable file") from exc
    lines = text.splitlines()
    starts = [i for i, ln in enumerate(lines) if ln.startswith("# tmesh")]
    if starts:
        split = next((i for i, ln in enumerate(lines) if ln.startswith("# field")), len(lines))
        mesh = HierTMesh.from_dump("\n".join(lines[starts[0]:split]))
        text = "\n".join(lines[split:])
    else:
        mesh = HierTMesh(int(g["nx"]), int(g["ny"]))
    return surface_from_control_net(PhtSpace(mesh), text, h=h)


def output_dir(config: dict) -> Path:
    base = Path(os.environ.get(OUTPUT_ROOT_ENV, "."))
    name = config["output"]["dir"] or f"runs/{config['case']['name']}-{config['optimizer']['mode']}"
    return base / name


def manifest(config: dict, result=None) -> dict:
    out = {"phtshell": __version__, "config": config}
    if result is not None:
        out["result"] = {"converged": result.converged, "iterations": len(result.records),
                         "compliance": result.compliance, "volume": result.volume,
                         "n_basis": result.space.dim, "n_elements": len(result.space.elements),
                         "refinements": [e.__dict__ for e in result.events]}
    return out


# ---------------------------------------------------------------- verbs
def cmd_cases(args) -> int:
    for name, c in BUILTIN_CASES.items():
        print(f"{name:7s} {c.geometry:18s} loads={len(c.loads):3d} fixed={len(c.fixed_points)}  {c.description}")
    return EXIT_OK


def cmd_run(args) -> int:
    if args.config is None and args.seed_manifest is None:
        raise ConfigurationError("run needs a config file or --seed-manifest")
    config = copy.deepcopy(DEFAULTS)
    if args.seed_manifest:
        config = merge_config(config, read_config(args.seed_manifest), str(args.seed_manifest))
    if args.config:
        config = merge_config(config, read_config(args.config), str(args.config))
    flags = {"mode": args.mode, "inheritance": args.inheritance, "tol_ref": args.tol_ref,
             "rcc_direction": args.rcc_direction}
    config = merge_config(config, {"optimizer": {k: v for k, v in flags.items() if v is not None}}, "flags")
    case, surf, run = resolve(config)
    out = output_dir(config)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.json").write_text(json.dumps(manifest(config), indent=2) + "\n")
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    result = optimize(run, surf, case.load_case(), out_dir=out)
    n = int(config["output"]["resolution"])
    if config["output"]["export_levels"]:
        for ck in sorted(out.glob("level_*.txt")):
            old = read_checkpoint(ck)
            export_vtk(old.space, surf, old, ck.with_suffix(".vtk"), n=n)
    export_vtk(result.space, surf, result.rho, out / "final.vtk", n=n)
    (out / "manifest.json").write_text(json.dumps(manifest(config, result), indent=2, default=float) + "\n")
    print(f"{'converged' if result.converged else 'not converged'} after {len(result.records)} iterations: "
          f"C={result.compliance:.6g} V={result.volume:.4f} basis={result.space.dim} -> {out}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_export(args) -> int:
    rho = read_checkpoint(args.checkpoint)
    man = args.manifest or Path(args.checkpoint).with_name("manifest.json")
    if Path(man).exists():
        config = merge_config(DEFAULTS, read_config(man), str(man))
    elif args.manifest is None:
        config = copy.deepcopy(DEFAULTS)
        log.warning("no manifest next to %s; using the default geometry", args.checkpoint)
    else:
        raise ConfigurationError(f"manifest {man} not found")
    _, surf, _ = resolve(config)
    written = export_vtk(rho.space, surf, rho, args.out, n=args.resolution)
    for p in written:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phtshell", description="Adaptive PHT-spline shell topology optimisation")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log refinement and solver details")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an optimisation from a TOML config")
    r.add_argument("config", nargs="?", type=Path)
    r.add_argument("--mode", choices=("adaptive", "tensor-global"))
    r.add_argument("--inheritance", choices=("inherit", "reset"))
    r.add_argument("--tol-ref", type=float)
    r.add_argument("--rcc-direction", choices=("above", "below"))
    r.add_argument("--seed-manifest", type=Path, help="start from the config stored in a run manifest")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("cases", help="list built-in cases")
    c.set_defaults(func=cmd_cases)

    e = sub.add_parser("export", help="write VTK files for a density checkpoint")
    e.add_argument("checkpoint", type=Path)
    e.add_argument("out", type=Path)
    e.add_argument("--manifest", type=Path, help="run manifest giving the geometry")
    e.add_argument("--resolution", type=int, default=4, help="quads per element edge")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, DegenerateGeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ConsistencyError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
