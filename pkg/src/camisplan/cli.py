"""Command-line interface: ``camisplan {process-dem,plan,compare,profile-cost}``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import scenarios
from .camis import InvalidEllipseError, SlipSingularityError
from .config import ConfigError, build_run_config, load_config, model_to_dict
from .metrics import PROFILE_COLUMNS, ProfileError, compare, profile
from .solver import PathDivergenceError, UnreachableError, node_tables, plan
from .terrain import (
    ARTIFACT_MAGIC, TerrainError, load_elevation, process_dem, read_hex_artifact,
    write_hex_artifact,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PLAN = 4

ARTIFACT_NAME = "terrain.hex.csv"
MODE_TAGS = {"anisotropic": "anisotropic", "isotropic-equivalent": "isotropic"}

log = logging.getLogger("camisplan")


class DataError(Exception):
    pass


def fmt(v):
    """Full-precision, locale-free decimal; strings pass through."""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return repr(v) if math.isfinite(v) else "nan"


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=False, allow_nan=True) + "\n")


def _is_artifact(path):
    with open(path, encoding="utf-8", errors="replace") as fh:
        return fh.readline().strip() == ARTIFACT_MAGIC


def load_terrain(cfg):
    """Hex terrain from an artifact, a raster, or a synthetic generator."""
    if cfg.terrain is not None:
        path = Path(cfg.terrain)
        if not path.exists():
            raise DataError(f"no such file: {path}")
        try:
            if _is_artifact(path):
                return read_hex_artifact(path)
            grid = load_elevation(path, cfg.format)
        except (TerrainError, ValueError) as exc:
            raise DataError(f"{path}: {exc}") from exc
    elif cfg.synthetic is not None:
        try:
            grid = scenarios.make(cfg.synthetic, cfg.hex_res, cfg.seed).grid
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        raise ConfigError("no terrain given (use --terrain or --synthetic)")
    try:
        return process_dem(grid, cfg.hex_res, cfg.smooth_radius)
    except (TerrainError, ValueError) as exc:
        raise DataError(str(exc)) from exc


def _endpoints(cfg, terrain):
    start, goal = cfg.start, cfg.goal
    if cfg.synthetic is not None and cfg.terrain is None:
        sc = scenarios.make(cfg.synthetic, cfg.hex_res, cfg.seed)
        start = start or sc.start
        goal = goal or sc.goal
    if start is None or goal is None:
        raise ConfigError("start and goal are required")
    out = []
    for name, (x, y) in (("start", start), ("goal", goal)):
        idx = terrain.nearest_node(x, y)
        if not terrain.is_valid(idx):
            raise ConfigError(f"{name} ({x}, {y}) is outside the valid terrain")
        out.append(idx)
    if out[0] == out[1]:
        raise ConfigError("start and goal map to the same node")
    return out


def _path_rows(prof):
    return zip(*prof.columns())


def _run_plans(cfg, terrain, model, modes):
    start, goal = _endpoints(cfg, terrain)
    results = {}
    for mode in modes:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            tables = node_tables(terrain, model, mode)
            res = plan(start, goal, terrain, model, mode, tables=tables, backend=cfg.backend,
                       step=cfg.step)
        for w in caught:
            log.warning("%s", w.message)
        res.diagnostics["warnings"] = [str(w.message) for w in caught]
        results[mode] = res
    return results


def _summary(res, prof):
    return {
        "total_cost": res.total_cost,
        "path_cost": prof.total_cost,
        "path_length_m": prof.length,
        "start_node": list(res.start),
        "goal_node": list(res.goal),
        "meeting_node": list(res.meeting),
        "nodes_expanded": res.diagnostics["nodes_expanded"],
        "regime_counts": res.diagnostics["regime_counts"],
        "wall_time_s": res.diagnostics["wall_time_s"],
        "max_abs_roll_rad": prof.max_abs_roll,
        "warnings": res.diagnostics.get("warnings", []),
    }


def cmd_process_dem(cfg):
    terrain = load_terrain(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    target = out / ARTIFACT_NAME
    write_hex_artifact(terrain, target)
    print(f"wrote {target} ({int(terrain.valid.sum())} valid nodes)")
    return EXIT_OK


def _synthetic_defaults(cfg):
    """A synthetic terrain brings its own vehicle model unless one is given."""
    if cfg.synthetic is not None and cfg.terrain is None and not cfg.model:
        cfg.model = model_to_dict(scenarios.make(cfg.synthetic, cfg.hex_res, cfg.seed).model)


def cmd_plan(cfg, report_only=False):
    _synthetic_defaults(cfg)
    terrain = load_terrain(cfg)
    model = cfg.camis_model()
    modes = ("anisotropic", "isotropic-equivalent") if cfg.mode == "both" else (cfg.mode,)
    results = _run_plans(cfg, terrain, model, modes)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    step = cfg.step if cfg.step is not None else 0.5 * terrain.h
    summary = {}
    for mode, res in results.items():
        prof = profile(res.path, terrain, model, step)
        name = "path.csv" if len(results) == 1 else f"path_{MODE_TAGS[mode]}.csv"
        write_csv(out / name, PROFILE_COLUMNS, _path_rows(prof))
        summary[mode] = _summary(res, prof)
        print(f"{mode}: total cost {res.total_cost:.6g}, {len(prof.s)} waypoints -> {out / name}")
    if len(results) == 2:
        summary["comparison"] = compare(results["anisotropic"], results["isotropic-equivalent"],
                                        terrain, model, step)
        print(f"saving {summary['comparison']['saving_percent']:.3f}%")
    if len(results) == 1:
        summary = summary[modes[0]]
    summary["config"] = cfg.to_dict()
    write_json(out / ("report.json" if report_only else "summary.json"), summary)
    return EXIT_OK


def cmd_compare(cfg):
    cfg.mode = "both"
    return cmd_plan(cfg, report_only=True)


def _parse_list(text, name):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{name} must be a comma-separated list of numbers") from None


def cmd_profile_cost(cfg, alphas_deg):
    model = cfg.camis_model()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    betas = np.arange(-180, 181)
    table = []
    summary = []
    for a_deg in alphas_deg:
        alpha = math.radians(a_deg)
        try:
            e = model.ellipse(alpha)
        except (SlipSingularityError, InvalidEllipseError) as exc:
            flag = "slip_clamped" if isinstance(exc, SlipSingularityError) else "invalid_ellipse"
            summary.append((a_deg,) + (math.nan,) * 6 + (flag,))
            table.extend((a_deg, b, math.nan, flag) for b in betas)
            continue
        costs = e(np.radians(betas))
        table.extend((a_deg, b, c, "") for b, c in zip(betas, costs))
        d = e.anchors
        summary.append((a_deg, d.descent, d.ascent, d.lateral1, d.lateral2,
                        model.anisotropy(alpha), model.isotropic_cost(alpha), ""))
    write_csv(out / "cost_table.csv", ("alpha_deg", "beta_deg", "cost", "flag"), table)
    write_csv(out / "anisotropy.csv",
                   ("alpha_deg", "descent", "ascent", "lateral1", "lateral2", "anisotropy",
                    "isotropic_equivalent", "flag"), summary)
    write_json(out / "model.json", model_to_dict(model))
    print(f"wrote {out / 'cost_table.csv'} and {out / 'anisotropy.csv'}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="camisplan", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--backend", choices=("numba", "numpy"))

    def terrain_args(sp):
        sp.add_argument("--terrain", help="elevation raster (.asc/.csv) or hex artifact")
        sp.add_argument("--format", choices=("ascii-grid", "csv"))
        sp.add_argument("--synthetic", choices=sorted(scenarios.SCENARIOS))
        sp.add_argument("--seed", type=int, help="seed for synthetic terrain")
        sp.add_argument("--hex-res", type=float, dest="hex_res")
        sp.add_argument("--smooth", type=int, dest="smooth_radius")

    sp = sub.add_parser("process-dem", help="resample a raster onto the hex lattice")
    common(sp)
    terrain_args(sp)

    for name, helptext in (("plan", "plan a path"),
                           ("compare", "anisotropic vs isotropic-equivalent report")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        terrain_args(sp)
        sp.add_argument("--start", help="x,y in metres")
        sp.add_argument("--goal", help="x,y in metres")
        sp.add_argument("--step", type=float, help="path sampling step in metres")
        if name == "plan":
            sp.add_argument("--mode", choices=("anisotropic", "isotropic-equivalent", "both"))

    sp = sub.add_parser("profile-cost", help="tabulate the directional cost model")
    common(sp)
    sp.add_argument("--alphas", default="0,5,10,15,20,25,30", help="steepness list in degrees")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        overrides = {k: v for k, v in vars(args).items()
                     if k not in ("config", "command", "verbose", "alphas")}
        cfg = build_run_config(load_config(args.config), **overrides)
        if args.command == "process-dem":
            return cmd_process_dem(cfg)
        if args.command == "plan":
            return cmd_plan(cfg)
        if args.command == "compare":
            return cmd_compare(cfg)
        return cmd_profile_cost(cfg, _parse_list(args.alphas, "--alphas"))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, TerrainError, FileNotFoundError, ProfileError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UnreachableError, PathDivergenceError) as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLAN


if __name__ == "__main__":
    sys.exit(main())
