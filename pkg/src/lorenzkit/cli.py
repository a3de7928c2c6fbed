"""Command-line front end: parameter checks, separatrix runs, region scans,
section-grid transport, and exponent estimates, each leaving a manifest
that re-creates the run.

Settings resolve in three layers: dataclass defaults, then an INI config
file (``--config``), then explicit flags.  Every command writes its outputs
and a ``*_manifest.ini`` into ``--out-dir``; feeding that manifest back via
``--config`` reproduces the run bit-for-bit.

Exit codes: 0 success, 2 invalid parameters or flags, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from dataclasses import fields as dataclass_fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .integrate import IntegrationError
from .lyapunov import ftle
from .model import PathPoint, check_conditions
from .poincare import (
    build_sections,
    half_frame,
    iterate_grid,
    rectangle_grid,
    separatrix_section_hit,
    write_grid_csv,
)
from .scan import ScanSettings, scan_grid, scan_manifest, write_scan_csv
from .separatrix import RunSettings, run_separatrix, seed_separatrix

__all__ = ["main"]

_G = "%.17g"

_RUN_KEYS = tuple(f.name for f in dataclass_fields(RunSettings))
_SCAN_KEYS = ("s_step", "eps_threshold", "max_depth", "s_max")


# ------------------------------------------------------------- plumbing

def _parse_axis(text: str) -> list:
    """A single value, or an inclusive min:max:count range."""
    if ":" in text:
        lo_s, hi_s, n_s = text.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
        if n < 1 or not hi > lo:
            raise ValueError(f"range must be min:max:count with max > lo, got {text!r}")
        return [float(v) for v in np.linspace(lo, hi, n)]
    return [float(text)]


def _load_config(path: Optional[str]) -> dict:
    """Flat key/value view of an INI file; section names don't matter."""
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file not found: {path}")
    merged = {}
    for section in parser.sections():
        if section == "meta":
            continue
        merged.update(dict(parser.items(section)))
    return merged


def _layered(args, cfg: dict, key: str, cast=float):
    """Flag value if given, else config value, else None."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in cfg:
        return cast(cfg[key])
    return None


def _run_settings(args, cfg: dict) -> RunSettings:
    kwargs = {}
    for key in _RUN_KEYS:
        val = _layered(args, cfg, key)
        if val is not None:
            kwargs[key] = val
    return RunSettings(**kwargs)


def _scan_settings(args, cfg: dict) -> ScanSettings:
    kwargs = {}
    for key in _SCAN_KEYS:
        cast = int if key == "max_depth" else float
        val = _layered(args, cfg, key, cast)
        if val is not None:
            kwargs[key] = cast(val)
    return ScanSettings(run=_run_settings(args, cfg), **kwargs)


def _point(args, cfg: dict) -> PathPoint:
    delta = _layered(args, cfg, "delta")
    beta = _layered(args, cfg, "beta")
    s = _layered(args, cfg, "s")
    if delta is None or beta is None or s is None:
        raise ValueError("delta, beta, and s are required (flags or config)")
    return PathPoint(float(delta), float(beta), float(s))


def _write_manifest(
    out_dir: Path,
    command: str,
    params: dict,
    settings: dict,
    wall_clock: float,
) -> Path:
    parser = configparser.ConfigParser()
    parser["meta"] = {
        "command": command,
        "toolkit_version": __version__,
        "wall_clock_s": "%.3f" % wall_clock,
    }
    parser["params"] = {k: str(v) for k, v in params.items()}
    parser["settings"] = {k: _G % v if isinstance(v, float) else str(v)
                          for k, v in settings.items()}
    path = out_dir / f"{command}_manifest.ini"
    with open(path, "w") as fh:
        parser.write(fh)
    return path


def _settings_dict(settings: RunSettings) -> dict:
    return {k: getattr(settings, k) for k in _RUN_KEYS}


# ------------------------------------------------------------- commands

def _cmd_check(args) -> int:
    cfg = _load_config(args.config)
    t0 = time.monotonic()
    delta = _layered(args, cfg, "delta")
    beta = _layered(args, cfg, "beta")
    s = _layered(args, cfg, "s")
    if delta is None or beta is None or s is None:
        raise ValueError("delta, beta, and s are required")
    delta, beta, s = float(delta), float(beta), float(s)
    report = check_conditions(delta, beta, s)
    p = report.params
    in_wedge = 0.0 < delta <= 1.1 and 0.0 < beta < 2.0 + delta and 0.0 <= s < 1.0
    print(f"delta={_G % delta} beta={_G % beta} s={_G % s}")
    print(f"lambda={_G % p.lam} alpha={_G % p.alpha}")
    print(f"admissible wedge: {'yes' if in_wedge else 'no'}")
    print(f"absorbing inequality: {'holds' if report.absorbing_inequality_holds else 'fails'}")
    print(f"L={_G % report.L} K={_G % report.K} M={_G % report.M} x0={_G % report.x0}")
    print(f"overdamped in band: {'yes' if report.overdamped_in_band else 'no'}")
    print(f"nontrivial equilibria stable: {'yes' if report.splus_stable else 'no'}")
    print(f"overall: {'ok' if report.ok else 'not satisfied'}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_manifest(out_dir, "check",
                    {"delta": _G % delta, "beta": _G % beta, "s": _G % s},
                    {}, time.monotonic() - t0)
    return 0


def _write_trajectory_csv(path: Path, run) -> None:
    with open(path, "w") as fh:
        fh.write("t,x,v,u\n")
        offset = 0.0
        for leg in (run.trans_traj, run.limit_traj):
            if leg is None:
                continue
            for t, y in zip(leg.times, leg.states):
                fh.write(",".join(_G % v for v in (t + offset, *y)) + "\n")
            offset += leg.times[-1]


def _cmd_separatrix(args) -> int:
    cfg = _load_config(args.config)
    t0 = time.monotonic()
    point = _point(args, cfg)
    settings = _run_settings(args, cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    signs = (1, -1) if args.mirror else (1,)
    for sign in signs:
        run = run_separatrix(point, settings, sign=sign, store="nodes")
        tag = "plus" if sign > 0 else "minus"
        _write_trajectory_csv(out_dir / f"separatrix_{tag}.csv", run)
        print(f"branch {tag}: {run.outcome.describe()}")
    _write_manifest(
        out_dir, "separatrix",
        {"delta": _G % point.delta, "beta": _G % point.beta, "s": _G % point.s,
         "mirror": args.mirror},
        _settings_dict(settings), time.monotonic() - t0,
    )
    return 0


def _cmd_scan(args) -> int:
    cfg = _load_config(args.config)
    t0 = time.monotonic()
    delta_text = args.delta if args.delta is not None else cfg.get("delta")
    beta_text = args.beta if args.beta is not None else cfg.get("beta")
    if delta_text is None or beta_text is None:
        raise ValueError("delta and beta are required (single values or min:max:count)")
    deltas = _parse_axis(str(delta_text))
    betas = _parse_axis(str(beta_text))
    threads = args.threads if args.threads is not None else int(cfg.get("threads", 1))
    settings = _scan_settings(args, cfg)
    results = scan_grid(deltas, betas, settings, n_threads=threads)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "scan.csv", "w") as fh:
        write_scan_csv(results, fh)
    for res in results:
        iv = (f"[{_G % res.interval.s_lo}, {_G % res.interval.s_hi}]"
              if res.interval else "none")
        print(f"delta={_G % res.delta} beta={_G % res.beta} "
              f"{res.label.value} interval={iv}")
    manifest = json.loads(scan_manifest(deltas, betas, settings, threads))
    params = {"delta": delta_text, "beta": beta_text, "threads": threads}
    flat = dict(manifest["scan"])
    flat.update(manifest["run"])
    _write_manifest(out_dir, "scan", params, flat, time.monotonic() - t0)
    return 0


def _cmd_poincare(args) -> int:
    cfg = _load_config(args.config)
    t0 = time.monotonic()
    point = _point(args, cfg)
    settings = _run_settings(args, cfg)
    def pick(key, default, cast=float):
        val = _layered(args, cfg, key, cast)
        return default if val is None else val

    eps_in = pick("eps_in", 0.5)
    eps_out = pick("eps_out", 0.5)
    half_a = pick("half_a", 0.25)
    half_b = pick("half_b", 0.25)
    rows = int(pick("rows", 200, int))
    cols = int(pick("cols", 40, int))
    shape = args.shape or cfg.get("shape", "half-frame")
    iter_text = args.iterations or cfg.get("iterations", "0,1")
    requested = sorted({int(tok) for tok in str(iter_text).split(",")})
    if requested[0] < 0:
        raise ValueError("iteration indices must be nonnegative")

    sec_in, sec_out = build_sections(point, eps_in=eps_in, eps_out=eps_out)
    grid = rectangle_grid(sec_in, half_a, half_b, n_rows=rows, n_cols=cols)
    if shape == "half-frame":
        hit = separatrix_section_hit(point, sec_in, settings)
        if hit is not None and abs(hit[0]) <= half_a and abs(hit[1]) <= half_b:
            grid = half_frame(grid, hit)
        else:
            print("note: separatrix does not hit the grid; using full rectangle",
                  file=sys.stderr)
    images = iterate_grid(point, grid, requested[-1], settings)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k in requested:
        with open(out_dir / f"poincare_i{k:03d}.csv", "w") as fh:
            write_grid_csv([images[k]], fh, iterations=[k])
    survivors = int(images[-1].hits.sum())
    print(f"grid shape {grid.shape}: {len(grid)} points, "
          f"{survivors} surviving after {requested[-1]} iterations")
    _write_manifest(
        out_dir, "poincare",
        {"delta": _G % point.delta, "beta": _G % point.beta, "s": _G % point.s,
         "iterations": ",".join(str(k) for k in requested)},
        {**_settings_dict(settings), "eps_in": eps_in, "eps_out": eps_out,
         "half_a": half_a, "half_b": half_b, "rows": rows, "cols": cols,
         "shape": shape},
        time.monotonic() - t0,
    )
    return 0


def _cmd_lyapunov(args) -> int:
    cfg = _load_config(args.config)
    t0 = time.monotonic()
    point = _point(args, cfg)
    settings = _run_settings(args, cfg)
    t_end_val = _layered(args, cfg, "t_end")
    t_end = 1000.0 if t_end_val is None else float(t_end_val)
    x0_text = args.x0 if args.x0 is not None else cfg.get("x0")
    if x0_text is not None:
        x0 = np.array([float(tok) for tok in str(x0_text).split(",")])
        if x0.shape != (3,):
            raise ValueError("x0 must be three comma-separated numbers")
    else:
        x0 = seed_separatrix(point, sign=1, offset=settings.seed_offset)
    result = ftle(
        point, x0, t_end,
        reorth_dt=settings.reorth_dt, rel_tol=settings.rel_tol,
        abs_tol=settings.abs_tol, max_step=settings.max_step,
        r_inf=settings.r_inf,
    )
    le = result.exponents
    header = "delta,beta,s,x0x,x0v,x0u,t_end,le1,le2,le3,ld"
    row = ",".join(
        _G % v for v in (point.delta, point.beta, point.s, *x0, t_end,
                         *le, result.dimension)
    )
    print(header)
    print(row)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "lyapunov.csv", "w") as fh:
        fh.write(header + "\n" + row + "\n")
    _write_manifest(
        out_dir, "lyapunov",
        {"delta": _G % point.delta, "beta": _G % point.beta, "s": _G % point.s,
         "x0": ",".join(_G % v for v in x0), "t_end": _G % t_end},
        _settings_dict(settings), time.monotonic() - t0,
    )
    return 0


# -------------------------------------------------------------- parser

def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="lorenzkit",
        description="Separatrix, scan, section-map, and exponent experiments "
                    "for a Lorenz-like flow along a one-parameter path.",
    )
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with defaults (flags win)")
    common.add_argument("--out-dir", default=".", help="directory for outputs")
    common.add_argument("--delta", help="path parameter delta")
    common.add_argument("--beta", help="path parameter beta")
    common.add_argument("--s", type=float, help="arc position in [0, 1)")

    knobs = argparse.ArgumentParser(add_help=False)
    for key in _RUN_KEYS:
        knobs.add_argument(f"--{key.replace('_', '-')}", type=float, dest=key)

    pc = sub.add_parser("check", parents=[common],
                        help="evaluate parameter-region conditions")
    pc.set_defaults(func=_cmd_check)

    ps = sub.add_parser("separatrix", parents=[common, knobs],
                        help="integrate and classify a separatrix branch")
    ps.add_argument("--mirror", action="store_true",
                    help="also run the mirror branch")
    ps.set_defaults(func=_cmd_separatrix)

    pg = sub.add_parser("scan", parents=[common, knobs],
                        help="label regions and refine outcome flips")
    for key in _SCAN_KEYS:
        typ = int if key == "max_depth" else float
        pg.add_argument(f"--{key.replace('_', '-')}", type=typ, dest=key)
    pg.add_argument("--threads", type=int)
    pg.set_defaults(func=_cmd_scan)

    pp = sub.add_parser("poincare", parents=[common, knobs],
                        help="transport a colored section grid")
    pp.add_argument("--eps-in", type=float, dest="eps_in")
    pp.add_argument("--eps-out", type=float, dest="eps_out")
    pp.add_argument("--half-a", type=float, dest="half_a")
    pp.add_argument("--half-b", type=float, dest="half_b")
    pp.add_argument("--rows", type=int)
    pp.add_argument("--cols", type=int)
    pp.add_argument("--shape", choices=["rectangle", "half-frame"])
    pp.add_argument("--iterations", help="comma-separated iteration indices")
    pp.set_defaults(func=_cmd_poincare)

    pl = sub.add_parser("lyapunov", parents=[common, knobs],
                        help="finite-horizon exponents and dimension")
    pl.add_argument("--x0", help="initial state as x,v,u")
    pl.add_argument("--t-end", type=float, dest="t_end")
    pl.set_defaults(func=_cmd_lyapunov)
    return top


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
