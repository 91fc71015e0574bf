"""Command-line driver: `mhdpp run|convergence|verify`.

Run configuration comes from an optional line-based config file with
[problem]/[solver]/[output] sections (`key = value`, `#` comments) plus
command-line flags, which override file values.  Unknown keys are rejected
with the offending line echoed.

Outputs: 1D snapshots are CSV profiles of cell averages
(x,rho,mx,my,mz,Bx,By,Bz,E,p); 2D snapshots are legacy ASCII VTK
STRUCTURED_POINTS files with CELL_DATA scalars (rho, p, E, divB_ho) and
vectors (velocity, B).  Every run writes a diagnostics.csv with one row per
accepted step.  All numbers are printed with 17 significant digits, so a
fixed configuration reproduces byte-identical files.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path

import numpy as np

from . import bench, ppcheck, scheme
from .limiter import PositivityError
from .state import IdealEos, cons_to_prim

_SECTIONS = {
    "problem": {"name", "cells", "t_end", "mach", "b_a"},
    "solver": {"k", "flux", "penalty", "cfl_mode", "cfl", "pp_limiter",
               "oscillation_limiter", "tvb_m", "tvb_mode", "limiter_order"},
    "output": {"dir", "snapshot_every"},
}


@dataclass
class RunConfig:
    problem: str = "smooth1d"
    cells: str = "128"
    t_end: float | None = None
    mach: float = 800.0
    b_a: float = float(np.sqrt(2000.0))
    k: int = 2
    flux: str = "hll"
    penalty: bool = True
    cfl_mode: str = "practical"
    cfl: float = 0.15
    pp_limiter: bool = True
    oscillation_limiter: str = "tvb"
    tvb_m: float = 0.0
    tvb_mode: str = "char"
    limiter_order: str = "osc_then_pp"
    out_dir: str = "out"
    snapshot_every: int = 0   # 0: only the final snapshot
    seed: int = 0


class ConfigError(Exception):
    pass


def parse_config_file(path: str) -> dict[tuple[str, str], str]:
    """Line-based sectioned `key = value` file; raises on unknown keys."""
    values: dict[tuple[str, str], str] = {}
    section = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"{path}:{lineno}: unknown section {raw!r}")
            continue
        if "=" not in line or section is None:
            raise ConfigError(f"{path}:{lineno}: cannot parse {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SECTIONS[section]:
            raise ConfigError(f"{path}:{lineno}: unknown key in line {raw!r}")
        values[(section, key)] = value
    return values


_BOOLS = {"on": True, "true": True, "1": True, "off": False, "false": False, "0": False}


def _coerce(value: str, target):
    if isinstance(target, bool):
        if value.lower() not in _BOOLS:
            raise ConfigError(f"expected on/off, got {value!r}")
        return _BOOLS[value.lower()]
    if isinstance(target, int):
        return int(value)
    if isinstance(target, float) or target is None:
        return float(value)
    return value


_FILE_TO_FIELD = {
    ("problem", "name"): "problem",
    ("problem", "cells"): "cells",
    ("problem", "t_end"): "t_end",
    ("problem", "mach"): "mach",
    ("problem", "b_a"): "b_a",
    ("solver", "k"): "k",
    ("solver", "flux"): "flux",
    ("solver", "penalty"): "penalty",
    ("solver", "cfl_mode"): "cfl_mode",
    ("solver", "cfl"): "cfl",
    ("solver", "pp_limiter"): "pp_limiter",
    ("solver", "oscillation_limiter"): "oscillation_limiter",
    ("solver", "tvb_m"): "tvb_m",
    ("solver", "tvb_mode"): "tvb_mode",
    ("solver", "limiter_order"): "limiter_order",
    ("output", "dir"): "out_dir",
    ("output", "snapshot_every"): "snapshot_every",
}


def build_run_config(args) -> RunConfig:
    cfg = RunConfig()
    defaults = RunConfig()
    if args.config:
        for key, value in parse_config_file(args.config).items():
            field = _FILE_TO_FIELD[key]
            current = getattr(defaults, field)
            setattr(cfg, field, _coerce(value, current))
    for field in (f.name for f in dc_fields(RunConfig)):
        flag = getattr(args, field, None)
        if flag is not None:
            setattr(cfg, field, flag)
    return cfg


def _resolve_problem(cfg: RunConfig) -> bench.ProblemSpec:
    if cfg.problem in bench.JET_PRESETS:
        mach, b_a = bench.JET_PRESETS[cfg.problem]
        if cfg.problem == "jet":
            mach, b_a = cfg.mach, cfg.b_a
        return bench.jet_problem(mach, b_a)
    catalog = bench.problem_catalog()
    if cfg.problem not in catalog:
        raise ConfigError(
            f"unknown problem {cfg.problem!r}; available: "
            f"{', '.join(sorted(set(catalog) | set(bench.JET_PRESETS)))}"
        )
    return catalog[cfg.problem]


def _parse_cells(spec: bench.ProblemSpec, cells: str):
    if spec.dim == 1:
        return int(cells)
    if "x" in cells:
        nx, ny = cells.lower().split("x")
        return (int(nx), int(ny))
    n = int(cells)
    return (n, n)


def _solver_config(cfg: RunConfig, spec: bench.ProblemSpec) -> scheme.SolverConfig:
    return scheme.SolverConfig(
        k=cfg.k,
        flux_mode=cfg.flux,
        penalty=cfg.penalty,
        cfl_mode=cfg.cfl_mode,
        cfl=cfg.cfl,
        pp_limiter=cfg.pp_limiter,
        oscillation_limiter=cfg.oscillation_limiter,
        tvb_M=cfg.tvb_m,
        tvb_mode=cfg.tvb_mode,
        limiter_order=cfg.limiter_order,
        eos=IdealEos(spec.gamma),
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_profile_csv(path, field, mesh_obj, eos) -> None:
    """1D snapshot: one row of cell-averaged values per cell."""
    avg = field.averages
    W = cons_to_prim(avg, eos)
    with open(path, "w") as fh:
        fh.write("x,rho,mx,my,mz,Bx,By,Bz,E,p\n")
        for j, x in enumerate(mesh_obj.centers):
            row = [x, avg[j, 0], avg[j, 1], avg[j, 2], avg[j, 3],
                   avg[j, 4], avg[j, 5], avg[j, 6], avg[j, 7], W[j, 4]]
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_vtk_snapshot(path, field, mesh_obj, cfg_solver, t: float) -> None:
    """2D snapshot: legacy ASCII STRUCTURED_POINTS with CELL_DATA."""
    avg = field.averages
    nx, ny = field.shape
    W = cons_to_prim(avg, cfg_solver.eos)
    # The divergence diagnostic needs admissible traces; evaluate it on the
    # limited representation (what the next stage would actually see).
    try:
        from .limiter import pp_limit_field
        limited, _ = pp_limit_field(field, cfg_solver.pp_params)
        _, info = scheme.dg_residual_2d(limited, mesh_obj, cfg_solver)
        div_ho = info["div_ho"]
    except PositivityError:
        div_ho = np.full((nx, ny), np.nan)

    def cells(a):
        # VTK cell data runs x fastest.
        return "\n".join(_fmt(v) for v in np.ravel(a, order="F"))

    def vectors(vx, vy, vz):
        rows = np.stack([np.ravel(vx, order="F"), np.ravel(vy, order="F"),
                         np.ravel(vz, order="F")], axis=1)
        return "\n".join(" ".join(_fmt(v) for v in row) for row in rows)

    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"mhdpp snapshot t={_fmt(t)}\n")
        fh.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {nx + 1} {ny + 1} 1\n")
        fh.write(f"ORIGIN {_fmt(mesh_obj.xedges[0])} {_fmt(mesh_obj.yedges[0])} 0\n")
        fh.write(f"SPACING {_fmt(mesh_obj.dx)} {_fmt(mesh_obj.dy)} 1\n")
        fh.write(f"CELL_DATA {nx * ny}\n")
        for name, data in (("rho", avg[..., 0]), ("p", W[..., 4]),
                           ("E", avg[..., 7]), ("divB_ho", div_ho)):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            fh.write(cells(data) + "\n")
        fh.write("VECTORS velocity double\n")
        fh.write(vectors(W[..., 1], W[..., 2], W[..., 3]) + "\n")
        fh.write("VECTORS B double\n")
        fh.write(vectors(avg[..., 4], avg[..., 5], avg[..., 6]) + "\n")


def write_diagnostics_csv(path, diags) -> None:
    with open(path, "w") as fh:
        fh.write("step,t,dt,min_rho,min_p,max_divB_fo,max_divB_ho,"
                 "total_mass,limited_cells\n")
        for d in diags:
            fh.write(",".join([
                str(d.step), _fmt(d.t), _fmt(d.dt), _fmt(d.min_rho), _fmt(d.min_p),
                _fmt(d.max_divB_fo), _fmt(d.max_divB_ho), _fmt(d.total_mass),
                str(d.limited_cells),
            ]) + "\n")


def cmd_run(args) -> int:
    cfg = build_run_config(args)
    spec = _resolve_problem(cfg)
    solver = _solver_config(cfg, spec)
    cells = _parse_cells(spec, cfg.cells)
    t_end = cfg.t_end if cfg.t_end is not None else spec.t_end
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mesh_obj, field = bench.setup_run(spec, cells, solver)

    def snap_name(step):
        ext = "csv" if spec.dim == 1 else "vtk"
        return out / f"snap_{step:06d}.{ext}"

    def write_snap(step, f, t):
        if spec.dim == 1:
            write_profile_csv(snap_name(step), f, mesh_obj, solver.eos)
        else:
            write_vtk_snapshot(snap_name(step), f, mesh_obj, solver, t)

    last_written = -1

    def on_step(step, t, f, diag):
        nonlocal last_written
        if cfg.snapshot_every and step % cfg.snapshot_every == 0:
            write_snap(step, f, t)
            last_written = step

    write_snap(0, field, 0.0)
    try:
        result = scheme.ssp_rk3_advance(field, mesh_obj, solver, t_end,
                                        on_step=on_step)
    except PositivityError as exc:
        print(f"positivity abort: {exc}", file=sys.stderr)
        return 2
    if result.steps != last_written:
        write_snap(result.steps, result.field, result.t)
    write_diagnostics_csv(out / "diagnostics.csv", result.diagnostics)
    if result.failed:
        print(f"positivity abort at t={result.t:.6e}: {result.failure_message}",
              file=sys.stderr)
        return 2
    print(f"{spec.name}: {result.steps} steps to t={result.t:.6e}, "
          f"outputs in {out}")
    return 0


def _n_workers(n_jobs: int) -> int:
    env = os.environ.get("MHDPP_THREADS")
    cap = int(env) if env else 1
    return max(1, min(cap, n_jobs))


def cmd_convergence(args) -> int:
    cfg = build_run_config(args)
    spec = _resolve_problem(cfg)
    if spec.exact_primitive is None:
        print(f"problem {spec.name!r} has no exact solution", file=sys.stderr)
        return 1
    cell_list = [int(c) for c in args.cells.split(",")]
    t_end = cfg.t_end if cfg.t_end is not None else spec.t_end
    solver = _solver_config(cfg, spec)

    def run_one(m):
        mesh_obj, field = bench.setup_run(spec, m, solver)
        result = scheme.ssp_rk3_advance(field, mesh_obj, solver, t_end)
        if result.failed:
            raise PositivityError(result.failure_message)
        return bench.error_norms(result.field, spec, mesh_obj, t_end)

    workers = _n_workers(len(cell_list))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run_one, cell_list))
    else:
        reports = [run_one(m) for m in cell_list]
    orders = bench.convergence_orders(reports)

    comps = ["rho", "mx", "my", "mz", "Bx", "By", "Bz", "E"]
    print(f"{'cells':>7} {'L1[rho]':>13} {'order':>7} {'L1[E]':>13} {'order':>7}")
    for i, rep in enumerate(reports):
        o_rho = f"{orders[i - 1, 0]:7.3f}" if i else "      -"
        o_e = f"{orders[i - 1, 7]:7.3f}" if i else "      -"
        print(f"{rep.n_cells:>7} {rep.l1[0]:13.5e} {o_rho} {rep.l1[7]:13.5e} {o_e}")

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "convergence.csv", "w") as fh:
        fh.write("cells," + ",".join(f"l1_{c}" for c in comps)
                 + "," + ",".join(f"order_{c}" for c in comps) + "\n")
        for i, rep in enumerate(reports):
            row = [str(rep.n_cells)] + [_fmt(v) for v in rep.l1]
            row += [_fmt(orders[i - 1, c]) if i else "nan" for c in range(8)]
            fh.write(",".join(row) + "\n")
    return 0


def cmd_verify(args) -> int:
    results = ppcheck.verify_suite(seed=args.seed, trials=args.trials)
    print(ppcheck.format_report(results))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        ppcheck.write_report_csv(results, args.out)
    return 0 if all(r.passed for r in results) else 1


def _add_run_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="sectioned key = value config file")
    p.add_argument("--problem", default=None)
    p.add_argument("--cells", default=None, help="M (1D) or NXxNY (2D)")
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--mach", type=float, default=None)
    p.add_argument("--b-a", dest="b_a", type=float, default=None)
    p.add_argument("--k", type=int, default=None, choices=(0, 1, 2))
    p.add_argument("--flux", default=None, choices=("hll", "local_lf", "global_lf"))
    p.add_argument("--penalty", default=None, type=lambda s: _BOOLS[s.lower()])
    p.add_argument("--cfl-mode", dest="cfl_mode", default=None,
                   choices=("proven", "practical"))
    p.add_argument("--cfl", type=float, default=None)
    p.add_argument("--pp-limiter", dest="pp_limiter", default=None,
                   type=lambda s: _BOOLS[s.lower()])
    p.add_argument("--oscillation-limiter", dest="oscillation_limiter",
                   default=None, choices=("tvb", "off"))
    p.add_argument("--tvb-m", dest="tvb_m", type=float, default=None)
    p.add_argument("--tvb-mode", dest="tvb_mode", default=None,
                   choices=("char", "component"))
    p.add_argument("--out", dest="out_dir", default=None)
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int, default=None)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mhdpp",
                                     description="positivity-preserving ideal-MHD solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a benchmark problem")
    _add_run_config_flags(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_conv = sub.add_parser("convergence", help="mesh-refinement error study")
    _add_run_config_flags(p_conv)
    p_conv.set_defaults(fn=cmd_convergence, conv_cells=None)

    p_ver = sub.add_parser("verify", help="randomized theory checks")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--trials", type=int, default=10_000)
    p_ver.add_argument("--out", default=None, help="CSV report path")
    p_ver.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
