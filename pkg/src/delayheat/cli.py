"""Experiment runner: config-driven subcommands writing CSV traces and reports.

Subcommands
    simulate   solve with the chosen solver and dump coefficient + grid traces
    figure6    lattice-derivative panels for point-mass data, plus a plot script
    validate   run a named verification suite, exit 0 only if every check passes
    diagnose   endpoint compatibility report and lattice jump table

Configuration is a flat "key = value" file with sections; every option can be
overridden on the command line as ``--section.key value``.  The environment
variable DELAY_HEAT_OUT overrides the output directory.  Exit codes: 0 success,
1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io as dio
from .basis import EigenBasis, SpectralField, dirac_coeffs, project
from .diagnostics import compatibility_check, endpoint_jump_scan, lattice_jump_report
from .errors import InvalidArgumentError, UnsupportedConfigurationError
from .flow import (ExpModeHistory, FlowParams, GridHistory, ZeroHistory, compatible_history,
                   picard_solve, solve_trace)
from .refsolvers import MeshParams, ModeDDEConfig, hybrid_simulate, rk4_dde_mode
from .validate import SUITE_NAMES, figure_panels, run_suite

DEFAULT_CONFIG = {
    "model": {"length": "1.0", "modes": "60", "tau": "1.0", "coupling": "1.0", "j_max": "128"},
    "initial": {"kind": "dirac", "x0": "0.3", "modes": "1.0", "poly": "0.0 1.0 -1.0"},
    "history": {"kind": "zero", "rate": "-1.0", "profile": "1.0", "file": "", "interp_order": "1"},
    "run": {"solver": "closed-form", "times": "0.0 0.5 1.0 1.5 2.0 2.5",
            "out_dir": "out", "nx": "300"},
    "picard": {"n_iter": "12", "dt": "0.015625"},
    "hybrid": {"nx": "400", "ns": "400", "dt": "0.00125", "z_dump_times": ""},
    "rk4": {"dt": "0.001"},
}


def load_config(path: str | None, overrides: list[tuple[str, str]]) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    cfg.read_dict(DEFAULT_CONFIG)
    if path:
        if not Path(path).is_file():
            raise InvalidArgumentError(f"config file not found: {path}")
        cfg.read(path)
    for key, value in overrides:
        if "." not in key:
            raise InvalidArgumentError(f"override {key!r} must look like section.key")
        section, option = key.split(".", 1)
        if not cfg.has_section(section):
            cfg.add_section(section)
        cfg.set(section, option, value)
    return cfg


def _floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise InvalidArgumentError(f"cannot parse float list from {text!r}") from exc


def build_model(cfg) -> tuple[EigenBasis, FlowParams]:
    m = cfg["model"]
    basis = EigenBasis(m.getfloat("length"), m.getint("modes"))
    params = FlowParams(a=m.getfloat("coupling"), tau=m.getfloat("tau"), j_max=m.getint("j_max"))
    return basis, params


def build_initial(cfg, basis: EigenBasis) -> SpectralField:
    sec = cfg["initial"]
    kind = sec.get("kind")
    if kind == "dirac":
        return dirac_coeffs(sec.getfloat("x0"), basis)
    if kind == "modes":
        return SpectralField.from_modes(basis, _floats(sec.get("modes")))
    if kind == "polynomial":
        coefs = _floats(sec.get("poly"))

        def poly(x):
            return sum(c * x**p for p, c in enumerate(coefs))

        return project(poly, basis)
    raise InvalidArgumentError(f"unknown initial kind {kind!r}")


def build_history(cfg, basis: EigenBasis, params: FlowParams, y0: SpectralField):
    sec = cfg["history"]
    kind = sec.get("kind")
    if kind == "zero":
        return ZeroHistory(basis)
    if kind == "constant":
        return ExpModeHistory(SpectralField.from_modes(basis, _floats(sec.get("profile"))), 0.0)
    if kind == "exp":
        return ExpModeHistory(SpectralField.from_modes(basis, _floats(sec.get("profile"))),
                              sec.getfloat("rate"))
    if kind == "compatible":
        return compatible_history(y0, params)
    if kind == "grid":
        path = sec.get("file")
        if not path:
            raise InvalidArgumentError("history kind 'grid' needs history.file")
        times, rows = dio.read_grid_history_csv(path, basis)
        return GridHistory(times, rows, basis, sec.getint("interp_order"))
    raise InvalidArgumentError(f"unknown history kind {kind!r}")


def _grid_history_fn(phi, basis: EigenBasis, xs: np.ndarray):
    if isinstance(phi, ZeroHistory):
        return None
    emat = basis.eval_matrix(xs)
    return lambda gamma: emat @ phi.coeffs(gamma)


def _nearest_rows(trace_times: np.ndarray, coeff_rows: np.ndarray, wanted: list[float]):
    idx = [int(np.argmin(np.abs(trace_times - t))) for t in wanted]
    return trace_times[idx], coeff_rows[idx]


def _project_grid_rows(values: np.ndarray, xs: np.ndarray, basis: EigenBasis) -> np.ndarray:
    # trapezoid projection of nodal values onto the sine modes
    w = np.full(len(xs), xs[1] - xs[0])
    w[0] = w[-1] = (xs[1] - xs[0]) / 2.0
    return values @ (w[:, None] * basis.eval_matrix(xs))


class Manifest:
    def __init__(self, command: str, cfg):
        self.data = {
            "command": command,
            "config": {s: dict(cfg[s]) for s in cfg.sections()},
            "versions": {
                "delayheat": _package_version(),
                "python": platform.python_version(),
                "numpy": np.__version__,
            },
            "outputs": [],
        }
        self._t0 = time.perf_counter()

    def add(self, path: Path, rows: int):
        self.data["outputs"].append({"file": path.name, "rows": rows})

    def write(self, out_dir: Path) -> Path:
        self.data["wall_seconds"] = round(time.perf_counter() - self._t0, 6)
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        return path


def _package_version() -> str:
    try:
        return metadata.version("delayheat")
    except metadata.PackageNotFoundError:
        return "0.1.0"


def _out_dir(cfg, args) -> Path:
    out = os.environ.get("DELAY_HEAT_OUT") or cfg["run"].get("out_dir")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg, args) -> int:
    basis, params = build_model(cfg)
    y0 = build_initial(cfg, basis)
    phi = build_history(cfg, basis, params, y0)
    times = sorted(_floats(cfg["run"].get("times")))
    if not times:
        raise InvalidArgumentError("run.times must name at least one instant")
    solver = cfg["run"].get("solver")
    nx = cfg["run"].getint("nx")
    out = _out_dir(cfg, args)
    manifest = Manifest("simulate", cfg)

    if solver == "closed-form":
        trace = solve_trace(y0, phi, times, params)
        out_times, rows = trace.times, trace.coeffs
    elif solver == "picard":
        T = max(max(times), params.tau)
        trace = picard_solve(y0, phi, T, cfg["picard"].getint("n_iter"),
                             cfg["picard"].getfloat("dt"), params)
        out_times, rows = _nearest_rows(trace.times, trace.coeffs, times)
    elif solver == "rk4-modes":
        dt = cfg["rk4"].getfloat("dt")
        T = max(max(times), params.tau)
        lams = basis.eigenvalues()
        per_mode = []
        for k in range(basis.K):
            hist_k = (None if isinstance(phi, ZeroHistory)
                      else (lambda g, k=k: float(phi.coeffs(min(g, 0.0))[k])))
            mode_cfg = ModeDDEConfig(lam=float(lams[k]), a=params.a, tau=params.tau,
                                     dt=dt, y0=float(y0.coeffs[k]), history=hist_k)
            per_mode.append(rk4_dde_mode(mode_cfg, T))
        grid_times = per_mode[0].times
        coeff_rows = np.stack([tr.values for tr in per_mode], axis=1)
        out_times, rows = _nearest_rows(grid_times, coeff_rows, times)
    elif solver == "hybrid":
        hsec = cfg["hybrid"]
        mesh = MeshParams(hsec.getint("nx"), hsec.getint("ns"), hsec.getfloat("dt"))
        xs_h = np.linspace(0.0, basis.L, mesh.nx + 1)
        y0_grid = basis.eval_matrix(xs_h) @ y0.coeffs
        T = max(max(times), params.tau)
        z_times = tuple(_floats(hsec.get("z_dump_times", "")))
        trace = hybrid_simulate(y0_grid, _grid_history_fn(phi, basis, xs_h), mesh, T,
                                params.a, params.tau, basis.L, z_sample_times=z_times)
        for t_snap, z in sorted(trace.z_snapshots.items()):
            z_path = out / f"transport_t{t_snap:g}.csv"
            manifest.add(z_path, dio.write_transport_dump_csv(t_snap, trace.s, xs_h, z, z_path))
        out_times, values = _nearest_rows(trace.times, trace.values, times)
        rows = _project_grid_rows(values, xs_h, basis)
    else:
        raise InvalidArgumentError(f"unknown solver {solver!r}")

    out_times = np.asarray(out_times, dtype=float)
    if len(np.unique(out_times)) != len(out_times):
        raise InvalidArgumentError("requested instants collapse onto the same solver samples")
    coeff_path = out / "trace_coeffs.csv"
    manifest.add(coeff_path, dio.write_coeff_trace_csv(out_times, rows, coeff_path))
    xs = basis.mesh(nx)
    grid_vals = rows @ basis.eval_matrix(xs).T
    grid_path = out / "trace_grid.csv"
    manifest.add(grid_path, dio.write_grid_trace_csv(out_times, xs, grid_vals, grid_path))
    manifest.write(out)
    print(f"wrote {coeff_path} and {grid_path}")
    return 0


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Render the derivative panels from figure6_data.csv (one subplot per instant).\"\"\"
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

panels = defaultdict(list)
with open("figure6_data.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        panels[float(row["t"])].append((float(row["x"]), float(row["value"])))

times = sorted(panels)
fig, axes = plt.subplots(2, (len(times) + 1) // 2, figsize=(4 * ((len(times) + 1) // 2), 6))
for ax, t in zip(axes.ravel(), times):
    xy = sorted(panels[t])
    ax.plot([p[0] for p in xy], [p[1] for p in xy], color="tab:blue")
    ax.set_title(f"t = {t:g}")
    ax.set_xlabel("x")
fig.tight_layout()
fig.savefig("figure6.png", dpi=150)
print("wrote figure6.png")
"""


def cmd_figure6(cfg, args) -> int:
    basis, params = build_model(cfg)
    if cfg["initial"].get("kind") != "dirac":
        raise UnsupportedConfigurationError("figure6 needs point-mass initial data (initial.kind = dirac)")
    if cfg["history"].get("kind") != "zero":
        raise UnsupportedConfigurationError("figure6 is defined for zero history only")
    times = sorted(_floats(cfg["run"].get("times")))
    out = _out_dir(cfg, args)
    manifest = Manifest("figure6", cfg)
    xs, panels = figure_panels(times, cfg["initial"].getfloat("x0"), basis.K,
                               cfg["run"].getint("nx"), basis.L, params)
    data_path = out / "figure6_data.csv"
    values = np.stack([panels[t] for t in times])
    manifest.add(data_path, dio.write_grid_trace_csv(np.asarray(times), xs, values, data_path))
    script_path = out / "plot_figure6.py"
    script_path.write_text(_PLOT_SCRIPT)
    manifest.add(script_path, len(_PLOT_SCRIPT.splitlines()))
    manifest.write(out)
    print(f"wrote {data_path} and {script_path}")
    return 0


def cmd_validate(cfg, args) -> int:
    try:
        results = run_suite(args.suite)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = _out_dir(cfg, args)
    manifest = Manifest("validate", cfg)
    lines = []
    for res in results:
        for row in res.rows:
            status = "PASS" if row.passed else "FAIL"
            print(f"[{status}] {res.suite} :: {row.name} (value={row.value:.6g}, "
                  f"threshold={row.threshold:.6g}) {row.detail}")
            lines.append((res.suite, row.name, status, row.value, row.threshold, row.detail))
    table_path = out / "validate_results.csv"
    n = dio._write_rows(table_path, ["suite", "check", "status", "value", "threshold", "detail"],
                        ((s, c, st, v, th, d) for s, c, st, v, th, d in lines))
    manifest.add(table_path, n)
    manifest.write(out)
    ok = all(res.passed for res in results)
    print("all checks passed" if ok else "some checks FAILED")
    return 0 if ok else 1


def cmd_diagnose(cfg, args) -> int:
    basis, params = build_model(cfg)
    y0 = build_initial(cfg, basis)
    phi = build_history(cfg, basis, params, y0)
    out = _out_dir(cfg, args)
    manifest = Manifest("diagnose", cfg)
    report = compatibility_check(y0, phi, params, r=args.order)
    kv = {
        "r": report.r,
        "flag_endpoint_regularity": report.flag_endpoint_regularity,
        "flag_g_regularity": report.flag_g_regularity,
        "flag_matching": report.flag_matching,
        "tol": report.tol,
    }
    for k, v in enumerate(report.violations):
        kv[f"violation_{k}"] = float(v)
    compat_path = out / "compatibility.txt"
    manifest.add(compat_path, dio.write_keyvalue(kv, compat_path))
    jump_path = out / "jump_table.csv"
    rows = lattice_jump_report(y0, params, j_max=max(4, args.order))
    manifest.add(jump_path, dio.write_jump_table_csv(rows, jump_path))
    if not isinstance(phi, ZeroHistory):
        scan = endpoint_jump_scan(y0, phi, params, r=args.order)
        scan_path = out / "endpoint_jumps.csv"
        n = dio._write_rows(scan_path,
                            ["t", "order", "mode", "left", "right", "gap", "rel_gap"],
                            ((r.t_label, str(r.order), str(r.mode), r.left, r.right,
                              r.gap, r.rel_gap) for r in scan))
        manifest.add(scan_path, n)
    manifest.write(out)
    print(f"wrote {compat_path} and {jump_path}")
    return 0


# ---------------------------------------------------------------------------


def _parse(argv):
    parser = argparse.ArgumentParser(
        prog="delay-heat",
        description="Delayed heat equation: solvers, experiments and verification suites.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "figure6", "diagnose"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key = value config file with sections")
        if name == "diagnose":
            p.add_argument("--order", type=int, default=1, help="compatibility order r")
    pv = sub.add_parser("validate")
    pv.add_argument("--config", default=None)
    pv.add_argument("--suite", default="all", help=f"one of {', '.join(SUITE_NAMES)}")
    args, extra = parser.parse_known_args(argv)
    overrides = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or i + 1 >= len(extra):
            raise InvalidArgumentError(f"cannot parse override {tok!r}; use --section.key value")
        overrides.append((tok[2:], extra[i + 1]))
        i += 2
    return args, overrides


_COMMANDS = {
    "simulate": cmd_simulate,
    "figure6": cmd_figure6,
    "validate": cmd_validate,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    try:
        args, overrides = _parse(argv if argv is not None else sys.argv[1:])
        cfg = load_config(args.config, overrides)
        return _COMMANDS[args.command](cfg, args)
    except (InvalidArgumentError, UnsupportedConfigurationError,
            configparser.Error, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        # argparse exits with 2 on bad usage
        return int(exc.code) if exc.code is not None else 2
    except Exception as exc:  # noqa: BLE001 - numerical failures map to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
