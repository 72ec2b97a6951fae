"""Command-line front end.

Subcommands wrap the library layers behind JSON configs and emit CSV
artifacts, SVG plots rendered from those CSVs, and a JSON manifest:

* ``solve-state``  equilibrium shape for one control and design
* ``program``      nested fixed-point optimization over target shapes
* ``attain``       closed-form attainability construction plus round trip
* ``bifurcate``    post-buckling branch table and profiles
* ``check``        resonance audit of a finished program run
* ``sweep``        attainment error as both penalties shrink together

Exit codes: 0 success, 1 configuration error (nothing written), 2 solver
failure, 3 loss of contraction or iteration budget (partial outputs kept).
A manifest is written for every run that passes configuration validation,
including failed ones.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from ._svg import line_plot_svg
from .analysis import (
    attainable_design,
    bifurcation_profile,
    bifurcation_tip,
    epsilon_sweep,
    regularity_check,
)
from .errors import ConfigError, MagelasticaError
from .grid import (
    Grid,
    ScalarField,
    read_field_csv,
    second_derivative_interior,
    sup_norm,
    write_field_csv,
)
from .magnetics import Control, ControlSet, curve, solve_state, state_residual
from .presets import preset_field
from .programming import ProblemSpec, attainment_error, outer_loop

_DEFAULT_GRID = 400


# ---------------------------------------------------------------------------
# config loading and validation


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _require_keys(cfg: dict, command: str, required: dict, optional: dict) -> dict:
    out = {}
    for key in cfg:
        if key not in required and key not in optional:
            raise ConfigError(f"unknown config key {key!r} for command {command!r}")
    for key, checker in required.items():
        if key not in cfg:
            raise ConfigError(f"command {command!r} requires config key {key!r}")
        out[key] = checker(key, cfg[key])
    for key, checker in optional.items():
        if key in cfg:
            out[key] = checker(key, cfg[key])
    return out


def _as_number(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number")
    return float(v)


def _as_positive(key, v):
    x = _as_number(key, v)
    if x <= 0:
        raise ConfigError(f"config key {key!r} must be positive")
    return x


def _as_int(key, v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"config key {key!r} must be an integer")
    return v


def _as_pair(key, v):
    if (
        not isinstance(v, list)
        or len(v) != 2
        or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)
    ):
        raise ConfigError(f"config key {key!r} must be a pair of numbers")
    return [float(v[0]), float(v[1])]


def _as_pair_list(key, v):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"config key {key!r} must be a non-empty list of pairs")
    return [_as_pair(key, item) for item in v]


def _as_field_spec(key, v):
    if isinstance(v, str):
        return {"preset": v}
    if isinstance(v, dict) and set(v) == {"csv"} and isinstance(v["csv"], str):
        return {"csv": v["csv"]}
    raise ConfigError(
        f"config key {key!r} must be a preset name or {{'csv': path}}"
    )


def _as_field_list(key, v):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"config key {key!r} must be a non-empty list")
    return [_as_field_spec(key, item) for item in v]


def _as_number_list(key, v):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"config key {key!r} must be a non-empty list of numbers")
    return [_as_number(key, x) for x in v]


def _as_string(key, v):
    if not isinstance(v, str):
        raise ConfigError(f"config key {key!r} must be a string")
    return v


def _resolve_field(spec_dict, grid, role="target"):
    if "preset" in spec_dict:
        return preset_field(grid, spec_dict["preset"], role)
    field = read_field_csv(spec_dict["csv"], role)
    if field.grid != grid:
        raise ConfigError(
            f"field file {spec_dict['csv']} is on a {field.grid.n_cells}-cell grid, "
            f"expected {grid.n_cells}"
        )
    return field


# ---------------------------------------------------------------------------
# output helpers


class RunContext:
    """Output directory plus manifest accumulation for one run."""

    def __init__(self, command, config, out_dir, grid_cells, quiet):
        self.command = command
        self.config = config
        self.out_dir = out_dir
        self.quiet = quiet
        self.t0 = time.monotonic()
        self.manifest = {
            "command": command,
            "version": __version__,
            "config": config,
            "grid": grid_cells,
            "status": "ok",
            "outputs": [],
            "timings": {},
            "error": None,
        }
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def register(self, name):
        if name not in self.manifest["outputs"]:
            self.manifest["outputs"].append(name)

    def write_field(self, name, field):
        write_field_csv(field, self.path(name))
        self.register(name)

    def write_json(self, name, payload):
        _atomic_json(self.path(name), payload)
        self.register(name)

    def write_curve_csv(self, name, pts, grid):
        with open(self.path(name), "w") as fh:
            fh.write("s,x,y\n")
            for s, (x, y) in zip(grid.nodes, pts):
                fh.write(f"{s:.17g},{x:.17g},{y:.17g}\n")
        self.register(name)

    def info(self, msg):
        if not self.quiet:
            print(msg)

    def finish(self, status, error=None):
        self.manifest["status"] = status
        self.manifest["error"] = error
        self.manifest["timings"]["total_s"] = round(time.monotonic() - self.t0, 6)
        _atomic_json(self.path("manifest.json"), self.manifest)


def _atomic_json(path, payload):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(_sanitize(payload), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    os.replace(tmp, path)


def _sanitize(obj):
    """Strict-JSON form: numpy scalars unboxed, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if hasattr(obj, "to_dict"):
        return _sanitize(obj.to_dict())
    return obj


def _read_curve_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return data[:, 1], data[:, 2]


def _curve_overlay_svg(ctx, svg_name, csv_names, labels):
    series = []
    for name, label in zip(csv_names, labels):
        x, y = _read_curve_csv(ctx.path(name))
        series.append((x, y, label))
    line_plot_svg(
        ctx.path(svg_name), series, title="beam centerline", xlabel="x", ylabel="y",
        equal_axes=True,
    )
    ctx.register(svg_name)


# ---------------------------------------------------------------------------
# commands


def _cmd_solve_state(ctx, cfg, grid):
    parsed = _require_keys(
        cfg,
        "solve-state",
        required={"h": _as_pair},
        optional={"alpha": _as_field_spec, "ell": _as_positive, "grid": _as_int},
    )
    control = Control(*parsed["h"])
    alpha_spec = parsed.get("alpha", {"preset": "zero"})
    alpha = _resolve_field(alpha_spec, grid, role="design")
    ell = parsed.get("ell", 1.0)

    theta = solve_state(control, alpha)
    ctx.write_field("theta.csv", theta)
    pts = curve(theta, ell)
    ctx.write_curve_csv("curve.csv", pts, grid)
    _curve_overlay_svg(ctx, "curve.svg", ["curve.csv"], ["attained"])
    ctx.manifest["residual"] = state_residual(theta, alpha, control)
    ctx.info(f"solved state; tip rotation {theta.values[-1]:.6g}")
    return 0


def _spec_from_config(parsed, targets):
    kwargs = {}
    for key in ("cap", "inner_tol", "outer_tol"):
        if key in parsed:
            kwargs[key] = parsed[key]
    for key in ("inner_max", "outer_max"):
        if key in parsed:
            kwargs[key] = parsed[key]
    return ProblemSpec(
        targets=targets,
        epsilon=parsed["epsilon"],
        gamma=parsed["gamma"],
        **kwargs,
    )


def _cmd_program(ctx, cfg, grid):
    parsed = _require_keys(
        cfg,
        "program",
        required={
            "targets": _as_field_list,
            "epsilon": _as_positive,
            "gamma": _as_positive,
        },
        optional={
            "cap": _as_positive,
            "inner_tol": _as_positive,
            "outer_tol": _as_positive,
            "inner_max": _as_int,
            "outer_max": _as_int,
            "ell": _as_positive,
            "grid": _as_int,
            "alpha_init": _as_field_spec,
            "h_init": _as_pair_list,
        },
    )
    targets = tuple(_resolve_field(s, grid) for s in parsed["targets"])
    spec = _spec_from_config(parsed, targets)
    ell = parsed.get("ell", 1.0)
    alpha_init = None
    if "alpha_init" in parsed:
        alpha_init = _resolve_field(parsed["alpha_init"], grid, role="design")
    h_init = None
    if "h_init" in parsed:
        if len(parsed["h_init"]) != len(targets):
            raise ConfigError("h_init needs one [hx, hy] pair per target")
        h_init = ControlSet.from_array(np.asarray(parsed["h_init"]))

    state, report = outer_loop(spec, alpha_init=alpha_init, h_init=h_init)

    ctx.write_field("alpha.csv", state.alpha)
    with open(ctx.path("controls.csv"), "w") as fh:
        fh.write("i,hx,hy\n")
        for i, c in enumerate(state.controls):
            fh.write(f"{i},{c.hx:.17g},{c.hy:.17g}\n")
    ctx.register("controls.csv")
    for i, (theta, target) in enumerate(zip(state.thetas, spec.targets)):
        ctx.write_field(f"theta_{i}.csv", theta)
        ctx.write_curve_csv(f"curve_attained_{i}.csv", curve(theta, ell), grid)
        ctx.write_curve_csv(f"curve_target_{i}.csv", curve(target.retag("generic"), ell), grid)
        _curve_overlay_svg(
            ctx,
            f"overlay_{i}.svg",
            [f"curve_attained_{i}.csv", f"curve_target_{i}.csv"],
            ["attained", "target"],
        )
    ctx.write_json("report.json", report.to_dict())
    ctx.manifest["audit"] = [b.to_dict() for b in report.bounds]
    ctx.manifest["solver_status"] = report.status
    ctx.info(
        f"status {report.status}: outer {report.outer_iterations}, "
        f"inner {report.inner_iterations}, cost {report.cost:.6e}"
    )
    if report.status == "converged":
        return 0
    return 3


def _cmd_attain(ctx, cfg, grid):
    parsed = _require_keys(
        cfg,
        "attain",
        required={"target": _as_field_spec},
        optional={
            "H": _as_positive,
            "H_factor": _as_positive,
            "ell": _as_positive,
            "grid": _as_int,
        },
    )
    if ("H" in parsed) == ("H_factor" in parsed):
        raise ConfigError("attain needs exactly one of 'H' or 'H_factor'")
    target = _resolve_field(parsed["target"], grid)
    ell = parsed.get("ell", 1.0)

    if "H" in parsed:
        intensity = parsed["H"]
    else:
        intensity = parsed["H_factor"] * sup_norm(second_derivative_interior(target))

    control, alpha = attainable_design(target, intensity)
    theta = solve_state(control, alpha, initial=ScalarField(grid, target.values - target.values[0]))
    err = attainment_error(ControlSet([control]), alpha, (target,))

    ctx.write_field("alpha_bar.csv", alpha)
    with open(ctx.path("control.csv"), "w") as fh:
        fh.write("i,hx,hy\n")
        fh.write(f"0,{control.hx:.17g},{control.hy:.17g}\n")
    ctx.register("control.csv")
    ctx.write_field("theta_roundtrip.csv", theta)
    ctx.write_curve_csv("curve_attained.csv", curve(theta, ell), grid)
    ctx.write_curve_csv("curve_target.csv", curve(target.retag("generic"), ell), grid)
    _curve_overlay_svg(
        ctx,
        "overlay.svg",
        ["curve_attained.csv", "curve_target.csv"],
        ["attained", "target"],
    )
    ctx.manifest["intensity"] = intensity
    ctx.manifest["state_residual"] = state_residual(target.retag("generic"), alpha, control)
    ctx.manifest["attainment_error"] = err
    ctx.info(f"attainable pair built at H = {intensity:.6g}; round-trip error {err:.3e}")
    return 0


def _cmd_bifurcate(ctx, cfg, grid):
    parsed = _require_keys(
        cfg,
        "bifurcate",
        required={"H_min": _as_positive, "H_max": _as_positive, "H_step": _as_positive},
        optional={"profile_at": _as_number_list, "grid": _as_int},
    )
    h_lo, h_hi, h_step = parsed["H_min"], parsed["H_max"], parsed["H_step"]
    if h_hi < h_lo:
        raise ConfigError("H_max must be at least H_min")

    rows = []
    h = h_lo
    while h <= h_hi + 1e-12:
        try:
            rows.append((h, bifurcation_tip(h)))
        except MagelasticaError:
            rows.append((h, float("nan")))
        h += h_step
    with open(ctx.path("branch.csv"), "w") as fh:
        fh.write("H,theta1\n")
        for hv, t1 in rows:
            fh.write(f"{hv:.17g},{t1:.17g}\n")
    ctx.register("branch.csv")

    data = np.loadtxt(ctx.path("branch.csv"), delimiter=",", skiprows=1, ndmin=2)
    mask = np.isfinite(data[:, 1])
    if np.any(mask):
        line_plot_svg(
            ctx.path("branch.svg"),
            [(data[mask, 0], data[mask, 1], "tip rotation")],
            title="post-buckling branch",
            xlabel="H",
            ylabel="theta(1)",
        )
        ctx.register("branch.svg")

    for hv in parsed.get("profile_at", []):
        point = bifurcation_profile(hv, grid)
        name = f"profile_H{hv:g}.csv"
        ctx.write_field(name, point.profile)
        pdata = np.loadtxt(ctx.path(name), delimiter=",", skiprows=1)
        line_plot_svg(
            ctx.path(f"profile_H{hv:g}.svg"),
            [(pdata[:, 0], pdata[:, 1], f"H={hv:g}")],
            title="buckled profile",
            xlabel="s",
            ylabel="theta",
        )
        ctx.register(f"profile_H{hv:g}.svg")
    ctx.info(f"branch table with {len(rows)} rows")
    return 0


def _cmd_check(ctx, cfg, grid):
    parsed = _require_keys(
        cfg,
        "check",
        required={"run_dir": _as_string},
        optional={"k": _as_int, "grid": _as_int},
    )
    run_dir = parsed["run_dir"]
    k = parsed.get("k", 8)
    alpha_path = os.path.join(run_dir, "alpha.csv")
    controls_path = os.path.join(run_dir, "controls.csv")
    if not os.path.exists(alpha_path) or not os.path.exists(controls_path):
        raise ConfigError(f"{run_dir} does not look like a program output directory")

    alpha = read_field_csv(alpha_path, "design")
    raw = np.loadtxt(controls_path, delimiter=",", skiprows=1, ndmin=2)
    results = []
    for row in raw:
        i = int(row[0])
        control = Control(row[1], row[2])
        theta = read_field_csv(os.path.join(run_dir, f"theta_{i}.csv"), "shape")
        rep = regularity_check(control, alpha, theta, k=k)
        results.append(
            {
                "i": i,
                "verdict": rep.verdict,
                "dist_to_one": rep.dist_to_one,
                "sufficient_condition": rep.sufficient_condition,
                "eigenvalues": rep.spectrum.eigenvalues.tolist(),
            }
        )
    ctx.write_json("regularity.json", {"results": results})
    verdicts = {r["verdict"] for r in results}
    ctx.manifest["verdicts"] = sorted(verdicts)
    ctx.info(f"checked {len(results)} controls: verdicts {sorted(verdicts)}")
    return 0


def _cmd_sweep(ctx, cfg, grid):
    parsed = _require_keys(
        cfg,
        "sweep",
        required={"target": _as_field_spec, "epsilons": _as_number_list},
        optional={
            "cap": _as_positive,
            "inner_tol": _as_positive,
            "outer_tol": _as_positive,
            "inner_max": _as_int,
            "outer_max": _as_int,
            "grid": _as_int,
        },
    )
    target = _resolve_field(parsed["target"], grid)
    kwargs = {k: parsed[k] for k in ("cap", "inner_tol", "outer_tol", "inner_max", "outer_max") if k in parsed}
    rows = epsilon_sweep(target, parsed["epsilons"], **kwargs)

    with open(ctx.path("sweep.csv"), "w") as fh:
        fh.write("epsilon,cost,attainment_error,status\n")
        for r in rows:
            fh.write(
                f"{r.epsilon:.17g},{r.cost:.17g},{r.attainment_error:.17g},{r.status}\n"
            )
    ctx.register("sweep.csv")
    ctx.manifest["rows"] = [r.to_dict() for r in rows]

    ok = [r for r in rows if np.isfinite(r.attainment_error)]
    if ok:
        line_plot_svg(
            ctx.path("sweep.svg"),
            [(
                np.array([r.epsilon for r in ok]),
                np.array([r.attainment_error for r in ok]),
                "attainment error",
            )],
            title="penalty sweep",
            xlabel="epsilon",
            ylabel="error",
        )
        ctx.register("sweep.svg")
    ctx.info(f"swept {len(rows)} penalty values")
    if any(r.contraction_lost for r in rows):
        return 3
    return 0


_COMMANDS = {
    "solve-state": _cmd_solve_state,
    "program": _cmd_program,
    "attain": _cmd_attain,
    "bifurcate": _cmd_bifurcate,
    "check": _cmd_check,
    "sweep": _cmd_sweep,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(prog="magelastica", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--grid", type=int, default=None, help="grid cell count")
        p.add_argument("--out", default="magelastica_out", help="output directory")
        p.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = _load_config(args.config)
        grid_cells = args.grid if args.grid is not None else cfg.get("grid", _DEFAULT_GRID)
        if not isinstance(grid_cells, int) or grid_cells < 4:
            raise ConfigError("grid must be an integer of at least 4 cells")
        grid = Grid(grid_cells)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    ctx = RunContext(args.command, cfg, args.out, grid.n_cells, args.quiet)
    try:
        code = _COMMANDS[args.command](ctx, cfg, grid)
    except (ConfigError, ValueError) as exc:
        # library-level validation failures are configuration errors too
        ctx.finish("config-error", str(exc))
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except MagelasticaError as exc:
        ctx.finish("solver-error", str(exc))
        print(f"solver error: {exc}", file=sys.stderr)
        return 2
    ctx.finish("ok" if code == 0 else "incomplete")
    return code


if __name__ == "__main__":
    sys.exit(main())
