"""Command-line front end.

Units at this boundary are nm, us, zN and MHz; everything inside is SI.
Every command accepts ``--config FILE.json`` whose keys are the long option
names with dashes replaced by underscores; explicit flags win over the file.

Exit codes: 0 success, 1 computation or check failure, 2 usage error.
"""

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import jsonschema
import numpy as np

from . import dynamics, interferometer, overlap, phases, tdse, trajectory, verify
from .core import NM, US, ZN, IonIfoError, make_config
from .dynamics import Branch, PerturbationSpec

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 1}
_STR = {"type": "string"}
_BOOL = {"type": "boolean"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "mass_amu": _POS, "freq_mhz": _POS, "tf": _POS,
        "kind": {"enum": ["A", "B"]}, "M": _NUM, "S": _NUM,
        "v": {"anyOf": [_NUM, {"const": "opt"}]},
        "traj": _STR, "c": _NUM, "eps": _NUM, "x0": _NUM, "x0_auto": _BOOL,
        "scenario": {"enum": ["both", "one"]}, "engine": {"enum": list(interferometer.ENGINES)},
        "M_from": _NUM, "M_to": _NUM, "M_steps": _INT, "jobs": _INT,
        "table": _STR, "out": _STR, "out_dir": _STR, "quick": _BOOL,
        "grid_n": _INT, "steps": _INT, "log_every": {"type": "integer", "minimum": 0},
        "stride": _INT, "samples": _INT, "y0": _NUM, "p0": _NUM,
        "k_per_um": _POS, "x_max": _POS, "c_list": {"type": "array", "items": _NUM},
    },
}

DEFAULTS = {
    "mass_amu": 9.012182, "freq_mhz": 2.0, "tf": 0.5, "c": 0.0, "eps": 0.0, "x0": 0.0,
    "x0_auto": False, "scenario": "both", "engine": "analytic", "jobs": 1, "quick": False,
    "grid_n": tdse.DEFAULT_GRID_N, "steps": None, "log_every": 0, "stride": 100,
    "samples": 501, "y0": 0.0, "p0": 0.0, "k_per_um": 1.5, "x_max": 1000.0,
}


class UsageError(Exception):
    pass


def _settings(args) -> dict:
    """Merge defaults, the optional JSON config and explicit flags (highest priority)."""
    merged = dict(DEFAULTS)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise UsageError(f"invalid config: {exc.message}") from exc
        merged.update(data)
    for key, value in vars(args).items():
        if key in ("command", "config", "handler") or value is None:
            continue
        if isinstance(value, bool) and not value and key in merged:
            continue
        merged[key] = value
    return merged


def _config(s: dict, t_final_us: float | None = None):
    return make_config(s["mass_amu"], s["freq_mhz"], s["tf"] if t_final_us is None else t_final_us)


def _load_traj(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IonIfoError(f"cannot read trajectory {path}: {exc}") from exc
    return trajectory.PolynomialTrajectory.from_dict(data)


def _require(s: dict, *keys):
    missing = [k for k in keys if s.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k.replace("_", "-")
                                                                    for k in missing))


def _perturbation(s: dict, cfg) -> PerturbationSpec:
    c = s["c"] * ZN
    if s["x0_auto"]:
        x0 = phases.null_crossing_point(cfg, c)
    else:
        x0 = s["x0"] * NM
    return PerturbationSpec(c=c, epsilon=s["eps"] * ZN, x0=x0)


def _emit(s: dict, text: str):
    if s.get("out"):
        Path(s["out"]).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# --- commands ------------------------------------------------------------------

def cmd_design(s: dict) -> int:
    _require(s, "kind")
    cfg = _config(s)
    if s["kind"] == "A":
        if s.get("M") is not None:
            traj = trajectory.design_alpha_A(cfg, s["M"] * NM)
        elif s.get("S") is not None:
            unit = trajectory.sensitivity(trajectory.design_alpha_A(cfg, 1.0))
            traj = trajectory.design_alpha_A(cfg, s["S"] * NM * US / unit)
        else:
            raise UsageError("kind A needs --M or --S")
    else:
        _require(s, "S", "v")
        target = s["S"] * NM * US
        v = s["v"]
        if v == "opt":
            v_m = trajectory.optimize_v(cfg, target, (40 * NM, 110 * NM))
        else:
            try:
                v_m = float(v) * NM
            except ValueError:
                raise UsageError("--v takes a length in nm or 'opt'") from None
        traj = trajectory.design_alpha_B(cfg, target, v_m)
    out = s.get("out") or "trajectory.json"
    Path(out).write_text(_json(traj.to_dict()))
    print(f"S = {trajectory.sensitivity(traj) / (NM * US):.6g} nm*us, "
          f"cubic metric = {trajectory.cubic_metric(traj) / (NM**3 * US):.6g} nm^3*us -> {out}")
    return 0


def cmd_phase(s: dict) -> int:
    _require(s, "traj")
    traj = _load_traj(s["traj"])
    cfg = _config(s, traj.t_final / US)
    pert = _perturbation(s, cfg)
    exp = interferometer.ExperimentSpec(cfg, traj, pert, s["scenario"])
    row = interferometer.predict(exp)
    doc = {"scenario": s["scenario"], "c_zN": pert.c / ZN, "eps_zN": pert.epsilon / ZN,
           "x0_nm": pert.x0 / NM, "sensitivity_nm_us": row.sensitivity / (NM * US),
           "delta_phi": row.delta_phi, "p_up": row.p_up, "p_down": row.p_down}
    if s["scenario"] == "both":
        if pert.epsilon == 0:
            doc["phases"] = phases.dynamical_geometric_split(cfg, traj, pert).to_dict()
        else:
            doc["phases"] = {"g_up": phases.branch_G(cfg, traj, pert, Branch.UP),
                             "g_down": phases.branch_G(cfg, traj, pert, Branch.DOWN)}
    else:
        doc["phases"] = {"g_up": phases.branch_G(cfg, traj, pert, Branch.UP, "one"),
                         "g_down": phases.branch_G(cfg, traj, pert, Branch.DOWN, "one")}
    value = row.modulus * complex(math.cos(row.delta_phi), math.sin(row.delta_phi))
    doc["overlap"] = overlap.OverlapResult(value).to_dict()
    _emit(s, _json(doc))
    return 0


def cmd_sweep(s: dict) -> int:
    _require(s, "M_from", "M_to", "M_steps")
    cfg = _config(s)
    m_values = np.linspace(s["M_from"], s["M_to"], s["M_steps"]) * NM
    steps = s["steps"] or tdse.DEFAULT_STEPS
    table = interferometer.sensitivity_sweep(cfg, s["c"] * ZN, m_values, s["engine"], s["jobs"],
                                             s["grid_n"], steps)
    _emit(s, table.to_csv_text())
    return 0


def cmd_extract(s: dict) -> int:
    _require(s, "table")
    table = interferometer.SweepTable.from_csv(s["table"])
    result = interferometer.extract_c(table)
    _emit(s, _json(result.to_dict()))
    return 0


def cmd_verify(s: dict) -> int:
    results = verify.run_checks(quick=s["quick"])
    doc = verify.report(results, quick=s["quick"])
    _emit(s, _json(doc))
    return 0 if doc["passed"] else 1


def cmd_paths(s: dict) -> int:
    """Rotating-frame phase-space paths of both branches, one CSV per branch."""
    _require(s, "traj", "out_dir")
    traj = _load_traj(s["traj"])
    cfg = _config(s, traj.t_final / US)
    pert = _perturbation(s, cfg)
    y0 = s["y0"] / dynamics.position_scale(cfg)
    v0 = s["p0"] / (dynamics.momentum_scale(cfg) * cfg.mass)
    out_dir = Path(s["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    steps = s["steps"] or 100_000
    areas = {}
    for branch in (Branch.UP, Branch.DOWN):
        force = dynamics.branch_force(cfg, traj, pert, branch)
        path = dynamics.integrate_newton(cfg, force, y0, v0, steps)
        areas[branch.value] = dynamics.rotating_area(path)
        path.to_rotating().to_csv(out_dir / f"path_{branch.value}.csv", stride=s["stride"])
    print(_json({"area_up": areas["up"], "area_down": areas["down"],
                 "delta_area": areas["up"] - areas["down"]}), end="")
    return 0


def cmd_curves(s: dict) -> int:
    """Trajectory, its force, and trajectories shifted by the forces given with --c."""
    _require(s, "traj")
    traj = _load_traj(s["traj"])
    cfg = _config(s, traj.t_final / US)
    forces = s.get("c_list") or []
    t = np.linspace(0.0, traj.t_final, s["samples"])
    ev = trajectory.evaluate(traj, t)
    f = trajectory.driving_force(traj, cfg, t)
    header = ["t_us", "alpha_nm", "force_zN"] + [f"alpha_c{c:g}_nm" for c in forces]
    lines = [",".join(header)]
    for i, ti in enumerate(t):
        vals = [ti / US, ev.alpha[i] / NM, f[i] / ZN]
        vals += [(ev.alpha[i] + dynamics.delta_alpha(cfg, c * ZN, ti)) / NM for c in forces]
        lines.append(",".join(f"{v + 0.0:.12g}" for v in vals))
    _emit(s, "\n".join(lines) + "\n")
    return 0


def cmd_lattice(s: dict) -> int:
    """Potential shapes of a lattice-generated spin force and its Taylor truncations."""
    k = s["k_per_um"] / 1e-6
    x = np.linspace(-s["x_max"], s["x_max"], s["samples"]) * NM
    shapes = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for order in tdse.LatticeOrder:
            spec = tdse.LatticeSpec(1.0, k, order)
            # Unit force at x = 0; the potential is minus the antiderivative of the force.
            shapes[order.value] = -tdse.lattice_profile(spec, x)
    raw = tdse.lattice_potential(tdse.LatticeSpec(1.0, k), x) - 0.5
    lines = ["x_nm,lattice_raw," + ",".join(f"{o}_nm" for o in shapes)]
    for i, xi in enumerate(x):
        vals = [xi / NM, raw[i]] + [shapes[o][i] / NM for o in shapes]
        lines.append(",".join(f"{v + 0.0:.12g}" for v in vals))
    _emit(s, "\n".join(lines) + "\n")
    return 0


def cmd_tdse(s: dict) -> int:
    """Grid propagation of both branches with snapshot and log output."""
    _require(s, "traj", "out_dir")
    traj = _load_traj(s["traj"])
    cfg = _config(s, traj.t_final / US)
    pert = _perturbation(s, cfg)
    up, down = tdse.branch_specs(traj, pert, s["scenario"])
    psi0 = tdse.ground_state(cfg, 0.0, s["grid_n"], tdse.grid_span(cfg, traj, pert))
    steps = s["steps"] or tdse.DEFAULT_STEPS
    log_every = s["log_every"] or max(1, steps // 100)
    out_dir = Path(s["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    psi_up, psi_dn, log = tdse.propagate_pair(cfg, up, down, psi0, steps, log_every)
    psi_up.to_csv(out_dir / "psi_up.csv")
    psi_dn.to_csv(out_dir / "psi_down.csv")
    log.to_json(out_dir / "log.json")
    result = overlap.OverlapResult(psi_dn.inner(psi_up))
    print(_json({"overlap": result.to_dict(), "max_norm_drift": log.max_norm_drift}), end="")
    return 0


# --- parser --------------------------------------------------------------------

def _physics(p):
    p.add_argument("--mass-amu", dest="mass_amu", type=float)
    p.add_argument("--freq-mhz", dest="freq_mhz", type=float)


def _pert(p):
    p.add_argument("--c", type=float, help="unknown force in zN")
    p.add_argument("--eps", type=float, help="drive error in zN")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--x0", type=float, help="crossing point in nm")
    g.add_argument("--x0-auto", dest="x0_auto", action="store_true",
                   help="place the crossing point at c / (m w^2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ion-ifo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file with option values")
        p.set_defaults(handler=handler)
        return p

    p = command("design", cmd_design, "design a trajectory and write it as JSON")
    _physics(p)
    p.add_argument("--kind", choices=["A", "B"])
    p.add_argument("--tf", type=float, help="final time in us")
    p.add_argument("--M", type=float, help="midpoint displacement in nm (kind A)")
    p.add_argument("--S", type=float, help="sensitivity in nm*us")
    p.add_argument("--v", help="alpha(t_f/5) in nm, or 'opt' (kind B)")
    p.add_argument("--out")

    p = command("phase", cmd_phase, "branch phases and overlap for a trajectory file")
    _physics(p)
    p.add_argument("--traj")
    _pert(p)
    p.add_argument("--scenario", choices=["both", "one"])
    p.add_argument("--out")

    p = command("sweep", cmd_sweep, "populations versus sensitivity")
    _physics(p)
    p.add_argument("--tf", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--M-from", dest="M_from", type=float)
    p.add_argument("--M-to", dest="M_to", type=float)
    p.add_argument("--M-steps", dest="M_steps", type=int)
    p.add_argument("--engine", choices=list(interferometer.ENGINES))
    p.add_argument("--jobs", type=int)
    p.add_argument("--grid-n", dest="grid_n", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--out")

    p = command("extract", cmd_extract, "fit the unknown force to a sweep table")
    p.add_argument("--table")
    p.add_argument("--out")

    p = command("verify", cmd_verify, "run the oracle-equivalence checks")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--out")

    p = command("paths", cmd_paths, "rotating-frame phase-space paths of both branches")
    _physics(p)
    p.add_argument("--traj")
    _pert(p)
    p.add_argument("--y0", type=float, help="initial dimensionless position Y")
    p.add_argument("--p0", type=float, help="initial dimensionless momentum P")
    p.add_argument("--steps", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--out-dir", dest="out_dir")

    p = command("curves", cmd_curves, "trajectory and force samples")
    _physics(p)
    p.add_argument("--traj")
    p.add_argument("--c", dest="c_list", type=float, action="append",
                   help="add a trajectory displaced by this force (zN); repeatable")
    p.add_argument("--samples", type=int)
    p.add_argument("--out")

    p = command("lattice", cmd_lattice, "lattice potential and its truncations")
    p.add_argument("--k-per-um", dest="k_per_um", type=float)
    p.add_argument("--x-max", dest="x_max", type=float, help="half range in nm")
    p.add_argument("--samples", type=int)
    p.add_argument("--out")

    p = command("tdse", cmd_tdse, "grid propagation of both branches")
    _physics(p)
    p.add_argument("--traj")
    _pert(p)
    p.add_argument("--scenario", choices=["both", "one"])
    p.add_argument("--grid-n", dest="grid_n", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--log-every", dest="log_every", type=int)
    p.add_argument("--out-dir", dest="out_dir")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = _settings(args)
        return args.handler(settings)
    except UsageError as exc:
        parser.error(str(exc))
    except (IonIfoError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
