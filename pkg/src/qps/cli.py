"""Batch command-line facade: ``qps <command> [flags] [--config file.json]``.

Exit codes: 0 success, 2 validation error, 3 tolerance failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any, Callable

import numpy as np

from . import experiments as ex
from . import geometry as ge
from . import kinematics as kin
from . import measurement as me
from . import modular as mo
from . import weyl_wigner as ww
from .exceptions import QPSError

EXIT_OK, EXIT_VALIDATION, EXIT_TOLERANCE = 0, 2, 3
COMMANDS = ("kinematics", "wigner", "weak", "geometry", "modular", "cat", "game")
CONFIG_KEYS = {"command", "parameters", "output_dir", "seed"}


class ValidationError(Exception):
    pass


# -- parameter schemas ---------------------------------------------------------

def _int_range(lo, hi=None):
    def check(v):
        if isinstance(v, bool) or int(v) != v or v < lo or (hi is not None and v > hi):
            raise ValidationError(f"expected an integer in [{lo}, {hi if hi is not None else 'inf'}], got {v!r}")
        return int(v)
    return check


def _real(lo=-math.inf, hi=math.inf, open_lo=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValidationError(f"expected a finite number, got {v!r}")
        if v < lo or v > hi or (open_lo and v == lo):
            raise ValidationError(f"{v!r} outside the allowed range")
        return float(v)
    return check


def _choice(*options):
    def check(v):
        if v not in options:
            raise ValidationError(f"expected one of {options}, got {v!r}")
        return v
    return check


def _pair(v):
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ValidationError(f"expected a pair of integers, got {v!r}")
    return [_int_range(1, 4096)(x) for x in v]


def _detectors(v):
    if v == "default":
        return v
    if isinstance(v, dict) and set(v) <= {"centers", "half_width"} and "centers" in v:
        return {"centers": [_real()(c) for c in v["centers"]],
                "half_width": _real(0, math.inf, True)(v.get("half_width", ex.DETECTOR_HALF_WIDTH))}
    raise ValidationError(f"detectors must be 'default' or {{centers, half_width}}, got {v!r}")


def _alphas(v):
    if not isinstance(v, (list, tuple)) or not v:
        raise ValidationError("alpha_choices must be a non-empty list")
    return [_real()(a) for a in v]


SCHEMAS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "kinematics": {"dim": (_int_range(2, kin.MAX_DIM), 5),
                   "check": (_choice("weyl", "fourier", "all"), "all")},
    "wigner": {"dim": (_int_range(3, 63), 5),
               "state": (_choice("position0", "momentum0", "mixed"), "position0")},
    "weak": {"theta": (_real(0, math.pi), math.pi / 2), "phi": (_real(), math.pi / 4),
             "epsilon": (_real(0, 1, True), 1e-3), "z": (_real(0, 3), 2.0),
             "cutoff": (_int_range(8, 512), 64)},
    "geometry": {"triangles": (_int_range(1, 100000), 200)},
    "modular": {"ring": (_int_range(4, 1024), 8), "L": (_real(0, math.inf, True), 1.0),
                "crt": (_pair, [2, 3])},
    "cat": {"L": (_real(0, 20, True), 10.0), "alpha": (_real(), 0.0),
            "t": (_real(), math.pi / 2), "cutoff": (_int_range(16, 1024), 256),
            "detectors": (_detectors, "default"), "step": (_real(1e-4, 1.0), 0.01)},
    "game": {"alpha": (_real(), math.pi / 3), "alpha_choices": (_alphas, None),
             "shots": (_int_range(1, 10 ** 8), 10 ** 5)},
}


def validate_parameters(command: str, params: dict) -> dict:
    if command not in SCHEMAS:
        raise ValidationError(f"unknown command {command!r}")
    schema = SCHEMAS[command]
    unknown = set(params) - set(schema)
    if unknown:
        raise ValidationError(f"unknown parameter(s) for {command}: {sorted(unknown)}")
    out = {}
    for key, (check, default) in schema.items():
        if key in params and params[key] is not None:
            try:
                out[key] = check(params[key])
            except ValidationError as err:
                raise ValidationError(f"{command}.{key}: {err}") from None
        else:
            out[key] = default
    if command == "modular" and out["ring"] % 4:
        raise ValidationError("modular.ring must be divisible by 4")
    if command == "wigner" and out["dim"] % 2 == 0:
        raise ValidationError("wigner.dim must be odd")
    return out


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ValidationError(f"cannot read config {path}: {err}") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown config key(s): {sorted(unknown)}")
    if not isinstance(cfg.get("parameters", {}), dict):
        raise ValidationError("config.parameters must be an object")
    return cfg


# -- command runners -------------------------------------------------------------
# Each returns (ExperimentResult, passed, extra_files) where extra_files maps a
# suffix to text content.

def run_kinematics(p, seed):
    sp = kin.FiniteSpace(p["dim"])
    n = sp.dim
    res = ex.ExperimentResult("kinematics", dict(p))
    checks = {}
    if p["check"] in ("weyl", "all"):
        rng = np.random.default_rng(seed)
        pairs = rng.integers(0, n, size=(50, 2))
        checks["weyl_residual"] = max(kin.weyl_residual(sp, int(j), int(k)) for j, k in pairs)
    if p["check"] in ("fourier", "all"):
        v, u, f = kin.position_translation_op(sp), kin.momentum_phase_op(sp), kin.finite_fourier(sp)
        eye = np.eye(n)
        checks["fourier_fourth_power"] = kin.max_norm(np.linalg.matrix_power(f, 4) - eye)
        checks["fourier_intertwines_V"] = kin.max_norm(f.conj().T @ v @ f - u)
        checks["fourier_intertwines_U"] = kin.max_norm(f.conj().T @ u @ f - v.conj().T)
        checks["V_period"] = kin.max_norm(np.linalg.matrix_power(v, n) - eye)
        checks["U_period"] = kin.max_norm(np.linalg.matrix_power(u, n) - eye)
    for k, v in checks.items():
        res.add(k, v, kin.ALGEBRA_TOL)
    return res, all(v < kin.ALGEBRA_TOL for v in checks.values()), {}


def run_wigner(p, seed):
    n = p["dim"]
    basis = ww.WWBasis(n)
    rho = {"position0": lambda: np.outer(kin.position_ket(n, 0), kin.position_ket(n, 0)),
           "momentum0": lambda: np.outer(kin.momentum_ket(n, 0), kin.momentum_ket(n, 0).conj()),
           "mixed": lambda: np.eye(n) / n}[p["state"]]()
    wmap = ww.ww_transform(rho, basis)
    back = ww.ww_inverse(wmap, basis)
    res = ex.ExperimentResult("wigner", dict(p))
    c = basis.orthogonality_constant
    rt = kin.max_norm(back - rho)
    res.add("orthogonality_constant", c, 1e-12 * c)
    res.add("round_trip_error", rt, 1e-10)
    res.add("negativity", ww.wigner_negativity(rho, basis), 1e-10)
    return res, rt < 1e-10, {".csv": wmap.to_csv()}


def run_weak(p, seed):
    pair = me.PrePostPair(me.qubit_state(p["theta"], p["phi"]), me.qubit_state(0, 0), me.SIGMA1)
    o_w = me.weak_value(pair)
    expected = math.tan(p["theta"] / 2) * complex(math.cos(p["phi"]), math.sin(p["phi"]))
    err = abs(o_w - expected)
    shifts = me.coherent_pointer_shift(1j * p["z"], o_w, p["epsilon"], p["cutoff"])
    res = ex.ExperimentResult("weak", dict(p))
    res.add("weak_value", o_w, 1e-12)
    res.add("weak_value_error", err, 1e-12)
    eps2 = p["epsilon"] ** 2
    for name, rep in zip(("delta_a", "delta_q", "delta_p"), shifts):
        res.series[name] = rep.to_dict()
        res.series[name]["residual_over_eps2"] = rep.order_residual / eps2
    return res, err < 1e-12, {}


def run_geometry(p, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(p["triangles"]):
        vs = [kin.normalize(rng.normal(size=2) + 1j * rng.normal(size=2)) for _ in range(3)]
        tri = ge.GeodesicTriangle(tuple(vs))
        d = ge.bargmann_invariant(tri) + ge.solid_angle(tri) / 2
        worst = max(worst, abs(ge._wrap(d)))
    res = ex.ExperimentResult("geometry", dict(p))
    res.add("max_bargmann_solid_angle_residual", worst, 1e-9)
    return res, worst < 1e-9, {}


def run_modular(p, seed):
    ring = mo.RingSpace(p["ring"], p["L"])
    pauli = mo.pauli_residuals(ring)
    rep = mo.crt_relabel_check(p["crt"])
    res = ex.ExperimentResult("modular", dict(p))
    for k, v in pauli.items():
        res.add(f"pauli_{k}", v, kin.ALGEBRA_TOL)
    res.add("crt_coprime", rep.coprime, None)
    res.add("crt_orbit_length", rep.orbit_length, None)
    res.add("crt_residual", rep.residual if rep.coprime else None, kin.ALGEBRA_TOL)
    res.series["crt_orbits"] = [[list(pt) for pt in orb] for orb in rep.orbits]
    demo = mo.direct_sum_vs_tensor(ring, tuple(p["crt"]))
    if not math.isfinite(demo["tensor_product"]["conjugation_residual"]):
        demo["tensor_product"]["conjugation_residual"] = None
    res.series["direct_sum_vs_tensor"] = demo
    ok = all(v < kin.ALGEBRA_TOL for v in pauli.values())
    files = {}
    if rep.coprime:
        ok = ok and rep.residual < kin.ALGEBRA_TOL and rep.orbit_length == p["crt"][0] * p["crt"][1]
        fact = mo.CrtFactorization(*p["crt"])
        az = mo.az_state(fact, fact.N_a - 1, fact.N_b - 1)
        files[".csv"] = mo.az_cell_csv(fact, az.state)
    return res, ok, files


def run_cat(p, seed):
    det = (ex.DetectorArray.default() if p["detectors"] == "default"
           else ex.DetectorArray(tuple(p["detectors"]["centers"]), p["detectors"]["half_width"]))
    res = ex.cat_experiment(p["L"], p["alpha"], p["t"], p["cutoff"], det, p["step"])
    res.inputs = dict(p)
    dens = res.series.pop("density")
    ok = (abs(res.value("norm") - 1) < 1e-10 and res.value("branch_overlap_truncated") < 1e-20
          if p["L"] >= 10 else abs(res.value("norm") - 1) < 1e-10)
    return res, ok, {".csv": ex.series_csv(dens["x"], dens["density"])}


def run_game(p, seed):
    choices = p["alpha_choices"] or [p["alpha"]]
    res = ex.qubit_phase_game(choices, p["shots"], seed)
    res.inputs = dict(p, seed=seed)
    ok = res.value("max_abs_cos_error") <= max(res.scalars["max_abs_cos_error"]["tolerance"], 1e-12)
    return res, ok, {}


RUNNERS = {"kinematics": run_kinematics, "wigner": run_wigner, "weak": run_weak,
           "geometry": run_geometry, "modular": run_modular, "cat": run_cat, "game": run_game}


def gnuplot_script(command: str, csv_name: str) -> str:
    if command == "wigner":
        return (f"set datafile separator ','\nset key off\nset xlabel 'j'\nset ylabel 'k'\n"
                f"plot '{csv_name}' every ::1 using 1:2:3 with image\n")
    if command == "modular":
        return (f"set datafile separator ','\nset key off\nset xlabel 'x mod'\nset ylabel 'p mod'\n"
                f"plot '{csv_name}' every ::1 using 1:2:3 with image\n")
    return (f"set datafile separator ','\nset key off\nset xlabel 'x'\nset ylabel 'density'\n"
            f"plot '{csv_name}' every ::1 using 1:2 with lines\n")


# -- argument handling --------------------------------------------------------------

FLAG_MAP = {"dim": "dim", "L": "L", "alpha": "alpha", "t": "t", "cutoff": "cutoff",
            "check": "check", "state": "state", "theta": "theta", "phi": "phi",
            "epsilon": "epsilon", "z": "z", "triangles": "triangles", "ring": "ring",
            "crt": "crt", "shots": "shots", "step": "step"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qps", description="Finite quantum phase-space toolkit")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run config; its values win over flags")
    ap.add_argument("--out", help="output directory (default: current directory)")
    ap.add_argument("--seed", type=int, help="RNG seed (fallback: QPS_SEED, then 0)")
    ap.add_argument("--gnuplot-script", action="store_true", help="also write a gnuplot script")
    ap.add_argument("--timestamp", help=argparse.SUPPRESS)
    ap.add_argument("--dim", type=int)
    ap.add_argument("--L", type=float)
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--t", type=float)
    ap.add_argument("--cutoff", type=int)
    ap.add_argument("--check", choices=("weyl", "fourier", "all"))
    ap.add_argument("--state", choices=("position0", "momentum0", "mixed"))
    ap.add_argument("--theta", type=float)
    ap.add_argument("--phi", type=float)
    ap.add_argument("--epsilon", type=float)
    ap.add_argument("--z", type=float)
    ap.add_argument("--triangles", type=int)
    ap.add_argument("--ring", type=int)
    ap.add_argument("--crt", type=int, nargs=2)
    ap.add_argument("--shots", type=int)
    ap.add_argument("--step", type=float)
    return ap


def _flag_params(args, command) -> dict:
    out = {}
    for flag, key in FLAG_MAP.items():
        val = getattr(args, flag)
        if val is None:
            continue
        if key not in SCHEMAS[command]:
            raise ValidationError(f"--{flag} does not apply to {command}")
        out[key] = list(val) if isinstance(val, list) else val
    return out


def resolve(args) -> tuple[str, dict, str, int]:
    command = args.command
    params = _flag_params(args, command)
    out_dir = args.out
    seed = args.seed
    if args.config:
        cfg = load_config(args.config)
        if cfg.get("command", command) != command:
            raise ValidationError(f"config command {cfg['command']!r} != {command!r}")
        overridden = sorted(set(params) & set(cfg.get("parameters", {})))
        if "output_dir" in cfg and out_dir is not None:
            overridden.append("out")
        if "seed" in cfg and seed is not None:
            overridden.append("seed")
        print(f"qps: --config {args.config} takes precedence over command-line flags"
              + (f" (overridden: {', '.join(overridden)})" if overridden else ""), file=sys.stderr)
        params.update(cfg.get("parameters", {}))
        out_dir = cfg.get("output_dir", out_dir)
        seed = cfg.get("seed", seed)
    if seed is None:
        env = os.environ.get("QPS_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise ValidationError(f"QPS_SEED must be an integer, got {env!r}") from None
        else:
            seed = 0
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ValidationError(f"seed must be a non-negative integer, got {seed!r}")
    return command, validate_parameters(command, params), out_dir or ".", seed


def dispatch(command: str, params: dict, out_dir: str, seed: int,
             timestamp: str | None = None, gnuplot: bool = False) -> tuple[int, str]:
    """Run one command; returns ``(exit_code, json_path)``."""
    result, passed, files = RUNNERS[command](params, seed)
    result.inputs = dict(result.inputs, seed=seed)
    result.add("passed", bool(passed), None)
    ts = timestamp or ex.utc_timestamp()
    path = result.write(out_dir, ts)
    stem = os.path.splitext(path)[0]
    for suffix, text in files.items():
        with open(stem + suffix, "w", newline="") as fh:
            fh.write(text)
        if gnuplot:
            with open(stem + ".gp", "w") as fh:
                fh.write(gnuplot_script(command, os.path.basename(stem + suffix)))
    return (EXIT_OK if passed else EXIT_TOLERANCE), path


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with status 2 on bad flags
    try:
        command, params, out_dir, seed = resolve(args)
        code, path = dispatch(command, params, out_dir, seed, args.timestamp, args.gnuplot_script)
    except (ValidationError, QPSError, ValueError) as err:
        print(f"qps: validation error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    print(path)
    if code == EXIT_TOLERANCE:
        print(f"qps: tolerance check failed for {command}; see {path}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
