"""Run configuration: YAML loading, strict validation, resolved dumps.

A config file is a nested mapping with the sections below; every omitted
field takes the documented default and every unknown key is rejected with
its dotted path.  ``resolved_dict`` echoes the fully defaulted config (plus
a ``derived`` block of computed quantities, ignored on reload) so that a
dumped resolved config reloads to bit-identical behaviour.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
import yaml

from . import coefficients as coeff_mod
from . import noise as noise_mod
from . import spectral
from .errors import ConfigError
from .noise import RngStream
from .segment import PROFILES, _window_steps, from_initial_condition
from .solver import SolverConfig

_DEFAULTS = {
    "seed": 12345,
    "operator": {
        "kind": "laplacian_1d",
        "n_modes": 32,
        "a": 1.0,
        "delta_fraction": 0.5,
        "quad_factor": 16,
    },
    "noise": {
        "spectrum": "power",   # power | geometric
        "exponent": 2.0,
        "trace": 1.0,
    },
    "delay": {
        "h": 0.1,
    },
    "coefficients": {
        "f": "osgood",
        "sigma": "osgood",
        "kernel": "separable",     # separable | linear | zero
        "kernel_scale": 0.1,
        "kernel_delay": "point",   # point | instant
        "modulus": "osgood",
        "p": 3.0,
        "Mg": 0.5,
        "K": 1.0,
        "alpha": 0.5,
        "grid_points": None,       # resolved to 4 * n_modes
    },
    "solver": {
        "dt": 1.0e-3,
        "t_end": 1.0,
        "fp_tol": 1.0e-12,
        "fp_max": 200,
        "mode": "direct",
        "picard_iters": 8,
        "store_stride": 1,
        "segment_stride": 0,
        "blowup_threshold": 1.0e8,
    },
    "measure": {
        "burn_in": None,           # resolved to 2 h
        "thin": 1,
        "n_trajectories": 50,
        "r_grid": [0.5, 1.0, 2.0, 4.0, 8.0],
    },
    "initial": {
        "kind": "zero",            # zero | profile | coeffs
        "profile": "sin_pi",
        "amplitude": 1.0,
        "ramp": False,
        "coeffs": None,
    },
}


@dataclass(eq=False)
class RunConfig:
    seed: int
    operator: dict
    noise: dict
    delay: dict
    coefficients: dict
    solver: dict
    measure: dict
    initial: dict

    @property
    def h(self) -> float:
        return self.delay["h"]

    @property
    def dt(self) -> float:
        return self.solver["dt"]

    def grid_points(self) -> int:
        gp = self.coefficients["grid_points"]
        return int(gp) if gp is not None else 4 * self.operator["n_modes"]

    def burn_in(self) -> float:
        b = self.measure["burn_in"]
        return float(b) if b is not None else 2.0 * self.h


def _merge(defaults: dict, user: dict, path: str) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in user.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in defaults:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config section {where!r} must be a mapping")
            out[key] = _merge(defaults[key], val, where)
        else:
            out[key] = val
    return out


def _need(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _as_real(data: dict, section: str, key: str, lo=None, hi=None,
             lo_open=True, hi_open=True, allow_none=False):
    val = data[section][key]
    if val is None and allow_none:
        return
    where = f"{section}.{key}"
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where} must be a number")
    val = float(val)
    if lo is not None:
        _need(val > lo if lo_open else val >= lo,
              f"{where} = {val!r} out of range")
    if hi is not None:
        _need(val < hi if hi_open else val <= hi,
              f"{where} = {val!r} out of range")
    data[section][key] = val


def _as_int(data: dict, section: str, key: str, lo: int):
    val = data[section][key]
    where = f"{section}.{key}"
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{where} must be an integer")
    _need(val >= lo, f"{where} = {val} must be >= {lo}")


def _choice(data: dict, section: str, key: str, allowed):
    val = data[section][key]
    _need(val in allowed,
          f"{section}.{key} = {val!r} not one of {sorted(allowed)}")


def parse_config(raw) -> RunConfig:
    """Validate a config mapping (or YAML text) against the full schema."""
    if isinstance(raw, str):
        raw = yaml.safe_load(raw)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    raw = dict(raw)
    raw.pop("derived", None)  # round-trip convenience: resolved dumps carry it
    data = _merge(_DEFAULTS, raw, "")

    if isinstance(data["seed"], bool) or not isinstance(data["seed"], int):
        raise ConfigError("seed must be an integer")
    _need(data["seed"] >= 0, "seed must be nonnegative")

    _choice(data, "operator", "kind", {"laplacian_1d"})
    _as_int(data, "operator", "n_modes", 1)
    _as_real(data, "operator", "delta_fraction", lo=0.0, hi=1.0)
    _as_int(data, "operator", "quad_factor", 2)
    a = data["operator"]["a"]
    if isinstance(a, (int, float)) and not isinstance(a, bool):
        _need(float(a) > 0.0, "operator.a must be positive")
        data["operator"]["a"] = float(a)
    elif isinstance(a, list):
        _need(len(a) >= 2 and all(isinstance(r, list) and len(r) == 2 for r in a),
              "operator.a must be a number or a list of [x, a(x)] pairs")
    else:
        raise ConfigError("operator.a must be a number or a list of [x, a(x)] pairs")

    _choice(data, "noise", "spectrum", {"power", "geometric"})
    _as_real(data, "noise", "exponent", lo=1.0)
    _as_real(data, "noise", "trace", lo=0.0)

    _as_real(data, "delay", "h", lo=0.0)

    _choice(data, "coefficients", "f", set(coeff_mod._SCALARS))
    _choice(data, "coefficients", "sigma", set(coeff_mod._SCALARS))
    _choice(data, "coefficients", "kernel", {"separable", "linear", "zero"})
    _as_real(data, "coefficients", "kernel_scale", lo=0.0, lo_open=False)
    _choice(data, "coefficients", "kernel_delay", {"point", "instant"})
    _choice(data, "coefficients", "modulus", set(coeff_mod._MODULI))
    _as_real(data, "coefficients", "p", lo=2.0)
    _as_real(data, "coefficients", "Mg", lo=0.0, hi=1.0)
    _as_real(data, "coefficients", "K", lo=0.0)
    _as_real(data, "coefficients", "alpha", lo=0.0, hi=1.0, hi_open=False)
    gp = data["coefficients"]["grid_points"]
    if gp is not None:
        _as_int(data, "coefficients", "grid_points", 4)
        _need(gp % 2 == 0, "coefficients.grid_points must be even")

    _as_real(data, "solver", "dt", lo=0.0)
    _as_real(data, "solver", "t_end", lo=0.0)
    _as_real(data, "solver", "fp_tol", lo=0.0)
    _as_int(data, "solver", "fp_max", 1)
    _choice(data, "solver", "mode", {"direct", "picard"})
    _as_int(data, "solver", "picard_iters", 1)
    _as_int(data, "solver", "store_stride", 1)
    _as_int(data, "solver", "segment_stride", 0)
    _as_real(data, "solver", "blowup_threshold", lo=0.0)

    _as_real(data, "measure", "burn_in", lo=0.0, lo_open=False, allow_none=True)
    _as_int(data, "measure", "thin", 1)
    _as_int(data, "measure", "n_trajectories", 1)
    r_grid = data["measure"]["r_grid"]
    _need(isinstance(r_grid, list) and len(r_grid) >= 1
          and all(isinstance(r, (int, float)) and not isinstance(r, bool)
                  and r >= 0.0 for r in r_grid),
          "measure.r_grid must be a nonempty list of nonnegative radii")
    data["measure"]["r_grid"] = [float(r) for r in r_grid]

    _choice(data, "initial", "kind", {"zero", "profile", "coeffs"})
    _choice(data, "initial", "profile", set(PROFILES))
    _as_real(data, "initial", "amplitude")
    _need(isinstance(data["initial"]["ramp"], bool), "initial.ramp must be a boolean")
    if data["initial"]["kind"] == "coeffs":
        coeffs = data["initial"]["coeffs"]
        _need(isinstance(coeffs, list) and len(coeffs) == data["operator"]["n_modes"],
              "initial.coeffs must list one coefficient per mode")

    # cross-field: the window must hold an integer number of steps
    try:
        _window_steps(data["delay"]["h"], data["solver"]["dt"])
    except ConfigError as exc:
        raise ConfigError(f"delay.h / solver.dt: {exc}") from None

    return RunConfig(seed=data["seed"], operator=data["operator"],
                     noise=data["noise"], delay=data["delay"],
                     coefficients=data["coefficients"], solver=data["solver"],
                     measure=data["measure"], initial=data["initial"])


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config parse failure in {path}: {exc}") from None
    return parse_config(raw)


# ---------------------------------------------------------------------------
# builders


def make_operator(rc: RunConfig):
    return spectral.assemble_operator(
        kind=rc.operator["kind"], n_modes=rc.operator["n_modes"],
        a=rc.operator["a"], delta_fraction=rc.operator["delta_fraction"],
        quad_factor=rc.operator["quad_factor"])


def make_noise(rc: RunConfig, op) -> noise_mod.QWienerSpec:
    if rc.noise["spectrum"] == "power":
        return noise_mod.power_qwiener(op.n_modes, exponent=rc.noise["exponent"],
                                       trace_target=rc.noise["trace"])
    return noise_mod.geometric_qwiener(op.n_modes, trace_target=rc.noise["trace"])


def make_coefficients(rc: RunConfig) -> coeff_mod.CoefficientSet:
    c = rc.coefficients
    return coeff_mod.builtin_coefficients(
        f=c["f"], sigma=c["sigma"], kernel=c["kernel"],
        kernel_scale=c["kernel_scale"], kernel_delay=c["kernel_delay"],
        modulus=c["modulus"], p=c["p"], Mg=c["Mg"], growth_K=c["K"],
        grid_points=rc.grid_points())


def make_solver_config(rc: RunConfig) -> SolverConfig:
    s = rc.solver
    return SolverConfig(dt=s["dt"], t_end=s["t_end"], fp_tol=s["fp_tol"],
                        fp_max=s["fp_max"], mode=s["mode"],
                        picard_iters=s["picard_iters"],
                        store_stride=s["store_stride"],
                        segment_stride=s["segment_stride"],
                        blowup_threshold=s["blowup_threshold"])


def make_initial_segment(rc: RunConfig, op):
    ini = rc.initial
    if ini["kind"] == "zero":
        desc = {"kind": "zero"}
    elif ini["kind"] == "coeffs":
        desc = {"kind": "coeffs", "coeffs": np.asarray(ini["coeffs"], dtype=float)}
    else:
        desc = {"kind": "profile", "profile": ini["profile"],
                "amplitude": ini["amplitude"], "ramp": ini["ramp"]}
    return from_initial_condition(desc, rc.h, rc.dt, op,
                                  n_grid=rc.grid_points())


def make_stream(rc: RunConfig, stream_id: int = 0) -> RngStream:
    return RngStream(seed=rc.seed, stream_id=stream_id)


def resolved_dict(rc: RunConfig) -> dict:
    """Fully defaulted config plus a ``derived`` block of computed values."""
    op = make_operator(rc)
    out = {
        "seed": rc.seed,
        "operator": copy.deepcopy(rc.operator),
        "noise": copy.deepcopy(rc.noise),
        "delay": copy.deepcopy(rc.delay),
        "coefficients": copy.deepcopy(rc.coefficients),
        "solver": copy.deepcopy(rc.solver),
        "measure": copy.deepcopy(rc.measure),
        "initial": copy.deepcopy(rc.initial),
    }
    out["coefficients"]["grid_points"] = rc.grid_points()
    out["measure"]["burn_in"] = rc.burn_in()
    out["derived"] = {
        "window_steps": _window_steps(rc.h, rc.dt),
        "n_steps": make_solver_config(rc).n_steps,
        "mu_1": float(op.eigenvalues[0]),
        "mu_max": float(op.eigenvalues[-1]),
        "delta": float(op.delta),
        "noise_trace": float(make_noise(rc, op).trace),
    }
    return out


def dump_resolved(rc: RunConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(resolved_dict(rc), fh, sort_keys=False)
