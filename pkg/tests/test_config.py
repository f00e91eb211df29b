"""Config schema: defaults, strict validation, builders, resolved round trips."""
import re

import numpy as np
import pytest

from nsfde import (ConfigError, RngStream, load_config, make_coefficients,
                   make_initial_segment, make_noise, make_operator,
                   make_solver_config, make_stream, parse_config,
                   resolved_dict)
from nsfde.config import dump_resolved


def test_empty_config_takes_documented_defaults():
    rc = parse_config({})
    assert rc.seed == 12345
    assert rc.h == 0.1
    assert rc.dt == 1.0e-3
    assert rc.operator["n_modes"] == 32
    assert rc.grid_points() == 128          # 4 * n_modes when unset
    assert rc.burn_in() == pytest.approx(0.2)   # two delay windows
    assert rc.solver["mode"] == "direct"
    assert rc.noise["spectrum"] == "power"
    assert rc.initial["kind"] == "zero"
    assert rc.measure["r_grid"] == [0.5, 1.0, 2.0, 4.0, 8.0]


def test_yaml_text_and_explicit_values_override():
    rc = parse_config("operator: {n_modes: 8}\ncoefficients: {grid_points: 64}\n"
                      "measure: {burn_in: 1.5}\ndelay: {h: 1}\n")
    assert rc.operator["n_modes"] == 8
    assert rc.grid_points() == 64
    assert rc.burn_in() == 1.5
    assert rc.h == 1.0 and isinstance(rc.h, float)
    assert parse_config("").seed == 12345  # empty document = all defaults


def test_unknown_keys_report_dotted_paths():
    with pytest.raises(ConfigError, match="unknown config key 'solver.dtt'"):
        parse_config({"solver": {"dtt": 1e-3}})
    with pytest.raises(ConfigError, match="unknown config key 'solvers'"):
        parse_config({"solvers": {}})
    with pytest.raises(ConfigError, match="section 'solver' must be a mapping"):
        parse_config({"solver": 3})
    with pytest.raises(ConfigError, match="root must be a mapping"):
        parse_config([1, 2])


@pytest.mark.parametrize("patch, needle", [
    ({"coefficients": {"Mg": 1.2}}, "coefficients.Mg"),
    ({"operator": {"n_modes": 0}}, "operator.n_modes = 0 must be >= 1"),
    ({"noise": {"trace": -1.0}}, "noise.trace = -1.0 out of range"),
    ({"noise": {"exponent": 1.0}}, "noise.exponent"),
    ({"delay": {"h": "wide"}}, "delay.h must be a number"),
    ({"seed": True}, "seed must be an integer"),
    ({"seed": -4}, "seed must be nonnegative"),
    ({"initial": {"ramp": 1}}, "initial.ramp must be a boolean"),
    ({"solver": {"mode": "euler"}}, "not one of"),
    ({"solver": {"store_stride": 0}}, "solver.store_stride"),
    ({"coefficients": {"grid_points": 33}}, "must be even"),
    ({"coefficients": {"grid_points": 2}}, "must be >= 4"),
    ({"coefficients": {"alpha": 0.0}}, "coefficients.alpha"),
    ({"measure": {"r_grid": []}}, "measure.r_grid"),
    ({"measure": {"r_grid": [1.0, -2.0]}}, "measure.r_grid"),
    ({"operator": {"a": -1.0}}, "operator.a must be positive"),
    ({"operator": {"a": "piecewise"}}, "operator.a must be a number"),
    ({"operator": {"a": [[0.0, 1.0]]}}, "operator.a must be a number"),
])
def test_out_of_range_values_name_the_field(patch, needle):
    with pytest.raises(ConfigError, match=re.escape(needle)):
        parse_config(patch)


def test_alpha_one_is_allowed():
    assert parse_config({"coefficients": {"alpha": 1.0}}).coefficients["alpha"] == 1.0


def test_window_must_hold_integer_step_count():
    with pytest.raises(ConfigError, match="delay.h / solver.dt"):
        parse_config({"delay": {"h": 0.1}, "solver": {"dt": 0.03}})


def test_coeffs_initial_requires_one_entry_per_mode():
    with pytest.raises(ConfigError, match="one coefficient per mode"):
        parse_config({"initial": {"kind": "coeffs"}})
    rc = parse_config({"operator": {"n_modes": 4},
                       "initial": {"kind": "coeffs",
                                   "coeffs": [0.1, 0.2, 0.3, 0.4]}})
    assert rc.initial["coeffs"] == [0.1, 0.2, 0.3, 0.4]


_SMALL = {
    "operator": {"n_modes": 4},
    "coefficients": {"grid_points": 256, "kernel_scale": 0.2},
    "delay": {"h": 0.05},
    "solver": {"dt": 0.01, "t_end": 2.0},
    "noise": {"spectrum": "geometric", "trace": 2.0},
    "initial": {"kind": "profile", "amplitude": 2.0},
}


def test_builders_reflect_the_parsed_values():
    rc = parse_config(_SMALL)
    op = make_operator(rc)
    assert op.n_modes == 4
    assert op.eigenvalues[0] == pytest.approx(np.pi ** 2, rel=1e-12)

    q = make_noise(rc, op)
    assert q.trace == pytest.approx(2.0, rel=1e-12)
    assert np.allclose(q.lambdas[1:] / q.lambdas[:-1], 0.5)

    q_pow = make_noise(parse_config({"operator": {"n_modes": 4}}), op)
    assert np.allclose(q_pow.lambdas * np.arange(1, 5) ** 2.0, q_pow.lambdas[0])

    cs = make_coefficients(rc)
    assert cs.f_name == "osgood" and cs.sigma_name == "osgood"
    assert cs.kernel_b.scale == 0.2 and cs.kernel_b.delay_mode == "point"
    assert cs.p == 3.0 and cs.lipschitz_Mg == 0.5
    assert cs.grid_points == 256

    cfg = make_solver_config(rc)
    assert cfg.dt == 0.01 and cfg.n_steps == 200

    seg = make_initial_segment(rc, op)
    assert seg.values.shape == (6, 4)
    # amplitude 2 on the first eigenfunction projects to 2/sqrt(2)
    assert seg.head()[0] == pytest.approx(np.sqrt(2.0), rel=1e-9)
    assert abs(seg.head()[1:]).max() < 1e-9

    zero_seg = make_initial_segment(parse_config({"operator": {"n_modes": 4},
                                                  "delay": {"h": 0.05},
                                                  "solver": {"dt": 0.01}}), op)
    assert not zero_seg.values.any()

    sa = make_stream(rc, 3).generator().standard_normal(5)
    sb = RngStream(rc.seed, 3).generator().standard_normal(5)
    assert np.array_equal(sa, sb)


def test_resolved_dict_reports_derived_quantities():
    rc = parse_config({})
    out = resolved_dict(rc)
    assert out["coefficients"]["grid_points"] == 128
    assert out["measure"]["burn_in"] == pytest.approx(0.2)
    der = out["derived"]
    assert der["window_steps"] == 100
    assert der["n_steps"] == 1000
    assert der["mu_1"] == pytest.approx(np.pi ** 2, rel=1e-12)
    assert der["mu_max"] == pytest.approx((32 * np.pi) ** 2, rel=1e-12)
    assert der["delta"] == pytest.approx(0.5 * np.pi ** 2, rel=1e-12)
    assert der["noise_trace"] == pytest.approx(1.0, rel=1e-12)


def test_resolved_dump_reloads_to_identical_resolution(tmp_path):
    rc = parse_config(_SMALL)
    path = tmp_path / "resolved.yaml"
    dump_resolved(rc, path)
    text = path.read_text()
    assert "derived:" in text  # informational block, ignored on reload
    rc2 = load_config(path)
    assert resolved_dict(rc2) == resolved_dict(rc)


def test_load_config_rejects_bad_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("solver: {dt: [unclosed\n")
    with pytest.raises(ConfigError, match="config parse failure"):
        load_config(path)
