"""File formats: exact round trips and format-tag enforcement."""
import json

import numpy as np
import pytest

from nsfde import (ConfigError, RngStream, SolverConfig, assemble_operator,
                   builtin_coefficients, krylov_bogoliubov, power_qwiener,
                   run_ensemble, simulate, zero_segment)
from nsfde.serialize import (MEASURE_FORMAT, REPORT_COLUMNS,
                             read_measure_jsonl, read_report_csv,
                             read_trajectory_jsonl, write_measure_jsonl,
                             write_report_csv, write_trajectory_jsonl)

OP = assemble_operator(n_modes=3)
Q = power_qwiener(3, trace_target=0.5)
CS = builtin_coefficients(f="zero", sigma="one", kernel="zero")


def _noisy_traj(segment_stride=0):
    cfg = SolverConfig(dt=0.01, t_end=0.1, segment_stride=segment_stride)
    return simulate(zero_segment(0.05, 0.01, 3), CS, OP, Q, cfg, RngStream(9, 1))


def test_trajectory_round_trip_is_bit_exact(tmp_path):
    traj = _noisy_traj()
    path = tmp_path / "traj.jsonl"
    write_trajectory_jsonl(traj, path)
    back = read_trajectory_jsonl(path)
    assert back["format"] == "nsfde-trajectory/1"
    assert back["h"] == 0.05 and back["dt"] == 0.01
    assert back["seed"] == 9 and back["stream_id"] == 1
    assert np.array_equal(back["times"], traj.times)
    assert np.array_equal(back["snapshots"], traj.snapshots)
    assert np.array_equal(back["seg_norms"], traj.seg_norms)
    assert np.array_equal(back["fp_iters"], traj.fp_iters)


def test_measure_round_trip_is_bit_exact(tmp_path):
    cfg = SolverConfig(dt=0.01, t_end=0.2, segment_stride=5)
    trajs = run_ensemble(zero_segment(0.05, 0.01, 3), CS, OP, Q, cfg,
                         seed=10, n_traj=2)
    mu = krylov_bogoliubov(trajs, burn_in=0.0)
    path = tmp_path / "measure.jsonl"
    write_measure_jsonl(mu, path)
    back = read_measure_jsonl(path)
    assert back.n_samples == mu.n_samples
    assert back.burn_in == 0.0 and back.thin == mu.thin
    assert back.t_end == mu.t_end
    assert np.array_equal(back.times, mu.times)
    assert np.array_equal(back.sources, mu.sources)
    for sa, sb in zip(back.segments, mu.segments):
        assert sa.h == sb.h and sa.dt == sb.dt
        assert np.array_equal(sa.values, sb.values)


def test_report_round_trip_keeps_floats_exact(tmp_path):
    path = tmp_path / "report.csv"
    rows = [("alpha_stat", 0.1 + 0.2, 0.25, None, "pass"),
            ("beta_stat", 1.0 / 3.0, None, 1e-300, "fail")]
    write_report_csv(path, rows)
    back = read_report_csv(path)
    assert [r["statistic"] for r in back] == ["alpha_stat", "beta_stat"]
    assert set(back[0]) == set(REPORT_COLUMNS)
    assert float(back[0]["estimate"]) == 0.1 + 0.2
    assert float(back[1]["estimate"]) == 1.0 / 3.0
    assert back[0]["threshold"] == ""       # None round-trips as empty
    assert float(back[1]["threshold"]) == 1e-300
    assert back[1]["verdict"] == "fail"


def test_format_tags_are_enforced(tmp_path):
    traj_path = tmp_path / "traj.jsonl"
    write_trajectory_jsonl(_noisy_traj(), traj_path)
    with pytest.raises(ConfigError, match="expected format"):
        read_measure_jsonl(traj_path)

    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    with pytest.raises(ConfigError, match="empty file"):
        read_trajectory_jsonl(empty)

    headless = tmp_path / "no_header.csv"
    headless.write_text("statistic,estimate\nx,1.0\n")
    with pytest.raises(ConfigError, match="missing report header"):
        read_report_csv(headless)

    tagged = tmp_path / "bad_tag.csv"
    tagged.write_text("format,statistic,estimate,stderr,threshold,verdict\n"
                      "bogus/9,x,1.0,,,pass\n")
    with pytest.raises(ConfigError, match="unexpected row tag"):
        read_report_csv(tagged)

    hollow = tmp_path / "hollow.jsonl"
    hollow.write_text(json.dumps({"format": MEASURE_FORMAT, "h": 0.05,
                                  "dt": 0.01, "n_modes": 3, "burn_in": 0.0,
                                  "thin": 1, "t_end": 1.0, "n_samples": 0}) + "\n")
    with pytest.raises(ConfigError, match="holds no samples"):
        read_measure_jsonl(hollow)
