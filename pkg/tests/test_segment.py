"""History-window container: validation, interpolation, shifting, construction."""
import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsfde import (ConfigError, DomainError, RngStream, Segment, ShapeError,
                   assemble_operator, constant_segment, evaluate,
                   from_initial_condition, random_segment, segment_to_csv,
                   shift_append, sup_norm, zero_segment)


def test_window_shape_validation():
    with pytest.raises(ShapeError):
        Segment(h=0.1, dt=0.01, values=np.zeros((5, 3)))  # needs 11 nodes
    with pytest.raises(ShapeError):
        Segment(h=0.1, dt=0.01, values=np.zeros(11))
    with pytest.raises(ConfigError):
        Segment(h=0.1, dt=0.03, values=np.zeros((4, 3)))  # h/dt not an integer
    seg = Segment(h=0.1, dt=0.01, values=np.zeros((11, 3)))
    assert seg.m == 10 and seg.n_modes == 3
    assert seg.thetas[0] == pytest.approx(-0.1) and seg.thetas[-1] == 0.0


def test_evaluate_nodes_and_interpolation():
    vals = np.arange(6, dtype=float)[:, None]
    seg = Segment(h=0.5, dt=0.1, values=vals)
    assert evaluate(seg, -0.5)[0] == 0.0
    assert evaluate(seg, 0.0)[0] == 5.0
    assert evaluate(seg, -0.25)[0] == pytest.approx(2.5)  # halfway between nodes
    assert evaluate(seg, -0.17)[0] == pytest.approx(3.3, rel=1e-12)
    with pytest.raises(DomainError):
        evaluate(seg, 0.2)
    with pytest.raises(DomainError):
        evaluate(seg, -0.51)


def test_shift_append_rolls_the_window():
    seg = Segment(h=0.3, dt=0.1, values=np.arange(8, dtype=float).reshape(4, 2))
    out = shift_append(seg, np.array([9.0, 9.5]))
    assert np.array_equal(out.values[:-1], seg.values[1:])
    assert np.array_equal(out.values[-1], [9.0, 9.5])
    assert np.array_equal(seg.values.ravel(), np.arange(8.0))  # input untouched
    with pytest.raises(ShapeError):
        shift_append(seg, np.zeros(3))


def test_sup_norm_is_max_node_norm():
    seg = Segment(h=0.2, dt=0.1, values=np.array([[3.0, 4.0], [0.0, 1.0], [1.0, 0.0]]))
    assert sup_norm(seg) == 5.0
    assert sup_norm(zero_segment(0.2, 0.1, 2)) == 0.0


def test_constructors():
    z = zero_segment(0.2, 0.05, 4)
    assert z.values.shape == (5, 4) and not z.values.any()
    c = constant_segment(0.2, 0.05, [1.0, -2.0])
    assert np.array_equal(c.values, np.tile([1.0, -2.0], (5, 1)))


def test_from_initial_condition_profile_and_ramp():
    op = assemble_operator(n_modes=8)
    flat = from_initial_condition({"kind": "profile", "profile": "sin_pi",
                                   "amplitude": 2.0}, 0.1, 0.05, op)
    # 2 sin(pi x) = sqrt2 * e_1, constant in theta
    assert flat.values[:, 0] == pytest.approx(np.sqrt(2.0), rel=1e-12)
    assert np.max(np.abs(flat.values[:, 1:])) <= 1e-12

    ramped = from_initial_condition({"kind": "profile", "profile": "sin_pi",
                                     "amplitude": 2.0, "ramp": True}, 0.1, 0.05, op)
    assert ramped.values[0, 0] == pytest.approx(0.0, abs=1e-15)  # vanishes at -h
    assert ramped.values[-1, 0] == pytest.approx(np.sqrt(2.0), rel=1e-12)
    assert ramped.values[1, 0] == pytest.approx(np.sqrt(2.0) * 0.5, rel=1e-12)


def test_from_initial_condition_other_kinds():
    op = assemble_operator(n_modes=4)
    assert not from_initial_condition({"kind": "zero"}, 0.1, 0.05, op).values.any()

    cseg = from_initial_condition({"kind": "coeffs", "coeffs": [1.0, 0.0, 0.5, 0.0]},
                                  0.1, 0.05, op)
    assert np.array_equal(cseg.values[0], [1.0, 0.0, 0.5, 0.0])

    fn = from_initial_condition(lambda theta, x: (1.0 + theta) * np.sin(np.pi * x),
                                0.1, 0.05, op)
    assert np.allclose(fn.values[:, 0], (1.0 + fn.thetas) / np.sqrt(2.0), rtol=1e-12)

    vec = from_initial_condition(np.array([0.0, 1.0, 0.0, 0.0]), 0.1, 0.05, op)
    assert np.array_equal(vec.values[-1], [0.0, 1.0, 0.0, 0.0])

    with pytest.raises(ConfigError):
        from_initial_condition({"kind": "profile", "profile": "nope"}, 0.1, 0.05, op)
    with pytest.raises(ConfigError):
        from_initial_condition({"kind": "coeffs", "coeffs": [1.0]}, 0.1, 0.05, op)
    with pytest.raises(ConfigError):
        from_initial_condition({"kind": "wavelet"}, 0.1, 0.05, op)


def test_random_segment_modes_decay():
    op = assemble_operator(n_modes=16)
    gen = RngStream(3, 0).generator()
    seg = random_segment(op, 0.1, 0.025, gen, amplitude=1.0, decay=2.0)
    assert seg.values.shape == (5, 16)
    head = np.abs(seg.values).max(axis=0)
    assert head[0] > head[-1]  # n^{-2} amplitude envelope


def test_segment_csv_round_trip(tmp_path):
    op = assemble_operator(n_modes=3)
    seg = random_segment(op, 0.2, 0.05, RngStream(4, 0).generator())
    path = tmp_path / "seg.csv"
    segment_to_csv(seg, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["theta", "mode_1", "mode_2", "mode_3"]
    back = np.array([[float(c) for c in row] for row in rows[1:]])
    assert np.array_equal(back[:, 0], seg.thetas)  # repr round-trips exactly
    assert np.array_equal(back[:, 1:], seg.values)


@given(st.integers(1, 40), st.floats(0.05, 2.0), st.data())
@settings(max_examples=60, deadline=None)
def test_evaluate_stays_in_node_hull(m, h, data):
    vals = np.array([[data.draw(st.floats(-5.0, 5.0))] for _ in range(m + 1)])
    seg = Segment(h=h, dt=h / m, values=vals)
    theta = data.draw(st.floats(-h, 0.0))
    out = evaluate(seg, theta)[0]
    assert vals.min() - 1e-12 <= out <= vals.max() + 1e-12


@given(st.integers(2, 30), st.integers(0, 28))
@settings(max_examples=60, deadline=None)
def test_evaluate_reproduces_nodes_exactly(m, j):
    j = min(j, m)
    vals = np.sin(np.arange(m + 1, dtype=float))[:, None]
    seg = Segment(h=1.0, dt=1.0 / m, values=vals)
    assert evaluate(seg, seg.thetas[j])[0] == pytest.approx(vals[j, 0], abs=1e-12)
