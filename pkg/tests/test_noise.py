"""Covariance spectra, stream reproducibility and the exact OU increment."""
import numpy as np
import pytest

from nsfde import (DomainError, QWienerSpec, RngStream, ShapeError,
                   assemble_operator, geometric_qwiener,
                   ou_convolution_increment, ou_std, power_qwiener,
                   sample_increment)


def test_power_spectrum_shape_and_trace():
    q = power_qwiener(6, exponent=2.0, trace_target=3.0)
    assert q.trace == pytest.approx(3.0, rel=1e-15)
    assert q.lambdas.sum() == pytest.approx(3.0, rel=1e-15)
    k = np.arange(1.0, 7.0)
    assert np.allclose(q.lambdas / q.lambdas[0], k ** -2.0, rtol=1e-14)
    with pytest.raises(DomainError):
        power_qwiener(6, exponent=1.0)  # borderline harmonic tail: trace diverges
    with pytest.raises(DomainError):
        power_qwiener(6, trace_target=0.0)


def test_geometric_spectrum_halves_each_mode():
    q = geometric_qwiener(8, trace_target=float(sum(2.0 ** -k for k in range(1, 9))))
    assert np.array_equal(q.lambdas, 2.0 ** -np.arange(1, 9))
    assert np.allclose(q.lambdas[1:] / q.lambdas[:-1], 0.5, rtol=1e-14)


def test_spec_validation():
    with pytest.raises(DomainError):
        QWienerSpec(lambdas=np.array([1.0, -0.1]))
    with pytest.raises(DomainError):
        QWienerSpec(lambdas=np.array([1.0, 1.0]), trace=3.0)
    with pytest.raises(ShapeError):
        QWienerSpec(lambdas=np.zeros((2, 2)))
    q = QWienerSpec(lambdas=np.array([0.5, 0.25]))
    assert q.trace == 0.75 and q.n_modes == 2


def test_stream_reproducible_and_independent():
    a1 = RngStream(1212, 0).generator().standard_normal(100)
    a2 = RngStream(1212, 0).generator().standard_normal(100)
    b = RngStream(1212, 1).generator().standard_normal(100)
    c = RngStream(1213, 0).generator().standard_normal(100)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)
    assert not np.array_equal(a1, c)


def test_block_draw_equals_row_draws():
    # the solver draws its whole (steps, n) block in one call; per-row
    # consumers (picard, coupled probes) rely on the flattening order
    st = RngStream(987, 3)
    block = st.generator().standard_normal((100, 8))
    gen = st.generator()
    rows = np.vstack([gen.standard_normal(8) for _ in range(100)])
    assert np.array_equal(block, rows)


def test_sample_increment_law():
    q = power_qwiener(4, trace_target=2.0)
    gen = RngStream(5, 0).generator()
    draws = np.vstack([sample_increment(q, 0.01, gen) for _ in range(20000)])
    var = draws.var(axis=0)
    # each mode is N(0, lambda_k dt); 20k draws pin the variance to a few %
    assert np.allclose(var, q.lambdas * 0.01, rtol=0.06)
    assert abs(draws.mean()) <= 4.0 * np.sqrt(q.lambdas.max() * 0.01 / 20000)
    with pytest.raises(DomainError):
        sample_increment(q, 0.0, gen)


def test_ou_std_closed_form_and_limits():
    op = assemble_operator(n_modes=4)
    q = power_qwiener(4, trace_target=1.0)
    dt = 0.01
    want = np.sqrt(q.lambdas * (1.0 - np.exp(-2.0 * op.eigenvalues * dt))
                   / (2.0 * op.eigenvalues))
    assert np.allclose(ou_std(q, op, dt), want, rtol=1e-12)
    # long-step limit: the stationary standard deviation
    stat = np.sqrt(q.lambdas / (2.0 * op.eigenvalues))
    assert np.allclose(ou_std(q, op, 1e3), stat, rtol=1e-12)
    # short-step limit: sqrt(lambda dt), the plain increment scale
    assert np.allclose(ou_std(q, op, 1e-12), np.sqrt(q.lambdas * 1e-12), rtol=1e-4)
    with pytest.raises(ShapeError):
        ou_std(power_qwiener(3), op, dt)


def test_ou_convolution_increment_variance():
    op = assemble_operator(n_modes=3)
    q = power_qwiener(3, trace_target=1.0)
    gen = RngStream(6, 0).generator()
    draws = np.vstack([ou_convolution_increment(q, op, 0.05, gen)
                       for _ in range(20000)])
    assert np.allclose(draws.var(axis=0), ou_std(q, op, 0.05) ** 2, rtol=0.06)
