"""Trace-class Q-Wiener increments and exact stochastic-convolution sampling.

The driving noise is W(t) = sum_k sqrt(lambda_k) beta_k(t) e_k with the
covariance eigenbasis aligned with the operator eigenbasis, so both the
plain increment and the stochastic-convolution (OU) increment are diagonal
Gaussian draws.  Streams are keyed counter-style: Philox seeded through a
``SeedSequence(seed, spawn_key=(stream_id,))`` gives reproducible,
statistically independent sequences, one stream per trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .spectral import SpectralOperator

_TRACE_TOL = 1e-14


@dataclass(frozen=True)
class RngStream:
    """Provenance handle (seed, stream_id) for one reproducible noise stream."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator for this stream; same (seed, stream_id) -> identical draws."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))


@dataclass(eq=False)
class QWienerSpec:
    """Covariance spectrum of the Q-Wiener process (finite trace by construction)."""

    lambdas: np.ndarray
    trace: float | None = None

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        if self.lambdas.ndim != 1 or self.lambdas.size == 0:
            raise ShapeError("lambdas must be a nonempty 1-d array")
        if np.any(self.lambdas < 0.0):
            raise DomainError("covariance eigenvalues must be nonnegative")
        total = float(np.sum(self.lambdas))
        if self.trace is None:
            self.trace = total
        elif abs(self.trace - total) > _TRACE_TOL * max(1.0, total):
            raise DomainError("declared trace disagrees with sum of eigenvalues")

    @property
    def n_modes(self) -> int:
        return int(self.lambdas.size)


def power_qwiener(n_modes: int, exponent: float = 2.0, trace_target: float = 1.0) -> QWienerSpec:
    """Polynomial spectrum lambda_k = c k^{-q}, q > 1, normalized to the trace target."""
    if exponent <= 1.0:
        raise DomainError("power spectrum needs exponent q > 1 for a finite trace")
    if trace_target <= 0.0:
        raise DomainError("trace_target must be positive")
    k = np.arange(1, n_modes + 1, dtype=float)
    raw = k ** (-exponent)
    return QWienerSpec(lambdas=raw * (trace_target / raw.sum()))


def geometric_qwiener(n_modes: int, trace_target: float = 1.0) -> QWienerSpec:
    """Geometric spectrum lambda_k = c 2^{-k}, normalized to the trace target."""
    if trace_target <= 0.0:
        raise DomainError("trace_target must be positive")
    k = np.arange(1, n_modes + 1, dtype=float)
    raw = 2.0 ** (-k)
    return QWienerSpec(lambdas=raw * (trace_target / raw.sum()))


def sample_increment(spec: QWienerSpec, dt: float, gen: np.random.Generator) -> np.ndarray:
    """One Q-Wiener increment: mode k ~ N(0, lambda_k dt), independent across modes."""
    if dt <= 0.0:
        raise DomainError("increment length dt must be positive")
    return gen.standard_normal(spec.n_modes) * np.sqrt(spec.lambdas * dt)


def ou_std(spec: QWienerSpec, op: SpectralOperator, dt: float) -> np.ndarray:
    """Per-mode standard deviation of the exact stochastic-convolution increment.

    Var of int_t^{t+dt} e^{-mu_k (t+dt-s)} sqrt(lambda_k) d beta_k(s) is
    lambda_k (1 - e^{-2 mu_k dt}) / (2 mu_k); its stationary limit is
    lambda_k / (2 mu_k).
    """
    if dt <= 0.0:
        raise DomainError("increment length dt must be positive")
    if spec.n_modes != op.n_modes:
        raise ShapeError("covariance spectrum and operator truncation disagree")
    mu = op.eigenvalues
    return np.sqrt(spec.lambdas * (-np.expm1(-2.0 * mu * dt)) / (2.0 * mu))


def ou_convolution_increment(spec: QWienerSpec, op: SpectralOperator, dt: float,
                             gen: np.random.Generator) -> np.ndarray:
    """Exact-in-law OU increment of the stochastic convolution over one step."""
    return gen.standard_normal(spec.n_modes) * ou_std(spec, op, dt)
