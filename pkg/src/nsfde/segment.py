"""Delay-segment buffers: the discrete history window u_t on [-h, 0].

A segment stores mode coefficients at the m + 1 grid offsets
theta_j = -h + j dt (so values[0] is the oldest node and values[m] the
current state).  The sup norm is taken over the stored nodes; off-grid
evaluation interpolates linearly between neighbours.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, ShapeError
from .spectral import SpectralOperator

_RATIO_TOL = 1e-9

PROFILES = {
    "sin_pi": lambda x: np.sin(np.pi * x),
    "sin_2pi": lambda x: np.sin(2.0 * np.pi * x),
    "bump": lambda x: np.exp(-((x - 0.5) / 0.15) ** 2),
}


def _window_steps(h: float, dt: float) -> int:
    if h <= 0.0 or dt <= 0.0:
        raise ConfigError("delay h and step dt must be positive")
    ratio = h / dt
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > _RATIO_TOL * max(1.0, ratio):
        raise ConfigError(f"delay/step ratio h/dt = {ratio!r} must be a positive integer")
    return m


@dataclass(eq=False)
class Segment:
    """History window: values[j] holds the mode coefficients of u(t - h + j dt)."""

    h: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        m = _window_steps(self.h, self.dt)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ShapeError("segment values must be a (m + 1, n_modes) array")
        if self.values.shape[0] != m + 1:
            raise ShapeError(
                f"segment stores {self.values.shape[0]} nodes but h/dt = {m} needs {m + 1}")

    @property
    def m(self) -> int:
        return self.values.shape[0] - 1

    @property
    def n_modes(self) -> int:
        return self.values.shape[1]

    @property
    def thetas(self) -> np.ndarray:
        return -self.h + self.dt * np.arange(self.m + 1)

    def head(self) -> np.ndarray:
        """Current state u(t) (the newest node)."""
        return self.values[-1]


def sup_norm(seg: Segment) -> float:
    """sup over the stored window nodes of the H-norm ||u(t + theta)||."""
    return float(np.max(np.linalg.norm(seg.values, axis=1)))


def evaluate(seg: Segment, theta: float) -> np.ndarray:
    """Value at offset theta in [-h, 0]; linear interpolation between grid nodes."""
    tol = 1e-12 * max(1.0, seg.h)
    if theta < -seg.h - tol or theta > tol:
        raise DomainError(f"theta = {theta!r} outside [-h, 0] with h = {seg.h!r}")
    pos = (theta + seg.h) / seg.dt
    pos = min(max(pos, 0.0), float(seg.m))
    j = int(math.floor(pos))
    if j >= seg.m:
        return seg.values[seg.m].copy()
    frac = pos - j
    if frac == 0.0:
        return seg.values[j].copy()
    return (1.0 - frac) * seg.values[j] + frac * seg.values[j + 1]


def shift_append(seg: Segment, new_value) -> Segment:
    """Advance the window by one step: drop the oldest node, append u(t + dt)."""
    new_value = np.asarray(new_value, dtype=float)
    if new_value.shape != (seg.n_modes,):
        raise ShapeError("appended state has the wrong number of modes")
    vals = np.empty_like(seg.values)
    vals[:-1] = seg.values[1:]
    vals[-1] = new_value
    return Segment(h=seg.h, dt=seg.dt, values=vals)


def zero_segment(h: float, dt: float, n_modes: int) -> Segment:
    m = _window_steps(h, dt)
    return Segment(h=h, dt=dt, values=np.zeros((m + 1, n_modes)))


def constant_segment(h: float, dt: float, coeffs) -> Segment:
    coeffs = np.asarray(coeffs, dtype=float)
    m = _window_steps(h, dt)
    return Segment(h=h, dt=dt, values=np.tile(coeffs, (m + 1, 1)))


def from_initial_condition(phi, h: float, dt: float, op: SpectralOperator,
                           n_grid: int | None = None) -> Segment:
    """Sample and project an initial trajectory onto the discrete window.

    ``phi`` may be a mode-coefficient vector (held constant in theta), a
    callable ``phi(theta, x) -> field`` sampled at the window nodes, or a
    descriptor dict: ``{"kind": "zero"}`` or
    ``{"kind": "profile", "profile": name_or_callable, "amplitude": a, "ramp": bool}``
    where ``ramp`` scales the profile by (1 + theta / h), vanishing at -h.
    """
    m = _window_steps(h, dt)
    thetas = -h + dt * np.arange(m + 1)
    grid = op.grid(n_grid)

    if isinstance(phi, dict):
        kind = phi.get("kind", "zero")
        if kind == "zero":
            return zero_segment(h, dt, op.n_modes)
        if kind == "coeffs":
            coeffs = np.asarray(phi["coeffs"], dtype=float)
            if coeffs.shape != (op.n_modes,):
                raise ConfigError("initial.coeffs length must equal n_modes")
            return constant_segment(h, dt, coeffs)
        if kind == "profile":
            prof = phi.get("profile", "sin_pi")
            if isinstance(prof, str):
                try:
                    prof = PROFILES[prof]
                except KeyError:
                    raise ConfigError(f"unknown initial profile {phi['profile']!r}") from None
            amp = float(phi.get("amplitude", 1.0))
            coeffs = grid.project @ (amp * prof(grid.x))
            if phi.get("ramp", False):
                ramp = 1.0 + thetas / h
                return Segment(h=h, dt=dt, values=np.outer(ramp, coeffs))
            return constant_segment(h, dt, coeffs)
        raise ConfigError(f"unknown initial kind {kind!r}")

    if callable(phi):
        rows = np.empty((m + 1, op.n_modes))
        for j, theta in enumerate(thetas):
            field = np.asarray(phi(theta, grid.x), dtype=float)
            if field.shape != grid.x.shape:
                raise ShapeError("initial callable must return one value per grid node")
            rows[j] = grid.project @ field
        return Segment(h=h, dt=dt, values=rows)

    coeffs = np.asarray(phi, dtype=float)
    if coeffs.ndim == 1:
        if coeffs.shape != (op.n_modes,):
            raise ShapeError("initial coefficient vector length must equal n_modes")
        return constant_segment(h, dt, coeffs)
    raise ConfigError("unsupported initial-condition descriptor")


def random_segment(op: SpectralOperator, h: float, dt: float,
                   gen: np.random.Generator, amplitude: float = 1.0,
                   decay: float = 2.0) -> Segment:
    """Smooth random window: per-mode amplitudes n^{-decay}, smooth in theta.

    Used by the condition probes; the theta-dependence mixes a constant, a
    linear ramp and a half-period sine so sampled pairs exercise the whole
    window, not just the endpoints.
    """
    m = _window_steps(h, dt)
    thetas = -h + dt * np.arange(m + 1)
    n = np.arange(1, op.n_modes + 1, dtype=float)
    scales = amplitude * n ** (-decay)
    weights = gen.standard_normal((3, op.n_modes)) * scales
    basis = np.stack([np.ones_like(thetas), thetas / h, np.sin(np.pi * thetas / h)])
    return Segment(h=h, dt=dt, values=basis.T @ weights)


def segment_to_csv(seg: Segment, path) -> None:
    """Dump the window as CSV with columns (theta, mode_1, ..., mode_N)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta"] + [f"mode_{k}" for k in range(1, seg.n_modes + 1)])
        for theta, row in zip(seg.thetas, seg.values):
            writer.writerow([repr(float(theta))] + [repr(float(v)) for v in row])
