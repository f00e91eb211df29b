"""One-step mild integration of the neutral delay dynamics and ensemble drivers.

Scheme: over one step the linear part is applied exactly in the eigenbasis
and the drift, diffusion and neutral functionals are frozen at the left
endpoint, which closes the step as the identity

    u(t+dt) + g(u_{t+dt}) = S(dt) u(t) + g(u_t) + Phi1(dt) f(u_t) + xi,

with Phi1 = (1 - e^{-mu dt}) / mu per mode and xi the exactly-sampled
stochastic-convolution increment composed with the sigma multiplier frozen
at t.  The quadrature of the neutral history term is absorbed analytically,
so the internal bracket v = u + g(u_t) advances by
v(t+dt) = S(dt) v(t) + (I - S(dt)) g(u_t) + Phi1 f(u_t) + xi exactly.

When g reads the segment only at theta = -h (and h >= dt) the new state is
explicit; otherwise it is resolved by fixed-point iteration whose residuals
contract at the rate of the neutral Lipschitz constant.

The successive-approximation driver (``picard_run``) replays the same noise
stream across iterates: iterate 0 carries only the neutral-linear dynamics,
and iterate n evaluates drift and diffusion along iterate n - 1 while the
neutral term stays attached to the current iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import noise as noise_mod
from .coefficients import CoefficientSet
from .errors import (BlowupError, ConfigError, DomainError,
                     NonconvergenceError, ShapeError)
from .noise import QWienerSpec, RngStream
from .segment import Segment, _window_steps
from .spectral import SpectralOperator


@dataclass(eq=False)
class SolverConfig:
    dt: float
    t_end: float
    fp_tol: float = 1e-12
    fp_max: int = 200
    mode: str = "direct"  # direct | picard
    picard_iters: int = 8
    store_stride: int = 1
    segment_stride: int = 0
    blowup_threshold: float = 1e8

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigError("solver.dt must be positive")
        if self.t_end < self.dt:
            raise ConfigError("solver.t_end must be at least one step")
        if self.fp_tol <= 0.0:
            raise ConfigError("solver.fp_tol must be positive")
        if self.fp_max < 1:
            raise ConfigError("solver.fp_max must be at least 1")
        if self.mode not in ("direct", "picard"):
            raise ConfigError(f"unknown solver.mode {self.mode!r}")
        if self.picard_iters < 1:
            raise ConfigError("solver.picard_iters must be at least 1")
        if self.store_stride < 1 or self.segment_stride < 0:
            raise ConfigError("solver strides must be positive (segment stride may be 0)")

    @property
    def n_steps(self) -> int:
        steps = int(round(self.t_end / self.dt))
        return max(steps, 1)


@dataclass(eq=False)
class Trajectory:
    """Recorded path: snapshots every ``store_stride`` steps plus provenance."""

    times: np.ndarray
    snapshots: np.ndarray
    seg_norms: np.ndarray
    fp_iters: np.ndarray
    seed: int
    stream_id: int
    dt: float
    store_stride: int
    final_segment: Segment
    segments: Optional[list] = None
    segment_times: Optional[np.ndarray] = None
    fp_residuals: Optional[list] = None

    @property
    def n_modes(self) -> int:
        return self.snapshots.shape[1]


class StepResult(NamedTuple):
    new_state: np.ndarray
    fp_iters: int
    residuals: list


class _Stepper:
    """Precomputed per-run machinery; ``advance`` performs one step on a raw window."""

    def __init__(self, cs: CoefficientSet, op: SpectralOperator, qspec: QWienerSpec,
                 cfg: SolverConfig, h: float):
        if qspec.n_modes != op.n_modes:
            raise ShapeError("covariance spectrum and operator truncation disagree")
        self.cs = cs
        self.op = op
        self.cfg = cfg
        self.m = _window_steps(h, cfg.dt)
        mu = op.eigenvalues
        self.decay = np.exp(-mu * cfg.dt)
        self.phi1 = -np.expm1(-mu * cfg.dt) / mu
        self.ou_std = noise_mod.ou_std(qspec, op, cfg.dt)
        self.grid = op.grid(cs.grid_points)
        self.n = op.n_modes
        self._zero = np.zeros(self.n)

        kern = cs.kernel_b
        if kern is None:
            self.g_mode = "none"
            self._g_coeffs = None
        else:
            self.g_mode = kern.delay_mode
            self._g_profile_coeffs = self.grid.project @ kern.profile(self.grid.x)
            self._g_zmap = kern.z_map
        self.f_zero = cs.f_is_zero
        self.sigma_const = cs.sigma_const

    def g_of(self, state: np.ndarray) -> np.ndarray:
        """Neutral functional applied to the single segment node it reads."""
        if self.g_mode == "none":
            return self._zero
        fld = self.grid.synth @ state
        mass = float(self.grid.weights @ self._g_zmap(fld))
        return self._g_profile_coeffs * mass

    def f_of(self, state: np.ndarray) -> np.ndarray:
        if self.f_zero:
            return self._zero
        fld = self.grid.synth @ state
        return self.grid.project @ self.cs.f(fld)

    def noise_of(self, delayed_state: np.ndarray, z: np.ndarray) -> np.ndarray:
        """OU increment composed with the multiplier frozen at the left endpoint."""
        ou = self.ou_std * z
        if self.sigma_const is not None:
            if self.sigma_const == 1.0:
                return ou
            return self.sigma_const * ou
        sig_field = np.asarray(self.cs.sigma(self.grid.synth @ delayed_state), dtype=float)
        return self.grid.project @ (sig_field * (self.grid.synth @ ou))

    def advance(self, hist: np.ndarray, z: np.ndarray,
                f_src: Optional[np.ndarray] = None,
                sig_src: Optional[np.ndarray] = None) -> StepResult:
        """One step from the chronological window ``hist`` (rows: u(t-h)..u(t)).

        ``f_src``/``sig_src`` override the states feeding the drift and the
        diffusion multiplier (used by the successive-approximation driver);
        both default to this trajectory's own delayed node.
        """
        u = hist[-1]
        delayed = hist[0]
        g_curr = self.g_of(delayed if self.g_mode == "point" else u)
        rhs = self.decay * u + g_curr
        if not self.f_zero:
            rhs = rhs + self.phi1 * self.f_of(delayed if f_src is None else f_src)
        rhs = rhs + self.noise_of(delayed if sig_src is None else sig_src, z)

        if self.g_mode != "instant":
            if self.g_mode == "point":
                # u(t + dt - h) is already history whenever h >= dt
                rhs = rhs - self.g_of(hist[1])
            return StepResult(rhs, 0, [])

        # neutral term reads the unknown new state: contract to the fixed point
        u_k = u
        residuals = []
        for _ in range(self.cfg.fp_max):
            u_next = rhs - self.g_of(u_k)
            r = float(np.linalg.norm(u_next - u_k))
            residuals.append(r)
            u_k = u_next
            if r < self.cfg.fp_tol:
                return StepResult(u_k, len(residuals), residuals)
        raise NonconvergenceError(
            f"implicit neutral step failed to reach fp_tol={self.cfg.fp_tol:g} "
            f"within {self.cfg.fp_max} iterations (last residual {residuals[-1]:.3e})",
            residual=residuals[-1], iterations=len(residuals))


def step(seg: Segment, cs: CoefficientSet, op: SpectralOperator, qspec: QWienerSpec,
         cfg: SolverConfig, gen: np.random.Generator) -> StepResult:
    """Advance one step from an explicit segment, drawing one noise row from ``gen``."""
    stepper = _Stepper(cs, op, qspec, cfg, seg.h)
    z = gen.standard_normal(op.n_modes)
    return stepper.advance(seg.values, z)


def _check_initial(initial: Segment, op: SpectralOperator, cfg: SolverConfig):
    if initial.n_modes != op.n_modes:
        raise ShapeError("initial segment and operator truncation dimensions disagree")
    if abs(initial.dt - cfg.dt) > 1e-12 * max(1.0, cfg.dt):
        raise ConfigError("initial segment step must equal solver.dt")


def simulate(initial: Segment, cs: CoefficientSet, op: SpectralOperator,
             qspec: QWienerSpec, cfg: SolverConfig, stream: RngStream,
             noise_z: Optional[np.ndarray] = None,
             collect_fp_residuals: bool = False) -> Trajectory:
    """Integrate one trajectory on [0, t_end] from the given initial window.

    The whole standard-normal block for the run is drawn in one call from
    the stream's generator (bit-identical to drawing row by row), which is
    what makes picard replays and coupled-noise probes exact.  ``noise_z``
    overrides the block, e.g. for shared-refinement convergence studies.
    """
    _check_initial(initial, op, cfg)
    stepper = _Stepper(cs, op, qspec, cfg, initial.h)
    steps = cfg.n_steps
    n = op.n_modes
    if noise_z is None:
        z_block = stream.generator().standard_normal((steps, n))
    else:
        z_block = np.asarray(noise_z, dtype=float)
        if z_block.shape != (steps, n):
            raise ShapeError(f"noise block must have shape {(steps, n)}")

    hist = initial.values.copy()
    norms = np.linalg.norm(hist, axis=1)
    times = [0.0]
    snaps = [hist[-1].copy()]
    seg_norms = [float(norms.max())]
    fp_iters = [0]
    segments = [] if cfg.segment_stride else None
    segment_times = [] if cfg.segment_stride else None
    residual_log = [] if collect_fp_residuals else None

    for i in range(steps):
        u_new, iters, residuals = stepper.advance(hist, z_block[i])
        nrm = float(np.linalg.norm(u_new))
        if not math.isfinite(nrm) or nrm > cfg.blowup_threshold:
            raise BlowupError(f"state norm {nrm:.3e} at t = {(i + 1) * cfg.dt:g} "
                              f"exceeds blow-up guard {cfg.blowup_threshold:g}")
        hist[:-1] = hist[1:]
        hist[-1] = u_new
        norms[:-1] = norms[1:]
        norms[-1] = nrm
        if residual_log is not None:
            residual_log.append(residuals)
        if (i + 1) % cfg.store_stride == 0:
            times.append((i + 1) * cfg.dt)
            snaps.append(u_new.copy())
            seg_norms.append(float(norms.max()))
            fp_iters.append(iters)
        if cfg.segment_stride and (i + 1) % cfg.segment_stride == 0:
            segments.append(Segment(h=initial.h, dt=cfg.dt, values=hist.copy()))
            segment_times.append((i + 1) * cfg.dt)

    return Trajectory(
        times=np.asarray(times), snapshots=np.asarray(snaps),
        seg_norms=np.asarray(seg_norms), fp_iters=np.asarray(fp_iters, dtype=int),
        seed=stream.seed, stream_id=stream.stream_id, dt=cfg.dt,
        store_stride=cfg.store_stride,
        final_segment=Segment(h=initial.h, dt=cfg.dt, values=hist.copy()),
        segments=segments,
        segment_times=None if segment_times is None else np.asarray(segment_times),
        fp_residuals=residual_log)


def _rolling_seg_norms(initial: Segment, path: np.ndarray, m: int) -> np.ndarray:
    """Window sup norms along a full path (path[0] is the initial state)."""
    all_rows = np.vstack([initial.values[:-1], path])
    norms = np.linalg.norm(all_rows, axis=1)
    return np.array([norms[i:i + m + 1].max() for i in range(path.shape[0])])


def _traj_from_path(initial: Segment, path: np.ndarray, cfg: SolverConfig,
                    stream: RngStream, fp_counts: np.ndarray) -> Trajectory:
    m = initial.m
    steps = path.shape[0] - 1
    idx = np.arange(0, steps + 1, cfg.store_stride)
    seg_norms = _rolling_seg_norms(initial, path, m)
    window = np.vstack([initial.values[:-1], path])[steps:steps + m + 1]
    return Trajectory(
        times=idx * cfg.dt, snapshots=path[idx], seg_norms=seg_norms[idx],
        fp_iters=fp_counts[idx], seed=stream.seed, stream_id=stream.stream_id,
        dt=cfg.dt, store_stride=cfg.store_stride,
        final_segment=Segment(h=initial.h, dt=cfg.dt, values=window.copy()))


def picard_run(initial: Segment, cs: CoefficientSet, op: SpectralOperator,
               qspec: QWienerSpec, cfg: SolverConfig,
               stream: RngStream) -> list[tuple[Trajectory, float]]:
    """Successive approximations with replayed noise.

    Iterate 0 integrates the pure neutral-linear dynamics (drift and
    diffusion off).  Iterate n >= 1 re-runs the same grid and the same
    standard-normal block, evaluating drift and diffusion along iterate
    n - 1 (at the delayed node) while the neutral term follows the current
    iterate.  Returns one (trajectory, sup_diff) pair per iterate, where
    sup_diff is the sup over grid times of ||u^n - u^{n-1}|| (NaN for
    iterate 0).
    """
    if cfg.mode != "picard":
        raise ConfigError("picard_run requires solver.mode = 'picard'")
    _check_initial(initial, op, cfg)
    steps = cfg.n_steps
    m = initial.m
    n = op.n_modes
    z_block = stream.generator().standard_normal((steps, n))

    cs0 = replace(cs, f=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                  sigma=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                  f_name="zero", sigma_name="zero", sigma_const=0.0, f_is_zero=True)
    stepper0 = _Stepper(cs0, op, qspec, cfg, initial.h)
    stepper = _Stepper(cs, op, qspec, cfg, initial.h)

    def run(active: _Stepper, prev_path: Optional[np.ndarray]):
        hist = initial.values.copy()
        path = np.empty((steps + 1, n))
        path[0] = hist[-1]
        counts = np.zeros(steps + 1, dtype=int)
        for i in range(steps):
            if prev_path is None:
                res = active.advance(hist, z_block[i])
            else:
                j = i - m
                src = prev_path[j] if j >= 0 else initial.values[i]
                res = active.advance(hist, z_block[i], f_src=src, sig_src=src)
            hist[:-1] = hist[1:]
            hist[-1] = res.new_state
            path[i + 1] = res.new_state
            counts[i + 1] = res.fp_iters
            nrm = float(np.linalg.norm(res.new_state))
            if not math.isfinite(nrm) or nrm > cfg.blowup_threshold:
                raise BlowupError(f"state norm {nrm:.3e} exceeds blow-up guard "
                                  f"in successive approximation")
        return path, counts

    out = []
    path_prev, counts = run(stepper0, None)
    out.append((_traj_from_path(initial, path_prev, cfg, stream, counts), math.nan))
    for _ in range(cfg.picard_iters):
        path_new, counts = run(stepper, path_prev)
        sup_diff = float(np.max(np.linalg.norm(path_new - path_prev, axis=1)))
        out.append((_traj_from_path(initial, path_new, cfg, stream, counts), sup_diff))
        path_prev = path_new
    return out


# ---------------------------------------------------------------------------
# contraction-window arithmetic


def _check_window_args(mg: float, p: float, alpha: float, c_frac: float):
    if not 0.0 < mg < 1.0:
        raise DomainError("Mg must lie in (0, 1)")
    if p <= 2.0:
        raise DomainError("exponent p must exceed 2")
    if not 0.0 < alpha <= 1.0:
        raise DomainError("alpha must lie in (0, 1]")
    if c_frac <= 0.0:
        raise DomainError("decay-envelope constant must be positive")


def contraction_factor(mg: float, p: float, alpha: float, c_frac: float,
                       horizon: float) -> float:
    """Contraction factor of the auxiliary neutral map on a window of length ``horizon``:

        Mg + Mg^p c^p T^{alpha p} / ((1 - Mg)^{p-1} alpha^p),

    where c is the decay-envelope constant at order 1 - alpha.
    """
    _check_window_args(mg, p, alpha, c_frac)
    if horizon < 0.0:
        raise DomainError("window length must be nonnegative")
    return mg + (mg ** p) * (c_frac ** p) * horizon ** (alpha * p) / (
        (1.0 - mg) ** (p - 1.0) * alpha ** p)


def stability_bound(mg: float, p: float, alpha: float, c_frac: float,
                    horizon: float) -> float:
    """Second smallness requirement on the window:

        Mg + (5 / (1 - Mg))^{p-1} (c T^alpha Mg / alpha)^p < 1.
    """
    _check_window_args(mg, p, alpha, c_frac)
    if horizon < 0.0:
        raise DomainError("window length must be nonnegative")
    return mg + (5.0 / (1.0 - mg)) ** (p - 1.0) * (
        c_frac * horizon ** alpha * mg / alpha) ** p


class HorizonResult(NamedTuple):
    horizon: float
    contraction: float
    stability: float
    capped: bool


def find_horizon(mg: float, p: float, alpha: float, c_frac: float,
                 cap: float = 1e12, rel_tol: float = 1e-10) -> HorizonResult:
    """Largest window length with both smallness bounds strictly below 1 (bisection).

    Both bounds increase monotonically from Mg < 1 at T = 0, so the feasible
    set is an interval; the returned horizon sits on the feasible side of
    the crossing to relative tolerance ``rel_tol``.  If even ``cap``
    satisfies both bounds the cap is returned with ``capped=True``.
    """
    _check_window_args(mg, p, alpha, c_frac)

    def worst(t):
        return max(contraction_factor(mg, p, alpha, c_frac, t),
                   stability_bound(mg, p, alpha, c_frac, t))

    if worst(cap) < 1.0:
        return HorizonResult(cap, contraction_factor(mg, p, alpha, c_frac, cap),
                             stability_bound(mg, p, alpha, c_frac, cap), True)
    hi = min(1.0, cap)
    while worst(hi) < 1.0:
        hi *= 2.0
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if worst(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return HorizonResult(lo, contraction_factor(mg, p, alpha, c_frac, lo),
                         stability_bound(mg, p, alpha, c_frac, lo), False)
