"""Occupation-measure estimation and distributional test harnesses.

The invariant-law estimator pools segment checkpoints from an ensemble of
trajectories into an equal-weight empirical measure over the history space,
after discarding a burn-in prefix.  Distribution comparisons go through a
fixed family of scalar observables (segment sup norm, endpoint norm, low
mode coefficients, plus user functionals) and an asymptotic two-sample
Kolmogorov-Smirnov test at the 5 percent level.

All reductions are order-independent: pooled samples are sorted by
(seed, stream_id, time) before anything is computed, so permuting the
trajectory list changes nothing, bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .coefficients import CoefficientSet
from .errors import ConfigError, DomainError, ShapeError
from .noise import QWienerSpec, RngStream
from .segment import Segment, sup_norm
from .solver import SolverConfig, Trajectory, simulate
from .spectral import SpectralOperator

#: asymptotic two-sample KS critical coefficient at the 5 percent level
KS_COEFF_5PCT = 1.358


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DomainError("KS statistic needs nonempty samples on both sides")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_critical(n: int, m: int) -> float:
    """5 percent asymptotic critical value c * sqrt((n+m)/(n m)), c = 1.358."""
    if n < 1 or m < 1:
        raise DomainError("KS critical value needs positive sample sizes")
    return KS_COEFF_5PCT * np.sqrt((n + m) / (n * m))


def default_functionals(n_modes: int) -> dict[str, Callable[[Segment], float]]:
    """Observable family: segment sup norm, endpoint norm, first few modes."""
    fns: dict[str, Callable[[Segment], float]] = {
        "seg_norm": sup_norm,
        "head_norm": lambda seg: float(np.linalg.norm(seg.head())),
    }
    for k in range(1, min(3, n_modes) + 1):
        fns[f"mode_{k}"] = lambda seg, _k=k: float(seg.head()[_k - 1])
    return fns


def run_ensemble(initial: Segment, cs: CoefficientSet, op: SpectralOperator,
                 qspec: QWienerSpec, cfg: SolverConfig, seed: int, n_traj: int,
                 first_stream: int = 0) -> list[Trajectory]:
    """Integrate ``n_traj`` independent trajectories on streams first_stream..+n-1."""
    if n_traj < 1:
        raise ConfigError("ensemble needs at least one trajectory")
    return [simulate(initial, cs, op, qspec, cfg,
                     RngStream(seed=seed, stream_id=first_stream + i))
            for i in range(n_traj)]


@dataclass(eq=False)
class EmpiricalMeasure:
    """Equal-weight occupation measure over pooled segment checkpoints."""

    segments: list
    times: np.ndarray
    sources: np.ndarray  # (n, 2) int: seed, stream_id per sample
    burn_in: float
    thin: int
    t_end: float

    def __post_init__(self):
        self._norms = None
        self._modes = None

    @property
    def n_samples(self) -> int:
        return len(self.segments)

    @property
    def n_modes(self) -> int:
        return self.segments[0].n_modes

    def norms(self) -> np.ndarray:
        if self._norms is None:
            self._norms = np.array([sup_norm(s) for s in self.segments])
        return self._norms

    def modes(self) -> np.ndarray:
        """Endpoint coefficient vectors, one row per sample."""
        if self._modes is None:
            self._modes = np.array([s.head() for s in self.segments])
        return self._modes

    def functional_values(self, fn: Callable[[Segment], float]) -> np.ndarray:
        return np.array([fn(s) for s in self.segments])


def krylov_bogoliubov(trajs, burn_in: float, thin: int = 1) -> EmpiricalMeasure:
    """Pool post-burn-in segment checkpoints into an empirical measure.

    Each trajectory must carry recorded segments (``segment_stride`` > 0 in
    the solver config); ``thin`` keeps every thin-th checkpoint of each
    trajectory after dropping times <= burn_in.  Pooled samples are sorted
    by (seed, stream_id, time), making the estimate invariant under
    reordering of the ensemble.
    """
    if isinstance(trajs, Trajectory):
        trajs = [trajs]
    trajs = list(trajs)
    if not trajs:
        raise ConfigError("empty trajectory ensemble")
    if thin < 1:
        raise ConfigError("thin must be a positive integer")
    t_end = max(float(t.times[-1]) for t in trajs)
    if burn_in >= t_end:
        raise ConfigError("burn_in must precede the end of the run")

    entries = []
    for traj in trajs:
        if traj.segments is None or traj.segment_times is None:
            raise ConfigError("trajectory carries no segment checkpoints; "
                              "rerun with solver.segment_stride > 0")
        keep = np.nonzero(traj.segment_times > burn_in)[0][::thin]
        for j in keep:
            entries.append((traj.seed, traj.stream_id,
                            float(traj.segment_times[j]), traj.segments[j]))
    if not entries:
        raise ConfigError("no segment checkpoints survive the burn-in window")
    entries.sort(key=lambda e: (e[0], e[1], e[2]))
    return EmpiricalMeasure(
        segments=[e[3] for e in entries],
        times=np.array([e[2] for e in entries]),
        sources=np.array([[e[0], e[1]] for e in entries], dtype=np.int64),
        burn_in=burn_in, thin=thin, t_end=t_end)


@dataclass(eq=False)
class TightnessReport:
    """Worst-over-time tail fractions of the segment norm at each radius."""

    r_grid: np.ndarray
    estimates: np.ndarray
    n_trajectories: int
    checkpoints: np.ndarray

    def largest_radius_estimate(self) -> float:
        return float(self.estimates[-1])


def tightness_diagnostic(trajs: Sequence[Trajectory], r_grid) -> TightnessReport:
    """For each radius R, the max over checkpoint times of the fraction of
    trajectories whose rolling segment norm exceeds R.

    Exceedance counts are integers divided by the ensemble size, so the
    report is exactly permutation invariant and exactly nonincreasing in R.
    """
    trajs = list(trajs)
    if not trajs:
        raise ConfigError("empty trajectory ensemble")
    times = trajs[0].times
    if times.size < 2:
        raise ConfigError("tightness needs at least two checkpoint times")
    for t in trajs[1:]:
        if t.times.shape != times.shape or not np.array_equal(t.times, times):
            raise ShapeError("ensemble trajectories disagree on checkpoint times")
    r_grid = np.sort(np.asarray(r_grid, dtype=float))
    if r_grid.size == 0 or r_grid[0] < 0.0:
        raise DomainError("radius grid must be nonempty and nonnegative")
    norms = np.vstack([t.seg_norms for t in trajs])  # (M, n_times)
    m = norms.shape[0]
    estimates = np.array([
        np.max(np.count_nonzero(norms > r, axis=0)) / m for r in r_grid])
    return TightnessReport(r_grid=r_grid, estimates=estimates,
                           n_trajectories=m, checkpoints=times.copy())


@dataclass(eq=False)
class ComparisonReport:
    """Per-observable distribution comparison (means, SEs, KS vs. 5% critical)."""

    names: list
    mean_before: np.ndarray
    mean_after: np.ndarray
    diff: np.ndarray
    stderr: np.ndarray
    ks_stat: np.ndarray
    ks_crit: float
    passed: np.ndarray

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))

    def rows(self):
        for i, name in enumerate(self.names):
            yield (name, float(self.mean_before[i]), float(self.mean_after[i]),
                   float(self.diff[i]), float(self.stderr[i]),
                   float(self.ks_stat[i]), self.ks_crit, bool(self.passed[i]))


def _compare(names, before: np.ndarray, after: np.ndarray) -> ComparisonReport:
    # before/after: (n_functionals, n_samples) value matrices
    nb, na = before.shape[1], after.shape[1]
    crit = ks_critical(nb, na)
    mean_b = before.mean(axis=1)
    mean_a = after.mean(axis=1)
    se = np.sqrt(before.var(axis=1, ddof=1) / nb + after.var(axis=1, ddof=1) / na)
    ks = np.array([ks_statistic(before[i], after[i]) for i in range(len(names))])
    return ComparisonReport(names=list(names), mean_before=mean_b, mean_after=mean_a,
                            diff=mean_a - mean_b, stderr=se, ks_stat=ks,
                            ks_crit=crit, passed=ks < crit)


def invariance_test(mu: EmpiricalMeasure, t: float, cs: CoefficientSet,
                    op: SpectralOperator, qspec: QWienerSpec, dt: float,
                    stream: RngStream, n_draws: int = 500,
                    functionals: Optional[dict] = None) -> ComparisonReport:
    """Push ``n_draws`` segments drawn from the measure forward by time ``t``
    with fresh noise and compare observable laws before vs. after.

    Draw i evolves on stream_id = stream.stream_id + 1 + i; the index draw
    itself uses the base stream, so the whole test is reproducible.
    """
    if t <= 0.0:
        raise DomainError("evolution time must be positive")
    if n_draws < 2:
        raise ConfigError("invariance test needs at least two draws")
    if mu.n_samples < 1:
        raise ConfigError("empirical measure holds no stored segments")
    if functionals is None:
        functionals = default_functionals(mu.n_modes)
    names = list(functionals)

    gen = stream.generator()
    idx = gen.integers(0, mu.n_samples, size=n_draws)
    steps = max(int(round(t / dt)), 1)
    cfg = SolverConfig(dt=dt, t_end=steps * dt, store_stride=steps)

    before = np.empty((len(names), n_draws))
    after = np.empty((len(names), n_draws))
    for j, i in enumerate(idx):
        seg = mu.segments[i]
        evolved = simulate(seg, cs, op, qspec, cfg,
                           replace(stream, stream_id=stream.stream_id + 1 + j))
        fin = evolved.final_segment
        for k, name in enumerate(names):
            before[k, j] = functionals[name](seg)
            after[k, j] = functionals[name](fin)
    return _compare(names, before, after)


def homogeneity_test(phi: Segment, s: float, t: float, cs: CoefficientSet,
                     op: SpectralOperator, qspec: QWienerSpec, dt: float,
                     stream: RngStream, n_samples: int = 1000,
                     functionals: Optional[dict] = None) -> ComparisonReport:
    """Consistency check that starting at time s and at time 0 give one law.

    Side A imposes phi at time s and runs to t, consuming the noise rows a
    path started at 0 would have used on [0, s) (drawn and discarded); side
    B runs from 0 to t - s directly.  The stepper is autonomous, so this
    validates the harness and the stream bookkeeping, not new dynamics.
    """
    if s < 0.0 or t <= s:
        raise DomainError("need t > s >= 0")
    if n_samples < 2:
        raise ConfigError("homogeneity test needs at least two samples per side")
    if functionals is None:
        functionals = default_functionals(phi.n_modes)
    names = list(functionals)
    steps = max(int(round((t - s) / dt)), 1)
    skip = int(round(s / dt))
    cfg = SolverConfig(dt=dt, t_end=steps * dt, store_stride=steps)
    n = op.n_modes

    side_a = np.empty((len(names), n_samples))
    side_b = np.empty((len(names), n_samples))
    for i in range(n_samples):
        st_a = replace(stream, stream_id=stream.stream_id + 1 + i)
        z = st_a.generator().standard_normal((skip + steps, n))[skip:]
        traj_a = simulate(phi, cs, op, qspec, cfg, st_a, noise_z=z)
        st_b = replace(stream, stream_id=stream.stream_id + 1 + n_samples + i)
        traj_b = simulate(phi, cs, op, qspec, cfg, st_b)
        for k, name in enumerate(names):
            side_a[k, i] = functionals[name](traj_a.final_segment)
            side_b[k, i] = functionals[name](traj_b.final_segment)
    return _compare(names, side_a, side_b)


@dataclass(eq=False)
class DependenceReport:
    """Coupled Monte Carlo estimates of E sup_{t<=T} ||u(phi) - u(psi_n)||^p."""

    offsets: np.ndarray      # ||phi - psi_n|| in the segment sup norm
    estimates: np.ndarray
    stderrs: np.ndarray
    per_pair: np.ndarray     # (n_levels, n_paths) raw sup^p values
    p: float
    horizon: float


def continuous_dependence_probe(phi: Segment, psi_list: Sequence[Segment],
                                p: float, horizon: float, cs: CoefficientSet,
                                op: SpectralOperator, qspec: QWienerSpec,
                                dt: float, stream: RngStream,
                                n_paths: int = 100) -> DependenceReport:
    """Pathwise-coupled probe of continuous dependence on the initial window.

    Pair j draws one noise block (stream_id = base + 1 + j) shared by the
    phi-path and every psi_n-path, so the difference paths carry no Monte
    Carlo noise of their own and psi = phi returns exactly zero.
    """
    psi_list = list(psi_list)
    if not psi_list:
        raise ConfigError("need at least one comparison segment")
    if p <= 0.0:
        raise DomainError("moment exponent must be positive")
    offsets = np.array([sup_norm(Segment(h=phi.h, dt=phi.dt,
                                         values=phi.values - psi.values))
                        for psi in psi_list])
    if np.any(np.diff(offsets) > 1e-12 * max(1.0, offsets[0])):
        raise DomainError("comparison segments must be ordered with "
                          "nonincreasing distance from the base segment")
    steps = max(int(round(horizon / dt)), 1)
    cfg = SolverConfig(dt=dt, t_end=steps * dt, store_stride=1)
    n = op.n_modes

    per_pair = np.empty((len(psi_list), n_paths))
    for j in range(n_paths):
        st = replace(stream, stream_id=stream.stream_id + 1 + j)
        z = st.generator().standard_normal((steps, n))
        base = simulate(phi, cs, op, qspec, cfg, st, noise_z=z).snapshots
        for i, psi in enumerate(psi_list):
            other = simulate(psi, cs, op, qspec, cfg, st, noise_z=z).snapshots
            sup = np.max(np.linalg.norm(base - other, axis=1))
            per_pair[i, j] = sup ** p
    estimates = per_pair.mean(axis=1)
    stderrs = per_pair.std(axis=1, ddof=1) / np.sqrt(n_paths)
    return DependenceReport(offsets=offsets, estimates=estimates,
                            stderrs=stderrs, per_pair=per_pair, p=p,
                            horizon=steps * dt)
