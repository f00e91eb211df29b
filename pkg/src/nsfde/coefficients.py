"""Drift, diffusion and neutral-kernel functionals plus their condition checkers.

The scalar nonlinearities f and sigma act pointwise in physical space on the
delayed field (Nemytskii maps); the neutral functional g integrates a kernel
b(x, z, y) of the delayed field over the domain.  Built-ins include the
bounded non-Lipschitz pair (f, N): f(x) = |x| (p |ln|x||)^{1/p} capped at
|x| = e^{-2}, and the concave modulus N(s) = -s ln s continued linearly, for
which |f(x) - f(0)|^p = N(|x|^p) holds with equality on the whole core
branch.  The checkers turn the standing well-posedness assumptions (linear
growth, modulus bound, divergent modulus integral, neutral-term smallness)
into sampled numerical verdicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import (ConfigError, DomainError, ShapeError,
                     SingularModulusError)
from .segment import Segment, evaluate, random_segment, sup_norm
from .spectral import SpectralOperator, fractional_norm

E_MINUS_2 = math.exp(-2.0)

_FLOAT_GUARD = 1e-12  # tolerance multiplier separating real violations from rounding


def _pointwise(fn):
    """Lift an array implementation to accept scalars transparently."""

    def wrapped(x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = fn(arr)
        if np.ndim(x) == 0:
            return float(out[0])
        return out.reshape(np.shape(x))

    return wrapped


def osgood_drift(p: float) -> tuple[Callable, float]:
    """Bounded non-Lipschitz drift with logarithmic modulus, capped at |x| = e^{-2}.

    Returns the callable and its bound e^{-2} (2p)^{1/p}.
    """
    cap = E_MINUS_2 * (2.0 * p) ** (1.0 / p)

    def _impl(ax_signed):
        ax = np.abs(ax_signed)
        out = np.full(ax.shape, cap)
        out[ax == 0.0] = 0.0
        core = (ax > 0.0) & (ax <= E_MINUS_2)
        a = ax[core]
        out[core] = a * (p * (-np.log(a))) ** (1.0 / p)
        return out

    return _pointwise(_impl), cap


@_pointwise
def osgood_modulus(s):
    """Concave modulus: 0 at 0, -s ln s on (0, e^{-2}], s + e^{-2} beyond."""
    if np.any(s < 0.0):
        raise DomainError("modulus argument must be nonnegative")
    out = s + E_MINUS_2
    out[s == 0.0] = 0.0
    core = (s > 0.0) & (s <= E_MINUS_2)
    sc = s[core]
    out[core] = -sc * np.log(sc)
    return out


@_pointwise
def linear_modulus(s):
    if np.any(s < 0.0):
        raise DomainError("modulus argument must be nonnegative")
    return s.copy()


def _scalar_zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _scalar_one(x):
    return np.ones_like(np.asarray(x, dtype=float))


def _scalar_identity(x):
    return np.asarray(x, dtype=float)


@dataclass(eq=False)
class Kernel:
    """Integral kernel of the neutral functional g(phi)(x) = int b(x, phi(theta_g, y), y) dy.

    ``delay_mode`` selects the segment node the kernel reads: ``"point"`` is
    the pure point delay theta_g = -h (makes the implicit step explicit on
    the grid), ``"instant"`` reads theta_g = 0 and therefore couples the
    step to the unknown new state, exercising the fixed-point path.
    """

    kind: str = "separable"  # separable | linear
    scale: float = 1.0
    delay_mode: str = "point"  # point | instant

    def __post_init__(self):
        if self.kind not in ("separable", "linear"):
            raise ConfigError(f"unknown kernel kind {self.kind!r}")
        if self.delay_mode not in ("point", "instant"):
            raise ConfigError(f"unknown kernel delay mode {self.delay_mode!r}")

    def profile(self, x) -> np.ndarray:
        return self.scale * np.sin(np.pi * np.asarray(x, dtype=float))

    def z_map(self, z) -> np.ndarray:
        if self.kind == "separable":
            return np.tanh(z)
        return np.asarray(z, dtype=float)

    def b(self, x, z, y) -> np.ndarray:
        """Full kernel, broadcasting over (x, z, y)."""
        del y  # built-in kernels do not weight the integration variable
        return self.profile(x) * self.z_map(z)


_SCALARS = {
    "zero": lambda p: (_pointwise(_scalar_zero), 0.0),
    "one": lambda p: (_pointwise(_scalar_one), 1.0),
    "identity": lambda p: (_pointwise(_scalar_identity), None),
    "bounded_tanh": lambda p: (_pointwise(lambda x: np.tanh(x)), 1.0),
    "osgood": osgood_drift,
}

_MODULI = {
    "osgood": osgood_modulus,
    "linear": linear_modulus,
}

_CONST_SCALARS = {"zero": 0.0, "one": 1.0}


@dataclass(eq=False)
class CoefficientSet:
    """Bundle of coefficient functionals with their asserted condition constants.

    ``lipschitz_Mg`` is the asserted bound on the neutral functional in the
    fractional graph norm; construction enforces 0 < Mg < 1 together with
    the smallness requirement 2 Mg^2 meas(D)^2 < 1 used by the separable
    kernel class.  ``modulus_N`` only has its root pinned here (N(0) = 0);
    monotonicity/concavity are sampled by the checkers so that deliberately
    ill-shaped moduli can still be constructed and rejected by them.
    """

    f: Callable
    sigma: Callable
    kernel_b: Optional[Kernel]
    modulus_N: Callable
    growth_K: float = 1.0
    lipschitz_Mg: float = 0.5
    p: float = 3.0
    grid_points: int = 128
    meas_D: float = 1.0
    f_name: str = "custom"
    sigma_name: str = "custom"
    modulus_name: str = "custom"
    sigma_const: Optional[float] = None
    f_is_zero: bool = False

    def __post_init__(self):
        if self.p <= 2.0:
            raise ConfigError("exponent p must exceed 2")
        if not 0.0 < self.lipschitz_Mg < 1.0:
            raise ConfigError("Mg must lie in (0, 1)")
        if 2.0 * self.lipschitz_Mg ** 2 * self.meas_D ** 2 >= 1.0:
            raise ConfigError("neutral smallness 2 Mg^2 meas(D)^2 < 1 violated")
        if self.growth_K <= 0.0:
            raise ConfigError("growth constant K must be positive")
        if self.grid_points < 4 or self.grid_points % 2 != 0:
            raise ConfigError("grid_points must be an even integer >= 4")
        if abs(float(self.modulus_N(0.0))) > 1e-15:
            raise ConfigError("modulus must vanish at 0")


def builtin_coefficients(f: str = "osgood", sigma: str = "osgood",
                         kernel: str = "separable", kernel_scale: float = 0.1,
                         kernel_delay: str = "point", modulus: str = "osgood",
                         p: float = 3.0, Mg: float = 0.5, growth_K: float = 1.0,
                         grid_points: int = 128) -> CoefficientSet:
    """Construct a coefficient set from built-in names (see module docstring)."""
    try:
        f_fn, _ = _SCALARS[f](p)
    except KeyError:
        raise ConfigError(f"unknown drift builtin {f!r}") from None
    try:
        s_fn, _ = _SCALARS[sigma](p)
    except KeyError:
        raise ConfigError(f"unknown diffusion builtin {sigma!r}") from None
    try:
        mod = _MODULI[modulus]
    except KeyError:
        raise ConfigError(f"unknown modulus builtin {modulus!r}") from None
    if kernel == "zero":
        kern = None
    else:
        kern = Kernel(kind=kernel, scale=kernel_scale, delay_mode=kernel_delay)
    return CoefficientSet(
        f=f_fn, sigma=s_fn, kernel_b=kern, modulus_N=mod,
        growth_K=growth_K, lipschitz_Mg=Mg, p=p, grid_points=grid_points,
        f_name=f, sigma_name=sigma, modulus_name=modulus,
        sigma_const=_CONST_SCALARS.get(sigma), f_is_zero=(f == "zero"))


def _check_alignment(cs: CoefficientSet, seg: Segment, op: SpectralOperator):
    if seg.n_modes != op.n_modes:
        raise ShapeError("segment and operator truncation dimensions disagree")


def eval_f(cs: CoefficientSet, seg: Segment, op: SpectralOperator) -> np.ndarray:
    """Drift functional: f applied pointwise to the delayed field, projected back."""
    _check_alignment(cs, seg, op)
    grid = op.grid(cs.grid_points)
    fld = grid.synth @ evaluate(seg, -seg.h)
    return grid.project @ cs.f(fld)


def eval_sigma(cs: CoefficientSet, seg: Segment, op: SpectralOperator) -> np.ndarray:
    """Diffusion multiplier field sigma(u(t - h, .)) on the quadrature grid."""
    _check_alignment(cs, seg, op)
    grid = op.grid(cs.grid_points)
    fld = grid.synth @ evaluate(seg, -seg.h)
    return np.asarray(cs.sigma(fld), dtype=float)


def eval_g(cs: CoefficientSet, seg: Segment, op: SpectralOperator) -> np.ndarray:
    """Neutral functional g(phi)(x) = int_D b(x, phi(theta_g, y), y) dy as mode coefficients."""
    _check_alignment(cs, seg, op)
    if cs.kernel_b is None:
        return np.zeros(op.n_modes)
    kern = cs.kernel_b
    theta = -seg.h if kern.delay_mode == "point" else 0.0
    grid = op.grid(cs.grid_points)
    fld = grid.synth @ evaluate(seg, theta)
    # separable built-ins factor as profile(x) * integral of z_map(field)
    mass = float(grid.weights @ kern.z_map(fld))
    return grid.project @ (kern.profile(grid.x) * mass)


def g_half_norm(cs: CoefficientSet, seg: Segment, op: SpectralOperator) -> float:
    """Fractional graph norm ||(-A)^{1/2} g(phi)|| reported alongside g."""
    return fractional_norm(op, eval_g(cs, seg, op), 0.5)


def osgood_integral(cs: CoefficientSet, eps: float) -> float:
    """Adaptive quadrature of int_eps^1 ds / N(s) (log substitution s = e^{-w})."""
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    n_fn = cs.modulus_N
    probes = np.geomspace(eps, 1.0, 257)
    vals = np.asarray(n_fn(probes), dtype=float)
    if np.any(vals <= 0.0):
        raise SingularModulusError("modulus vanishes inside the integration range")
    w_max = math.log(1.0 / eps)

    def integrand(w):
        s = math.exp(-w)
        return s / float(n_fn(s))

    pts = [2.0] if w_max > 2.0 else None  # built-in branch junction at s = e^{-2}
    val, _ = quad(integrand, 0.0, w_max, points=pts, limit=400)
    return float(val)


@dataclass(eq=False)
class OsgoodCertificate:
    """Verdict on the divergent-modulus-integral condition along eps_k = e^{-e^k}."""

    eps_values: np.ndarray
    integrals: np.ndarray
    divergent: bool
    shape_ok: bool
    certified: bool


def modulus_shape_check(cs: CoefficientSet, n_points: int = 401) -> bool:
    """Sampled root/monotonicity/midpoint-concavity check of the modulus."""
    s = np.geomspace(1e-10, 1.0, n_points)
    vals = np.asarray(cs.modulus_N(s), dtype=float)
    scale = float(np.max(np.abs(vals)))
    if abs(float(cs.modulus_N(0.0))) > 1e-12 * max(1.0, scale):
        return False
    if np.any(np.diff(vals) < -1e-12 * max(1.0, scale)):
        return False
    mid = np.asarray(cs.modulus_N(0.5 * (s[:-1] + s[1:])), dtype=float)
    chords = 0.5 * (vals[:-1] + vals[1:])
    return bool(np.all(mid >= chords - 1e-12 * max(1.0, scale)))


def osgood_certificate(cs: CoefficientSet, k_min: int = 1, k_max: int = 5) -> OsgoodCertificate:
    """Certify the divergence condition: shape checks plus unbounded growth of the integral.

    Growth alone is not enough (a convex modulus like s^2 also has a
    divergent integral but fails the concavity requirement), so the verdict
    is the conjunction of the sampled shape check and the monotone-growth
    test along eps_k = e^{-e^k}.
    """
    ks = np.arange(k_min, k_max + 1)
    eps = np.exp(-np.exp(ks.astype(float)))
    integrals = np.array([osgood_integral(cs, e) for e in eps])
    diffs = np.diff(integrals)
    divergent = bool(np.all(diffs > 0.0) and diffs[-1] >= 0.25 * diffs[0]
                     and integrals[-1] - integrals[0] > 0.1)
    shape_ok = modulus_shape_check(cs)
    return OsgoodCertificate(eps_values=eps, integrals=integrals, divergent=divergent,
                             shape_ok=shape_ok, certified=bool(divergent and shape_ok))


def modulus_bound_check(cs: CoefficientSet, n_samples: int, gen: np.random.Generator,
                        log_low: float = 1e-12, log_high: float = E_MINUS_2,
                        mixture: float = 0.5) -> tuple[int, float]:
    """Count violations of |f(x) - f(y)|^p <= N(|x - y|^p) over sampled scalar pairs.

    Pairs mix uniform draws on [-1, 1] with log-uniform magnitudes in
    [log_low, log_high] (both signs), the regime where the built-in pair
    approaches equality.  Returns (violations, max ratio LHS/RHS); rounding
    guard 1e-12 keeps exact-equality corners from being miscounted.
    """
    if n_samples < 1:
        raise DomainError("need at least one sample pair")
    if not 0.0 <= mixture <= 1.0:
        raise DomainError("mixture weight must lie in [0, 1]")
    n_log = int(round(n_samples * mixture))
    n_uni = n_samples - n_log
    xs, ys = [], []
    if n_uni:
        u = gen.uniform(-1.0, 1.0, size=(2, n_uni))
        xs.append(u[0])
        ys.append(u[1])
    if n_log:
        mags = 10.0 ** gen.uniform(math.log10(log_low), math.log10(log_high), size=(2, n_log))
        signs = gen.choice([-1.0, 1.0], size=(2, n_log))
        xs.append(mags[0] * signs[0])
        ys.append(mags[1] * signs[1])
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    lhs = np.abs(cs.f(x) - cs.f(y)) ** cs.p
    rhs = np.asarray(cs.modulus_N(np.abs(x - y) ** cs.p), dtype=float)
    pos = rhs > 0.0
    violations = int(np.sum(lhs[pos] > rhs[pos] * (1.0 + _FLOAT_GUARD)))
    violations += int(np.sum(lhs[~pos] > 0.0))
    max_ratio = float(np.max(lhs[pos] / rhs[pos])) if np.any(pos) else 0.0
    return violations, max_ratio


@dataclass(eq=False)
class ProbeReport:
    """Sampled Lipschitz estimate of the neutral functional against its bound."""

    estimate: float
    bound: float
    passed: bool
    margin: float
    n_used: int


def lipschitz_probe_g(cs: CoefficientSet, op: SpectralOperator, n_samples: int,
                      gen: np.random.Generator, h: float = 0.1) -> ProbeReport:
    """Max over random segment pairs of ||g(phi1) - g(phi2)||_{1/2} / ||phi1 - phi2||_C."""
    if n_samples < 1:
        raise DomainError("need at least one probe pair")
    dt = h / 4.0
    best = 0.0
    used = 0
    for _ in range(n_samples):
        s1 = random_segment(op, h, dt, gen)
        s2 = random_segment(op, h, dt, gen)
        denom = sup_norm(Segment(h=h, dt=dt, values=s1.values - s2.values))
        if denom < 1e-12:
            continue
        num = fractional_norm(op, eval_g(cs, s1, op) - eval_g(cs, s2, op), 0.5)
        best = max(best, num / denom)
        used += 1
    return ProbeReport(estimate=best, bound=cs.lipschitz_Mg,
                       passed=best <= cs.lipschitz_Mg, margin=cs.lipschitz_Mg - best,
                       n_used=used)


def growth_check(cs: CoefficientSet, op: SpectralOperator, n_samples: int,
                 gen: np.random.Generator, qspec=None, h: float = 0.1) -> float:
    """Sampled linear-growth constant: max of (||f(phi)|| + ||sigma(phi)||) / (1 + ||phi||_C).

    The diffusion term is measured in the Hilbert-Schmidt norm against the
    covariance when ``qspec`` is given (sum_k lambda_k ||sigma e_k||^2 via the
    kernel density sum_k lambda_k e_k(x)^2); otherwise the plain L2 norm of
    the multiplier field is used.
    """
    if n_samples < 1:
        raise DomainError("need at least one sample segment")
    grid = op.grid(cs.grid_points)
    if qspec is not None:
        density = np.einsum("k,jk->j", qspec.lambdas, grid.synth ** 2)
    else:
        density = np.ones_like(grid.x)
    dt = h / 4.0
    worst = 0.0
    amps = 10.0 ** gen.uniform(-3.0, 2.0, size=n_samples)
    for amp in amps:
        seg = random_segment(op, h, dt, gen, amplitude=float(amp))
        fld = grid.synth @ evaluate(seg, -h)
        f_norm = math.sqrt(float(grid.weights @ cs.f(fld) ** 2))
        s_fld = np.asarray(cs.sigma(fld), dtype=float)
        s_norm = math.sqrt(float(grid.weights @ (s_fld ** 2 * density)))
        worst = max(worst, (f_norm + s_norm) / (1.0 + sup_norm(seg)))
    return worst
