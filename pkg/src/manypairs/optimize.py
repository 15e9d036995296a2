"""Maximization of the binned CHSH value and the critical-noise landscape.

For unbiased-marginal pair statistics the binned correlator of each
setting pair depends only on that pair's scalar correlator e, so the
optimizer evaluates a per-strategy response function f(e) instead of
re-convolving count matrices:

* parity: f(e) = e^n exactly;
* majority: conditioning on the number k of discordant pairs gives
  f(e) = sum_k Binom(n, k; (1-e)/2) T_k with an e-independent kernel T_k,
  precomputed once per (n, tie policy).

The generic convolution route in `collective`/`binning` remains the
reference implementation; tests pin both routes against each other.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as sciopt
from scipy.special import gammaln

from .binning import (PARITY_BETA_SCALE, BinningStrategy, Majority, Parity,
                      TiePolicy, parity_chsh_analytic, sign_vector)
from .errors import FitError, InvalidArgumentError, NoViolationError
from .pairstats import MeasurementSettings, settings_from_beta


class SettingsMode(enum.Enum):
    """Search space for the measurement settings."""

    BETA_FAMILY = "beta-family"
    FULL_PLANAR = "full-planar"


class ExceedsCap:
    """Sentinel: every pair count up to the cap still violates."""

    def __repr__(self):
        return "ExceedsCap"


EXCEEDS_CAP = ExceedsCap()

#: Seed for the simplex multi-start perturbations (fixed for determinism).
_MULTISTART_SEED = 20240817

_GRID_POINTS = 256
_GOLDEN_MAX_ITER = 200
_SIMPLEX_MAX_EVALS = 2000


@functools.lru_cache(maxsize=1024)
def _log_comb(n: int) -> np.ndarray:
    k = np.arange(n + 1)
    out = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    out.setflags(write=False)
    return out


def _binom_weights(n: int, q: float) -> np.ndarray:
    """Binomial(n, q) pmf over 0..n, via cached log-binomial coefficients."""
    if q <= 0.0:
        w = np.zeros(n + 1)
        w[0] = 1.0
        return w
    if q >= 1.0:
        w = np.zeros(n + 1)
        w[n] = 1.0
        return w
    k = np.arange(n + 1)
    return np.exp(_log_comb(n) + k * math.log(q) + (n - k) * math.log1p(-q))


@functools.lru_cache(maxsize=256)
def _majority_kernel(n: int, tie_policy: TiePolicy) -> np.ndarray:
    """Kernel T_k = E[s(u+v) s(k-u+v)], u ~ Bin(k, 1/2), v ~ Bin(n-k, 1/2)."""
    s = sign_vector(n, Majority(tie_policy))
    kernel = np.empty(n + 1)
    for k in range(n + 1):
        pu = _binom_weights(k, 0.5)
        pv = _binom_weights(n - k, 0.5)
        u = np.arange(k + 1)[:, None]
        v = np.arange(n - k + 1)[None, :]
        kernel[k] = np.sum(pu[:, None] * pv[None, :] * s[u + v] * s[k - u + v])
    kernel.setflags(write=False)
    return kernel


def binned_correlator_from_e(e: float, n: int,
                             strategy: BinningStrategy) -> float:
    """Binned correlator E^(n) for a single unbiased-marginal correlator e."""
    if isinstance(strategy, Parity):
        return float(e) ** n
    kernel = _majority_kernel(n, strategy.tie_policy)
    q = (1.0 - e) / 2.0
    return float(_binom_weights(n, q) @ kernel)


def _chsh_at_settings(settings: MeasurementSettings, visibility: float,
                      n: int, strategy: BinningStrategy) -> float:
    s = 0.0
    for (x, y), sign in (((1, 1), 1), ((1, 2), 1), ((2, 1), 1), ((2, 2), -1)):
        e = visibility * math.cos(settings.alice(x) - settings.bob(y))
        s += sign * binned_correlator_from_e(e, n, strategy)
    return s


def family_chsh(beta: float, visibility: float, n: int,
                 strategy: BinningStrategy) -> float:
    if isinstance(strategy, Parity):
        return parity_chsh_analytic(beta, visibility, n)
    es = visibility * math.cos(beta)
    ed = visibility * math.cos(3.0 * beta)
    return (3.0 * binned_correlator_from_e(es, n, strategy)
            - binned_correlator_from_e(ed, n, strategy))


def _golden_max(fn, lo: float, hi: float, tol: float = 1e-12,
                max_iter: int = _GOLDEN_MAX_ITER):
    """Golden-section maximization on [lo, hi]; returns (x, f(x), evals)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    evals = 2
    for _ in range(max_iter):
        if b - a < tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fn(x1)
        evals += 1
    if f1 >= f2:
        return x1, f1, evals
    return x2, f2, evals


@dataclass(frozen=True)
class OptimizationResult:
    """Best CHSH value found, with the settings that achieve it."""

    s_max: float
    settings: MeasurementSettings
    mode: SettingsMode
    evaluations: int
    beta: float | None = None
    converged: bool = True


def max_chsh(n: int, visibility: float, strategy: BinningStrategy,
             mode: SettingsMode = SettingsMode.BETA_FAMILY) -> OptimizationResult:
    """Maximize the binned CHSH value over measurement settings.

    BETA_FAMILY searches the one-parameter family on (0, pi/2] (dense grid
    then golden-section refinement); FULL_PLANAR runs a multi-start
    Nelder-Mead over all four planar angles, seeded from the family
    optimum.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n!r}")
    if not 0.0 <= visibility <= 1.0:
        raise InvalidArgumentError(f"visibility {visibility!r} outside [0, 1]")

    grid = np.linspace(math.pi / 2.0 / _GRID_POINTS, math.pi / 2.0,
                       _GRID_POINTS)
    vals = np.array([family_chsh(b, visibility, n, strategy) for b in grid])
    i = int(np.argmax(vals))
    lo = grid[i - 1] if i > 0 else grid[0] / 2.0
    hi = grid[i + 1] if i + 1 < len(grid) else grid[-1]
    beta, s_family, g_evals = _golden_max(
        lambda b: family_chsh(b, visibility, n, strategy), lo, hi)
    if vals[i] > s_family:
        beta, s_family = float(grid[i]), float(vals[i])
    evaluations = len(grid) + g_evals
    family = OptimizationResult(s_max=float(s_family),
                                settings=settings_from_beta(beta),
                                mode=SettingsMode.BETA_FAMILY,
                                evaluations=evaluations, beta=float(beta))
    if mode is SettingsMode.BETA_FAMILY:
        return family

    counter = {"evals": 0}

    def neg(theta):
        counter["evals"] += 1
        return -_chsh_at_settings(MeasurementSettings(*theta), visibility, n,
                                  strategy)

    rng = np.random.default_rng(_MULTISTART_SEED)
    seed_angles = np.array(family.settings.as_tuple())
    starts = [seed_angles] + [seed_angles + rng.normal(scale=0.3, size=4)
                              for _ in range(8)]
    best_s = family.s_max
    best_angles = seed_angles
    converged = True
    for start in starts:
        res = sciopt.minimize(neg, start, method="Nelder-Mead",
                              options={"maxfev": _SIMPLEX_MAX_EVALS,
                                       "xatol": 1e-10, "fatol": 1e-12})
        if not res.success:
            converged = False
        if -res.fun > best_s:
            best_s = float(-res.fun)
            best_angles = res.x
    return OptimizationResult(s_max=best_s,
                              settings=MeasurementSettings(*best_angles),
                              mode=SettingsMode.FULL_PLANAR,
                              evaluations=evaluations + counter["evals"],
                              beta=family.beta, converged=converged)


def critical_visibility_bisect(n: int, strategy: BinningStrategy,
                               mode: SettingsMode = SettingsMode.BETA_FAMILY,
                               width: float = 1e-5) -> float:
    """Bisection on V of the predicate max_chsh(..).s_max > 2."""
    top = max_chsh(n, 1.0, strategy, mode)
    if top.s_max <= 2.0:
        raise NoViolationError(
            f"no violation at V=1 for n={n}, {strategy!r}", top.s_max)
    lo, hi = 0.5, 1.0
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if max_chsh(n, mid, strategy, mode).s_max > 2.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def critical_visibility(n: int, strategy: BinningStrategy,
                        mode: SettingsMode = SettingsMode.BETA_FAMILY,
                        width: float = 1e-5) -> float:
    """Smallest visibility admitting a CHSH violation for n pairs.

    Parity uses the exact identity V_c = (2 / S_max(V=1))^(1/n), valid
    because the optimal settings are visibility-independent under the V^n
    scaling; majority falls back to bisection.
    """
    if isinstance(strategy, Parity):
        top = max_chsh(n, 1.0, strategy, mode)
        if top.s_max <= 2.0:
            raise NoViolationError(
                f"no violation at V=1 for n={n}, parity", top.s_max)
        return (2.0 / top.s_max) ** (1.0 / n)
    return critical_visibility_bisect(n, strategy, mode, width)


def critical_pairs(visibility: float, strategy: BinningStrategy,
                   n_max: int = 4096,
                   mode: SettingsMode = SettingsMode.BETA_FAMILY):
    """Largest pair count still violating CHSH at the given visibility.

    Exponential growth then binary search, relying on the monotonicity of
    the critical visibility in n.  Returns EXCEEDS_CAP when n_max itself
    still violates.
    """
    if not 0.0 < visibility <= 1.0:
        raise InvalidArgumentError(
            f"visibility {visibility!r} outside (0, 1]")

    def violates(n: int) -> bool:
        return max_chsh(n, visibility, strategy, mode).s_max > 2.0

    first = max_chsh(1, visibility, strategy, mode)
    if first.s_max <= 2.0:
        raise NoViolationError(
            f"no violation even at n=1 for V={visibility}", first.s_max)
    n = 1
    while True:
        nxt = min(2 * n, n_max)
        if nxt == n:  # n == n_max still violating
            return EXCEEDS_CAP
        if violates(nxt):
            n = nxt
        else:
            break
    lo, hi = n, nxt  # violates(lo) True, violates(hi) False
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if violates(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class VcFit:
    """Coefficients of the 1 - c1/n + c2/n^2 critical-visibility law."""

    c1: float
    c2: float
    residual: float

    def predict(self, n: float) -> float:
        return 1.0 - self.c1 / n + self.c2 / n ** 2


def fit_vc_curve(points) -> VcFit:
    """Least-squares fit of (1 - V_c) against the basis (1/n, -1/n^2)."""
    pts = [(int(n), float(vc)) for (n, vc) in points]
    if len({n for n, _ in pts}) < 3:
        raise FitError("need at least 3 distinct n values")
    ns = np.array([n for n, _ in pts], float)
    vcs = np.array([vc for _, vc in pts])
    design = np.column_stack([1.0 / ns, -1.0 / ns ** 2])
    coef, _, rank, _ = np.linalg.lstsq(design, 1.0 - vcs, rcond=None)
    if rank < 2:
        raise FitError("design matrix is rank-deficient")
    residual = float(np.linalg.norm(design @ coef - (1.0 - vcs)))
    return VcFit(c1=float(coef[0]), c2=float(coef[1]), residual=residual)


@dataclass(frozen=True)
class CriticalCurve:
    """Critical visibility per pair count, with the fitted 1/n law."""

    strategy: BinningStrategy
    points: tuple
    fit: VcFit | None
    monotone: bool


def scan_critical_visibilities(n_values, strategy: BinningStrategy,
                               mode: SettingsMode = SettingsMode.BETA_FAMILY,
                               width: float = 1e-5) -> CriticalCurve:
    """Critical visibility over a range of n, fitted to 1 - c1/n + c2/n^2."""
    points = tuple((int(n), critical_visibility(int(n), strategy, mode, width))
                   for n in n_values)
    vcs = [vc for _, vc in points]
    monotone = all(b >= a - width for a, b in zip(vcs, vcs[1:]))
    fit = fit_vc_curve(points) if len({n for n, _ in points}) >= 3 else None
    return CriticalCurve(strategy=strategy, points=points, fit=fit,
                         monotone=monotone)


#: 1 - n * (1 - V_c^parity(n)) in the high-visibility approximation.
PARITY_VC_COEFFICIENT = 1.0 - 3.0 ** (9.0 / 8.0) / 4.0


def parity_vc_approx(n: int) -> float:
    """High-visibility approximation of the parity critical visibility."""
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n!r}")
    return 1.0 - PARITY_VC_COEFFICIENT / n


def violation_ratio(visibility: float) -> float:
    """Fraction of the single-pair parity violation left at half capacity.

    Uses the fixed settings beta = beta0/sqrt(n) at n = round(n_c/2)
    (half up) against n = 1 at beta = beta0.
    """
    if not 0.0 < visibility < 1.0:
        raise InvalidArgumentError(
            f"visibility {visibility!r} outside (0, 1)")
    n_crit = PARITY_VC_COEFFICIENT / (1.0 - visibility)
    n_half = math.floor(n_crit / 2.0 + 0.5)
    if n_half < 1 or n_crit < 2.0:
        raise InvalidArgumentError(
            f"V={visibility} is below the violation regime (n_c={n_crit:.3f})")
    numerator = parity_chsh_analytic(
        PARITY_BETA_SCALE / math.sqrt(n_half), visibility, n_half) - 2.0
    denominator = parity_chsh_analytic(PARITY_BETA_SCALE, visibility, 1) - 2.0
    return numerator / denominator


@dataclass(frozen=True)
class BinningComparison:
    """Majority-vs-parity CHSH maxima over a (V, n) grid."""

    rows: tuple  # (visibility, n, s_majority, s_parity)
    winners: tuple  # (visibility, "majority" | "parity" | "tie")
    crossover: float | None


def _crossover_n_grid(n_values):
    # Tie-free majority only: even-n tie losses let parity win at n = 2
    # for every visibility, which would hide the genuine crossover.
    odd = [n for n in n_values if n % 2 == 1 and n >= 3]
    return odd if odd else [n for n in n_values if n >= 2]


def _best_parity_advantage(visibility: float, n_values,
                           mode: SettingsMode) -> float:
    best = -math.inf
    for n in n_values:
        if n < 2:  # both strategies coincide at n = 1
            continue
        s_par = max_chsh(n, visibility, Parity(), mode).s_max
        s_maj = max_chsh(n, visibility, Majority(), mode).s_max
        best = max(best, s_par - s_maj)
    return best


def binning_comparison(v_values, n_values,
                       mode: SettingsMode = SettingsMode.BETA_FAMILY,
                       crossover_tol: float = 1e-4) -> BinningComparison:
    """Tabulate both strategies on a grid and locate the parity crossover.

    The crossover V* is where, for some tie-free (odd) n in the grid, the
    parity maximum first exceeds the majority maximum; it is refined by
    bisection between the bracketing grid visibilities.
    """
    v_values = [float(v) for v in v_values]
    n_values = [int(n) for n in n_values]
    if not v_values or not n_values:
        raise InvalidArgumentError("grids must be nonempty")
    rows = []
    winners = []
    advantages = []
    for v in v_values:
        best_maj = -math.inf
        best_par = -math.inf
        for n in n_values:
            s_maj = max_chsh(n, v, Majority(), mode).s_max
            s_par = max_chsh(n, v, Parity(), mode).s_max
            rows.append((v, n, s_maj, s_par))
            if n >= 2:
                best_maj = max(best_maj, s_maj)
                best_par = max(best_par, s_par)
        adv = _best_parity_advantage(v, _crossover_n_grid(n_values), mode)
        advantages.append(adv)
        if adv > 0.0:
            winners.append((v, "parity"))
        elif adv < 0.0:
            winners.append((v, "majority"))
        else:
            winners.append((v, "tie"))

    crossover = None
    for (v_lo, adv_lo), (v_hi, adv_hi) in zip(zip(v_values, advantages),
                                              zip(v_values[1:], advantages[1:])):
        if adv_lo <= 0.0 < adv_hi:
            lo, hi = v_lo, v_hi
            grid = _crossover_n_grid(n_values)
            while hi - lo > crossover_tol:
                mid = 0.5 * (lo + hi)
                if _best_parity_advantage(mid, grid, mode) > 0.0:
                    hi = mid
                else:
                    lo = mid
            crossover = 0.5 * (lo + hi)
            break
    return BinningComparison(rows=tuple(rows), winners=tuple(winners),
                             crossover=crossover)
