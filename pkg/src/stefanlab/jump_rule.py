"""Physical jump rule for the freezing frontier, in continuum and particle form.

The frontier advances instantaneously by
    delta = inf{ x > 0 : CDF(lam + x) - CDF(lam) < x / alpha },
the smallest displacement at which the mass swept up no longer pays for the
advance.  continuum_jump evaluates this infimum against any CDF handle by a
grid scan plus bisection; cascade_jump computes the discrete analogue, the
least fixed point of the absorption cascade lam <- lam_start + alpha*(k0+k)/N.
verify_cascade_minimality replays the cascade by exhaustive search and is the
independent oracle the cascade is tested against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stefanlab.errors import ConfigError, NonMonotoneCDFError

# The scan uses a strict inequality; ties at machine precision must not
# terminate a jump, so the threshold is undercut by this relative guard.
TIE_GUARD = 1e-14

# Bisection refines the first holding scan cell down to h_scan / 2**REFINE_BITS.
REFINE_BITS = 20


@dataclass(frozen=True)
class ScanSpec:
    """Resolution of the continuum jump scan.

    h_scan is the scan step, x_max the largest displacement probed.  refine
    enables bisection inside the first holding cell, for exact CDFs whose
    kinks need not align with h_scan.  refine=False instead interpolates the
    shortfall linearly between the bracketing probes, which is exact when the
    CDF is linear on every (kh, (k+1)h] cell, the case for h_scan = dx scans
    of a grid solver's own discrete CDF.
    """

    h_scan: float
    x_max: float
    refine: bool = True

    def __post_init__(self) -> None:
        if self.h_scan <= 0:
            raise ConfigError("h_scan must be positive")
        if self.x_max < self.h_scan:
            raise ConfigError("x_max must be at least h_scan")


@dataclass(frozen=True)
class JumpResult:
    """Outcome of one jump resolution.

    delta is the frontier displacement (0 means no jump), absorbed_mass the
    mass swept up, absorbed_indices the positions absorbed by a cascade
    (indices into the sorted alive array; None for continuum jumps).
    total_freeze marks that all mass visible to the scan was absorbed.
    """

    delta: float
    new_frontier: float
    absorbed_mass: float
    absorbed_indices: np.ndarray | None = None
    total_freeze: bool = False


def continuum_jump(cdf_fn, lambda_minus: float, alpha: float, scan: ScanSpec) -> JumpResult:
    """Resolve a frontier jump against a CDF handle.

    Scans displacements h, 2h, ... up to scan.x_max for the first point where
    the swept mass falls strictly short of x/alpha, then bisects (exact CDFs
    only) down to h / 2**20.  Returns delta = 0 when the shortfall already
    holds throughout (0, h].  If the scan exhausts x_max without a shortfall
    the result carries delta = x_max and the total_freeze flag.  A decreasing
    CDF raises NonMonotoneCDFError.
    """
    if alpha < 0:
        raise ConfigError("alpha must be nonnegative")
    if alpha == 0.0:
        # Absorption releases no heat: the shortfall holds for every x > 0.
        return JumpResult(0.0, lambda_minus, 0.0, None, False)

    f0 = float(cdf_fn(lambda_minus))
    guard = TIE_GUARD * alpha
    last = f0

    def increment(x: float) -> float:
        nonlocal last
        val = float(cdf_fn(lambda_minus + x))
        if val < last - 1e-12:
            raise NonMonotoneCDFError(f"CDF decreased near x = {lambda_minus + x!r}")
        last = val
        return val - f0

    h = scan.h_scan
    n_cells = int(np.floor(scan.x_max / h + 1e-9))
    hit = None
    shortfall_prev = 0.0           # shortfall at x = 0 vanishes by definition
    shortfall_hit = 0.0
    for k in range(1, n_cells + 1):
        x = k * h
        inc = increment(x)
        s = x / alpha - inc
        if s > guard:
            hit = k
            shortfall_hit = s
            break
        shortfall_prev = s

    if hit is None:
        absorbed = float(cdf_fn(lambda_minus + scan.x_max)) - f0
        return JumpResult(scan.x_max, lambda_minus + scan.x_max, absorbed, None, True)

    if scan.refine:
        # Monotonicity checks are suspended during bisection: probes move
        # backwards through already-visited territory.
        lo, hi = (hit - 1) * h, hit * h
        tol = h / 2 ** REFINE_BITS
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if float(cdf_fn(lambda_minus + mid)) - f0 < mid / alpha - guard:
                hi = mid
            else:
                lo = mid
        delta = 0.0 if hi <= 2 * tol else hi
    else:
        # Linear shortfall crossing between the bracketing probes.  Exact for
        # CDFs linear on each probe cell; in particular an exact tie at the
        # previous probe (swept mass just pays for the advance there) lands
        # delta on that probe, and a shortfall already at k = 1 extrapolates
        # back to the zero crossing at the frontier itself.
        t = max(0.0, -shortfall_prev) / (shortfall_hit - shortfall_prev)
        delta = (hit - 1 + min(t, 1.0)) * h
        if delta <= guard:
            delta = 0.0

    absorbed = float(cdf_fn(lambda_minus + delta)) - f0 if delta > 0 else 0.0
    visible = float(cdf_fn(lambda_minus + scan.x_max)) - f0
    freeze = delta > 0 and absorbed >= visible - 1e-12 and visible > 0
    return JumpResult(delta, lambda_minus + delta, absorbed, None, freeze)


def cascade_jump(alive_sorted: np.ndarray, lambda_start: float, k0: int, alpha: float,
                 n_total: int) -> JumpResult:
    """Least fixed point of the absorption cascade.

    k0 particles were just absorbed at lambda_start; the frontier moves by
    alpha/n_total per absorbed particle, possibly sweeping up more of
    alive_sorted (ascending positions, all strictly above lambda_start).
    k0 = 0 starts no cascade.  Ties absorb: position <= frontier counts.
    """
    alive_sorted = np.asarray(alive_sorted, dtype=float)
    if n_total < 1:
        raise ConfigError("n_total must be >= 1")
    if k0 < 0 or k0 != int(k0):
        raise ConfigError("k0 must be a nonnegative integer")
    if alpha < 0:
        raise ConfigError("alpha must be nonnegative")
    if alive_sorted.ndim != 1:
        raise ConfigError("alive_sorted must be one-dimensional")
    if len(alive_sorted) > 1 and np.any(np.diff(alive_sorted) < 0):
        raise ConfigError("alive_sorted must be ascending")
    if len(alive_sorted) and alive_sorted[0] <= lambda_start:
        raise ConfigError("alive positions must lie strictly above lambda_start")

    if k0 == 0 or alpha == 0.0:
        new_lam = lambda_start + alpha * k0 / n_total
        return JumpResult(new_lam - lambda_start, new_lam, 0.0,
                          np.empty(0, dtype=np.int64), False)

    m = 0
    while True:
        lam = lambda_start + alpha * (k0 + m) / n_total
        m_new = int(np.searchsorted(alive_sorted, lam, side="right"))
        if m_new == m:
            break
        m = m_new
    delta = alpha * (k0 + m) / n_total
    return JumpResult(delta, lambda_start + delta, m / n_total,
                      np.arange(m, dtype=np.int64), m == len(alive_sorted))


def verify_cascade_minimality(alive_sorted: np.ndarray, lambda_start: float, k0: int,
                              alpha: float, n_total: int, result: JumpResult) -> bool:
    """Check a cascade result against exhaustive least-fixed-point search.

    Walks every candidate absorption count m = 0..n_total, finds the smallest
    fixed point of m -> #{alive <= lambda_start + alpha*(k0+m)/n_total}, and
    compares count and displacement with the result.  Brute force on purpose:
    this is the oracle, it shares no shortcut with cascade_jump.
    """
    alive_sorted = np.asarray(alive_sorted, dtype=float)
    least = None
    for m in range(0, n_total + 1):
        lam = lambda_start + alpha * (k0 + m) / n_total
        count = int(np.sum(alive_sorted <= lam))
        if count == m:
            least = m
            break
    if least is None:
        return False
    if k0 == 0 or alpha == 0.0:
        # cascade_jump's convention: no increment, no cascade.
        expected_delta = alpha * k0 / n_total
        expected_count = 0
    else:
        expected_delta = alpha * (k0 + least) / n_total
        expected_count = least
    n_absorbed = 0 if result.absorbed_indices is None else len(result.absorbed_indices)
    return n_absorbed == expected_count and abs(result.delta - expected_delta) < 1e-12
