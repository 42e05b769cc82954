"""Empirical quantile and rank primitives.

The conformal threshold implemented here is the ``ceil((1 - a)(N + 1))``-th
order statistic of the calibration scores augmented with ``+inf``.  Levels
``a <= 0`` short-circuit to an infinite threshold and levels large enough to
push the order-statistic index below 1 collapse to a zero threshold (a
degenerate, zero-width interval for residual scores), so the full extended
range of effective levels is handled without clipping.
"""

from __future__ import annotations

import math

import numpy as np

# Tolerance used when (1 - a)(N + 1) lands on an integer up to float error.
_INDEX_TOL = 1e-9


def _ceil_index(u: float) -> int:
    """ceil(u) robust to u sitting a hair above an exact integer."""
    nearest = round(u)
    if abs(u - nearest) < _INDEX_TOL:
        return int(nearest)
    return int(math.ceil(u))


def empirical_quantile(beta: float, values) -> float:
    """Return the ceil(beta * n)-th smallest element of ``values``.

    Parameters
    ----------
    beta : float in (0, 1]
        Quantile level.
    values : array-like, nonempty
        Finite sample; order statistics are taken after sorting.

    Returns
    -------
    float
        A member of ``values``; monotone nondecreasing in ``beta``.
    """
    arr = np.sort(np.asarray(values, dtype=float).ravel())
    if arr.size == 0:
        raise ValueError("empty sample")
    if not 0 < beta <= 1:
        raise ValueError("beta must be in (0, 1]")
    k = _ceil_index(beta * arr.size)
    k = max(k, 1)
    return float(arr[k - 1])


def conformal_rank_index(a: float, n_cal: int) -> int:
    """Order-statistic index ceil((1 - a)(n_cal + 1)) queried at level ``a``.

    May be < 1 (degenerate threshold) or > n_cal (infinite threshold).
    """
    return _ceil_index((1.0 - a) * (n_cal + 1))


def threshold_at_index(k: int, sorted_cal: np.ndarray) -> float:
    """Threshold for order-statistic index ``k`` over sorted calibration scores.

    ``k > N`` hits the ``+inf`` augmentation; ``k < 1`` collapses to zero.
    """
    n = sorted_cal.size
    if k > n:
        return math.inf
    if k < 1:
        return 0.0
    return float(sorted_cal[k - 1])


def conformal_quantile(a: float, cal_scores) -> float:
    """Split-conformal score threshold at effective miscoverage level ``a``.

    Parameters
    ----------
    a : float
        Effective level; values <= 0 return ``+inf`` immediately (the
        infinitely wide regime), values above 1 can return the degenerate
        zero threshold.
    cal_scores : array-like, nonempty
        Calibration scores at the current time step.

    Returns
    -------
    float
        ``+inf`` iff ``ceil((1 - a)(N + 1)) > N`` or ``a <= 0``; otherwise a
        member of ``cal_scores`` (or 0.0 in the degenerate regime).  Monotone
        nonincreasing in ``a``.
    """
    arr = np.asarray(cal_scores, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("empty calibration sample")
    if a <= 0:
        return math.inf
    return threshold_at_index(conformal_rank_index(a, arr.size), np.sort(arr))


def thresholds_for_levels(levels: np.ndarray, sorted_cal: np.ndarray) -> np.ndarray:
    """Vectorized ``conformal_quantile`` over an array of effective levels."""
    levels = np.asarray(levels, dtype=float)
    n = sorted_cal.size
    u = (1.0 - levels) * (n + 1)
    k = np.ceil(u - _INDEX_TOL).astype(int)
    out = np.where(k < 1, 0.0, sorted_cal[np.clip(k, 1, n) - 1])
    out = np.where((k > n) | (levels <= 0), np.inf, out)
    return out


def smoothed_rank_index(a: float, n_cal: int, rng: np.random.Generator) -> int:
    """Randomized order-statistic index giving exact 1 - a coverage.

    Flips a biased coin between the two adjacent indices bracketing
    ``(1 - a)(n_cal + 1)``, with the fractional part as the probability of
    taking the upper one.
    """
    u = (1.0 - a) * (n_cal + 1)
    k_lo = int(math.floor(u + _INDEX_TOL))
    frac = max(0.0, u - k_lo)
    if frac > 0 and rng.random() < frac:
        return k_lo + 1
    return k_lo


def smoothed_threshold(a: float, cal_scores, rng: np.random.Generator) -> float:
    """Score threshold under randomized boundary-rank tie-breaking."""
    arr = np.asarray(cal_scores, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("empty calibration sample")
    if a <= 0:
        return math.inf
    return threshold_at_index(smoothed_rank_index(a, arr.size), np.sort(arr))


def smoothed_thresholds_for_levels(
    levels: np.ndarray, sorted_cal: np.ndarray, uniforms: np.ndarray
) -> np.ndarray:
    """Vectorized ``smoothed_threshold`` with pre-drawn uniforms."""
    levels = np.asarray(levels, dtype=float)
    n = sorted_cal.size
    u = (1.0 - levels) * (n + 1)
    k_lo = np.floor(u + _INDEX_TOL).astype(int)
    frac = np.maximum(0.0, u - k_lo)
    k = k_lo + (uniforms < frac)
    out = np.where(k < 1, 0.0, sorted_cal[np.clip(k, 1, n) - 1])
    out = np.where((k > n) | (levels <= 0), np.inf, out)
    return out


def smoothed_coverage_decision(
    a: float, cal_scores, test_score: float, rng: np.random.Generator
) -> bool:
    """Coverage decision with exact marginal probability 1 - a.

    With exchangeable, atomless scores the acceptance probability is exactly
    ``1 - a`` (up to the discrete support at the edges); deterministic given
    the generator state.
    """
    return bool(test_score <= smoothed_threshold(a, cal_scores, rng))


def strict_rank(x: float, pool, denominator: int) -> float:
    """Fraction of ``pool`` strictly below ``x``: |{p : p < x}| / denominator.

    Ties contribute zero.  ``x`` itself may be a member of the pool, in which
    case it never counts against itself.
    """
    if denominator < 1:
        raise ValueError("denominator must be a positive integer")
    arr = np.asarray(pool, dtype=float).ravel()
    return float(np.count_nonzero(arr < x)) / denominator
