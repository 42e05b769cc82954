"""Rank prediction and quantile budgeting.

The budget adjustment predicts where the next nonconformity score of a test
series will rank within the calibration cross-section, then maps that
predicted rank to an offset on the target miscoverage level.  The mapping is
"budgeted": over a uniformly distributed predicted rank its mean is exactly
zero, so the expected level queried stays at alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .panel import PanelValidationError
from .quantiles import strict_rank


def decayed_mean_residual(residuals, beta: float):
    """Exponentially decayed mean residual over history of length t.

    Computes ``sum_k residuals[k] * beta**(t - 1 - k) / t`` along the last
    axis: the most recent residual carries weight 1 and the normalization is
    by the history length, not the weight sum.
    """
    arr = np.asarray(residuals, dtype=float)
    t = arr.shape[-1]
    if t == 0:
        raise ValueError("no history")
    weights = beta ** np.arange(t - 1, -1, -1, dtype=float)
    return arr @ weights / t


def decayed_mean_rank(ranks, beta: float):
    """Exponentially weighted average of past ranks, normalized by weight sum.

    Weights are ``beta**(t + 1 - k)`` for the k-th step (1-based), so unlike
    :func:`decayed_mean_residual` the output stays inside [0, 1].
    """
    arr = np.asarray(ranks, dtype=float)
    t = arr.shape[-1]
    if t == 0:
        raise ValueError("no history")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("ranks must lie in [0, 1]")
    weights = beta ** np.arange(t, 0, -1, dtype=float)
    return arr @ weights / weights.sum()


def predict_rank(test_statistic: float, calibration_statistics) -> float:
    """Strict rank of the test statistic among N calibration statistics.

    Returns a value on the grid {j/N : j = 0..N}; under exchangeability of
    the statistics it is uniform over that grid.
    """
    cal = np.asarray(calibration_statistics, dtype=float).ravel()
    if cal.size < 1:
        raise ValueError("need at least one calibration statistic")
    return strict_rank(test_statistic, cal, cal.size)


def coefficient_C(alpha: float, n_cal: int, mode: str = "exact") -> float:
    """Slope of the budget mapping below the target rank.

    ``exact`` mode solves the zero-mean condition over the rank grid
    {j/N : j = 0..N}; ``practical`` mode is the N-free simplification
    ``alpha**2 / (1 - alpha)**2``.
    """
    if not 0 < alpha < 1:
        raise PanelValidationError("alpha must be in (0, 1)")
    if mode == "practical":
        return alpha**2 / (1.0 - alpha) ** 2
    if mode != "exact":
        raise PanelValidationError(f"unknown coefficient mode: {mode!r}")
    if n_cal < 1:
        raise PanelValidationError("n_cal must be at least 1 in exact mode")
    eps = alpha * n_cal - math.floor(alpha * n_cal)
    num = (alpha * n_cal + eps) * (alpha * n_cal + 1 - eps)
    den = ((1 - alpha) * n_cal + eps) * ((1 - alpha) * n_cal + 1 - eps)
    return num / den


def budget_conservative(r_hat, alpha: float, coefficient: float):
    """Piecewise-linear budget: slope C below rank 1 - alpha, slope 1 above.

    Output lies in [-C(1 - alpha), alpha], crosses zero exactly at
    ``r_hat == 1 - alpha`` and is nondecreasing in ``r_hat``.
    """
    r = np.asarray(r_hat, dtype=float)
    centered = r - (1.0 - alpha)
    out = np.where(centered < 0, coefficient * centered, centered)
    return float(out) if out.ndim == 0 else out


def budget_aggressive(r_hat, alpha: float, divided_form: bool = False):
    """Linear budget centered at rank 0.5: ``2 * alpha * (r_hat - 0.5)``.

    Output lies in [-alpha, alpha], so the effective level can reach
    ``2 * alpha`` at the low-rank end.  ``divided_form`` switches to
    ``(r_hat - 0.5) / (2 * alpha)``, kept only for compatibility; it can push
    the effective level far outside [0, 1] and is not recommended.
    """
    r = np.asarray(r_hat, dtype=float)
    if divided_form:
        out = (r - 0.5) / (2.0 * alpha)
    else:
        out = 2.0 * alpha * (r - 0.5)
    return float(out) if out.ndim == 0 else out


def apply_level_floor(delta_hat, alpha: float, level_floor: float, max_positive_delta=None):
    """Uniformly rescale the adjustment so the effective level stays >= floor.

    The scale ``lambda = min(1, (alpha - level_floor) / max_positive_delta)``
    is linear in the adjustment, hence preserves its sign and zero mean.  Both
    budget mappings have supremum ``alpha``, the default.
    """
    if level_floor < 0:
        raise PanelValidationError("level_floor must be non-negative")
    if level_floor > alpha:
        raise PanelValidationError("level_floor must not exceed alpha")
    if max_positive_delta is None:
        max_positive_delta = alpha
    if max_positive_delta <= 0:
        raise PanelValidationError("max_positive_delta must be positive")
    lam = min(1.0, (alpha - level_floor) / max_positive_delta)
    out = lam * np.asarray(delta_hat, dtype=float)
    return float(out) if out.ndim == 0 else out


@dataclass
class BudgetParams:
    """Frozen parameters for the budget path of one run."""

    alpha: float
    n_cal: int
    coefficient_mode: str = "exact"
    budgeter: str = "conservative"
    predictor: str = "ms"
    beta: float = 0.8
    level_floor: float = 0.01
    aggressive_divided_form: bool = False

    def __post_init__(self):
        if self.n_cal < 1:
            raise PanelValidationError("n_cal must be at least 1")
        self._coefficient = coefficient_C(self.alpha, self.n_cal, self.coefficient_mode)

    @property
    def coefficient(self) -> float:
        return self._coefficient

    def adjustment(self, r_hat):
        """Floor-scaled offset for a predicted rank (scalar or array)."""
        if self.budgeter == "aggressive":
            raw = budget_aggressive(r_hat, self.alpha, self.aggressive_divided_form)
            sup = 0.5 / (2.0 * self.alpha) if self.aggressive_divided_form else self.alpha
        else:
            raw = budget_conservative(r_hat, self.alpha, self._coefficient)
            sup = self.alpha
        return apply_level_floor(raw, self.alpha, self.level_floor, sup)
