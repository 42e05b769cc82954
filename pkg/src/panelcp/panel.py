"""Core data containers for cross-sectional time-series panels.

A panel holds the (series x time) grid of actuals and forecasts together
with per-series split labels.  All panels are dense and equal-length:
optional forecast channels (quantile bounds, scale) are either present for
every cell or absent entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

TRAIN = "train"
CAL = "cal"
TEST = "test"
SPLIT_LABELS = (TRAIN, CAL, TEST)

SCORE_KINDS = ("abs_residual", "normalized_residual", "cqr")
METHODS = ("split", "tqa_budget", "tqa_error")
PREDICTORS = ("ms", "ewa")
BUDGETERS = ("conservative", "aggressive")
COEFFICIENT_MODES = ("exact", "practical")
ERROR_VARIANTS = ("asymptotic", "symmetric")
SCALE_MODES = ("external", "fallback")


class PanelValidationError(ValueError):
    """Raised when panel data or configuration violates a structural invariant."""


def _as_2d_float(name: str, arr) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    if out.ndim != 2:
        raise PanelValidationError(f"{name} must be 2-D (series x time), got shape {out.shape}")
    return out


@dataclass
class ForecastPanel:
    """Dense panel of actuals and forecasts for n series over a common horizon.

    Parameters
    ----------
    series_id : array of str, shape (n,)
        Unique identifier per series.
    split : array of str, shape (n,)
        Split label per series, one of ``train``, ``cal``, ``test``.
    y, y_hat : arrays, shape (n, T)
        Actuals and point forecasts.
    q_lo, q_hi : arrays, shape (n, T), optional
        Lower/upper quantile forecasts (required for the ``cqr`` score).
    sigma_hat : array, shape (n, T), optional
        Strictly positive scale forecasts (required for externally supplied
        scales with the ``normalized_residual`` score).
    """

    series_id: np.ndarray
    split: np.ndarray
    y: np.ndarray
    y_hat: np.ndarray
    q_lo: Optional[np.ndarray] = None
    q_hi: Optional[np.ndarray] = None
    sigma_hat: Optional[np.ndarray] = None

    def __post_init__(self):
        self.series_id = np.asarray(self.series_id, dtype=str)
        self.split = np.asarray(self.split, dtype=str)
        self.y = _as_2d_float("y", self.y)
        self.y_hat = _as_2d_float("y_hat", self.y_hat)
        n, horizon = self.y.shape
        if horizon < 1:
            raise PanelValidationError("horizon must be at least 1")
        if self.series_id.shape != (n,) or self.split.shape != (n,):
            raise PanelValidationError("series_id and split must have one entry per series")
        if len(set(self.series_id.tolist())) != n:
            raise PanelValidationError("series_id values must be unique")
        bad = set(self.split.tolist()) - set(SPLIT_LABELS)
        if bad:
            raise PanelValidationError(f"unknown split labels: {sorted(bad)}")
        if self.y_hat.shape != (n, horizon):
            raise PanelValidationError("y_hat shape does not match y")
        if not np.all(np.isfinite(self.y)) or not np.all(np.isfinite(self.y_hat)):
            raise PanelValidationError("y and y_hat must be finite")
        if (self.q_lo is None) != (self.q_hi is None):
            raise PanelValidationError("q_lo and q_hi must be supplied together")
        for name in ("q_lo", "q_hi", "sigma_hat"):
            val = getattr(self, name)
            if val is None:
                continue
            val = _as_2d_float(name, val)
            if val.shape != (n, horizon):
                raise PanelValidationError(f"{name} shape does not match y")
            if not np.all(np.isfinite(val)):
                raise PanelValidationError(f"{name} must be finite")
            setattr(self, name, val)
        if self.q_lo is not None and np.any(self.q_lo > self.q_hi):
            raise PanelValidationError("q_lo must not exceed q_hi")
        if self.sigma_hat is not None and np.any(self.sigma_hat <= 0):
            raise PanelValidationError("sigma_hat must be strictly positive everywhere")

    @property
    def n_series(self) -> int:
        return self.y.shape[0]

    @property
    def horizon(self) -> int:
        return self.y.shape[1]

    def mask(self, label: str) -> np.ndarray:
        return self.split == label

    @property
    def n_train(self) -> int:
        return int(self.mask(TRAIN).sum())

    @property
    def n_cal(self) -> int:
        return int(self.mask(CAL).sum())

    @property
    def n_test(self) -> int:
        return int(self.mask(TEST).sum())

    def require_splits(self, *, need_test: bool = True) -> None:
        """Check the split sizes needed before intervals can be requested."""
        if self.n_cal < 1:
            raise PanelValidationError("calibration split is empty")
        if need_test and self.n_test < 1:
            raise PanelValidationError("test split is empty")


@dataclass
class ScorePanel:
    """Nonconformity scores per (series, t) for one score kind."""

    v: np.ndarray
    score_kind: str

    def __post_init__(self):
        self.v = _as_2d_float("v", self.v)
        if self.score_kind not in SCORE_KINDS:
            raise PanelValidationError(f"unknown score kind: {self.score_kind!r}")
        if not np.all(np.isfinite(self.v)):
            raise PanelValidationError("scores must be finite")
        if self.score_kind in ("abs_residual", "normalized_residual") and np.any(self.v < 0):
            raise PanelValidationError(f"{self.score_kind} scores must be non-negative")


@dataclass
class MethodConfig:
    """Configuration for one interval-construction run.

    ``alpha`` is the target miscoverage level.  ``method`` selects plain split
    conformal or one of the two temporal quantile adjustments: rank-prediction
    budgeting (``tqa_budget``) or online error feedback (``tqa_error``).
    """

    alpha: float = 0.1
    method: str = "split"
    score_kind: str = "abs_residual"
    scale_mode: str = "external"
    predictor: str = "ms"
    budgeter: str = "conservative"
    coefficient_mode: str = "exact"
    beta: float = 0.8
    gamma: float = 0.005
    level_floor: float = 0.01
    error_variant: str = "asymptotic"
    smoothing: bool = False
    seed: int = 0
    # Compatibility switch for the divided form of the aggressive budgeter
    # (see budget.budget_aggressive); the multiplicative form is the default.
    aggressive_divided_form: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not 0 < self.alpha <= 0.5:
            raise PanelValidationError("alpha must be in (0, 0.5]")
        if self.method not in METHODS:
            raise PanelValidationError(f"unknown method: {self.method!r}")
        if self.score_kind not in SCORE_KINDS:
            raise PanelValidationError(f"unknown score kind: {self.score_kind!r}")
        if self.scale_mode not in SCALE_MODES:
            raise PanelValidationError(f"unknown scale mode: {self.scale_mode!r}")
        if self.predictor not in PREDICTORS:
            raise PanelValidationError(f"unknown predictor: {self.predictor!r}")
        if self.budgeter not in BUDGETERS:
            raise PanelValidationError(f"unknown budgeter: {self.budgeter!r}")
        if self.coefficient_mode not in COEFFICIENT_MODES:
            raise PanelValidationError(f"unknown coefficient mode: {self.coefficient_mode!r}")
        if not 0 < self.beta < 1:
            raise PanelValidationError("beta must be in (0, 1)")
        if self.gamma <= 0:
            raise PanelValidationError("gamma must be positive")
        # level_floor == alpha collapses the budget adjustment to zero (the
        # split fixed point); level_floor == 0 disables the floor entirely.
        if not 0 <= self.level_floor <= self.alpha:
            raise PanelValidationError("level_floor must satisfy 0 <= level_floor <= alpha")
        if self.error_variant not in ERROR_VARIANTS:
            raise PanelValidationError(f"unknown error variant: {self.error_variant!r}")
        if int(self.seed) < 0:
            raise PanelValidationError("seed must be a non-negative integer")


@dataclass
class AdjusterState:
    """Per-series adjustment state: the offset applied to the target level.

    The effective level is always derived as ``alpha - delta_hat`` and never
    stored separately; it may leave [0, 1], in which case the interval path
    handles the infinite and degenerate regimes.
    """

    alpha: float
    delta_hat: float = 0.0
    r_hat: Optional[float] = None

    @property
    def effective_level(self) -> float:
        return self.alpha - self.delta_hat


@dataclass
class IntervalPanel:
    """Per-step prediction intervals for the test series.

    Endpoints are extended reals (``-inf``/``+inf`` permitted).  ``covered``
    is True exactly when ``lo <= y <= hi`` held for the realized actual, and
    any step with effective level <= 0 carries the infinitely wide interval
    (which is covered by definition).
    """

    series_id: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    level_used: np.ndarray
    covered: np.ndarray

    def __post_init__(self):
        self.series_id = np.asarray(self.series_id, dtype=str)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        self.level_used = np.asarray(self.level_used, dtype=float)
        self.covered = np.asarray(self.covered, dtype=bool)
        shape = self.lo.shape
        if self.lo.ndim != 2:
            raise PanelValidationError("interval arrays must be 2-D (series x time)")
        for name in ("hi", "level_used", "covered"):
            if getattr(self, name).shape != shape:
                raise PanelValidationError(f"{name} shape does not match lo")
        if self.series_id.shape != (shape[0],):
            raise PanelValidationError("series_id must have one entry per series")
        if np.any(self.lo > self.hi):
            raise PanelValidationError("interval invariant violated: lo > hi")
        nonpos = self.level_used <= 0
        if np.any(nonpos & (np.isfinite(self.lo) | np.isfinite(self.hi))):
            raise PanelValidationError("levels <= 0 must produce infinitely wide intervals")
        if np.any(nonpos & ~self.covered):
            raise PanelValidationError("infinitely wide intervals must be covered")

    @classmethod
    def build(cls, series_id, lo, hi, level_used, y) -> "IntervalPanel":
        """Assemble a panel, deriving the coverage flags from the actuals."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        covered = (lo <= y) & (np.asarray(y) <= hi)
        return cls(series_id=series_id, lo=lo, hi=hi, level_used=level_used, covered=covered)

    @property
    def err(self) -> np.ndarray:
        return ~self.covered

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def n_series(self) -> int:
        return self.lo.shape[0]

    @property
    def horizon(self) -> int:
        return self.lo.shape[1]
