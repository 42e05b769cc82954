"""Nonconformity scores and their interval inversions.

Three score kinds are supported: plain absolute residuals, scale-normalized
absolute residuals, and the two-sided quantile-regression score.  Each kind
comes with an exact inversion: the set ``{y : score(y) <= v}`` is an interval
whose endpoints are returned by :func:`interval_from_threshold`.
"""

from __future__ import annotations

import logging

import numpy as np

from .panel import ForecastPanel, PanelValidationError, ScorePanel

logger = logging.getLogger(__name__)

_SCALE_FLOOR = 1e-6


def abs_residual(y, y_hat):
    """|y - y_hat|."""
    return np.abs(np.asarray(y, dtype=float) - np.asarray(y_hat, dtype=float))


def normalized_residual(y, y_hat, sigma_hat):
    """|y - y_hat| / sigma_hat with sigma_hat > 0."""
    sigma = np.asarray(sigma_hat, dtype=float)
    if np.any(sigma <= 0):
        raise PanelValidationError("nonpositive scale")
    return abs_residual(y, y_hat) / sigma


def cqr_score(y, q_lo, q_hi):
    """max(q_lo - y, y - q_hi); negative iff y lies strictly inside (q_lo, q_hi)."""
    q_lo = np.asarray(q_lo, dtype=float)
    q_hi = np.asarray(q_hi, dtype=float)
    if np.any(q_lo > q_hi):
        raise PanelValidationError("q_lo must not exceed q_hi")
    y = np.asarray(y, dtype=float)
    return np.maximum(q_lo - y, y - q_hi)


def interval_from_threshold(
    score_kind: str,
    v_threshold,
    *,
    y_hat=None,
    q_lo=None,
    q_hi=None,
    sigma_hat=None,
):
    """Invert a score threshold into interval endpoints.

    Returns ``(lo, hi)`` such that ``y in [lo, hi]`` iff ``score(y) <=
    v_threshold``.  An infinite threshold yields ``(-inf, +inf)``.  Negative
    thresholds below the representable minimum are clamped so that ``lo <= hi``
    always holds (for residual scores the minimum is a zero-width interval at
    ``y_hat``; for ``cqr`` it is the midpoint of the quantile band).

    All arguments broadcast, so this works per cell or over whole panels.
    """
    v = np.asarray(v_threshold, dtype=float)
    if score_kind == "abs_residual":
        _require_channel(score_kind, "y_hat", y_hat)
        half = np.maximum(v, 0.0)
        lo, hi = y_hat - half, y_hat + half
    elif score_kind == "normalized_residual":
        _require_channel(score_kind, "y_hat", y_hat)
        _require_channel(score_kind, "sigma_hat", sigma_hat)
        half = np.maximum(v, 0.0) * np.asarray(sigma_hat, dtype=float)
        lo, hi = y_hat - half, y_hat + half
    elif score_kind == "cqr":
        _require_channel(score_kind, "q_lo", q_lo)
        _require_channel(score_kind, "q_hi", q_hi)
        q_lo = np.asarray(q_lo, dtype=float)
        q_hi = np.asarray(q_hi, dtype=float)
        min_v = -(q_hi - q_lo) / 2.0
        clamped = v < min_v
        if np.any(clamped & np.isfinite(v)):
            logger.debug("cqr threshold below -width/2; clamping to midpoint")
        veff = np.maximum(v, min_v)
        lo, hi = q_lo - veff, q_hi + veff
    else:
        raise PanelValidationError(f"unknown score kind: {score_kind!r}")
    infinite = np.isinf(v) & (v > 0)
    lo = np.where(infinite, -np.inf, lo)
    hi = np.where(infinite, np.inf, hi)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


def _require_channel(score_kind: str, name: str, value) -> None:
    if value is None:
        raise PanelValidationError(f"score kind {score_kind!r} requires channel {name!r}")


def fallback_scale(y, y_hat, beta: float = 0.8, floor: float = _SCALE_FLOOR) -> np.ndarray:
    """Causal scale estimate: decayed mean of past absolute residuals.

    At each t the scale is the exponentially weighted mean of |y - y_hat| over
    steps strictly before t (floored at ``floor``); with no history (t = 0)
    every series gets the neutral scale 1.0, which leaves the cross-sectional
    score ranking unchanged at that step.
    """
    resid = abs_residual(y, y_hat)
    n, horizon = resid.shape
    out = np.empty((n, horizon))
    out[:, 0] = 1.0
    num = np.zeros(n)
    den = 0.0
    for t in range(1, horizon):
        num = beta * num + resid[:, t - 1]
        den = beta * den + 1.0
        out[:, t] = np.maximum(num / den, floor)
    return out


def compute_scores(
    panel: ForecastPanel,
    score_kind: str,
    scale_mode: str = "external",
    beta: float = 0.8,
) -> ScorePanel:
    """Score every (series, t) cell of a panel under one score kind."""
    if score_kind == "abs_residual":
        v = abs_residual(panel.y, panel.y_hat)
    elif score_kind == "normalized_residual":
        if scale_mode == "fallback":
            sigma = fallback_scale(panel.y, panel.y_hat, beta=beta)
        else:
            _require_channel(score_kind, "sigma_hat", panel.sigma_hat)
            sigma = panel.sigma_hat
        v = normalized_residual(panel.y, panel.y_hat, sigma)
    elif score_kind == "cqr":
        _require_channel(score_kind, "q_lo", panel.q_lo)
        _require_channel(score_kind, "q_hi", panel.q_hi)
        v = cqr_score(panel.y, panel.q_lo, panel.q_hi)
    else:
        raise PanelValidationError(f"unknown score kind: {score_kind!r}")
    return ScorePanel(v=v, score_kind=score_kind)
