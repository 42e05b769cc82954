"""Online error-feedback adjustment for a single test series.

After each step the offset moves by ``gamma * (err - alpha)``: a miss widens
the next interval, a hit narrows it slightly.  The effective level is never
clipped to [0, 1]; levels <= 0 produce infinitely wide intervals (which count
as covered, so the offset then decays back toward finite intervals), and
levels > 1 produce degenerate intervals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .panel import AdjusterState, MethodConfig
from .quantiles import conformal_quantile, smoothed_threshold


def tqae_step(
    delta_t: float,
    err_t: bool,
    gamma: float,
    alpha: float,
    variant: str = "asymptotic",
) -> float:
    """One update of the error-feedback offset.

    The ``asymptotic`` variant applies the additive update whenever
    ``delta_t >= alpha - 1`` (effective level <= 1) and otherwise decays the
    offset geometrically; it keeps the level inside [-gamma, 1 + gamma] when
    started from zero offset.  The ``symmetric`` variant applies the additive
    update only while the level is inside [0, 1] and decays geometrically on
    both sides, which removes the conservative drift (the mean level stays at
    alpha under exchangeable errors) at the cost of the long-run error-rate
    bound.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if variant == "asymptotic":
        additive = delta_t >= alpha - 1
    elif variant == "symmetric":
        additive = alpha - 1 <= delta_t <= alpha
    else:
        raise ValueError(f"unknown error variant: {variant!r}")
    if additive:
        return delta_t + gamma * (float(err_t) - alpha)
    return (1.0 - gamma) * delta_t


def tqae_step_vector(
    delta: np.ndarray,
    err: np.ndarray,
    gamma: float,
    alpha: float,
    variant: str = "asymptotic",
) -> np.ndarray:
    """Vectorized :func:`tqae_step` over independent per-series offsets."""
    if variant == "asymptotic":
        additive = delta >= alpha - 1
    elif variant == "symmetric":
        additive = (delta >= alpha - 1) & (delta <= alpha)
    else:
        raise ValueError(f"unknown error variant: {variant!r}")
    return np.where(additive, delta + gamma * (err.astype(float) - alpha), (1.0 - gamma) * delta)


@dataclass
class FeedbackStep:
    """Outcome of one step: adjustment state, score threshold, and error flag."""

    state: AdjusterState
    threshold: float
    err: bool

    @property
    def delta_hat(self) -> float:
        return self.state.delta_hat

    @property
    def level(self) -> float:
        return self.state.effective_level

    @property
    def infinite(self) -> bool:
        return np.isinf(self.threshold)


def run_tqae(
    stream: Iterable[tuple],
    config: MethodConfig,
    rng: Optional[np.random.Generator] = None,
) -> list[FeedbackStep]:
    """Run the error-feedback recurrence over one test series.

    Parameters
    ----------
    stream : iterable of (cal_scores_t, test_score_t)
        Per-step calibration cross-sections and the test series' realized
        score, in temporal order.
    config : MethodConfig
        Supplies alpha, gamma, the update variant, and smoothing.
    rng : numpy Generator, optional
        Used only when smoothing is enabled; defaults to a generator seeded
        from ``config.seed``.

    Returns
    -------
    list of FeedbackStep
        One record per step with the offset used, the effective level, the
        score threshold queried (``+inf`` in the infinitely wide regime), and
        the realized error flag.  Empty input yields an empty list.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    delta = 0.0
    steps: list[FeedbackStep] = []
    for cal_scores_t, test_score_t in stream:
        level = config.alpha - delta
        if config.smoothing:
            threshold = smoothed_threshold(level, cal_scores_t, rng)
        else:
            threshold = conformal_quantile(level, cal_scores_t)
        err = bool(test_score_t > threshold)
        steps.append(
            FeedbackStep(
                state=AdjusterState(alpha=config.alpha, delta_hat=delta),
                threshold=threshold,
                err=err,
            )
        )
        delta = tqae_step(delta, err, config.gamma, config.alpha, config.error_variant)
    return steps
