"""Seeded synthetic panels with controllable rank dependence.

Series are drawn i.i.d. (hence exchangeable) around a fixed seasonal mean.
In ``independent`` mode every series has unit noise scale, so score ranks are
i.i.d. over time; in ``persistent`` mode each series keeps a log-normal scale
for its whole lifetime, so a series that ranks high once tends to rank high
again.  An optional drift shifts the test actuals away from the mean the
forecasts were built on, breaking exchangeability between calibration and
test on purpose.
"""

from __future__ import annotations

import warnings

import numpy as np

from .panel import CAL, TEST, TRAIN, ForecastPanel, PanelValidationError

DEPENDENCE_MODES = ("independent", "persistent")


def seasonal_mean(horizon: int) -> np.ndarray:
    """Fixed smooth seasonal curve shared by every series."""
    t = np.arange(horizon, dtype=float)
    return 10.0 + 3.0 * np.sin(2.0 * np.pi * t / 12.0) + 1.0 * np.cos(2.0 * np.pi * t / 30.0)


def generate_panel(
    n_train: int,
    n_cal: int,
    n_test: int,
    horizon: int,
    dependence: str = "independent",
    strength: float = 1.0,
    drift: float = 0.0,
    seed: int = 0,
) -> ForecastPanel:
    """Generate an exchangeable synthetic panel with oracle mean forecasts.

    Each series is ``y[i, t] = mu[t] + s_i * eta[i, t]`` with ``eta`` i.i.d.
    standard normal and ``y_hat = mu`` (plus ``drift`` added to the test
    actuals when requested).  ``s_i = 1`` in ``independent`` mode;
    ``s_i ~ LogNormal(0, strength)`` in ``persistent`` mode.  Deterministic
    given the seed, with per-series sub-seeds so generation order does not
    matter.
    """
    for name, count in (("n_train", n_train), ("n_cal", n_cal), ("n_test", n_test)):
        if count < 1:
            raise PanelValidationError(f"{name} must be at least 1")
    if horizon < 1:
        raise PanelValidationError("horizon must be at least 1")
    if dependence not in DEPENDENCE_MODES:
        raise PanelValidationError(f"unknown dependence mode: {dependence!r}")
    if strength <= 0:
        raise PanelValidationError("strength must be positive")

    n = n_train + n_cal + n_test
    mu = seasonal_mean(horizon)
    children = np.random.SeedSequence(seed).spawn(n)
    y = np.empty((n, horizon))
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        scale = rng.lognormal(0.0, strength) if dependence == "persistent" else 1.0
        y[i] = mu + scale * rng.standard_normal(horizon)

    split = np.array([TRAIN] * n_train + [CAL] * n_cal + [TEST] * n_test)
    if drift != 0.0:
        y[split == TEST] += drift
    width = len(str(n - 1))
    series_id = np.array([f"s{i:0{width}d}" for i in range(n)])
    y_hat = np.broadcast_to(mu, (n, horizon)).copy()
    return ForecastPanel(series_id=series_id, split=split, y=y, y_hat=y_hat)


def fit_linear_forecaster(panel: ForecastPanel, order: int = 3) -> ForecastPanel:
    """Replace point forecasts with per-step lagged linear regressions.

    One regression is fit per time step on the training split, using the last
    ``order`` lags of the actuals as inputs; steps with fewer than ``order``
    preceding observations fall back to the training-split mean at that step,
    as do steps whose design matrix is rank deficient.
    """
    if panel.n_train <= order + 1:
        raise PanelValidationError("need n_train > order + 1 to fit the lagged regression")
    train = panel.mask(TRAIN)
    y = panel.y
    n, horizon = y.shape
    y_hat = np.empty_like(y)
    for t in range(horizon):
        train_mean = float(y[train, t].mean())
        if t < order:
            y_hat[:, t] = train_mean
            continue
        lags = y[:, t - order : t]
        design = np.column_stack([np.ones(int(train.sum())), lags[train]])
        coef, _, rank, _ = np.linalg.lstsq(design, y[train, t], rcond=None)
        if rank < order + 1:
            warnings.warn(
                f"rank-deficient lag design at t={t}; falling back to the per-step mean",
                stacklevel=2,
            )
            y_hat[:, t] = train_mean
            continue
        y_hat[:, t] = coef[0] + lags @ coef[1:]
    return ForecastPanel(
        series_id=panel.series_id.copy(),
        split=panel.split.copy(),
        y=y.copy(),
        y_hat=y_hat,
        q_lo=None if panel.q_lo is None else panel.q_lo.copy(),
        q_hi=None if panel.q_hi is None else panel.q_hi.copy(),
        sigma_hat=None if panel.sigma_hat is None else panel.sigma_hat.copy(),
    )
