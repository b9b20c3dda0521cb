"""Closed-form detection and MSE predictions for the threshold detector.

Under either hypothesis the statistic |y_m|^2 is exponential, so the tail
probabilities past a threshold are single exponentials. The MSE predictor
is the first-order approximation that charges a missed active element its
mean power ``sigma_s2`` and a false alarm the noise power ``e0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .denoiser import detection_threshold

__all__ = [
    "TheoryPrediction",
    "prob_false_alarm",
    "prob_detection",
    "theoretical_mse",
    "predict",
    "roc_curve",
    "corollary2_slope_check",
]


@dataclass(frozen=True)
class TheoryPrediction:
    tau: float
    p_d: float
    p_fa: float
    mse: float


def _tail(tau: float, scale: float) -> float:
    if tau <= 0:
        return 1.0
    return min(max(math.exp(-tau / scale), 0.0), 1.0)


def prob_false_alarm(tau: float, e0: float) -> float:
    if not e0 > 0:
        raise ValueError(f"e0 must be positive, got {e0}")
    return _tail(tau, e0)


def prob_detection(tau: float, e0: float, sigma_s2: float) -> float:
    if not e0 > 0:
        raise ValueError(f"e0 must be positive, got {e0}")
    if sigma_s2 < 0:
        raise ValueError(f"sigma_s2 must be nonnegative, got {sigma_s2}")
    return _tail(tau, e0 + sigma_s2)


def theoretical_mse(q: float, p_d: float, p_fa: float, e0: float, sigma_s2: float) -> float:
    """Approximate per-element MSE, q(P_D e0 + (1-P_D) s2) + (1-q) P_FA e0."""
    for name, v in (("q", q), ("p_d", p_d), ("p_fa", p_fa)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    if e0 < 0 or sigma_s2 < 0:
        raise ValueError("e0 and sigma_s2 must be nonnegative")
    return q * (p_d * e0 + (1.0 - p_d) * sigma_s2) + (1.0 - q) * p_fa * e0


def predict(e0: float, snr: float, q: float, cost_c: float) -> TheoryPrediction:
    """Threshold, P_D, P_FA and approximate MSE at a true parameter point."""
    tau = detection_threshold(e0, snr, q, cost_c)
    s2 = snr * e0 / q
    p_d = prob_detection(tau, e0, s2)
    p_fa = prob_false_alarm(tau, e0)
    return TheoryPrediction(tau, p_d, p_fa, theoretical_mse(q, p_d, p_fa, e0, s2))


def roc_curve(e0: float, sigma_s2: float, n_points: int = 100) -> list[tuple[float, float]]:
    """Closed-form ROC, from P_FA ~ 1 down to P_FA = 1e-6.

    Thresholds are log-spaced; every pair satisfies
    ``p_d == p_fa ** (e0 / (e0 + sigma_s2))``.
    """
    if not e0 > 0 or not sigma_s2 > 0:
        raise ValueError("e0 and sigma_s2 must be positive")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    taus = np.geomspace(e0 * 1e-6, e0 * math.log(1e6), n_points)
    return [(prob_false_alarm(t, e0), prob_detection(t, e0, sigma_s2)) for t in taus]


def corollary2_slope_check(e0: float, snr: float, q_grid: Sequence[float], cost_c: float) -> list[tuple[float, float]]:
    """``(q, mse/q)`` pairs along ``q_grid`` at fixed SNR.

    When P_D dominates both P_FA and 1 - P_D the ratio is roughly constant,
    i.e. the predicted MSE is proportional to q. Outside that regime (low SNR)
    the pairs are still returned but carry no such guarantee.
    """
    return [(q, predict(e0, snr, q, cost_c).mse / q) for q in q_grid]
