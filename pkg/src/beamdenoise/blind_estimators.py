"""Blind O(M) estimators of noise power, SNR and activity rate.

Noise power is reported twice: ``e0_elem`` is the per-element variance and
``e0_total = M * e0_elem`` is the quantity the SNR estimator divides by.
The moment-based activity-rate estimator normalizes by ``e0_elem``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import median_squared_magnitude

__all__ = [
    "BlindEstimates",
    "estimate_noise_power",
    "estimate_snr",
    "sample_fourth_moment",
    "estimate_activity_rate",
    "quantize_activity_rate",
    "estimates_from_noise_power",
    "blind_estimates",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class BlindEstimates:
    e0_elem: float
    e0_total: float
    snr: float
    q_hat: float
    mu4_hat: float
    degenerate: bool


def _obs(obs) -> np.ndarray:
    arr = np.asarray(obs, dtype=np.complex128).ravel()
    if arr.size < 1:
        raise ValueError("observation must have at least one element")
    return arr


def estimate_noise_power(obs) -> tuple[float, float]:
    """MAD noise estimate: median |y|^2 / ln 2 (for CN noise, |y|^2 is exponential)."""
    y = _obs(obs)
    e0_elem = median_squared_magnitude(y) / LN2
    return e0_elem, y.size * e0_elem


def estimate_snr(obs, e0_total: float) -> float:
    """Per-element SNR, max(||y||^2 / e0_total - 1, 0)."""
    if not e0_total > 0:
        raise ValueError(f"e0_total must be positive, got {e0_total}")
    y = _obs(obs)
    energy = float(np.vdot(y, y).real)
    return max(energy / e0_total - 1.0, 0.0)


def sample_fourth_moment(obs) -> float:
    y = _obs(obs)
    p = y.real**2 + y.imag**2
    return float(np.dot(p, p) / y.size)


def quantize_activity_rate(q_u: float, M: int) -> float:
    """Nearest point of {1/M, ..., 1}; exact ties go to the larger value."""
    m = math.floor(q_u * M + 0.5)
    return min(max(m, 1), M) / M


def estimate_activity_rate(mu4_hat: float, e0_elem: float, snr: float, M: int) -> tuple[float, bool]:
    """Method-of-moments activity rate from the fourth moment.

    Under the Bernoulli-complex Gaussian model
    ``mu4 / E0^2 = 2 + 4*snr + 2*snr^2 / q``, which is solved for ``q`` and
    snapped to the grid ``m/M``.

    Returns:
        ``(q_hat, degenerate)``. Degenerate means ``snr == 0`` or a
        nonpositive denominator; ``q_hat`` is then 1.0 and callers should
        bypass thresholding.
    """
    if not e0_elem > 0:
        raise ValueError(f"e0_elem must be positive, got {e0_elem}")
    if snr < 0 or M < 1:
        raise ValueError("snr must be >= 0 and M >= 1")
    denom = mu4_hat / e0_elem**2 - 2.0 - 4.0 * snr
    if snr == 0 or not denom > 0:
        return 1.0, True
    q_u = 2.0 * snr**2 / denom
    return quantize_activity_rate(q_u, M), False


def estimates_from_noise_power(obs, e0_elem: float) -> BlindEstimates:
    """Run the SNR and activity estimators given a noise power.

    This is also how a deliberately mis-specified noise power is propagated
    into the downstream estimates.
    """
    y = _obs(obs)
    M = y.size
    mu4 = sample_fourth_moment(y)
    if not e0_elem > 0:
        return BlindEstimates(e0_elem, M * e0_elem, 0.0, 1.0, mu4, True)
    e0_total = M * e0_elem
    snr = estimate_snr(y, e0_total)
    q_hat, degenerate = estimate_activity_rate(mu4, e0_elem, snr, M)
    return BlindEstimates(e0_elem, e0_total, snr, q_hat, mu4, degenerate)


def blind_estimates(obs) -> BlindEstimates:
    e0_elem, _ = estimate_noise_power(obs)
    return estimates_from_noise_power(obs, e0_elem)
