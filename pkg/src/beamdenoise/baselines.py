"""Reference denoisers: LS, oracle support, and a genie soft threshold.

``genie_soft_threshold`` picks its threshold with access to the true
channel. It is an optimistic stand-in for SURE-tuned soft thresholding and
is reported as ``genie_st``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .denoiser import DenoiseResult

__all__ = [
    "OracleInfo",
    "ls_estimate",
    "perfect_detection_denoise",
    "soft_threshold",
    "genie_soft_threshold",
]


@dataclass
class OracleInfo:
    true_support: np.ndarray
    truth: np.ndarray


def ls_estimate(obs) -> np.ndarray:
    # Orthonormal pilots: the LS estimate is the observation itself.
    return np.array(obs, dtype=np.complex128, copy=True)


def perfect_detection_denoise(obs, oracle: OracleInfo) -> DenoiseResult:
    y = np.asarray(obs, dtype=np.complex128).ravel()
    mask = np.asarray(oracle.true_support, dtype=bool).ravel()
    if mask.shape != y.shape:
        raise ValueError(f"support length {mask.size} does not match observation length {y.size}")
    return DenoiseResult(np.where(mask, y, 0.0), mask.copy(), math.nan, None, False)


def soft_threshold(obs, tau: float) -> np.ndarray:
    """y * max(1 - tau/|y|, 0), elementwise."""
    y = np.asarray(obs, dtype=np.complex128)
    mag = np.abs(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(mag > 0, np.maximum(1.0 - tau / mag, 0.0), 0.0)
    return y * gain


def genie_soft_threshold(obs, truth) -> tuple[np.ndarray, float]:
    """Soft threshold whose level minimizes the true squared error.

    Candidates are 0 and every |y_m|. After one sort the error of all
    candidates follows from prefix sums: for kept elements
    ``|y - tau*u - h|^2 = |y-h|^2 - 2 tau Re(conj(y-h) u) + tau^2``
    with ``u = y/|y|``, and zeroed elements cost ``|h|^2``.
    """
    y = np.asarray(obs, dtype=np.complex128).ravel()
    h = np.asarray(truth, dtype=np.complex128).ravel()
    if y.shape != h.shape:
        raise ValueError("obs and truth lengths differ")
    mag = np.abs(y)
    order = np.argsort(mag, kind="stable")
    a = mag[order]
    d = (y - h)[order]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(a > 0, y[order] / a, 0.0)
    err_keep = np.abs(d) ** 2
    cross = (np.conj(d) * u).real
    err_zero = np.abs(h[order]) ** 2

    # Candidate k (0..M): threshold a[k-1] (0 for k=0); sorted positions < k are zeroed.
    taus = np.concatenate(([0.0], a))
    zero_cost = np.concatenate(([0.0], np.cumsum(err_zero)))
    keep_sq = np.concatenate((np.cumsum(err_keep[::-1])[::-1], [0.0]))
    keep_cross = np.concatenate((np.cumsum(cross[::-1])[::-1], [0.0]))
    n_keep = y.size - np.arange(y.size + 1)
    cost = zero_cost + keep_sq - 2.0 * taus * keep_cross + n_keep * taus**2
    best = int(np.argmin(cost))
    tau = float(taus[best])
    return soft_threshold(y, tau), tau
