"""Likelihood-ratio hard-thresholding denoiser for beamspace channels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .blind_estimators import BlindEstimates, blind_estimates, estimates_from_noise_power

__all__ = [
    "DenoiserConfig",
    "DenoiseResult",
    "detection_threshold",
    "hard_threshold",
    "denoise",
    "denoise_with_params",
    "denoise_with_noise_error",
]

DEFAULT_COST = 5.0


@dataclass(frozen=True)
class DenoiserConfig:
    cost_c: float = DEFAULT_COST

    def __post_init__(self):
        if not self.cost_c > 0:
            raise ValueError(f"cost_c must be positive, got {self.cost_c}")


@dataclass
class DenoiseResult:
    """Output of one denoising call.

    ``tau`` is the threshold on |y_m|^2: ``-inf`` when bypassed and ``nan``
    for the oracle-support baseline, which has no threshold.
    """

    estimate: np.ndarray
    support: np.ndarray
    tau: float
    estimates_used: Optional[BlindEstimates]
    bypassed: bool


def detection_threshold(e0_elem: float, snr: float, q: float, cost_c: float) -> float:
    """Threshold on the squared magnitude of an observed beamspace element.

    Comparing CN(0, E0 + s2) against CN(0, E0), s2 = snr*E0/q, with prior odds
    (1-q)/q and cost ratio C gives

        tau = E0 (q/snr + 1) ln((1 + snr/q) (1-q)/q C).

    The result can be negative, in which case every element passes.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    if not snr > 0:
        raise ValueError(f"snr must be positive, got {snr}")
    if not e0_elem > 0:
        raise ValueError(f"e0_elem must be positive, got {e0_elem}")
    if not cost_c > 0:
        raise ValueError(f"cost_c must be positive, got {cost_c}")
    return e0_elem * (q / snr + 1.0) * math.log((1.0 + snr / q) * (1.0 - q) / q * cost_c)


def hard_threshold(obs, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Keep elements with |y|^2 > tau (strict), zero the rest. Works on any shape."""
    y = np.asarray(obs, dtype=np.complex128)
    mask = (y.real**2 + y.imag**2) > tau
    return np.where(mask, y, 0.0), mask


def _bypass(y: np.ndarray, est: Optional[BlindEstimates]) -> DenoiseResult:
    return DenoiseResult(y.copy(), np.ones(y.shape, dtype=bool), -math.inf, est, True)


def _run(y: np.ndarray, est: BlindEstimates, cost_c: float) -> DenoiseResult:
    if est.degenerate or est.snr <= 0 or est.q_hat >= 1.0:
        return _bypass(y, est)
    tau = detection_threshold(est.e0_elem, est.snr, est.q_hat, cost_c)
    estimate, mask = hard_threshold(y, tau)
    return DenoiseResult(estimate, mask, tau, est, False)


def _obs(obs) -> np.ndarray:
    y = np.asarray(obs, dtype=np.complex128).ravel()
    if y.size == 0:
        raise ValueError("cannot denoise an empty vector")
    return y


def denoise(obs, cfg: DenoiserConfig = DenoiserConfig()) -> DenoiseResult:
    """Blind denoising of one beamspace observation.

    Noise power (MAD), SNR and activity rate are estimated from ``obs``
    itself, then a single hard threshold is applied. Every step is linear
    in the length. Degenerate estimates (zero SNR, unusable moments,
    ``q_hat == 1``) return the observation unchanged with ``bypassed=True``.
    """
    y = _obs(obs)
    return _run(y, blind_estimates(y), cfg.cost_c)


def denoise_with_params(obs, e0_elem: float, snr: float, q: float, cost_c: float = DEFAULT_COST) -> DenoiseResult:
    """Threshold with caller-supplied parameters; no estimation."""
    y = _obs(obs)
    tau = detection_threshold(e0_elem, snr, q, cost_c)
    estimate, mask = hard_threshold(y, tau)
    used = BlindEstimates(e0_elem, y.size * e0_elem, snr, q, float("nan"), False)
    return DenoiseResult(estimate, mask, tau, used, False)


def denoise_with_noise_error(obs, e0_true: float, rel_error: float, cost_c: float = DEFAULT_COST) -> DenoiseResult:
    """Denoise with noise power ``(1 + rel_error) * e0_true``.

    The perturbed power feeds the blind SNR and activity-rate estimators
    exactly as a MAD estimate would.
    """
    if rel_error <= -1.0:
        raise ValueError("rel_error must exceed -1")
    y = _obs(obs)
    est = estimates_from_noise_power(y, (1.0 + rel_error) * e0_true)
    return _run(y, est, cost_c)
