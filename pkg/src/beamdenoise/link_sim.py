"""Uplink link-level simulation: 16-QAM, LMMSE combining, uncoded BER.

Channels are normalized to unit average per-element power per user. Pilot
observations and data both see noise variance ``1/snr``, so ``snr`` is the
per-user per-antenna SNR on both phases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .baselines import OracleInfo, genie_soft_threshold, ls_estimate, perfect_detection_denoise
from .blind_estimators import blind_estimates
from .channel_model import SyntheticParams, add_noise, gen_geometric, geometric_preset, sparse_truth
from .denoiser import DenoiserConfig, denoise
from .numerics import RngStream, as_generator, inverse_unitary_dft, sample_complex_gaussian

__all__ = [
    "ESTIMATORS",
    "LinkConfig",
    "BerResult",
    "qam16_modulate",
    "qam16_demodulate",
    "lmmse_matrix",
    "link_trial",
    "simulate_ber",
]

ESTIMATORS = ("perfect_csi", "proposed", "ls", "perfect_detection", "genie_st")
CHANNELS = ("synthetic", "geometric_los", "geometric_nlos")

_SCALE = 1.0 / np.sqrt(10.0)
# Gray pairs (b_hi, b_lo) -> amplitude level, index = 2*b_hi + b_lo.
_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])


@dataclass(frozen=True)
class LinkConfig:
    M: int = 256
    K: int = 16
    snr: float = 10.0
    n_symbols: int = 64
    estimator: str = "proposed"
    seed: object = 0
    trials: int = 100
    channel: str = "synthetic"
    q: float = 0.0625
    cost_c: float = 5.0
    n_paths: Optional[int] = None

    def __post_init__(self):
        if self.K < 1 or self.M < self.K:
            raise ValueError("need K >= 1 and M >= K")
        if self.n_symbols < 1 or self.trials < 1:
            raise ValueError("n_symbols and trials must be >= 1")
        if not self.snr > 0:
            raise ValueError("snr must be positive")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}; choose from {ESTIMATORS}")
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}; choose from {CHANNELS}")


class BerResult(NamedTuple):
    ber: float
    bit_errors: int
    bit_count: int


def qam16_modulate(bits) -> np.ndarray:
    """Gray-mapped unit-energy 16-QAM; each 4 bits are (I_hi, I_lo, Q_hi, Q_lo)."""
    b = np.asarray(bits, dtype=np.int64).ravel()
    if b.size % 4:
        raise ValueError(f"bit count must be a multiple of 4, got {b.size}")
    b = b.reshape(-1, 4)
    i = _LEVELS[2 * b[:, 0] + b[:, 1]]
    q = _LEVELS[2 * b[:, 2] + b[:, 3]]
    return (i + 1j * q) * _SCALE


def _axis_bits(x: np.ndarray) -> np.ndarray:
    # Ties go to the smaller-magnitude level: -2 -> -1, 0 -> -1, 2 -> +1.
    hi = (x > 0).astype(np.int64)
    lo = (np.abs(x) <= 2.0).astype(np.int64)
    return np.stack((hi, lo), axis=-1)


def qam16_demodulate(symbols) -> np.ndarray:
    s = np.asarray(symbols, dtype=np.complex128).ravel() / _SCALE
    out = np.concatenate((_axis_bits(s.real), _axis_bits(s.imag)), axis=-1)
    return out.reshape(-1)


def lmmse_matrix(H_hat, snr: float) -> np.ndarray:
    """K x M combiner G with x_hat = G y.

    G = W^H for W = H (H^H H + I/snr)^{-1}; the regularized Gram matrix is
    Hermitian, so G = (H^H H + I/snr)^{-1} H^H.
    """
    if not snr > 0:
        raise ValueError("snr must be positive")
    H = np.asarray(H_hat, dtype=np.complex128)
    if H.ndim == 1:
        H = H[:, None]
    HH = H.conj().T
    gram = HH @ H + np.eye(H.shape[1]) / snr
    try:
        return np.linalg.solve(gram, HH)
    except np.linalg.LinAlgError as exc:
        raise ValueError("regularized Gram matrix is singular") from exc


def _user_channel(cfg: LinkConfig, gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Unit-power beamspace truth and its support."""
    if cfg.channel == "synthetic":
        n_active = SyntheticParams(cfg.M, cfg.q).n_active
        return sparse_truth(cfg.M, n_active, 1.0 / cfg.q, gen)
    real = gen_geometric(geometric_preset(cfg.channel, cfg.M, cfg.n_paths), rng=gen)
    return real.truth, real.support


def _estimate(name: str, obs: np.ndarray, truth: np.ndarray, support: np.ndarray, cost_c: float) -> np.ndarray:
    if name == "proposed":
        return denoise(obs, DenoiserConfig(cost_c)).estimate
    if name == "ls":
        return ls_estimate(obs)
    if name == "perfect_detection":
        return perfect_detection_denoise(obs, OracleInfo(support, truth)).estimate
    if name == "genie_st":
        return genie_soft_threshold(obs, truth)[0]
    if name == "perfect_csi":
        return truth.copy()
    raise ValueError(f"unknown estimator {name!r}")


def link_trial(cfg: LinkConfig, rng, estimators: Sequence[str] = ESTIMATORS) -> dict[str, tuple[int, int]]:
    """One channel draw and data burst, shared by all ``estimators``.

    Returns:
        estimator name -> ``(bit_errors, bit_count)``.
    """
    gen = as_generator(rng)
    n0 = 1.0 / cfg.snr
    truth_bs = np.empty((cfg.K, cfg.M), dtype=np.complex128)
    supports = np.empty((cfg.K, cfg.M), dtype=bool)
    for k in range(cfg.K):
        truth_bs[k], supports[k] = _user_channel(cfg, gen)
    obs_bs = add_noise(truth_bs, n0, gen)

    bits = gen.integers(0, 2, size=(cfg.K, 4 * cfg.n_symbols))
    x = qam16_modulate(bits.ravel()).reshape(cfg.K, cfg.n_symbols)
    H = inverse_unitary_dft(truth_bs).T
    y = H @ x + sample_complex_gaussian((cfg.M, cfg.n_symbols), n0, gen)

    snr_hat = max(np.mean([blind_estimates(o).snr for o in obs_bs]), 1e-6)
    out = {}
    for name in estimators:
        est_bs = np.stack([
            _estimate(name, obs_bs[k], truth_bs[k], supports[k], cfg.cost_c) for k in range(cfg.K)
        ])
        H_hat = inverse_unitary_dft(est_bs).T
        reg_snr = cfg.snr if name == "perfect_csi" else snr_hat
        x_hat = lmmse_matrix(H_hat, reg_snr) @ y
        rx_bits = qam16_demodulate(x_hat.ravel()).reshape(cfg.K, -1)
        out[name] = (int(np.count_nonzero(rx_bits != bits)), bits.size)
    return out


def simulate_ber(cfg: LinkConfig) -> BerResult:
    """Uncoded BER of ``cfg.estimator`` over ``cfg.trials`` independent draws."""
    base = cfg.seed if isinstance(cfg.seed, RngStream) else RngStream(int(cfg.seed))
    errors = bits = 0
    for t in range(cfg.trials):
        e, n = link_trial(cfg, base.substream(t), (cfg.estimator,))[cfg.estimator]
        errors += e
        bits += n
    return BerResult(errors / bits, errors, bits)
