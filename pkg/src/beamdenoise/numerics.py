"""Complex-vector primitives: unitary DFT, linear-time median, seeded sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngStream",
    "as_generator",
    "unitary_dft",
    "inverse_unitary_dft",
    "median_squared_magnitude",
    "sample_complex_gaussian",
]


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream.

    The pair ``(master_seed, stream_index)`` fully determines the draws, so a
    trial gets the same numbers whichever worker runs it.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, index: int) -> "RngStream":
        # Flat index space; callers own the layout (e.g. point * trials + trial).
        return RngStream(self.master_seed, index)


def as_generator(rng) -> np.random.Generator:
    """Accept an ``RngStream``, a ``Generator`` or an int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] < 1:
        raise ValueError("vector length must be >= 1")
    return arr


def unitary_dft(v) -> np.ndarray:
    """Apply the 1/sqrt(M)-normalized DFT along the last axis."""
    return np.fft.fft(_as_vector(v), norm="ortho")


def inverse_unitary_dft(v) -> np.ndarray:
    """Inverse of :func:`unitary_dft`; F^H = F^{-1}."""
    return np.fft.ifft(_as_vector(v), norm="ortho")


def median_squared_magnitude(v) -> float:
    """Median of |v_m|^2 via selection (no full sort).

    For even length the two central order statistics are averaged; both are
    placed by one introselect pass, so the cost stays linear.
    """
    p = np.abs(_as_vector(v).ravel()) ** 2
    M = p.size
    k = M // 2
    if M % 2:
        return float(np.partition(p, k)[k])
    part = np.partition(p, (k - 1, k))
    return float(0.5 * (part[k - 1] + part[k]))


def sample_complex_gaussian(n, variance: float, rng) -> np.ndarray:
    """Draw circularly symmetric CN(0, variance) samples.

    Args:
        n: int or shape tuple.
        variance: per-entry variance; real and imaginary parts each get half.
        rng: ``RngStream``, ``Generator`` or int seed.

    Returns:
        complex128 array of the requested shape.
    """
    if variance < 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    gen = as_generator(rng)
    shape = (n,) if np.isscalar(n) else tuple(n)
    scale = np.sqrt(variance / 2.0)
    # Draw even when variance == 0 so the stream advances identically.
    z = gen.standard_normal(shape + (2,))
    return scale * (z[..., 0] + 1j * z[..., 1])
