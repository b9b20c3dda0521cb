"""Ground-truth and noisy beamspace channels.

Three sources are supported: a synthetic Bernoulli-complex Gaussian model
with an exact support size, a geometric ULA multipath model, and channel
files produced by an external generator (read with :func:`load_channels`).
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .numerics import as_generator, sample_complex_gaussian, unitary_dft

__all__ = [
    "SyntheticParams",
    "GeometricParams",
    "ChannelRealization",
    "ChannelFileError",
    "gen_synthetic",
    "sparse_truth",
    "steering_vector",
    "gen_geometric",
    "geometric_preset",
    "energy_activity_rate",
    "add_noise",
    "load_channels",
    "save_channels",
]

# Default path counts for the geometric presets.
GEOMETRIC_PATHS = {"geometric_los": 3, "geometric_nlos": 8}

MAGIC = b"BMCH"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def _active_count(q: float, M: int) -> int:
    k = round(q * M)
    if abs(q * M - k) > 1e-9 or not 1 <= k <= M:
        raise ValueError(f"q*M must be an integer in [1, M]; got q={q}, M={M}")
    return int(k)


@dataclass(frozen=True)
class SyntheticParams:
    M: int
    q: float
    E0: float = 1.0
    snr: float = 1.0
    seed: object = 0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        _active_count(self.q, self.M)
        if self.E0 < 0 or self.snr < 0:
            raise ValueError("E0 and snr must be nonnegative")

    @property
    def n_active(self) -> int:
        return _active_count(self.q, self.M)

    @property
    def sigma_s2(self) -> float:
        """Per-active-element signal variance, snr * E0 / q."""
        return self.snr * self.E0 / self.q


@dataclass(frozen=True)
class GeometricParams:
    """Multipath ULA channel description.

    ``gains``/``angles`` pin the paths explicitly; otherwise gains are drawn
    CN(0, 1/L) and angles uniform on [-1, 1). With ``los`` the first path
    carries ``los_ratio_db`` more power than all other paths together.
    Noise is either a fixed ``e0`` or, when ``snr`` is given, calibrated per
    realization as E0 = ||h||^2 / (M * snr).
    """

    M: int
    L: int = 1
    los: bool = False
    los_ratio_db: float = 10.0
    gains: Optional[Sequence[complex]] = None
    angles: Optional[Sequence[float]] = None
    e0: float = 0.0
    snr: Optional[float] = None
    eta: float = 0.99
    seed: object = 0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        for name, seq in (("gains", self.gains), ("angles", self.angles)):
            if seq is not None and len(seq) != self.L:
                raise ValueError(f"{name} must have L={self.L} entries")
        if self.angles is not None and any(not -1.0 <= a < 1.0 for a in self.angles):
            raise ValueError("angles must lie in [-1, 1)")
        if self.e0 < 0 or (self.snr is not None and self.snr <= 0):
            raise ValueError("e0 must be >= 0 and snr > 0")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")


@dataclass
class ChannelRealization:
    truth: np.ndarray
    observed: np.ndarray
    support: np.ndarray
    e0_true: float
    sigma_s2_true: float

    @property
    def M(self) -> int:
        return self.truth.size

    @property
    def q_true(self) -> float:
        return float(self.support.sum()) / self.M


def gen_synthetic(params: SyntheticParams, rng=None) -> ChannelRealization:
    """Sample a Bernoulli-complex Gaussian beamspace channel plus noise.

    Exactly ``q*M`` positions are active (drawn without replacement), so
    the realized activity rate equals ``q`` on every draw.
    """
    gen = as_generator(params.seed if rng is None else rng)
    truth, support = sparse_truth(params.M, params.n_active, params.sigma_s2, gen)
    observed = add_noise(truth, params.E0, gen)
    return ChannelRealization(truth, observed, support, params.E0, params.sigma_s2)


def sparse_truth(M: int, n_active: int, sigma_s2: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Noiseless channel with ``n_active`` CN(0, sigma_s2) entries at random positions."""
    gen = as_generator(rng)
    support = np.zeros(M, dtype=bool)
    support[gen.choice(M, size=n_active, replace=False)] = True
    truth = np.zeros(M, dtype=np.complex128)
    truth[support] = sample_complex_gaussian(n_active, sigma_s2, gen)
    return truth, support


def steering_vector(phi: float, M: int) -> np.ndarray:
    """ULA response [1, e^{-j2pi phi}, ..., e^{-j2pi phi (M-1)}]."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return np.exp(-2j * np.pi * phi * np.arange(M))


def _draw_paths(params: GeometricParams, gen: np.random.Generator):
    L = params.L
    if params.angles is not None:
        angles = np.asarray(params.angles, dtype=float)
    else:
        angles = gen.uniform(-1.0, 1.0, size=L)
    if params.gains is not None:
        gains = np.asarray(params.gains, dtype=np.complex128)
    else:
        if params.los and L > 1:
            k = 10.0 ** (params.los_ratio_db / 10.0)
            powers = np.full(L, 1.0 / ((k + 1.0) * (L - 1)))
            powers[0] = k / (k + 1.0)
        else:
            powers = np.full(L, 1.0 / L)
        gains = np.sqrt(powers / 2.0) * (gen.standard_normal(L) + 1j * gen.standard_normal(L))
        if params.los:
            # Dominant direct path: deterministic amplitude, random phase.
            gains[0] = np.sqrt(powers[0]) * np.exp(2j * np.pi * gen.uniform())
    return gains, angles


def gen_geometric(params: GeometricParams, rng=None) -> ChannelRealization:
    """Sum-of-paths ULA channel mapped to beamspace, plus noise."""
    gen = as_generator(params.seed if rng is None else rng)
    gains, angles = _draw_paths(params, gen)
    n = np.arange(params.M)
    h = (np.exp(-2j * np.pi * np.outer(angles, n)) * gains[:, None]).sum(axis=0)
    truth = unitary_dft(h)
    power = float(np.vdot(truth, truth).real)
    if params.snr is not None:
        e0 = power / (params.M * params.snr)
    else:
        e0 = params.e0
    observed = add_noise(truth, e0, gen)
    support = _energy_support(truth, params.eta)
    sigma_s2 = float(np.mean(np.abs(truth[support]) ** 2))
    return ChannelRealization(truth, observed, support, e0, sigma_s2)


def geometric_preset(source: str, M: int, n_paths: Optional[int] = None, **kwargs) -> GeometricParams:
    """``GeometricParams`` for ``"geometric_los"`` or ``"geometric_nlos"``."""
    if source not in GEOMETRIC_PATHS:
        raise ValueError(f"unknown geometric preset {source!r}")
    L = n_paths or GEOMETRIC_PATHS[source]
    return GeometricParams(M, L=L, los=source == "geometric_los", **kwargs)


def _energy_support(truth: np.ndarray, eta: float) -> np.ndarray:
    p = np.abs(truth) ** 2
    order = np.argsort(-p, kind="stable")
    A, _ = energy_activity_rate(truth, eta)
    support = np.zeros(truth.size, dtype=bool)
    support[order[:A]] = True
    return support


def energy_activity_rate(truth, eta: float = 0.99) -> tuple[int, float]:
    """Smallest number of strongest beams holding ``eta`` of the energy.

    Returns:
        ``(A_eta, A_eta / M)``.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    p = np.abs(np.asarray(truth, dtype=np.complex128).ravel()) ** 2
    csum = np.cumsum(np.sort(p)[::-1])
    total = csum[-1] if csum.size else 0.0
    if total <= 0:
        raise ValueError("activity rate is undefined for a zero vector")
    A = int(np.argmax(csum >= eta * total)) + 1
    return A, A / p.size


def add_noise(truth, E0: float, rng) -> np.ndarray:
    """Return ``truth + CN(0, E0)`` noise on every element."""
    if E0 < 0:
        raise ValueError(f"E0 must be nonnegative, got {E0}")
    truth = np.asarray(truth, dtype=np.complex128)
    return truth + sample_complex_gaussian(truth.shape, E0, rng)


class ChannelFileError(ValueError):
    """Malformed channel file. Carries the offending record and byte offset."""

    def __init__(self, message: str, record: Optional[int] = None, offset: Optional[int] = None):
        where = []
        if record is not None:
            where.append(f"record {record}")
        if offset is not None:
            where.append(f"byte offset {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.record = record
        self.offset = offset


def save_channels(path, channels) -> None:
    """Write antenna-domain channel vectors (binary BMCH, or CSV by suffix)."""
    arr = np.atleast_2d(np.asarray(channels, dtype=np.complex128))
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["record", "index", "re", "im"])
            for r, row in enumerate(arr):
                for i, z in enumerate(row):
                    w.writerow([r, i, repr(float(z.real)), repr(float(z.imag))])
        return
    count, M = arr.shape
    body = np.empty((count, M, 2), dtype="<f8")
    body[..., 0] = arr.real
    body[..., 1] = arr.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, M, count))
        fh.write(body.tobytes())


def load_channels(path) -> np.ndarray:
    """Read channel vectors as a ``(count, M)`` complex array.

    Raises:
        ChannelFileError: bad header, truncated body, ragged records or
            non-finite values.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return _load_csv(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise ChannelFileError("truncated header", offset=len(data))
    magic, version, M, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ChannelFileError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise ChannelFileError(f"unsupported version {version}", offset=4)
    if M < 1:
        raise ChannelFileError("M must be >= 1", offset=8)
    rec_bytes = 16 * M
    expected = _HEADER.size + count * rec_bytes
    if len(data) != expected:
        if len(data) < expected:
            rec = (len(data) - _HEADER.size) // rec_bytes
            raise ChannelFileError(
                f"truncated body, expected {expected} bytes, got {len(data)}",
                record=rec, offset=len(data),
            )
        raise ChannelFileError(f"{len(data) - expected} trailing bytes", offset=expected)
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(count, M, 2)
    out = body[..., 0] + 1j * body[..., 1]
    bad = ~np.isfinite(out)
    if bad.any():
        rec = int(np.argmax(bad.any(axis=1)))
        raise ChannelFileError("non-finite value", record=rec, offset=_HEADER.size + rec * rec_bytes)
    return out


def _load_csv(path: Path) -> np.ndarray:
    records: dict[int, dict[int, complex]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["record", "index", "re", "im"]:
            raise ChannelFileError("CSV header must be record,index,re,im", offset=0)
        for line_no, row in enumerate(reader, start=2):
            try:
                r, i, re, im = int(row[0]), int(row[1]), float(row[2]), float(row[3])
            except (ValueError, IndexError):
                raise ChannelFileError(f"unparseable CSV line {line_no}") from None
            if not (math.isfinite(re) and math.isfinite(im)):
                raise ChannelFileError(f"non-finite value on line {line_no}", record=r)
            records.setdefault(r, {})[i] = complex(re, im)
    if not records:
        raise ChannelFileError("no records in CSV file")
    if sorted(records) != list(range(len(records))):
        raise ChannelFileError("record indices must be contiguous from 0")
    M = len(records[0])
    out = np.empty((len(records), M), dtype=np.complex128)
    for r in range(len(records)):
        rec = records[r]
        if sorted(rec) != list(range(M)):
            raise ChannelFileError(f"length mismatch, expected {M} entries", record=r)
        out[r] = [rec[i] for i in range(M)]
    return out
