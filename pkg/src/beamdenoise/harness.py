"""Experiment sweeps, ``key = value`` configs and CSV output.

Each experiment is a full-factorial sweep over its parameter grids. Every
grid point reuses the same per-trial random streams (common random
numbers), and each trial's outcome is stored in a fixed slot, so results do
not depend on how trials are split across worker processes.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import OracleInfo, genie_soft_threshold, ls_estimate, perfect_detection_denoise
from .blind_estimators import blind_estimates
from .channel_model import (
    ChannelRealization,
    SyntheticParams,
    add_noise,
    energy_activity_rate,
    gen_geometric,
    gen_synthetic,
    geometric_preset,
    load_channels,
)
from .denoiser import DenoiserConfig, denoise, denoise_with_noise_error, detection_threshold, hard_threshold
from .link_sim import ESTIMATORS, LinkConfig, link_trial
from .numerics import RngStream, unitary_dft
from .theory import prob_detection, prob_false_alarm

__all__ = [
    "KINDS",
    "ConfigError",
    "ExperimentSpec",
    "ResultRow",
    "CSV_HEADER",
    "load_config",
    "parse_config",
    "dump_config",
    "run_experiment",
    "emit_csv",
    "read_csv",
]

KINDS = ("activity", "mse", "ber", "cost_sweep", "noise_error_sweep", "roc", "timing")
SOURCES = ("synthetic", "geometric_los", "geometric_nlos")

CSV_HEADER = ("experiment", "snr_db", "q", "cost_c", "noise_err", "method", "metric", "value", "trials", "seed")

DEFAULT_METHODS = {
    "activity": ("proposed",),
    "mse": ("proposed", "ls", "perfect_detection", "genie_st"),
    "ber": ESTIMATORS,
    "cost_sweep": ("proposed",),
    "noise_error_sweep": ("proposed",),
    "roc": ("theory", "empirical", "proposed"),
    "timing": ("proposed", "genie_st", "unitary_dft"),
}
ALLOWED_METHODS = {
    **DEFAULT_METHODS,
    "cost_sweep": ("proposed", "perfect_detection", "ls"),
    "noise_error_sweep": ("proposed", "ls"),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str = "mse"
    name: str = ""
    snr_grid_db: tuple = (-5.0, 0.0, 5.0, 10.0, 15.0)
    q_grid: tuple = (0.0625, 0.125, 0.25)
    cost_grid: tuple = (0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 20.0, 50.0, 100.0)
    noise_error_grid: tuple = (-0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0)
    M: int = 256
    K: int = 16
    trials: int = 10000
    cost_c: float = 5.0
    eta: float = 0.99
    seed: int = 0
    channel_source: str = "synthetic"
    methods: tuple = ()
    n_symbols: int = 64
    n_paths: int = 0
    los_ratio_db: float = 10.0
    m_grid: tuple = (4096, 8192, 16384, 32768, 65536)
    timing_repeats: int = 21

    def __post_init__(self):
        _validate(self)

    @property
    def experiment_id(self) -> str:
        return self.name or self.kind

    @property
    def method_list(self) -> tuple:
        return self.methods or DEFAULT_METHODS[self.kind]

    @property
    def is_synthetic(self) -> bool:
        return self.channel_source == "synthetic"


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    snr_db: Optional[float]
    q: Optional[float]
    cost_c: Optional[float]
    noise_err: Optional[float]
    method: str
    metric: str
    value: float
    trials: int
    seed: int


# --------------------------------------------------------------------------
# configuration

_TUPLE_FIELDS = {
    "snr_grid_db": float, "q_grid": float, "cost_grid": float,
    "noise_error_grid": float, "methods": str, "m_grid": int,
}
_SCALAR_FIELDS = {
    "kind": str, "name": str, "M": int, "K": int, "trials": int, "cost_c": float,
    "eta": float, "seed": int, "channel_source": str, "n_symbols": int,
    "n_paths": int, "los_ratio_db": float, "timing_repeats": int,
}


def _fail(key: str, msg: str):
    raise ConfigError(f"{key}: {msg}")


def _validate(s: ExperimentSpec) -> None:
    if s.kind not in KINDS:
        _fail("kind", f"unknown kind {s.kind!r}; expected one of {', '.join(KINDS)}")
    src = s.channel_source
    if src not in SOURCES and not (src.startswith("file:") and len(src) > 5):
        _fail("channel_source", f"expected one of {', '.join(SOURCES)} or file:<path>, got {src!r}")
    for key in ("snr_grid_db", "q_grid", "cost_grid", "noise_error_grid", "m_grid"):
        if not getattr(s, key):
            _fail(key, "grid must be nonempty")
    if s.M < 1:
        _fail("M", "must be >= 1")
    if s.K < 1 or s.K > s.M:
        _fail("K", "must satisfy 1 <= K <= M")
    if s.trials < 1:
        _fail("trials", "must be >= 1")
    if not s.cost_c > 0:
        _fail("cost_c", f"must be positive, got {s.cost_c}")
    if any(not c > 0 for c in s.cost_grid):
        _fail("cost_grid", "entries must be positive")
    if any(not e > -1 for e in s.noise_error_grid):
        _fail("noise_error_grid", "entries must exceed -1")
    if not 0 < s.eta <= 1:
        _fail("eta", f"must lie in (0, 1], got {s.eta}")
    if not 0 <= s.seed < 2**64:
        _fail("seed", "must be a 64-bit unsigned integer")
    if s.n_symbols < 1:
        _fail("n_symbols", "must be >= 1")
    if s.n_paths < 0:
        _fail("n_paths", "must be >= 0 (0 selects the preset default)")
    if s.timing_repeats < 1:
        _fail("timing_repeats", "must be >= 1")
    if any(m < 16 or m & (m - 1) for m in s.m_grid):
        _fail("m_grid", "entries must be powers of two >= 16")
    for q in s.q_grid:
        if not 0 < q <= 1:
            _fail("q_grid", f"entries must lie in (0, 1], got {q}")
        if s.is_synthetic and abs(q * s.M - round(q * s.M)) > 1e-9:
            _fail("q_grid", f"q*M must be an integer, got q={q}, M={s.M}")
    bad = set(s.methods) - set(ALLOWED_METHODS[s.kind])
    if bad:
        _fail("methods", f"{sorted(bad)} not available for kind {s.kind}")
    if s.kind == "ber" and src.startswith("file:"):
        _fail("channel_source", "ber experiments need a synthetic or geometric source")


def _parse_value(key: str, raw: str, typ):
    try:
        if typ is int:
            return int(raw, 0)
        if typ is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ.__name__}") from None


def parse_config(text: str, source: str = "<config>") -> ExperimentSpec:
    """Parse ``key = value`` lines. ``#`` starts a comment; lists are comma-separated."""
    values: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}:{line_no}: duplicate key {key!r}")
        if key in _TUPLE_FIELDS:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            values[key] = tuple(_parse_value(key, x, _TUPLE_FIELDS[key]) for x in items)
        elif key in _SCALAR_FIELDS:
            values[key] = _parse_value(key, raw, _SCALAR_FIELDS[key])
        else:
            raise ConfigError(f"{source}:{line_no}: unknown key {key!r}")
    return ExperimentSpec(**values)


def load_config(path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


def dump_config(spec: ExperimentSpec) -> str:
    """Serialize every field; ``parse_config(dump_config(s)) == s``."""
    lines = []
    for f in dataclasses.fields(spec):
        v = getattr(spec, f.name)
        if isinstance(v, tuple):
            v = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# grid points and realizations


@dataclass(frozen=True)
class _Point:
    snr_db: Optional[float] = None
    q: Optional[float] = None
    cost_c: Optional[float] = None
    noise_err: Optional[float] = None

    @property
    def snr(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)


def _points(spec: ExperimentSpec) -> list[_Point]:
    if spec.kind == "timing":
        return [_Point()]
    qs = spec.q_grid if spec.is_synthetic else (None,)
    if spec.kind in ("cost_sweep", "roc"):
        costs = spec.cost_grid
    else:
        costs = (spec.cost_c,)
    errs = spec.noise_error_grid if spec.kind == "noise_error_sweep" else (None,)
    return [_Point(s, q, c, e) for s, q, c, e in itertools.product(spec.snr_grid_db, qs, costs, errs)]


def _realize(spec: ExperimentSpec, point: _Point, rng: RngStream, records) -> ChannelRealization:
    gen = rng.generator()
    if spec.is_synthetic:
        return gen_synthetic(SyntheticParams(spec.M, point.q, E0=1.0, snr=point.snr), rng=gen)
    if records is None:
        params = geometric_preset(
            spec.channel_source, spec.M, spec.n_paths or None,
            los_ratio_db=spec.los_ratio_db, snr=point.snr, eta=spec.eta,
        )
        return gen_geometric(params, rng=gen)
    truth = unitary_dft(records[rng.stream_index % len(records)])
    M = truth.size
    e0 = float(np.vdot(truth, truth).real) / (M * point.snr)
    A, _ = energy_activity_rate(truth, spec.eta)
    support = np.zeros(M, dtype=bool)
    support[np.argsort(-np.abs(truth), kind="stable")[:A]] = True
    sigma_s2 = float(np.mean(np.abs(truth[support]) ** 2))
    return ChannelRealization(truth, add_noise(truth, e0, gen), support, e0, sigma_s2)


def _mse(est: np.ndarray, truth: np.ndarray) -> float:
    d = est - truth
    return float(np.mean(d.real**2 + d.imag**2))


def _apply(method: str, real: ChannelRealization, cost_c: float) -> np.ndarray:
    y = real.observed
    if method == "proposed":
        return denoise(y, DenoiserConfig(cost_c)).estimate
    if method == "ls":
        return ls_estimate(y)
    if method == "perfect_detection":
        return perfect_detection_denoise(y, OracleInfo(real.support, real.truth)).estimate
    if method == "genie_st":
        return genie_soft_threshold(y, real.truth)[0]
    raise ValueError(f"unknown method {method!r}")


def _true_threshold(real: ChannelRealization, cost_c: float) -> float:
    q = real.q_true
    if q >= 1.0:
        return -math.inf
    return detection_threshold(real.e0_true, q * real.sigma_s2_true / real.e0_true, q, cost_c)


def _roc_counts(mask: np.ndarray, support: np.ndarray) -> list[float]:
    return [float(np.count_nonzero(mask & support)), float(support.sum()),
            float(np.count_nonzero(mask & ~support)), float((~support).sum())]


# --------------------------------------------------------------------------
# per-trial evaluation: returns an array (n_methods, n_stats)


def _trial(spec: ExperimentSpec, point: _Point, t: int, records) -> np.ndarray:
    rng = RngStream(spec.seed, t)
    methods = spec.method_list
    kind = spec.kind
    if kind == "ber":
        cfg = LinkConfig(
            M=spec.M, K=spec.K, snr=point.snr, n_symbols=spec.n_symbols,
            channel=spec.channel_source, q=point.q if point.q is not None else 0.0625,
            cost_c=point.cost_c, n_paths=spec.n_paths or None,
        )
        res = link_trial(cfg, rng, methods)
        return np.array([res[m] for m in methods], dtype=float)

    real = _realize(spec, point, rng, records)
    if kind == "activity":
        est = blind_estimates(real.observed)
        return np.array([[est.q_hat, real.q_true]])
    if kind in ("mse", "cost_sweep"):
        return np.array([[_mse(_apply(m, real, point.cost_c), real.truth)] for m in methods])
    if kind == "noise_error_sweep":
        out = []
        for m in methods:
            if m == "proposed":
                est = denoise_with_noise_error(real.observed, real.e0_true, point.noise_err, point.cost_c).estimate
            else:
                est = _apply(m, real, point.cost_c)
            out.append([_mse(est, real.truth)])
        return np.array(out)
    if kind == "roc":
        tau = _true_threshold(real, point.cost_c)
        out = []
        for m in methods:
            if m == "theory":
                p_fa = prob_false_alarm(tau, real.e0_true)
                p_d = prob_detection(tau, real.e0_true, real.sigma_s2_true)
                out.append([p_d, 1.0, p_fa, 1.0])
            elif m == "empirical":
                out.append(_roc_counts(hard_threshold(real.observed, tau)[1], real.support))
            else:
                mask = denoise(real.observed, DenoiserConfig(point.cost_c)).support
                out.append(_roc_counts(mask, real.support))
        return np.array(out)
    raise AssertionError(kind)


def _chunk(args) -> np.ndarray:
    spec, point, t0, t1, records = args
    return np.stack([_trial(spec, point, t, records) for t in range(t0, t1)])


# --------------------------------------------------------------------------
# aggregation


def _metrics(kind: str) -> tuple:
    return {
        "activity": ("q_hat_median", "q_hat_iqr", "q_true"),
        "mse": ("mse",), "cost_sweep": ("mse",), "noise_error_sweep": ("mse",),
        "ber": ("ber",),
        "roc": ("p_d", "p_fa"),
    }[kind]


def _aggregate(kind: str, raw: np.ndarray) -> np.ndarray:
    """(trials, methods, stats) -> (methods, metrics)."""
    if kind == "activity":
        q25, q50, q75 = np.percentile(raw[:, :, 0], [25, 50, 75], axis=0)
        return np.stack([q50, q75 - q25, raw[:, :, 1].mean(axis=0)], axis=1)
    if kind == "ber":
        tot = raw.sum(axis=0)
        return tot[:, :1] / tot[:, 1:2]
    if kind == "roc":
        tot = raw.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.stack([tot[:, 0] / tot[:, 1], tot[:, 2] / tot[:, 3]], axis=1)
    return raw.mean(axis=0)


def _load_records(spec: ExperimentSpec):
    if not spec.channel_source.startswith("file:"):
        return None
    path = Path(spec.channel_source[5:])
    if not path.exists():
        raise ConfigError(f"channel_source: channel file {path} does not exist")
    records = load_channels(path)
    if records.shape[1] != spec.M:
        raise ConfigError(f"channel_source: file has M={records.shape[1]}, config has M={spec.M}")
    return records


def _timing_rows(spec: ExperimentSpec) -> list[ResultRow]:
    rows = []
    samples = {m: {} for m in spec.method_list}
    for M in spec.m_grid:
        real = gen_synthetic(SyntheticParams(M, 1 / 16, E0=1.0, snr=10.0), rng=RngStream(spec.seed, M))
        for method in spec.method_list:
            if method == "proposed":
                fn = lambda: denoise(real.observed)  # noqa: E731
            elif method == "genie_st":
                fn = lambda: genie_soft_threshold(real.observed, real.truth)  # noqa: E731
            else:
                fn = lambda: unitary_dft(real.observed)  # noqa: E731
            samples[method][M] = median_wall_time(fn, spec.timing_repeats)
    for method in spec.method_list:
        for M in spec.m_grid:
            rows.append(ResultRow(spec.experiment_id, None, None, None, None, method,
                                  f"wall_s_M{M}", samples[method][M], spec.timing_repeats, spec.seed))
    return rows


def median_wall_time(fn, repeats: int) -> float:
    """Median wall-clock seconds of ``fn()`` over ``repeats`` calls, after one warm-up."""
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> list[ResultRow]:
    """Run the sweep described by ``spec``.

    Output is identical for any ``threads`` value except for ``timing``,
    which measures wall-clock time and always runs serially.
    """
    if spec.kind == "timing":
        return _timing_rows(spec)
    records = _load_records(spec)
    points = _points(spec)
    methods = spec.method_list
    metrics = _metrics(spec.kind)

    n_chunks = max(1, min(spec.trials, 4 * threads)) if threads > 1 else 1
    bounds = np.linspace(0, spec.trials, n_chunks + 1).astype(int)
    jobs = [(spec, p, int(a), int(b), records) for p in points for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_chunk, jobs))
    else:
        parts = [_chunk(j) for j in jobs]

    per_point = len(parts) // len(points)
    rows = []
    for i, p in enumerate(points):
        raw = np.concatenate(parts[i * per_point:(i + 1) * per_point])
        agg = _aggregate(spec.kind, raw)
        for mi, method in enumerate(methods):
            for ki, metric in enumerate(metrics):
                rows.append(ResultRow(spec.experiment_id, p.snr_db, p.q, p.cost_c, p.noise_err,
                                      method, metric, float(agg[mi, ki]), spec.trials, spec.seed))
    return rows


# --------------------------------------------------------------------------
# CSV


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".9g")
    return str(v)


def emit_csv(rows, path) -> None:
    """Write rows under :data:`CSV_HEADER`; floats carry 9 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])


def read_csv(path) -> list[ResultRow]:
    def num(s):
        return None if s == "" else float(s)

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            ResultRow(r["experiment"], num(r["snr_db"]), num(r["q"]), num(r["cost_c"]), num(r["noise_err"]),
                      r["method"], r["metric"], float(r["value"]), int(r["trials"]), int(r["seed"]))
            for r in reader
        ]
