"""Seeded Monte Carlo harness for the tail estimators.

Replicate ``r`` draws its uniforms from a Philox-4x64 stream keyed by
``base_seed XOR splitmix64(r)``; uniforms are built from the raw 64-bit
output as ``((x >> 11) + 0.5) * 2**-53`` so they never touch 0 or 1.
Replicates are processed in fixed-size chunks whose moment summaries are
merged in chunk order, so a report does not depend on the number of
worker processes.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .asymptotics import SecondOrderParams, quantile_rate_factor
from .errors import ConfigError, LevelError, ParameterError
from .estimators import _hill_kernel, _plpwm_kernel, extrapolation_ratio
from .sample import Convention, Kind, Sample

__all__ = [
    "Family",
    "ModelSpec",
    "MonteCarloConfig",
    "CellStats",
    "MonteCarloReport",
    "QuantileRateRecord",
    "RNG_ID",
    "SEED_RULE",
    "replicate_seed",
    "uniforms",
    "sample_model",
    "run_monte_carlo",
    "empirical_optimal_k",
    "quantile_rate_check",
]

RNG_ID = "philox4x64-midpoint53-v1"
SEED_RULE = "seed_r = base_seed XOR splitmix64(r), r = 0..replications-1; Philox key = seed_r"
CHUNK = 256
_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed <= _MASK64:
        raise ConfigError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def replicate_seed(base_seed: int, r: int) -> int:
    return _check_seed(base_seed) ^ splitmix64(int(r))


def uniforms(seed: int, size: int) -> np.ndarray:
    """``size`` uniforms in the open interval (0, 1), determined by ``seed`` alone."""
    raw = np.random.Philox(key=_check_seed(seed)).random_raw(size)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


class Family(str, enum.Enum):
    STRICT_PARETO = "strict_pareto"
    BURR = "burr"
    FRECHET = "frechet"
    GPD = "gpd"


@dataclass(frozen=True)
class ModelSpec:
    """Heavy-tailed model with known tail index and second-order behaviour.

    ``rho`` is the Burr shape (required, negative, for BURR only); ``scale``
    applies to STRICT_PARETO only.  Implied second-order parameters:
    BURR ``(rho, 1)``, FRECHET ``(-1, 1/2)``, GPD ``(-gamma, 1)``;
    STRICT_PARETO has ``A = 0``.
    """

    family: Family
    gamma: float
    scale: float = 1.0
    rho: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ParameterError(f"gamma must be positive, got {self.gamma!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ParameterError(f"scale must be positive, got {self.scale!r}")
        if self.family is Family.BURR:
            if self.rho is None or not (self.rho < 0 and math.isfinite(self.rho)):
                raise ParameterError(f"BURR needs a finite shape rho < 0, got {self.rho!r}")
        elif self.rho is not None:
            raise ParameterError(f"rho is only a parameter of BURR, not {self.family.value}")
        if self.family is not Family.STRICT_PARETO and self.scale != 1.0:
            raise ParameterError("scale is only a parameter of STRICT_PARETO")

    def second_order(self) -> SecondOrderParams | None:
        """``(rho, beta)`` of ``A(t) = gamma beta t**rho``; ``None`` when A is identically 0."""
        if self.family is Family.STRICT_PARETO:
            return None
        if self.family is Family.BURR:
            return SecondOrderParams(rho=self.rho, beta=1.0)
        if self.family is Family.FRECHET:
            return SecondOrderParams(rho=-1.0, beta=0.5)
        return SecondOrderParams(rho=-self.gamma, beta=1.0)

    def transform(self, u):
        """Map uniforms on (0, 1) to draws from the model by inversion."""
        log_u = np.log(np.asarray(u, dtype=float))
        g = self.gamma
        with np.errstate(over="ignore"):
            if self.family is Family.STRICT_PARETO:
                return self.scale * np.exp(-g * log_u)
            if self.family is Family.BURR:
                return np.exp((-g / self.rho) * np.log(np.expm1(self.rho * log_u)))
            if self.family is Family.FRECHET:
                return np.exp(-g * np.log(-log_u))
            return np.expm1(-g * log_u)

    def quantile(self, p: float) -> float:
        """True ``q_p``, the value exceeded with probability ``p``."""
        if not 0 < p < 1:
            raise ParameterError(f"p must lie in (0, 1), got {p!r}")
        g = self.gamma
        if self.family is Family.STRICT_PARETO:
            return self.scale * p**-g
        if self.family is Family.BURR:
            return math.expm1(self.rho * math.log(p)) ** (-g / self.rho)
        if self.family is Family.FRECHET:
            return (-math.log1p(-p)) ** -g
        return math.expm1(-g * math.log(p))


def _draw(model: ModelSpec, n: int, seed: int) -> np.ndarray:
    x = model.transform(uniforms(seed, n))
    if not np.all(np.isfinite(x)):
        raise ParameterError(f"{model.family.value} draws overflow for gamma={model.gamma}")
    return x


def sample_model(model: ModelSpec, n: int, seed: int) -> Sample:
    """``n`` independent draws by inversion, deterministic in ``seed``."""
    if int(n) != n or n < 2:
        raise ConfigError(f"n must be an integer >= 2, got {n!r}")
    return Sample.from_values(_draw(model, int(n), seed))


@dataclass(frozen=True)
class MonteCarloConfig:
    model: ModelSpec
    n: int
    k_set: tuple[int, ...]
    replications: int
    base_seed: int
    estimators: tuple[Kind, ...] = (Kind.HILL, Kind.PLPWM)
    quantile_p: float | None = None
    convention: Convention = Convention.TOPK

    def __post_init__(self):
        object.__setattr__(self, "k_set", tuple(int(k) for k in self.k_set))
        object.__setattr__(self, "estimators", tuple(Kind(e) for e in self.estimators))
        object.__setattr__(self, "convention", Convention(self.convention))
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError(f"n must be an integer >= 2, got {self.n!r}")
        if int(self.replications) != self.replications or self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications!r}")
        _check_seed(self.base_seed)
        if not self.k_set:
            raise ConfigError("k_set is empty")
        if len(set(self.k_set)) != len(self.k_set):
            raise ConfigError("k_set contains duplicates")
        if not self.estimators:
            raise ConfigError("no estimators requested")
        for kind in self.estimators:
            if kind not in (Kind.HILL, Kind.PLPWM):
                raise ConfigError(f"no point estimator for kind {kind.value!r}")
            for k in self.k_set:
                eff = self.effective_level(kind, k)
                ok = 1 <= k <= self.n - 1 if kind is Kind.HILL else 2 <= eff <= self.n
                if not ok:
                    raise LevelError(f"level k={k} is invalid for {kind.value} with n={self.n}")
        if self.quantile_p is not None and not 0 < self.quantile_p < 1:
            raise ConfigError(f"quantile_p must lie in (0, 1), got {self.quantile_p!r}")

    def effective_level(self, kind: Kind, k: int) -> int:
        """Number of top observations behind the estimate at nominal level k."""
        if kind is Kind.PLPWM and self.convention is Convention.TOPK_PLUS_1:
            return k + 1
        return k

    def to_dict(self) -> dict:
        return {
            "model": {
                "family": self.model.family.value,
                "gamma": self.model.gamma,
                "scale": self.model.scale,
                "rho": self.model.rho,
            },
            "n": self.n,
            "k_set": list(self.k_set),
            "replications": self.replications,
            "base_seed": self.base_seed,
            "estimators": [e.value for e in self.estimators],
            "quantile_p": self.quantile_p,
            "convention": self.convention.value,
        }


@dataclass(frozen=True)
class CellStats:
    """Aggregates of one (estimator, k) cell over all replicates.

    Quantile fields hold the mean and variance of the normalized errors
    ``sqrt(k)/ln(c_n) * (Q/q_p - 1)`` and ``sqrt(k) * (gamma_hat - gamma)``.
    """

    estimator: Kind
    k: int
    mean: float
    bias: float
    variance: float
    mse: float
    c_n: float | None = None
    quantile_error_mean: float | None = None
    quantile_error_variance: float | None = None
    evi_error_mean: float | None = None
    evi_error_variance: float | None = None


@dataclass(frozen=True)
class MonteCarloReport:
    config: MonteCarloConfig
    cells: tuple[CellStats, ...]
    rng_id: str = RNG_ID
    seed_rule: str = SEED_RULE
    artifact_version: str = field(default=__version__)

    @property
    def replications(self) -> int:
        return self.config.replications

    def cell(self, estimator: Kind, k: int) -> CellStats:
        estimator = Kind(estimator)
        for c in self.cells:
            if c.estimator is estimator and c.k == k:
                return c
        raise KeyError((estimator.value, k))

    def for_estimator(self, estimator: Kind) -> list[CellStats]:
        estimator = Kind(estimator)
        return [c for c in self.cells if c.estimator is estimator]

    def to_dict(self) -> dict:
        cells = []
        for c in self.cells:
            d = asdict(c)
            d["estimator"] = c.estimator.value
            quantile = {
                key: d.pop(key)
                for key in (
                    "c_n",
                    "quantile_error_mean",
                    "quantile_error_variance",
                    "evi_error_mean",
                    "evi_error_variance",
                )
            }
            d["quantile"] = quantile if quantile["c_n"] is not None else None
            cells.append(d)
        return {
            "schema_version": 1,
            "artifact_version": self.artifact_version,
            "rng": {"id": self.rng_id, "base_seed": self.config.base_seed, "rule": self.seed_rule},
            "config": self.config.to_dict(),
            "replications": self.replications,
            "cells": cells,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


class _Moments:
    """Count, mean and centred sum of squares for a vector of cells."""

    __slots__ = ("count", "mean", "m2")

    def __init__(self, count, mean, m2):
        self.count = count
        self.mean = mean
        self.m2 = m2

    @classmethod
    def of(cls, x: np.ndarray) -> _Moments:
        mean = x.mean(axis=0)
        return cls(x.shape[0], mean, ((x - mean) ** 2).sum(axis=0))

    def merge(self, other: _Moments) -> _Moments:
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / count)
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / count)
        return _Moments(count, mean, m2)

    @property
    def variance(self):
        return self.m2 / self.count


def _chunk_stats(config: MonteCarloConfig, start: int, stop: int) -> dict:
    """Moment summaries of every requested statistic for replicates [start, stop)."""
    n = config.n
    levels = {kind: [config.effective_level(kind, k) for k in config.k_set] for kind in config.estimators}
    need = max(max(ks) for ks in levels.values()) + 1
    need = min(need, n)
    tops = np.empty((stop - start, need))
    for row, r in enumerate(range(start, stop)):
        x = _draw(config.model, n, replicate_seed(config.base_seed, r))
        top = np.partition(x, n - need)[n - need :]
        tops[row] = np.log(np.sort(top)[::-1])

    gamma = config.model.gamma
    q_true = config.model.quantile(config.quantile_p) if config.quantile_p is not None else None
    out = {}
    for kind in config.estimators:
        evi = np.empty((tops.shape[0], len(config.k_set)))
        quant = np.empty_like(evi) if q_true is not None else None
        for j, eff in enumerate(levels[kind]):
            if kind is Kind.HILL:
                g = _hill_kernel(tops, eff)
                if quant is not None:
                    c = extrapolation_ratio(eff, n, config.quantile_p)
                    quant[:, j] = np.exp(tops[:, eff]) * c**g
            else:
                g, d = _plpwm_kernel(tops, eff)
                if quant is not None:
                    c = extrapolation_ratio(eff, n, config.quantile_p)
                    quant[:, j] = c**g * np.exp(d)
            evi[:, j] = g
        stats = {
            "evi": _Moments.of(evi),
            "sq_err": _Moments.of((evi - gamma) ** 2),
        }
        if quant is not None:
            root_k = np.sqrt(np.array(levels[kind], dtype=float))
            factors = np.array(
                [quantile_rate_factor(eff, extrapolation_ratio(eff, n, config.quantile_p)) for eff in levels[kind]]
            )
            stats["q_err"] = _Moments.of(factors * (quant / q_true - 1.0))
            stats["evi_err"] = _Moments.of(root_k * (evi - gamma))
        out[kind] = stats
    return out


def _chunk_task(args):
    return _chunk_stats(*args)


def run_monte_carlo(config: MonteCarloConfig, workers: int = 1) -> MonteCarloReport:
    """Bias, variance and MSE of each estimator at each level over seeded replicates.

    ``workers > 1`` spreads chunks over processes; the report is identical.
    """
    if config.quantile_p is not None:
        for kind in config.estimators:
            for k in config.k_set:
                c = extrapolation_ratio(config.effective_level(kind, k), config.n, config.quantile_p)
                if not c > 1:
                    raise ConfigError(f"quantile statistics need k/(n p) > 1; k={k} gives {c:.4g}")
    bounds = [(s, min(s + CHUNK, config.replications)) for s in range(0, config.replications, CHUNK)]
    tasks = [(config, s, e) for s, e in bounds]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_task, tasks))
    else:
        parts = [_chunk_task(t) for t in tasks]

    merged = parts[0]
    for part in parts[1:]:
        merged = {
            kind: {name: merged[kind][name].merge(part[kind][name]) for name in merged[kind]}
            for kind in merged
        }

    gamma = config.model.gamma
    cells = []
    for kind in config.estimators:
        m = merged[kind]
        for j, k in enumerate(config.k_set):
            mean = float(m["evi"].mean[j])
            extra = {}
            if "q_err" in m:
                eff = config.effective_level(kind, k)
                extra = dict(
                    c_n=extrapolation_ratio(eff, config.n, config.quantile_p),
                    quantile_error_mean=float(m["q_err"].mean[j]),
                    quantile_error_variance=float(m["q_err"].variance[j]),
                    evi_error_mean=float(m["evi_err"].mean[j]),
                    evi_error_variance=float(m["evi_err"].variance[j]),
                )
            cells.append(
                CellStats(
                    estimator=kind,
                    k=k,
                    mean=mean,
                    bias=mean - gamma,
                    variance=float(m["evi"].variance[j]),
                    mse=float(m["sq_err"].mean[j]),
                    **extra,
                )
            )
    return MonteCarloReport(config=config, cells=tuple(cells))


def empirical_optimal_k(report: MonteCarloReport, estimator: Kind) -> int:
    """Level with the smallest empirical MSE; ties go to the smaller k."""
    cells = sorted(report.for_estimator(estimator), key=lambda c: c.k)
    if len(cells) < 3:
        raise ConfigError(f"need at least 3 levels for {Kind(estimator).value}, got {len(cells)}")
    best = cells[0]
    for c in cells[1:]:
        if c.mse < best.mse:
            best = c
    return best.k


@dataclass(frozen=True)
class QuantileRateRecord:
    estimator: Kind
    k: int
    c_n: float
    quantile_error_mean: float
    quantile_error_variance: float
    evi_error_mean: float
    evi_error_variance: float

    @property
    def variance_ratio(self) -> float:
        return self.quantile_error_variance / self.evi_error_variance

    @property
    def mean_difference(self) -> float:
        return self.quantile_error_mean - self.evi_error_mean


def quantile_rate_check(config: MonteCarloConfig, workers: int = 1) -> list[QuantileRateRecord]:
    """Compare normalized quantile errors with normalized EVI errors, per estimator and k.

    Asymptotically both have the same distribution when ``c_n = k/(n p)``
    grows; the check requires ``c_n > e`` at every level.
    """
    if config.quantile_p is None:
        raise ConfigError("quantile_rate_check needs quantile_p")
    for kind in config.estimators:
        for k in config.k_set:
            c = extrapolation_ratio(config.effective_level(kind, k), config.n, config.quantile_p)
            if not c > math.e:
                raise ConfigError(f"k/(n p) must exceed e for a stable normalization; k={k} gives {c:.4g}")
    report = run_monte_carlo(config, workers=workers)
    return [
        QuantileRateRecord(
            estimator=c.estimator,
            k=c.k,
            c_n=c.c_n,
            quantile_error_mean=c.quantile_error_mean,
            quantile_error_variance=c.quantile_error_variance,
            evi_error_mean=c.evi_error_mean,
            evi_error_variance=c.evi_error_variance,
        )
        for c in report.cells
    ]
