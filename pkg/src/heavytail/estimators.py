"""Order-statistics estimators of the tail index, tail scale and extreme quantiles.

Two families are provided:

* Hill / Weissman-Hill, reading the ``k`` largest observations and the
  threshold ``X_{n-k:n}``;
* PLPWM (Pareto log probability weighted moments), a weighted average of the
  ``k`` largest log-observations whose weights sum to zero.

All estimators accept a :class:`~heavytail.sample.Sample` or anything
:meth:`Sample.from_values` accepts.  The ``_kernel`` helpers work on
descending log arrays along the last axis, so the Monte Carlo harness can
evaluate whole batches of replicates with the same arithmetic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ExtrapolationWarning, LevelError, ProbabilityError, SampleError
from .sample import Convention, Kind, Sample

__all__ = [
    "LogMoment",
    "TailFit",
    "EstimatePath",
    "as_sample",
    "extrapolation_ratio",
    "hill_evi",
    "hill_scale",
    "weissman_hill_quantile",
    "plpwm_weights",
    "plpwm_evi",
    "plpwm_log_term",
    "plpwm_scale",
    "plpwm_quantile",
    "log_moment",
    "fit_tail",
    "estimate_quantile",
    "estimate_path",
]


@dataclass(frozen=True)
class LogMoment:
    r: int
    value: float


@dataclass(frozen=True)
class TailFit:
    gamma: float
    scale: float | None
    estimator_kind: Kind
    k: int
    convention: Convention = Convention.TOPK


@dataclass(frozen=True)
class EstimatePath:
    """Estimates indexed by level, one entry per k in ``ks``.

    ``quantiles`` is filled only when a probability ``p`` was requested;
    ``interpolating`` then flags levels with ``k/(n p) < 1``.
    """

    kind: Kind
    ks: np.ndarray
    evi: np.ndarray
    p: float | None = None
    quantiles: np.ndarray | None = None
    interpolating: np.ndarray | None = None
    convention: Convention = Convention.TOPK

    def __len__(self) -> int:
        return int(self.ks.size)


def as_sample(data) -> Sample:
    if isinstance(data, Sample):
        return data
    return Sample.from_values(data)


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ProbabilityError(f"exceedance probability must lie in (0, 1), got {p!r}")
    return p


def _hill_level(sample: Sample, k: int) -> int:
    if isinstance(k, bool) or int(k) != k:
        raise LevelError(f"level must be an integer, got {k!r}")
    k = int(k)
    if not 1 <= k <= sample.n - 1:
        raise LevelError(f"Hill estimators need 1 <= k <= n-1 = {sample.n - 1}, got k={k}")
    return k


def _plpwm_level(sample: Sample, k: int, convention: Convention) -> int:
    """Number of top order statistics actually read at nominal level ``k``."""
    if isinstance(k, bool) or int(k) != k:
        raise LevelError(f"level must be an integer, got {k!r}")
    k = int(k)
    convention = Convention(convention)
    eff = k + 1 if convention is Convention.TOPK_PLUS_1 else k
    if not 2 <= eff <= sample.n:
        lo, hi = (1, sample.n - 1) if convention is Convention.TOPK_PLUS_1 else (2, sample.n)
        raise LevelError(
            f"PLPWM estimators ({convention.value}) need {lo} <= k <= {hi}, got k={k}"
        )
    return eff


def extrapolation_ratio(k: int, n: int, p: float) -> float:
    """``c_n = k / (n p)``, computed as ``(k/n)/p`` so that ``p = k/n`` gives exactly 1."""
    return (k / n) / p


def _warn_if_interpolating(c: float) -> None:
    if c < 1.0:
        warnings.warn(
            f"k/(n p) = {c:.6g} < 1: the quantile lies inside the sample range",
            ExtrapolationWarning,
            stacklevel=3,
        )


# -- kernels ---------------------------------------------------------------


def _hill_kernel(logs: np.ndarray, k: int):
    # sum of non-negative excesses, so the result is never negative
    return np.sum(logs[..., :k] - logs[..., k : k + 1], axis=-1) / k


@lru_cache(maxsize=256)
def _weights(k: int) -> np.ndarray:
    i = np.arange(k)
    g = 2.0 - 4.0 * i / (k - 1)
    half = k // 2
    g[k - half :] = -g[:half][::-1]
    if k % 2:
        g[half] = 0.0
    g.flags.writeable = False
    return g


def _plpwm_kernel(logs: np.ndarray, k: int):
    """PLPWM EVI and log-term ``D`` from the k largest descending logs.

    Logs are shifted by the smallest of the k values before weighting; the
    shift cancels exactly in theory (weights sum to zero) and keeps round-off
    from growing with the magnitude of the data.
    """
    ref = logs[..., k - 1 : k]
    shifted = logs[..., :k] - ref
    gamma = np.sum(_weights(k) * shifted, axis=-1) / k
    # the D-coefficients are 1 - g_i, so D = mean(top-k logs) - gamma
    d = np.sum(shifted, axis=-1) / k - gamma + ref[..., 0]
    return gamma, d


# -- Hill family -------------------------------------------------------------


def hill_evi(sample, k: int) -> float:
    """Hill estimate of the extreme value index.

    The mean of the log-excesses of the k largest observations over the
    threshold ``X_{n-k:n}``.
    """
    sample = as_sample(sample)
    k = _hill_level(sample, k)
    return float(_hill_kernel(sample.logs, k))


def hill_scale(sample, k: int) -> float:
    """Hill estimate of the tail scale: ``X_{n-k:n} * (k/n) ** gamma_H``."""
    sample = as_sample(sample)
    k = _hill_level(sample, k)
    gamma = float(_hill_kernel(sample.logs, k))
    return float(sample.values[k] * (k / sample.n) ** gamma)


def weissman_hill_quantile(sample, k: int, p: float) -> float:
    """Weissman-Hill estimate of the quantile exceeded with probability ``p``.

    Warns with :class:`ExtrapolationWarning` when ``p > k/n``.
    """
    sample = as_sample(sample)
    k = _hill_level(sample, k)
    p = _check_p(p)
    c = extrapolation_ratio(k, sample.n, p)
    _warn_if_interpolating(c)
    gamma = float(_hill_kernel(sample.logs, k))
    return float(sample.values[k] * c**gamma)


# -- PLPWM family ------------------------------------------------------------


def plpwm_weights(k: int) -> np.ndarray:
    """Weights ``g_{i,k} = 2 - 4 (i-1)/(k-1)``, i = 1..k (antisymmetric, zero sum)."""
    if isinstance(k, bool) or int(k) != k or k < 2:
        raise LevelError(f"PLPWM weights need an integer k >= 2, got {k!r}")
    return _weights(int(k)).copy()


def plpwm_evi(sample, k: int, convention: Convention = Convention.TOPK) -> float:
    sample = as_sample(sample)
    eff = _plpwm_level(sample, k, convention)
    gamma, _ = _plpwm_kernel(sample.logs, eff)
    return float(gamma)


def plpwm_log_term(sample, k: int, convention: Convention = Convention.TOPK) -> float:
    """``D_{k,n} = (1/k) sum (4 (i-1)/(k-1) - 1) ln X_{n-i+1:n}``.

    Shifts by exactly ``ln c`` when the sample is multiplied by ``c``.
    """
    sample = as_sample(sample)
    eff = _plpwm_level(sample, k, convention)
    _, d = _plpwm_kernel(sample.logs, eff)
    return float(d)


def plpwm_scale(sample, k: int, convention: Convention = Convention.TOPK) -> float:
    sample = as_sample(sample)
    eff = _plpwm_level(sample, k, convention)
    gamma, d = _plpwm_kernel(sample.logs, eff)
    return float((eff / sample.n) ** float(gamma) * math.exp(d))


def plpwm_quantile(sample, k: int, p: float, convention: Convention = Convention.TOPK) -> float:
    """PLPWM extreme quantile ``(k/(n p)) ** gamma * exp(D)``; meaningful for gamma > 0."""
    sample = as_sample(sample)
    eff = _plpwm_level(sample, k, convention)
    p = _check_p(p)
    c = extrapolation_ratio(eff, sample.n, p)
    _warn_if_interpolating(c)
    gamma, d = _plpwm_kernel(sample.logs, eff)
    return float(c ** float(gamma) * math.exp(d))


def log_moment(subsample, r: int) -> LogMoment:
    """Unbiased estimate of the log-moment ``E[ln X (1 - F(X))^r]``.

    Uses the ascending order statistics with binomial weights
    ``C(n-i, r) / C(n-1, r)``, i = 1..n-r.
    """
    subsample = as_sample(subsample)
    n = subsample.n
    if isinstance(r, bool) or int(r) != r or not 0 <= r <= n - 1:
        raise LevelError(f"log-moment order must satisfy 0 <= r <= n-1 = {n - 1}, got {r!r}")
    r = int(r)
    ascending_logs = subsample.logs[::-1][: n - r]
    i = np.arange(1, n - r + 1)
    w = np.ones(n - r)
    for j in range(r):
        w *= (n - i - j) / (n - 1 - j)
    return LogMoment(r=r, value=float(np.sum(w * ascending_logs) / n))


# -- convenience -------------------------------------------------------------


def fit_tail(sample, k: int, kind: Kind = Kind.PLPWM, convention: Convention = Convention.TOPK) -> TailFit:
    """EVI and scale estimates at level ``k`` for one estimator family."""
    kind = Kind(kind)
    if kind is Kind.HILL:
        return TailFit(hill_evi(sample, k), hill_scale(sample, k), kind, int(k))
    if kind is Kind.PLPWM:
        return TailFit(
            plpwm_evi(sample, k, convention),
            plpwm_scale(sample, k, convention),
            kind,
            int(k),
            Convention(convention),
        )
    raise SampleError(f"no point estimator for kind {kind.value!r}")


def estimate_quantile(sample, k: int, p: float, kind: Kind = Kind.PLPWM, convention: Convention = Convention.TOPK) -> float:
    kind = Kind(kind)
    if kind is Kind.HILL:
        return weissman_hill_quantile(sample, k, p)
    if kind is Kind.PLPWM:
        return plpwm_quantile(sample, k, p, convention)
    raise SampleError(f"no quantile estimator for kind {kind.value!r}")


def estimate_path(
    sample,
    kind: Kind,
    k_min: int,
    k_max: int,
    p: float | None = None,
    convention: Convention = Convention.TOPK,
) -> EstimatePath:
    """EVI (and optionally quantile) estimates for every k in ``[k_min, k_max]``.

    Each entry is computed by the pointwise estimator, so a path entry and
    the corresponding single call agree exactly.
    """
    sample = as_sample(sample)
    kind = Kind(kind)
    if kind not in (Kind.HILL, Kind.PLPWM):
        raise LevelError(f"no path estimator for kind {kind.value!r}")
    if k_max < k_min:
        raise LevelError(f"empty level range [{k_min}, {k_max}]")
    # validate both ends up front so a bad range fails before any work
    for k in (k_min, k_max):
        if kind is Kind.HILL:
            _hill_level(sample, k)
        else:
            _plpwm_level(sample, k, convention)
    if p is not None:
        p = _check_p(p)

    ks = np.arange(int(k_min), int(k_max) + 1)
    evi = np.empty(ks.size)
    quantiles = np.empty(ks.size) if p is not None else None
    interpolating = np.zeros(ks.size, dtype=bool) if p is not None else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        for j, k in enumerate(ks):
            k = int(k)
            if kind is Kind.HILL:
                evi[j] = hill_evi(sample, k)
                if p is not None:
                    quantiles[j] = weissman_hill_quantile(sample, k, p)
                    interpolating[j] = extrapolation_ratio(k, sample.n, p) < 1.0
            else:
                evi[j] = plpwm_evi(sample, k, convention)
                if p is not None:
                    quantiles[j] = plpwm_quantile(sample, k, p, convention)
                    eff = _plpwm_level(sample, k, convention)
                    interpolating[j] = extrapolation_ratio(eff, sample.n, p) < 1.0
    if interpolating is not None and interpolating.any():
        warnings.warn(
            f"{int(interpolating.sum())} level(s) have k/(n p) < 1",
            ExtrapolationWarning,
            stacklevel=2,
        )
    return EstimatePath(
        kind=kind,
        ks=ks,
        evi=evi,
        p=p,
        quantiles=quantiles,
        interpolating=interpolating,
        convention=Convention(convention),
    )
