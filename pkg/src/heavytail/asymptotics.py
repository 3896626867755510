"""Closed-form asymptotics: bias/variance constants, AMSE, optimal level, efficiency.

Every estimator ``hat_gamma`` treated here behaves, for intermediate k, like

    gamma + sigma * Z / sqrt(k) + b * A(n/k),     A(t) = gamma * beta * t**rho,

with ``Z`` standard normal.  The pair ``(sigma, b)`` characterises an
estimator; ``rho < 0`` and ``beta != 0`` characterise the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import LevelError, ParameterError, ZeroRhoError
from .sample import Kind

__all__ = [
    "SecondOrderParams",
    "AsymptoticConstants",
    "AMSE",
    "OptimalLevel",
    "AreffGrid",
    "AREFF_PLPWM_HILL_AT_RHO_0",
    "AREFF_PLPWM_HILL_AT_RHO_NEG_INF",
    "constants_for",
    "a_function",
    "noncentrality",
    "amse",
    "amse_curve",
    "optimal_k0",
    "lmse",
    "areff",
    "areff_plpwm_hill",
    "areff_grid",
    "quantile_rate_factor",
]

#: limits of :func:`areff_plpwm_hill` as rho -> 0- and rho -> -inf
AREFF_PLPWM_HILL_AT_RHO_0 = 1.0
AREFF_PLPWM_HILL_AT_RHO_NEG_INF = math.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class SecondOrderParams:
    rho: float
    beta: float

    def __post_init__(self):
        if not math.isfinite(self.rho) or self.rho > 0:
            raise ParameterError(f"rho must be finite and <= 0, got {self.rho!r}")
        if not math.isfinite(self.beta) or self.beta == 0:
            raise ParameterError(f"beta must be finite and nonzero, got {self.beta!r}")

    def require_negative_rho(self) -> None:
        _require_negative_rho(self.rho)


@dataclass(frozen=True)
class AsymptoticConstants:
    """Asymptotic standard deviation ``sigma`` and bias coefficient ``b``."""

    sigma: float
    b: float
    kind: Kind

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma!r}")


class AMSE(NamedTuple):
    variance: float
    bias_sq: float
    total: float


@dataclass(frozen=True)
class OptimalLevel:
    """Optimal level with the continuous value it was floored from."""

    k: int
    k_continuous: float
    clamped: bool = False

    def __int__(self) -> int:
        return self.k


def _require_negative_rho(rho: float) -> None:
    if rho == 0:
        raise ZeroRhoError("rho = 0 is not supported; the formulas need rho < 0")
    if not rho < 0 or not math.isfinite(rho):
        raise ParameterError(f"rho must be finite and < 0, got {rho!r}")


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (gamma > 0 and math.isfinite(gamma)):
        raise ParameterError(f"gamma must be a positive finite number, got {gamma!r}")
    return gamma


def constants_for(kind: Kind, gamma: float, params: SecondOrderParams | float) -> AsymptoticConstants:
    """``(sigma, b)`` for the Hill, PLPWM or PPWM EVI estimator.

    ``params`` may be a :class:`SecondOrderParams` or a bare ``rho``.
    PPWM constants exist only for ``0 < gamma < 0.5``.
    """
    kind = Kind(kind)
    gamma = _check_gamma(gamma)
    rho = params.rho if isinstance(params, SecondOrderParams) else float(params)
    if rho > 0 or not math.isfinite(rho):
        raise ParameterError(f"rho must be finite and <= 0, got {rho!r}")
    if kind is Kind.HILL:
        return AsymptoticConstants(sigma=gamma, b=1.0 / (1.0 - rho), kind=kind)
    if kind is Kind.PLPWM:
        return AsymptoticConstants(
            sigma=2.0 * gamma / math.sqrt(3.0),
            b=2.0 / ((1.0 - rho) * (2.0 - rho)),
            kind=kind,
        )
    if not gamma < 0.5:
        raise ParameterError(f"PPWM constants need 0 < gamma < 0.5, got {gamma!r}")
    b = (1.0 - gamma) * (2.0 - gamma) / ((1.0 - gamma - rho) * (2.0 - gamma - rho))
    sigma = (
        gamma
        * math.sqrt(1.0 - gamma)
        * (2.0 - gamma)
        / (math.sqrt(1.0 - 2.0 * gamma) * math.sqrt(3.0 - 2.0 * gamma))
    )
    return AsymptoticConstants(sigma=sigma, b=b, kind=kind)


def a_function(t, gamma: float, params: SecondOrderParams):
    """Rate function ``A(t) = gamma * beta * t**rho`` (t >= 1, rho < 0)."""
    params.require_negative_rho()
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr >= 1.0)):
        raise ParameterError("A(t) is evaluated for t >= 1")
    out = gamma * params.beta * t_arr**params.rho
    return float(out) if out.ndim == 0 else out


def noncentrality(k: int, n: int, gamma: float, params: SecondOrderParams) -> float:
    """``sqrt(k) * A(n/k)`` at finite (n, k); its limit is the lambda of the bias term."""
    if not 1 <= k <= n:
        raise LevelError(f"need 1 <= k <= n, got k={k}, n={n}")
    return math.sqrt(k) * a_function(n / k, gamma, params)


def amse(constants: AsymptoticConstants, k, a_value) -> AMSE:
    """Variance ``sigma**2/k``, squared bias ``b**2 A**2`` and their sum.

    ``k`` and ``a_value`` may be arrays of matching shape.
    """
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 1):
        raise LevelError("AMSE needs k >= 1")
    variance = constants.sigma**2 / k_arr
    bias_sq = constants.b**2 * np.asarray(a_value, dtype=float) ** 2
    total = variance + bias_sq
    if np.ndim(total) == 0:
        return AMSE(float(variance), float(bias_sq), float(total))
    return AMSE(variance, bias_sq, total)


def amse_curve(n: int, gamma: float, params: SecondOrderParams, kind: Kind, k_min: int = 1, k_max: int | None = None):
    """AMSE components along ``k = k_min..k_max`` with ``A`` evaluated at ``n/k``.

    Returns ``(ks, AMSE)`` with array-valued fields.
    """
    k_max = n - 1 if k_max is None else k_max
    if not 1 <= k_min <= k_max <= n:
        raise LevelError(f"need 1 <= k_min <= k_max <= n, got [{k_min}, {k_max}] with n={n}")
    constants = constants_for(kind, gamma, params)
    ks = np.arange(k_min, k_max + 1)
    return ks, amse(constants, ks, a_function(n / ks, gamma, params))


def _level_range(kind: Kind, n: int) -> tuple[int, int]:
    return (2, n) if kind is Kind.PLPWM else (1, n - 1)


def optimal_k0(n: int, gamma: float, params: SecondOrderParams, kind: Kind) -> OptimalLevel:
    """Level minimising the AMSE when ``A(t) = gamma beta t**rho``.

    ``floor((sigma**2 n**(-2 rho) / ((-2 rho) b**2 gamma**2 beta**2)) ** (1/(1 - 2 rho)))``,
    clamped to the upper end of the kind's valid range.  For Hill and PLPWM
    ``sigma`` is proportional to ``gamma`` and the result does not depend on it.
    """
    kind = Kind(kind)
    if int(n) != n or n < 4:
        raise ParameterError(f"n must be an integer >= 4, got {n!r}")
    n = int(n)
    params.require_negative_rho()
    rho, beta = params.rho, params.beta
    c = constants_for(kind, gamma, params)
    # (sigma/gamma)**2 is an exact constant for Hill and PLPWM; using it
    # directly keeps gamma out of the arithmetic (bit-identical k0 for any gamma)
    if kind is Kind.HILL:
        sigma_over_gamma_sq = 1.0
    elif kind is Kind.PLPWM:
        sigma_over_gamma_sq = 4.0 / 3.0
    else:
        sigma_over_gamma_sq = (c.sigma / gamma) ** 2
    ratio = sigma_over_gamma_sq / c.b**2
    k_real = (ratio * n ** (-2.0 * rho) / ((-2.0 * rho) * beta**2)) ** (1.0 / (1.0 - 2.0 * rho))
    lo, hi = _level_range(kind, n)
    k = math.floor(k_real)
    if k < lo:
        raise LevelError(f"optimal level {k_real:.4g} is below the minimum level {lo} for {kind.value}")
    clamped = k > hi
    return OptimalLevel(k=min(k, hi), k_continuous=k_real, clamped=clamped)


def lmse(constants: AsymptoticConstants, rho: float) -> float:
    """``(sigma**2) ** (-2 rho/(1 - 2 rho)) * (b**2) ** (1/(1 - 2 rho))``."""
    _require_negative_rho(rho)
    e = 1.0 - 2.0 * rho
    return (constants.sigma**2) ** (-2.0 * rho / e) * (constants.b**2) ** (1.0 / e)


def areff(c1: AsymptoticConstants, c2: AsymptoticConstants, rho: float) -> float:
    """Asymptotic root efficiency of estimator 1 over estimator 2 at optimal levels.

    Values above one favour estimator 1.
    """
    _require_negative_rho(rho)
    if c1.b == 0 or c2.b == 0:
        raise ParameterError("AREFF is undefined when a bias coefficient is zero")
    base = (c2.sigma / c1.sigma) ** (-2.0 * rho) * abs(c2.b / c1.b)
    return base ** (1.0 / (1.0 - 2.0 * rho))


def areff_plpwm_hill(rho):
    """``((3/4)**(-rho) * (1 - rho/2)) ** (1/(1 - 2 rho))``; accepts arrays.

    Tends to :data:`AREFF_PLPWM_HILL_AT_RHO_0` as rho -> 0- and, slowly, to
    :data:`AREFF_PLPWM_HILL_AT_RHO_NEG_INF` as rho -> -inf.
    """
    r = np.asarray(rho, dtype=float)
    if np.any(r == 0):
        raise ZeroRhoError("rho = 0 is not supported; use AREFF_PLPWM_HILL_AT_RHO_0")
    if np.any(~(r < 0)) or not np.all(np.isfinite(r)):
        raise ParameterError("rho must be finite and < 0")
    # log form avoids overflow of (3/4)**(-rho) for very negative rho
    out = np.exp((-r * math.log(0.75) + np.log1p(-r / 2.0)) / (1.0 - 2.0 * r))
    return float(out) if out.ndim == 0 else out


def _grid_axis(lo: float, hi: float, step: float) -> np.ndarray:
    if step <= 0 or hi < lo:
        raise ParameterError(f"invalid grid range [{lo}, {hi}] with step {step}")
    count = int(round((hi - lo) / step)) + 1
    return np.linspace(lo, hi, count) if count > 1 else np.array([float(lo)])


@dataclass(frozen=True)
class AreffGrid:
    """AREFF values on a (gamma, rho) grid; ``values[i, j]`` is at ``(gammas[i], rhos[j])``."""

    pair: tuple[Kind, Kind]
    gammas: np.ndarray
    rhos: np.ndarray
    values: np.ndarray

    @property
    def gamma_dependent(self) -> bool:
        return Kind.PPWM in self.pair

    def triples(self) -> Iterator[tuple[float, float, float]]:
        """``(gamma, rho, areff)`` in (gamma, rho) lexicographic order."""
        for i, g in enumerate(self.gammas):
            for j, r in enumerate(self.rhos):
                yield float(g), float(r), float(self.values[i, j])


def areff_grid(
    pair: tuple[Kind, Kind],
    rho_range: tuple[float, float],
    rho_step: float,
    gamma_range: tuple[float, float] | None = None,
    gamma_step: float | None = None,
) -> AreffGrid:
    """Evaluate :func:`areff` on a rectangular grid (endpoints inclusive).

    Without ``gamma_range`` a single ``gamma = 1`` row is produced, which is
    only meaningful for pairs whose AREFF does not depend on gamma.
    """
    k1, k2 = Kind(pair[0]), Kind(pair[1])
    rhos = _grid_axis(rho_range[0], rho_range[1], rho_step)
    if rhos[-1] >= 0:
        raise ZeroRhoError("rho grid must stay strictly negative")
    if gamma_range is None:
        if Kind.PPWM in (k1, k2):
            raise ParameterError("pairs involving PPWM need a gamma range inside (0, 0.5)")
        gammas = np.array([1.0])
    else:
        gammas = _grid_axis(gamma_range[0], gamma_range[1], gamma_step or (gamma_range[1] - gamma_range[0]) or 1.0)
    if gammas[0] <= 0:
        raise ParameterError("gamma grid must be positive")
    if Kind.PPWM in (k1, k2) and gammas[-1] >= 0.5:
        raise ParameterError("gamma grid touches the PPWM singularity at gamma = 0.5")
    values = np.empty((gammas.size, rhos.size))
    for i, g in enumerate(gammas):
        for j, r in enumerate(rhos):
            values[i, j] = areff(constants_for(k1, g, r), constants_for(k2, g, r), r)
    return AreffGrid(pair=(k1, k2), gammas=gammas, rhos=rhos, values=values)


def quantile_rate_factor(k: int, c_n: float) -> float:
    """``sqrt(k) / ln(c_n)``: puts quantile errors on the EVI-error scale."""
    if not c_n > 1:
        raise ParameterError(f"quantile rate factor needs c_n > 1, got {c_n!r}")
    if k < 1:
        raise LevelError(f"need k >= 1, got {k}")
    return math.sqrt(k) / math.log(c_n)
