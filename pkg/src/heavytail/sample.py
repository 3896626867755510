"""Validated, descending-sorted positive samples."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import SampleError


class Kind(str, enum.Enum):
    """Estimator families."""

    HILL = "hill"
    PLPWM = "plpwm"
    PPWM = "ppwm"  # asymptotic constants only


class Convention(str, enum.Enum):
    """How many top order statistics a PLPWM estimate at nominal level k reads.

    ``TOPK`` uses the k largest observations. ``TOPK_PLUS_1`` uses k + 1 of
    them, so that PLPWM and Hill read the same observations at the same k.
    """

    TOPK = "topk"
    TOPK_PLUS_1 = "topk_plus_1"


@dataclass(frozen=True, eq=False)
class Sample:
    """Strictly positive observations stored in descending order.

    ``values[0]`` is the sample maximum ``X_{n:n}`` and ``values[i - 1]`` is
    ``X_{n-i+1:n}``.  Build instances with :meth:`from_values`.
    """

    values: np.ndarray
    original: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_values(cls, data: Iterable[float], keep_original: bool = False) -> Sample:
        arr = np.array(list(data) if not isinstance(data, np.ndarray) else data, dtype=float)
        if arr.ndim != 1:
            raise SampleError(f"sample must be one-dimensional, got shape {arr.shape}")
        if arr.size < 2:
            raise SampleError(f"need at least 2 observations, got {arr.size}")
        if np.isnan(arr).any():
            raise SampleError("sample contains NaN")
        if not np.isfinite(arr).all():
            raise SampleError("sample contains infinite values")
        bad = np.flatnonzero(arr <= 0)
        if bad.size:
            raise SampleError(
                f"observations must be strictly positive; index {bad[0]} holds {arr[bad[0]]!r}"
            )
        values = np.sort(arr, kind="stable")[::-1].copy()
        values.flags.writeable = False
        original = None
        if keep_original:
            original = arr.copy()
            original.flags.writeable = False
        return cls(values=values, original=original)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @cached_property
    def logs(self) -> np.ndarray:
        """Natural logs of the descending values."""
        out = np.log(self.values)
        out.flags.writeable = False
        return out

    def top(self, k: int) -> Sample:
        """The k largest observations as a sample of their own."""
        if not 2 <= k <= self.n:
            raise SampleError(f"top-k sub-sample needs 2 <= k <= {self.n}, got {k}")
        return Sample.from_values(self.values[:k])

    def scaled(self, c: float) -> Sample:
        return Sample.from_values(self.values * c)

    def __len__(self) -> int:
        return self.n
