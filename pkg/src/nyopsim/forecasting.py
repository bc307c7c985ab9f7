"""Moving-average demand forecast over a sliding window."""
from __future__ import annotations

import math
from collections import deque
from typing import Iterable, Optional

from .errors import EmptyWindow, InsufficientData

__all__ = ["ForecastWindow", "push", "ma_mean", "ma_std"]


class ForecastWindow:
    """The last ``capacity`` observations of a demand stream.

    When ``prior_mean`` is given the window starts full of that value, so
    forecasts exist from the first period and the prior washes out after
    ``capacity`` pushes.
    """

    __slots__ = ("capacity", "prior_mean", "_buf")

    def __init__(
        self,
        capacity: int,
        prior_mean: Optional[float] = None,
        observations: Iterable[float] = (),
    ) -> None:
        if capacity < 1:
            raise ValueError(f"window capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.prior_mean = prior_mean
        self._buf: deque[float] = deque(maxlen=capacity)
        if prior_mean is not None:
            self._buf.extend([float(prior_mean)] * capacity)
        self._buf.extend(float(x) for x in observations)

    def __len__(self) -> int:
        return len(self._buf)

    def __repr__(self) -> str:
        return f"ForecastWindow(capacity={self.capacity}, observations={list(self._buf)})"

    @property
    def observations(self) -> list[float]:
        return list(self._buf)

    def push(self, obs: float) -> "ForecastWindow":
        if obs < 0:
            raise ValueError(f"observations must be >= 0, got {obs}")
        self._buf.append(float(obs))
        return self

    def mean(self) -> float:
        n = len(self._buf)
        if n == 0:
            raise EmptyWindow("moving average of an empty window")
        return sum(self._buf) / n

    def std(self) -> float:
        """Sample standard deviation (n - 1 denominator)."""
        n = len(self._buf)
        if n < 2:
            raise InsufficientData(f"need at least 2 observations, have {n}")
        m = sum(self._buf) / n
        return math.sqrt(sum((x - m) ** 2 for x in self._buf) / (n - 1))


def push(w: ForecastWindow, obs: float) -> ForecastWindow:
    return w.push(obs)


def ma_mean(w: ForecastWindow) -> float:
    return w.mean()


def ma_std(w: ForecastWindow) -> float:
    return w.std()
