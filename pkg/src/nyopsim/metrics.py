"""Bullwhip ratios, fill rates and cross-replication aggregation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional, Sequence

import numpy as np

from .errors import DegenerateMean, DegenerateVariance, InsufficientReplications

__all__ = [
    "TierMetrics",
    "CellStats",
    "AggregateReport",
    "bullwhip",
    "std_normal_loss",
    "fill_rate_analytic",
    "fill_rate_empirical",
    "change_pct",
    "mean_of_change",
    "tier_metrics",
    "aggregate",
    "METRIC_NAMES",
]

METRIC_NAMES = ("bwe", "fr_empirical", "fr_analytic")
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class TierMetrics:
    k: int
    bwe: float
    fr_empirical: float
    # raw value; can be negative when order variance is large
    fr_analytic: float

    @property
    def fr_analytic_clamped(self) -> float:
        return min(1.0, max(0.0, self.fr_analytic))


def _sample_var(x: np.ndarray) -> float:
    if x.size < 2:
        raise ValueError("need at least two observations")
    return float(np.var(x, ddof=1))


def bullwhip(orders: Sequence[float], demand: Sequence[float]) -> float:
    """Var(orders) / Var(demand), both with n - 1 denominators."""
    orders = np.asarray(orders, dtype=float)
    demand = np.asarray(demand, dtype=float)
    var_d = _sample_var(demand)
    if var_d <= 0:
        raise DegenerateVariance("demand series has zero variance")
    return _sample_var(orders) / var_d


def std_normal_loss(z: float) -> float:
    """Standard normal loss G(z) = phi(z) - z * (1 - Phi(z))."""
    pdf = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
    tail = 0.5 * math.erfc(z / math.sqrt(2.0))
    return pdf - z * tail


def fill_rate_analytic(z: float, lead_time: float, var_q: float, mu_k: float) -> float:
    """1 - G(z) * sqrt(L) * sqrt(Var Q) / mu, unclamped."""
    if mu_k == 0:
        raise DegenerateMean("mean demand is zero")
    if var_q < 0 or lead_time < 0:
        raise ValueError("variance and lead time must be non-negative")
    return 1.0 - std_normal_loss(z) * math.sqrt(lead_time) * math.sqrt(var_q) / mu_k


def fill_rate_empirical(demand_in: Sequence[float], filled: Sequence[float]) -> float:
    """Share of demand shipped in the period it arrived."""
    demand_in = np.asarray(demand_in, dtype=float)
    filled = np.asarray(filled, dtype=float)
    if demand_in.shape != filled.shape:
        raise ValueError("demand and filled series differ in length")
    total = float(demand_in.sum())
    if total <= 0:
        raise DegenerateMean("no demand in the measured window")
    return min(1.0, max(0.0, float(filled.sum()) / total))


def tier_metrics(log, z: Optional[float] = None) -> list[TierMetrics]:
    """Metrics for every tier of a :class:`~nyopsim.engine.SimLog`, retailer first.

    The analytic fill rate uses the variance and mean of the order stream
    arriving at the tier and a risk period of L + 1 (transit plus the
    one-period order delay).
    """
    cfg = log.config
    z = cfg.policy.safety_factor if z is None else z
    window = cfg.measured
    demand = log.market_demand[window]
    out = []
    for k in range(cfg.n_tiers, 0, -1):
        i = k - 1
        incoming = log.demand_in[i, window]
        fr_a = fill_rate_analytic(
            z, cfg.lead_time + 1, _sample_var(incoming), float(incoming.mean())
        )
        out.append(
            TierMetrics(
                k=k,
                bwe=bullwhip(log.order[i, window], demand),
                fr_empirical=fill_rate_empirical(incoming, log.immediate[i, window]),
                fr_analytic=fr_a,
            )
        )
    return out


Convention = Literal["mixed", "baseline"]


def change_pct(
    baseline: float, nyop: float, metric: str = "bwe", convention: Convention = "mixed"
) -> float:
    """Percentage improvement of NYOP over the baseline.

    ``mixed`` convention: bullwhip as (baseline - nyop) / baseline, fill
    rates as (nyop - baseline) / nyop. ``baseline`` normalises both by the
    baseline value.
    """
    if metric == "bwe":
        return (baseline - nyop) / baseline * 100.0
    denom = nyop if convention == "mixed" else baseline
    return (nyop - baseline) / denom * 100.0


def mean_of_change(changes: Iterable[float]) -> float:
    values = list(changes)
    return sum(values) / len(values)


@dataclass(frozen=True)
class CellStats:
    mean: float
    sd: float
    n: int


def _stats(values: Sequence[float]) -> CellStats:
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise InsufficientReplications(f"need >= 2 replications per cell, got {arr.size}")
    return CellStats(float(arr.mean()), float(arr.std(ddof=1)), int(arr.size))


@dataclass
class AggregateReport:
    """Mean/SD per (scenario, metric, k, T) and baseline-vs-NYOP changes per (metric, k, T)."""

    cells: dict[tuple[str, str, int, int], CellStats] = field(default_factory=dict)
    convention: Convention = "mixed"

    @property
    def scenarios(self) -> list[str]:
        return sorted({key[0] for key in self.cells})

    @property
    def tiers(self) -> list[int]:
        return sorted({key[2] for key in self.cells}, reverse=True)

    @property
    def t_values(self) -> list[int]:
        return sorted({key[3] for key in self.cells})

    def cell(self, scenario: str, metric: str, k: int, T: int) -> CellStats:
        return self.cells[(scenario, metric, k, T)]

    def mean(self, scenario: str, metric: str, k: int, T: int) -> float:
        return self.cells[(scenario, metric, k, T)].mean

    def paired(self) -> bool:
        return {"baseline", "nyop"} <= set(self.scenarios)

    def change(self, metric: str, k: int, T: int) -> tuple[float, float]:
        """(change of means, change of SDs) in percent."""
        b = self.cell("baseline", metric, k, T)
        n = self.cell("nyop", metric, k, T)
        return (
            change_pct(b.mean, n.mean, metric, self.convention),
            change_pct(b.sd, n.sd, metric, self.convention),
        )

    def mean_change(self, metric: str, k: int) -> tuple[float, float]:
        rows = [self.change(metric, k, T) for T in self.t_values]
        return mean_of_change(r[0] for r in rows), mean_of_change(r[1] for r in rows)


def aggregate(
    records: Iterable[tuple[str, int, int, TierMetrics]],
    convention: Convention = "mixed",
) -> AggregateReport:
    """Aggregate ``(scenario, T, replication, TierMetrics)`` records."""
    buckets: dict[tuple[str, str, int, int], list[float]] = {}
    for scenario, T, _rep, tm in records:
        for metric in METRIC_NAMES:
            buckets.setdefault((scenario, metric, tm.k, T), []).append(getattr(tm, metric))
    if not buckets:
        raise InsufficientReplications("no replications to aggregate")
    report = AggregateReport(convention=convention)
    for key in sorted(buckets):
        report.cells[key] = _stats(buckets[key])
    return report
