"""Linear demand and supply curves calibrated from an equilibrium point.

Demand:  Q_d = a - b*P   (buyer side; inverted it gives the buyer's valuation)
Supply:  Q_s = c + d*P   (seller side; inverted it gives the concealed threshold)

Both curves are fixed by an equilibrium (P*, Q*) and the point price
elasticities at that equilibrium.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateCurves, InvalidCalibration, QuantityExceedsIntercept

__all__ = [
    "MarketCalibration",
    "DemandCurve",
    "SupplyCurve",
    "calibrate_demand",
    "calibrate_supply",
    "demand_quantity",
    "supply_quantity",
    "bid_price_for",
    "min_price_for",
    "equilibrium",
]


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class MarketCalibration:
    """Equilibrium price/quantity plus the demand and supply elasticities there."""

    p_star: float = 100.0
    q_star: float = 100.0
    e_d: float = -0.75
    e_s: float = 1.56

    def __post_init__(self) -> None:
        if not _finite(self.p_star, self.q_star, self.e_d, self.e_s):
            raise InvalidCalibration(f"non-finite calibration: {self}")
        if self.p_star <= 0 or self.q_star <= 0:
            raise InvalidCalibration(
                f"equilibrium must be positive, got P*={self.p_star}, Q*={self.q_star}"
            )
        if self.e_d >= 0:
            raise InvalidCalibration(f"demand elasticity must be < 0, got {self.e_d}")
        if self.e_s <= 0:
            raise InvalidCalibration(f"supply elasticity must be > 0, got {self.e_s}")


@dataclass(frozen=True)
class DemandCurve:
    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0):
            raise InvalidCalibration(f"demand curve needs a > 0 and b > 0, got {self}")


@dataclass(frozen=True)
class SupplyCurve:
    # c may be negative; supplied quantity is clamped at zero instead.
    c: float
    d: float

    def __post_init__(self) -> None:
        if not self.d > 0:
            raise InvalidCalibration(f"supply curve needs d > 0, got {self}")


def calibrate_demand(cal: MarketCalibration) -> DemandCurve:
    b = -cal.e_d * cal.q_star / cal.p_star
    return DemandCurve(a=cal.q_star + b * cal.p_star, b=b)


def calibrate_supply(cal: MarketCalibration) -> SupplyCurve:
    d = cal.e_s * cal.q_star / cal.p_star
    return SupplyCurve(c=cal.q_star - d * cal.p_star, d=d)


def demand_quantity(curve: DemandCurve, p: float) -> float:
    """Quantity demanded at price ``p``, never negative."""
    if p < 0:
        raise ValueError(f"price must be >= 0, got {p}")
    return max(0.0, curve.a - curve.b * p)


def supply_quantity(curve: SupplyCurve, p: float) -> float:
    if p < 0:
        raise ValueError(f"price must be >= 0, got {p}")
    return max(0.0, curve.c + curve.d * p)


def bid_price_for(curve: DemandCurve, q: float) -> float:
    """Buyer's valuation (maximum willingness to pay) for quantity ``q``."""
    if q < 0:
        raise ValueError(f"quantity must be >= 0, got {q}")
    if q >= curve.a:
        raise QuantityExceedsIntercept(
            f"quantity {q} is at or beyond the demand intercept a={curve.a}"
        )
    return (curve.a - q) / curve.b


def min_price_for(curve: SupplyCurve, q: float) -> float:
    """Seller's concealed threshold price for supplying quantity ``q``."""
    if q < 0:
        raise ValueError(f"quantity must be >= 0, got {q}")
    return (q - curve.c) / curve.d


def equilibrium(dc: DemandCurve, sc: SupplyCurve) -> tuple[float, float]:
    """Crossing point ``(price, quantity)`` of the two curves."""
    slope = dc.b + sc.d
    if not slope > 0:
        raise DegenerateCurves(f"curves never cross: b + d = {slope}")
    price = (dc.a - sc.c) / slope
    return price, dc.a - dc.b * price
