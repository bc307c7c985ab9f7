"""Order-up-to (base-stock) replenishment driven by moving-average estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["PolicyParams", "base_stock_level", "desired_order"]


@dataclass(frozen=True)
class PolicyParams:
    lead_time: int = 1
    safety_factor: float = 1.0

    def __post_init__(self) -> None:
        if self.lead_time < 0:
            raise ValueError(f"lead_time must be >= 0, got {self.lead_time}")


def base_stock_level(mu_hat: float, sigma_hat: float, p: PolicyParams) -> float:
    """Target inventory position covering L + 1 periods of demand plus safety stock."""
    if mu_hat < 0 or sigma_hat < 0:
        raise ValueError("demand estimates must be non-negative")
    cover = p.lead_time + 1
    return mu_hat * cover + p.safety_factor * sigma_hat * math.sqrt(cover)


def desired_order(inventory_position: float, target: float) -> float:
    # no cancellations: an inventory position above target just orders nothing
    return max(0.0, target - inventory_position)
