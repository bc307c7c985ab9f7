"""Name-your-own-price procurement between a buyer and a seller agent.

The buyer opens below its valuation and concedes toward it over a fixed
number of rounds; the seller accepts any bid at or above its concealed
threshold and the buyer pays its own bid. If no round clears, the pair
falls back to trading the equilibrium quantity at the equilibrium price.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

from .errors import DegenerateCurves, RoundOutOfRange
from .market import DemandCurve, SupplyCurve, bid_price_for, equilibrium, min_price_for

__all__ = [
    "Bid",
    "NegotiationConfig",
    "Accepted",
    "Fallback",
    "Failed",
    "NegotiationOutcome",
    "match",
    "bid_schedule",
    "negotiate",
]


@dataclass(frozen=True)
class Bid:
    quantity: float
    price: float
    round: int = 1

    def __post_init__(self) -> None:
        if not self.quantity > 0:
            raise ValueError(f"bid quantity must be > 0, got {self.quantity}")
        if self.price < 0:
            raise ValueError(f"bid price must be >= 0, got {self.price}")
        if self.round < 1:
            raise ValueError(f"bid round is 1-based, got {self.round}")


@dataclass(frozen=True)
class NegotiationConfig:
    max_rounds: int = 3
    # fraction of the valuation bid in round 1
    opening_fraction: float = 0.9

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ValueError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if not 0 < self.opening_fraction <= 1:
            raise ValueError(
                f"opening_fraction must lie in (0, 1], got {self.opening_fraction}"
            )


@dataclass(frozen=True)
class Accepted:
    quantity: float
    unit_price: float
    rounds_used: int


@dataclass(frozen=True)
class Fallback:
    quantity: float
    unit_price: float


@dataclass(frozen=True)
class Failed:
    reason: str = ""


NegotiationOutcome = Union[Accepted, Fallback, Failed]


def match(bid: Bid, threshold: float) -> bool:
    """Seller's decision: accept iff the bid meets the threshold (ties accepted)."""
    return bid.price >= threshold


def bid_schedule(valuation: float, cfg: NegotiationConfig, round: int) -> float:
    """Bid price for ``round``, rising linearly to the full valuation."""
    if not 1 <= round <= cfg.max_rounds:
        raise RoundOutOfRange(f"round {round} outside 1..{cfg.max_rounds}")
    if cfg.max_rounds == 1:
        return valuation
    beta = cfg.opening_fraction
    return valuation * (beta + (1.0 - beta) * (round - 1) / (cfg.max_rounds - 1))


Responder = Callable[[Bid], bool]


def negotiate(
    dc: DemandCurve,
    sc: SupplyCurve,
    desired_qty: float,
    cfg: NegotiationConfig = NegotiationConfig(),
    respond: Optional[Responder] = None,
) -> NegotiationOutcome:
    """Run the bidding loop for ``desired_qty``.

    ``respond`` stands in for the seller and must answer each bid with
    accept/reject. By default it matches against ``min_price_for(sc, q)``;
    the engine passes a responder that routes the bid through the message
    transport to the seller agent instead.

    Raises QuantityExceedsIntercept when ``desired_qty >= dc.a``.
    """
    if not desired_qty > 0:
        raise ValueError(f"desired quantity must be > 0, got {desired_qty}")
    valuation = bid_price_for(dc, desired_qty)
    if respond is None:
        threshold = min_price_for(sc, desired_qty)

        def respond(bid: Bid) -> bool:
            return match(bid, threshold)

    for r in range(1, cfg.max_rounds + 1):
        bid = Bid(desired_qty, bid_schedule(valuation, cfg, r), r)
        if respond(bid):
            return Accepted(desired_qty, bid.price, r)

    try:
        price, quantity = equilibrium(dc, sc)
    except DegenerateCurves as exc:
        return Failed(str(exc))
    if price < 0 or quantity <= 0:
        return Failed(f"no tradable equilibrium (P={price}, Q={quantity})")
    return Fallback(quantity, price)
