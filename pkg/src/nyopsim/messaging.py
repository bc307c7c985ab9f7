"""FIPA-flavoured messages and a deterministic in-process transport.

Agents never call each other directly; every order, bid, reply, shipment
and demand broadcast is a :class:`Message` handed to a :class:`Transport`,
which holds it until its delivery period. Control traffic (bids, replies,
broadcasts) is instantaneous; shipments travel for the link's material
delay and orders for the link's order delay.
"""
from __future__ import annotations

import enum
import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Optional, TextIO, Union

from .errors import UnknownLink
from .negotiation import Bid

__all__ = [
    "Performative",
    "Order",
    "Bid",
    "BidReply",
    "Shipment",
    "DemandBroadcast",
    "Message",
    "Link",
    "Transport",
    "trace_record",
]


class Performative(str, enum.Enum):
    REQUEST = "request"
    PROPOSE = "propose"
    ACCEPT_PROPOSAL = "accept-proposal"
    REJECT_PROPOSAL = "reject-proposal"
    INFORM = "inform"
    CONFIRM = "confirm"


@dataclass(frozen=True)
class Order:
    qty: float

    def __post_init__(self) -> None:
        if self.qty < 0:
            raise ValueError(f"order quantity must be >= 0, got {self.qty}")


@dataclass(frozen=True)
class BidReply:
    accepted: bool
    # the bid price the seller agreed to; None on rejection
    threshold_met_price: Optional[float] = None


@dataclass(frozen=True)
class Shipment:
    qty: float
    order_ref: Optional[int] = None

    def __post_init__(self) -> None:
        if self.qty < 0:
            raise ValueError(f"shipment quantity must be >= 0, got {self.qty}")


@dataclass(frozen=True)
class DemandBroadcast:
    qty: float


Payload = Union[Order, Bid, BidReply, Shipment, DemandBroadcast]


@dataclass(slots=True)
class Message:
    """Envelope; ``deliver_period`` and ``seq`` are stamped by :meth:`Transport.send`."""

    performative: Performative
    sender: int
    receiver: int
    sent_period: int
    payload: Payload
    deliver_period: Optional[int] = None
    seq: int = -1


@dataclass(frozen=True)
class Link:
    material_delay: int = 0
    order_delay: int = 0

    def __post_init__(self) -> None:
        if self.material_delay < 0 or self.order_delay < 0:
            raise ValueError("link delays must be >= 0")

    def delay_for(self, payload: Payload) -> int:
        if isinstance(payload, Shipment):
            return self.material_delay
        if isinstance(payload, Order):
            return self.order_delay
        return 0


def trace_record(m: Message) -> dict:
    """One JSONL trace object: period, performative, sender, receiver, payload_type, qty, price."""
    p = m.payload
    qty = getattr(p, "qty", None)
    if isinstance(p, Bid):
        qty, price = p.quantity, p.price
    elif isinstance(p, BidReply):
        price = p.threshold_met_price
    else:
        price = None
    return {
        "period": m.sent_period,
        "performative": m.performative.value,
        "sender": m.sender,
        "receiver": m.receiver,
        "payload_type": type(p).__name__,
        "qty": qty,
        "price": price,
    }


class Transport:
    """In-flight message queue keyed by delivery period.

    ``deliver(t)`` hands over every undelivered message due at ``t`` sorted
    by (sender, sequence number). It may be called repeatedly for the same
    period, which is how same-period bid/reply exchanges are pumped, but
    never for a period earlier than one already delivered.
    """

    def __init__(
        self,
        links: Optional[dict[tuple[int, int], Link]] = None,
        trace: Optional[Union[TextIO, Callable[[dict], None]]] = None,
    ) -> None:
        self.links: dict[tuple[int, int], Link] = dict(links or {})
        self._queue: dict[int, list[Message]] = defaultdict(list)
        self._seq = 0
        self._clock: Optional[int] = None
        self._trace = trace

    def connect(self, sender: int, receiver: int, material_delay: int = 0, order_delay: int = 0) -> None:
        self.links[(sender, receiver)] = Link(material_delay, order_delay)

    def delay(self, sender: int, receiver: int, payload: Payload) -> int:
        try:
            link = self.links[(sender, receiver)]
        except KeyError:
            raise UnknownLink(f"no link {sender} -> {receiver}") from None
        return link.delay_for(payload)

    def send(self, m: Message) -> Message:
        """Schedule ``m``, stamping its delivery period and sequence number."""
        due = m.sent_period + self.delay(m.sender, m.receiver, m.payload)
        if self._clock is not None and due < self._clock:
            raise ValueError(
                f"message due at {due} but period {self._clock} is already delivered"
            )
        if m.seq >= 0:
            raise ValueError(f"message already sent: {m}")
        m.deliver_period = due
        m.seq = self._seq
        self._seq += 1
        self._queue[due].append(m)
        if self._trace is not None:
            self._emit(m)
        return m

    def deliver(self, t: int) -> list[Message]:
        if self._clock is not None and t < self._clock:
            raise ValueError(f"period {t} precedes already delivered period {self._clock}")
        self._clock = t
        batch = self._queue.pop(t, None)
        if not batch:
            return []
        batch.sort(key=lambda m: (m.sender, m.seq))
        return batch

    def pending(self) -> int:
        return sum(len(v) for v in self._queue.values())

    def in_flight(self) -> list[Message]:
        return sorted(
            (m for v in self._queue.values() for m in v),
            key=lambda m: (m.deliver_period, m.sender, m.seq),
        )

    def _emit(self, m: Message) -> None:
        rec = trace_record(m)
        if callable(self._trace):
            self._trace(rec)
        else:
            self._trace.write(json.dumps(rec) + "\n")
