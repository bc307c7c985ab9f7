"""Discrete-time multi-tier supply chain driven by message-passing agents.

Agent ids: 0 is the uncapacitated source, 1..n are the tiers (tier n is the
market-facing retailer, tier 1 the most upstream supplier), n + 1 is the
market. Each period the market posts demand to the retailer, every tier
then acts from the retailer upstream: take in arrivals, read the order
from downstream, ship what it can, update its forecast, and procure from
its upstream partner (directly, or through NYOP bidding).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, TextIO, Union

import numpy as np
from scipy.special import ndtri

from .errors import ConfigInvalid, QuantityExceedsIntercept
from .forecasting import ForecastWindow
from .market import (
    MarketCalibration,
    calibrate_demand,
    calibrate_supply,
    equilibrium,
    min_price_for,
)
from .messaging import (
    Bid,
    BidReply,
    DemandBroadcast,
    Message,
    Order,
    Performative,
    Shipment,
    Transport,
)
from .negotiation import Accepted, Fallback, NegotiationConfig, match, negotiate
from .policy import PolicyParams, base_stock_level, desired_order

__all__ = ["Scenario", "SimConfig", "SimLog", "SupplyChain", "demand_series", "gen_demand", "run"]

SOURCE = 0
_U53 = float(2**53)


class Scenario(str, enum.Enum):
    BASELINE = "baseline"
    NYOP = "nyop"


@dataclass(frozen=True)
class SimConfig:
    n_tiers: int = 4
    horizon: int = 1000
    warmup: int = 100
    window: int = 10
    mu: float = 100.0
    sigma: float = 10.0
    scenario: Scenario = Scenario.BASELINE
    seed: int = 0
    replication: int = 0
    policy: PolicyParams = field(default_factory=PolicyParams)
    negotiation: NegotiationConfig = field(default_factory=NegotiationConfig)
    p_star: float = 100.0
    # None: equilibrium quantity defaults to mu + sigma
    q_star: Optional[float] = None
    e_d: float = -0.75
    e_s: float = 1.56
    # None: market demand is broadcast to every tier only under NYOP
    share_demand: Optional[bool] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if self.n_tiers < 1:
            raise ConfigInvalid(f"n_tiers must be >= 1, got {self.n_tiers}")
        if self.window < 2:
            raise ConfigInvalid(f"forecast window must be >= 2, got {self.window}")
        if not self.horizon > self.warmup >= self.window:
            raise ConfigInvalid(
                f"need horizon > warmup >= window, got {self.horizon}, {self.warmup}, {self.window}"
            )
        if self.policy.lead_time < 1:
            # downstream tiers act first, so a zero-transit shipment is only usable next period
            raise ConfigInvalid(f"engine lead time must be >= 1, got {self.policy.lead_time}")
        if not self.mu > 0 or self.sigma < 0:
            raise ConfigInvalid(f"need mu > 0 and sigma >= 0, got {self.mu}, {self.sigma}")
        if self.seed < 0 or self.replication < 0:
            raise ConfigInvalid("seed and replication must be non-negative")
        try:
            self.calibration
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc

    @property
    def lead_time(self) -> int:
        return self.policy.lead_time

    @property
    def calibration(self) -> MarketCalibration:
        q_star = self.mu + self.sigma if self.q_star is None else self.q_star
        return MarketCalibration(self.p_star, q_star, self.e_d, self.e_s)

    @property
    def shares_demand(self) -> bool:
        if self.share_demand is None:
            return self.scenario is Scenario.NYOP
        return self.share_demand

    @property
    def measured(self) -> slice:
        return slice(self.warmup, self.horizon)


def demand_series(seed: int, replication: int, horizon: int, mu: float, sigma: float) -> np.ndarray:
    """Market demand for one replication: inverse-CDF normals truncated at zero.

    The stream depends only on ``(seed, replication)``, so every scenario run
    with the same pair sees the same demand.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, replication])))
    # midpoints of a 2^53 grid keep u strictly inside (0, 1)
    u = (rng.integers(0, 2**53, size=horizon, dtype=np.int64) + 0.5) / _U53
    return np.maximum(0.0, mu + sigma * ndtri(u))


def gen_demand(seed: int, replication: int, mu: float, sigma: float, index: int) -> float:
    """The ``index``-th draw of a replication's demand stream."""
    return float(demand_series(seed, replication, index + 1, mu, sigma)[index])


class _Source:
    """Infinite supplier upstream of tier 1: ships every order in full."""

    def __init__(self, chain: "SupplyChain") -> None:
        self.chain = chain
        self.orders_in = 0.0
        self.last_order_ref: Optional[int] = None

    def act(self, t: int) -> None:
        if self.orders_in > 0:
            self.chain.send(Performative.INFORM, SOURCE, 1, t, Shipment(self.orders_in, self.last_order_ref))
        self.orders_in = 0.0


class TierState:
    """One tier agent: inventory, backlog, outstanding orders and forecast window."""

    def __init__(self, k: int, chain: "SupplyChain") -> None:
        cfg = chain.cfg
        self.k = k
        self.chain = chain
        self.upstream = k - 1
        self.downstream = k + 1
        self.window = ForecastWindow(cfg.window, prior_mean=cfg.mu)
        target = base_stock_level(self.window.mean(), self.window.std(), cfg.policy)
        # L shipments in transit plus one order not yet seen upstream
        self.on_order = (cfg.lead_time + 1) * cfg.mu
        # start with inventory position at target
        self.on_hand = max(0.0, target - self.on_order)
        self.backlog = 0.0
        self.inbound = 0.0
        self.orders_in = 0.0
        self.last_order_ref: Optional[int] = None
        self.market_signal: Optional[float] = None
        self.last_reply: Optional[BidReply] = None

    @property
    def inventory_position(self) -> float:
        return self.on_hand + self.on_order - self.backlog

    def act(self, t: int) -> None:
        chain = self.chain
        cfg = chain.cfg
        log = chain.log
        i = self.k - 1

        arrived, self.inbound = self.inbound, 0.0
        self.on_hand += arrived
        self.on_order -= arrived

        demand, self.orders_in = self.orders_in, 0.0
        carried = self.backlog
        need = carried + demand
        shipped = min(self.on_hand, need)
        self.on_hand -= shipped
        self.backlog = need - shipped
        if shipped > 0:
            chain.send(Performative.INFORM, self.k, self.downstream, t, Shipment(shipped, self.last_order_ref))

        if chain.shares_demand:
            self.window.push(self.market_signal)
        else:
            self.window.push(demand)
        target = base_stock_level(self.window.mean(), self.window.std(), cfg.policy)
        wanted = desired_order(self.inventory_position, target)

        qty, price, negotiated, fell_back = wanted, math.nan, False, False
        if chain.scenario is Scenario.NYOP and wanted > 0:
            qty, price, fell_back = self._procure(t, wanted)
            negotiated = True
        chain.send(Performative.REQUEST, self.k, self.upstream, t, Order(qty))
        self.on_order += qty

        log["arrivals"][i][t] = arrived
        log["demand_in"][i][t] = demand
        log["backlog_in"][i][t] = carried
        log["filled"][i][t] = shipped
        log["immediate"][i][t] = min(demand, max(0.0, shipped - carried))
        log["desired"][i][t] = wanted
        log["order"][i][t] = qty
        log["price"][i][t] = price
        log["negotiated"][i][t] = negotiated
        log["fallback"][i][t] = fell_back
        log["on_hand"][i][t] = self.on_hand
        log["backlog"][i][t] = self.backlog

    def _procure(self, t: int, wanted: float) -> tuple[float, float, bool]:
        chain = self.chain

        def respond(bid: Bid) -> bool:
            self.last_reply = None
            chain.send(Performative.PROPOSE, self.k, self.upstream, t, bid)
            chain.pump(t)
            return bool(self.last_reply and self.last_reply.accepted)

        try:
            outcome = negotiate(chain.demand_curve, chain.supply_curve, wanted, chain.cfg.negotiation, respond)
        except QuantityExceedsIntercept:
            # beyond the buyer's own demand intercept no bid is possible
            outcome = Fallback(chain.eq_quantity, chain.eq_price)
        if isinstance(outcome, Accepted):
            return outcome.quantity, outcome.unit_price, False
        if isinstance(outcome, Fallback):
            chain.send(
                Performative.CONFIRM, self.upstream, self.k, t,
                BidReply(True, outcome.unit_price),
            )
            chain.pump(t)
            return outcome.quantity, outcome.unit_price, True
        return 0.0, math.nan, True


_FLOAT_FIELDS = (
    "arrivals", "demand_in", "backlog_in", "filled", "immediate", "desired",
    "order", "price", "on_hand", "backlog",
)
_BOOL_FIELDS = ("negotiated", "fallback")


@dataclass
class SimLog:
    """Complete per-period record of one run.

    Every per-tier array has shape ``(n_tiers, horizon)`` with row ``k - 1``
    holding tier ``k``. ``immediate`` is the part of the period's incoming
    demand shipped in that same period; ``filled`` also includes backlog
    clearance.
    """

    config: SimConfig
    market_demand: np.ndarray
    market_received: np.ndarray
    arrivals: np.ndarray
    demand_in: np.ndarray
    backlog_in: np.ndarray
    filled: np.ndarray
    immediate: np.ndarray
    desired: np.ndarray
    order: np.ndarray
    price: np.ndarray
    negotiated: np.ndarray
    fallback: np.ndarray
    on_hand: np.ndarray
    backlog: np.ndarray

    def tier(self, k: int) -> dict[str, np.ndarray]:
        return {name: getattr(self, name)[k - 1] for name in _FLOAT_FIELDS + _BOOL_FIELDS}

    def state_rows(self, rep: Optional[int] = None):
        """Rows of the per-period state dump: rep, t, k, demand_in, filled, order, on_hand, backlog."""
        rep = self.config.replication if rep is None else rep
        n = self.config.n_tiers
        for t in range(self.config.horizon):
            for k in range(n, 0, -1):
                i = k - 1
                yield (
                    rep, t, k, self.demand_in[i, t], self.filled[i, t],
                    self.order[i, t], self.on_hand[i, t], self.backlog[i, t],
                )


class SupplyChain:
    """One replication's world: agents, transport and log."""

    def __init__(
        self,
        cfg: SimConfig,
        trace: Optional[Union[TextIO, Callable[[dict], None]]] = None,
        demand: Optional[np.ndarray] = None,
    ) -> None:
        self.cfg = cfg
        self.scenario = cfg.scenario
        self.shares_demand = cfg.shares_demand
        n, H, L = cfg.n_tiers, cfg.horizon, cfg.lead_time
        self.market = n + 1
        cal = cfg.calibration
        self.demand_curve = calibrate_demand(cal)
        self.supply_curve = calibrate_supply(cal)
        self.eq_price, self.eq_quantity = equilibrium(self.demand_curve, self.supply_curve)

        if demand is None:
            demand = demand_series(cfg.seed, cfg.replication, H, cfg.mu, cfg.sigma)
        elif len(demand) != H:
            raise ConfigInvalid(f"demand series has {len(demand)} periods, horizon is {H}")
        self.demand = np.asarray(demand, dtype=float)

        self.transport = Transport(trace=trace)
        tr = self.transport
        tr.connect(self.market, n, order_delay=0)
        for k in range(1, n + 1):
            tr.connect(self.market, k)
            tr.connect(k, k - 1, order_delay=1)
            tr.connect(k - 1, k, material_delay=L)
        tr.connect(n, self.market, material_delay=L)

        self.source = _Source(self)
        self.tiers = {k: TierState(k, self) for k in range(1, n + 1)}
        self.log: dict[str, list[list]] = {
            name: [[0.0] * H for _ in range(n)] for name in _FLOAT_FIELDS
        }
        for name in _BOOL_FIELDS:
            self.log[name] = [[False] * H for _ in range(n)]
        self.market_received = [0.0] * H
        self.t = 0
        self._prime()

    def _prime(self) -> None:
        cfg = self.cfg
        L, mu = cfg.lead_time, cfg.mu
        for k in range(1, cfg.n_tiers + 1):
            for arrival in range(L):
                self.send(Performative.INFORM, k - 1, k, arrival - L, Shipment(mu))
            self.send(Performative.REQUEST, k, k - 1, -1, Order(mu))

    def send(self, performative: Performative, sender: int, receiver: int, t: int, payload) -> Message:
        return self.transport.send(Message(performative, sender, receiver, t, payload))

    def pump(self, t: int) -> None:
        """Deliver everything due at ``t``, including replies generated while delivering."""
        while True:
            batch = self.transport.deliver(t)
            if not batch:
                return
            for m in batch:
                self._dispatch(m, t)

    def _agent(self, agent_id: int):
        return self.source if agent_id == SOURCE else self.tiers[agent_id]

    def _dispatch(self, m: Message, t: int) -> None:
        p = m.payload
        if isinstance(p, Shipment):
            if m.receiver == self.market:
                self.market_received[t] += p.qty
            else:
                self.tiers[m.receiver].inbound += p.qty
        elif isinstance(p, Order):
            agent = self._agent(m.receiver)
            agent.orders_in += p.qty
            agent.last_order_ref = m.seq
        elif isinstance(p, DemandBroadcast):
            self.tiers[m.receiver].market_signal = p.qty
        elif isinstance(p, Bid):
            # seller side: compare against the concealed threshold
            ok = match(p, min_price_for(self.supply_curve, p.quantity))
            perf = Performative.ACCEPT_PROPOSAL if ok else Performative.REJECT_PROPOSAL
            self.send(perf, m.receiver, m.sender, t, BidReply(ok, p.price if ok else None))
        elif isinstance(p, BidReply):
            self.tiers[m.receiver].last_reply = p

    def step(self, t: int) -> None:
        cfg = self.cfg
        d = float(self.demand[t])
        self.send(Performative.REQUEST, self.market, cfg.n_tiers, t, Order(d))
        if self.shares_demand:
            for k in range(cfg.n_tiers, 0, -1):
                self.send(Performative.INFORM, self.market, k, t, DemandBroadcast(d))
        self.pump(t)
        for k in range(cfg.n_tiers, 0, -1):
            self.tiers[k].act(t)
        self.source.act(t)
        # zero-delay shipments sent this period land in inboxes for t + 1
        self.pump(t)
        self.t = t + 1

    def run(self) -> SimLog:
        for t in range(self.t, self.cfg.horizon):
            self.step(t)
        return self.result()

    def result(self) -> SimLog:
        arrays = {name: np.array(rows, dtype=float) for name, rows in self.log.items() if name in _FLOAT_FIELDS}
        arrays.update({name: np.array(self.log[name], dtype=bool) for name in _BOOL_FIELDS})
        return SimLog(
            config=self.cfg,
            market_demand=self.demand.copy(),
            market_received=np.array(self.market_received),
            **arrays,
        )


def run(cfg: SimConfig, trace=None) -> SimLog:
    """Simulate ``cfg`` from start to horizon; a pure function of the config."""
    return SupplyChain(cfg, trace=trace).run()
