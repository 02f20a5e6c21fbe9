"""Seeded scenario generation.

All default ranges live in the two params records below and follow the
standard experiment setup: segment bandwidths of 100-500 bit/s with CPU
demands 1-5x the outgoing bandwidth, server capacities of 1-10 Mcycles/s,
link bandwidths of 100-500 Mbps, and the mining population of 5 participants
per miner with 1e-14 W receiver noise.  Capacity-style ranges are stored in
the mega-unit the tables use and converted when instances are built.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .mining import MiningTask, Participant, RewardParams
from .model import DataCenterGraph, DomainError, Link, NfvInstance, Server, SfcRequest

MEGA = 1e6


@dataclass
class NfvScenarioParams:
    n_servers: int = 10
    n_sfcs: int = 5
    n_access: int = 2
    n_transport: int = 2
    vnf_count_range: tuple = (3, 8)                   # functions per chain, inclusive
    bandwidth_range: tuple = (100.0, 500.0)           # bit/s per segment
    cpu_demand_multiplier_range: tuple = (1.0, 5.0)   # x outgoing segment bandwidth
    server_capacity_range: tuple = (1.0, 10.0)        # Mcycles/s
    link_bandwidth_range: tuple = (100.0, 500.0)      # Mbit/s
    proc_power_range: tuple = (1.0, 5.0)              # W
    static_power_range: tuple = (1.0, 10.0)           # W
    price_range: tuple = (0.1, 1.0)                   # per cycle and per bit/s
    alpha: float = 0.5
    t_th: float = 0.020                               # s
    link_density: float = 0.4
    demand_scale: float = 1.0      # contention knob: multiplies CPU demands
    enforce_distinct_servers: bool = True
    seed: int = 0

    def validate(self) -> None:
        for f_ in fields(self):
            v = getattr(self, f_.name)
            if isinstance(v, tuple) and len(v) == 2 and v[0] > v[1]:
                raise DomainError(f"{f_.name}: lo must be <= hi")
        if not 0.0 < self.link_density <= 1.0:
            raise DomainError("link_density must lie in (0, 1]")
        if min(self.n_servers, self.n_sfcs, self.n_access, self.n_transport) < 1:
            raise DomainError("node and chain counts must be >= 1")
        if self.enforce_distinct_servers and self.vnf_count_range[1] > self.n_servers:
            raise DomainError(
                f"chains of up to {self.vnf_count_range[1]} functions cannot use "
                f"distinct servers out of {self.n_servers}")


@dataclass
class MiningScenarioParams:
    n_miners: int = 3
    n_participants: int = 5
    noise: float = 1e-14                              # W
    price_range: tuple = (1.0, 10.0)                  # per cycle
    capacity_range: tuple = (100.0, 500.0)            # cycles/s
    proc_power_range: tuple = (0.1, 0.9)              # W
    tx_power_range: tuple = (1e-3, 1e-2)              # W
    task_size_range: tuple = (100.0, 300.0)           # bits
    cycles_per_bit_range: tuple = (1.0, 3.0)
    demand_scale: float = 1.0                         # multiplies task sizes
    t_mine: float = 600.0                             # s
    gamma: float = 0.5
    path_loss_exponent: float = 3.0
    distance_range: tuple = (10.0, 100.0)             # m
    reward: RewardParams = field(default_factory=RewardParams)
    seed: int = 0

    def validate(self) -> None:
        for f_ in fields(self):
            v = getattr(self, f_.name)
            if isinstance(v, tuple) and len(v) == 2 and v[0] > v[1]:
                raise DomainError(f"{f_.name}: lo must be <= hi")
        if self.n_miners < 1 or self.n_participants < 1:
            raise DomainError("counts must be >= 1")
        if self.noise <= 0:
            raise DomainError("noise must be > 0")


def _connected(nodes: list, links: list) -> bool:
    if not nodes:
        return True
    adj: dict = {v: [] for v in nodes}
    for l in links:
        adj[l.src].append(l.dst)
        adj[l.dst].append(l.src)
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(nodes)


def generate_nfv_scenario(p: NfvScenarioParams) -> NfvInstance:
    """Deterministic per seed.  Link topology: each node pair gets a
    bidirectional link with probability ``link_density``; topologies that do
    not connect every node are resampled (links carry both directions, so
    plain connectivity guarantees source -> servers -> destination paths)."""
    p.validate()
    rng = np.random.default_rng(p.seed)

    access = [f"ac{i}" for i in range(p.n_access)]
    transport = [f"tr{i}" for i in range(p.n_transport)]
    servers = tuple(
        Server(id=f"s{i}",
               cpu_capacity=float(rng.uniform(*p.server_capacity_range) * MEGA),
               static_power=float(rng.uniform(*p.static_power_range)),
               proc_power=float(rng.uniform(*p.proc_power_range)))
        for i in range(p.n_servers)
    )
    node_ids = access + [s.id for s in servers] + transport

    links = None
    for _attempt in range(200):
        cand = []
        idx = 0
        for a in range(len(node_ids)):
            for b in range(a + 1, len(node_ids)):
                if rng.random() < p.link_density:
                    cand.append(Link(id=f"l{idx}", src=node_ids[a], dst=node_ids[b],
                                     bandwidth=float(rng.uniform(*p.link_bandwidth_range)
                                                     * MEGA)))
                    idx += 1
        if cand and _connected(node_ids, cand):
            links = cand
            break
    if links is None:
        raise DomainError("could not sample a connected topology; raise link_density")

    graph = DataCenterGraph(access_switches=tuple(access),
                            transport_switches=tuple(transport),
                            servers=servers, links=tuple(links))

    sfcs = []
    for i in range(p.n_sfcs):
        lo, hi = p.vnf_count_range
        n_vnfs = int(rng.integers(lo, hi + 1))
        seg_bw = tuple(float(rng.uniform(*p.bandwidth_range))
                       for _ in range(n_vnfs + 1))
        vnf_cpu = tuple(
            float(rng.uniform(*p.cpu_demand_multiplier_range)) * seg_bw[j + 1]
            * p.demand_scale
            for j in range(n_vnfs)
        )
        sfcs.append(SfcRequest(
            user_id=f"u{i}",
            vnf_cpu=vnf_cpu,
            segment_bandwidth=seg_bw,
            source=str(rng.choice(access)),
            destination=str(rng.choice(transport)),
            max_delay=p.t_th,
            server_unit_price={s.id: float(rng.uniform(*p.price_range))
                               for s in servers},
            link_unit_price={l.id: float(rng.uniform(*p.price_range))
                             for l in links},
        ))
    return NfvInstance(graph=graph, sfcs=tuple(sfcs), alpha=p.alpha,
                       enforce_distinct_servers=p.enforce_distinct_servers)


def generate_mining_scenario(p: MiningScenarioParams) -> list[MiningTask]:
    """Deterministic per seed.  Path gains follow nu * d^-mu with nu drawn
    from the unit-scale Rayleigh distribution; each miner gets its own
    participant pool."""
    p.validate()
    rng = np.random.default_rng(p.seed)
    tasks = []
    for i in range(p.n_miners):
        participants = []
        tx_power = {}
        for k in range(p.n_participants):
            pid = f"m{i}_p{k}"
            d = float(rng.uniform(*p.distance_range))
            nu = float(rng.rayleigh(1.0))
            participants.append(Participant(
                id=pid,
                cpu_capacity=float(rng.uniform(*p.capacity_range)),
                proc_power=float(rng.uniform(*p.proc_power_range)),
                unit_price=float(rng.uniform(*p.price_range)),
                channel_gain=nu * d ** (-p.path_loss_exponent),
                noise=p.noise,
            ))
            tx_power[pid] = float(rng.uniform(*p.tx_power_range))
        tasks.append(MiningTask(
            miner_id=f"miner{i}",
            size_bits=float(rng.uniform(*p.task_size_range)) * p.demand_scale,
            cycles_per_bit=float(rng.uniform(*p.cycles_per_bit_range)),
            tx_power=tx_power,
            participants=tuple(participants),
            max_delay=p.t_mine,
        ))
    return tasks
