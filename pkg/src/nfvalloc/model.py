"""Domain types for data-center service chain embedding plus the objective
evaluators (delay, energy, resource cost, weighted objective) and a
constraint-by-constraint feasibility checker.

All types are immutable after construction and the evaluators are pure
functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class DomainError(ValueError):
    """Raised when inputs violate a documented model invariant."""


@dataclass(frozen=True)
class Server:
    """Processing server: capacity in CPU cycles/s, static and processing power in W.

    The energy model charges ``static_power`` once when the server is active
    plus ``proc_power`` scaled by the utilization fraction (hosted cycles /
    capacity).
    """

    id: str
    cpu_capacity: float
    static_power: float
    proc_power: float

    def __post_init__(self):
        if self.cpu_capacity <= 0:
            raise DomainError(f"server {self.id}: cpu_capacity must be > 0")
        if self.static_power < 0 or self.proc_power < 0:
            raise DomainError(f"server {self.id}: powers must be >= 0")


@dataclass(frozen=True)
class Link:
    """Declared physical link. Each link materializes as two directed arcs
    (src->dst and dst->src), each carrying the full bandwidth."""

    id: str
    src: str
    dst: str
    bandwidth: float

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise DomainError(f"link {self.id}: bandwidth must be > 0")
        if self.src == self.dst:
            raise DomainError(f"link {self.id}: src and dst must differ")


class Arc(NamedTuple):
    """Directed arc derived from a declared link."""

    index: int
    id: str
    src: str
    dst: str
    bandwidth: float
    link_id: str


@dataclass
class DataCenterGraph:
    """Directed data-center graph: access switches (sources), transport
    switches (destinations), processing servers, and capacitated links.

    Switches carry no processing capacity; they only forward traffic.
    """

    access_switches: tuple[str, ...]
    transport_switches: tuple[str, ...]
    servers: tuple[Server, ...]
    links: tuple[Link, ...]

    # derived, built once in __post_init__
    arcs: tuple[Arc, ...] = field(init=False, repr=False)
    nodes: tuple[str, ...] = field(init=False, repr=False)
    arcs_out: dict = field(init=False, repr=False)
    arcs_in: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.access_switches = tuple(self.access_switches)
        self.transport_switches = tuple(self.transport_switches)
        self.servers = tuple(self.servers)
        self.links = tuple(self.links)

        server_ids = [s.id for s in self.servers]
        ac, tr, sv = set(self.access_switches), set(self.transport_switches), set(server_ids)
        if len(ac) != len(self.access_switches) or len(tr) != len(self.transport_switches) \
                or len(sv) != len(server_ids):
            raise DomainError("duplicate node identifiers within a node class")
        if ac & tr or ac & sv or tr & sv:
            raise DomainError("access/transport/server node sets must be pairwise disjoint")

        self.nodes = self.access_switches + tuple(server_ids) + self.transport_switches
        node_set = set(self.nodes)
        link_ids = set()
        arcs = []
        for link in self.links:
            if link.id in link_ids:
                raise DomainError(f"duplicate link id {link.id}")
            link_ids.add(link.id)
            if link.src not in node_set or link.dst not in node_set:
                raise DomainError(f"link {link.id}: endpoint not a declared node")
            arcs.append(Arc(len(arcs), f"{link.id}:fwd", link.src, link.dst, link.bandwidth, link.id))
            arcs.append(Arc(len(arcs), f"{link.id}:rev", link.dst, link.src, link.bandwidth, link.id))
        self.arcs = tuple(arcs)
        self.arcs_out = {v: [] for v in self.nodes}
        self.arcs_in = {v: [] for v in self.nodes}
        for a in self.arcs:
            self.arcs_out[a.src].append(a.index)
            self.arcs_in[a.dst].append(a.index)

    @property
    def server_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.servers)

    def server_index(self, server_id: str) -> int:
        for k, s in enumerate(self.servers):
            if s.id == server_id:
                return k
        raise DomainError(f"unknown server {server_id}")


@dataclass(frozen=True)
class SfcRequest:
    """One user's ordered chain of virtual functions.

    ``segment_bandwidth`` has one entry per traffic segment, including the
    source->first-function and last-function->destination segments, so its
    length is ``len(vnf_cpu) + 1``.  Unit prices are per (user, server) and
    per (user, link).
    """

    user_id: str
    vnf_cpu: tuple[float, ...]
    segment_bandwidth: tuple[float, ...]
    source: str
    destination: str
    max_delay: float
    server_unit_price: dict  # server id -> price per CPU cycle
    link_unit_price: dict    # link id -> price per (bit/s)

    def __post_init__(self):
        object.__setattr__(self, "vnf_cpu", tuple(float(v) for v in self.vnf_cpu))
        object.__setattr__(self, "segment_bandwidth",
                           tuple(float(v) for v in self.segment_bandwidth))
        if len(self.vnf_cpu) < 1:
            raise DomainError(f"sfc {self.user_id}: needs at least one function")
        if len(self.segment_bandwidth) != len(self.vnf_cpu) + 1:
            raise DomainError(f"sfc {self.user_id}: expected {len(self.vnf_cpu) + 1} "
                              f"segment bandwidths, got {len(self.segment_bandwidth)}")
        if any(v <= 0 for v in self.vnf_cpu) or any(v <= 0 for v in self.segment_bandwidth):
            raise DomainError(f"sfc {self.user_id}: demands and bandwidths must be > 0")
        if self.max_delay <= 0:
            raise DomainError(f"sfc {self.user_id}: max_delay must be > 0")
        if any(p <= 0 for p in self.server_unit_price.values()) \
                or any(p <= 0 for p in self.link_unit_price.values()):
            raise DomainError(f"sfc {self.user_id}: unit prices must be > 0")

    @property
    def n_vnfs(self) -> int:
        return len(self.vnf_cpu)

    @property
    def n_segments(self) -> int:
        return len(self.vnf_cpu) + 1


@dataclass
class NfvInstance:
    """A complete embedding problem: graph, chain requests, and the
    energy-vs-cost weight ``alpha``.

    ``enforce_distinct_servers`` toggles the per-chain anti-colocation
    constraint (C2); disabling it reproduces the comparison mode used for
    third-party baselines.
    """

    graph: DataCenterGraph
    sfcs: tuple[SfcRequest, ...]
    alpha: float = 0.5
    enforce_distinct_servers: bool = True

    def __post_init__(self):
        self.sfcs = tuple(self.sfcs)
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError("alpha must lie in [0, 1]")
        users = [s.user_id for s in self.sfcs]
        if len(set(users)) != len(users):
            raise DomainError("duplicate user ids")
        ac, tr = set(self.graph.access_switches), set(self.graph.transport_switches)
        link_ids = {l.id for l in self.graph.links}
        server_ids = set(self.graph.server_ids)
        for sfc in self.sfcs:
            if sfc.source not in ac:
                raise DomainError(f"sfc {sfc.user_id}: source must be an access switch")
            if sfc.destination not in tr:
                raise DomainError(f"sfc {sfc.user_id}: destination must be a transport switch")
            if set(sfc.server_unit_price) != server_ids:
                raise DomainError(f"sfc {sfc.user_id}: server prices must cover every server")
            if set(sfc.link_unit_price) != link_ids:
                raise DomainError(f"sfc {sfc.user_id}: link prices must cover every link")

    @property
    def users(self) -> tuple[str, ...]:
        return tuple(s.user_id for s in self.sfcs)

    def sfc(self, user_id: str) -> SfcRequest:
        for s in self.sfcs:
            if s.user_id == user_id:
                return s
        raise DomainError(f"unknown user {user_id}")

    # ---- JSON round-trip ------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "alpha": self.alpha,
            "enforce_distinct_servers": self.enforce_distinct_servers,
            "graph": {
                "access_switches": list(self.graph.access_switches),
                "transport_switches": list(self.graph.transport_switches),
                "servers": [
                    {"id": s.id, "cpu_capacity": s.cpu_capacity,
                     "static_power": s.static_power, "proc_power": s.proc_power}
                    for s in self.graph.servers
                ],
                "links": [
                    {"id": l.id, "src": l.src, "dst": l.dst, "bandwidth": l.bandwidth}
                    for l in self.graph.links
                ],
            },
            "sfcs": [
                {"user_id": s.user_id,
                 "vnf_cpu": list(s.vnf_cpu),
                 "segment_bandwidth": list(s.segment_bandwidth),
                 "source": s.source,
                 "destination": s.destination,
                 "max_delay": s.max_delay,
                 "server_unit_price": dict(sorted(s.server_unit_price.items())),
                 "link_unit_price": dict(sorted(s.link_unit_price.items()))}
                for s in self.sfcs
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NfvInstance":
        g = data["graph"]
        graph = DataCenterGraph(
            access_switches=tuple(g["access_switches"]),
            transport_switches=tuple(g["transport_switches"]),
            servers=tuple(Server(**s) for s in g["servers"]),
            links=tuple(Link(**l) for l in g["links"]),
        )
        sfcs = tuple(
            SfcRequest(
                user_id=s["user_id"],
                vnf_cpu=tuple(s["vnf_cpu"]),
                segment_bandwidth=tuple(s["segment_bandwidth"]),
                source=s["source"],
                destination=s["destination"],
                max_delay=s["max_delay"],
                server_unit_price=dict(s["server_unit_price"]),
                link_unit_price=dict(s["link_unit_price"]),
            )
            for s in data["sfcs"]
        )
        return cls(graph=graph, sfcs=sfcs, alpha=data["alpha"],
                   enforce_distinct_servers=data["enforce_distinct_servers"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NfvInstance":
        return cls.from_dict(json.loads(text))


@dataclass
class PlacementSolution:
    """Allocation decision: per-server activation ``beta``, per-(user, vnf,
    server) placement ``x``, and per-(user, segment, arc) bandwidth ``y``.

    Arrays follow the orderings of ``graph.servers`` and ``graph.arcs``.
    ``binary_flag`` asserts beta/x take values exactly in {0, 1}.
    """

    beta: np.ndarray                # (n_servers,)
    x: dict                         # user id -> (n_vnfs, n_servers)
    y: dict                         # user id -> (n_segments, n_arcs)
    binary_flag: bool = False

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.x = {u: np.asarray(m, dtype=float) for u, m in self.x.items()}
        self.y = {u: np.asarray(m, dtype=float) for u, m in self.y.items()}
        if np.any(self.beta < -1e-12) or np.any(self.beta > 1 + 1e-12):
            raise DomainError("beta values must lie in [0, 1]")
        for u, m in self.x.items():
            if np.any(m < -1e-12) or np.any(m > 1 + 1e-12):
                raise DomainError(f"x values for {u} must lie in [0, 1]")
        for u, m in self.y.items():
            if np.any(m < -1e-9):
                raise DomainError(f"y values for {u} must be >= 0")
        if self.binary_flag:
            if not self.is_binary(tol=0.0):
                raise DomainError("binary_flag set but beta/x are not exactly binary")

    @classmethod
    def zeros(cls, instance: NfvInstance, binary_flag: bool = False) -> "PlacementSolution":
        n, a = len(instance.graph.servers), len(instance.graph.arcs)
        return cls(
            beta=np.zeros(n),
            x={s.user_id: np.zeros((s.n_vnfs, n)) for s in instance.sfcs},
            y={s.user_id: np.zeros((s.n_segments, a)) for s in instance.sfcs},
            binary_flag=binary_flag,
        )

    def is_binary(self, tol: float = 0.0) -> bool:
        vals = [self.beta] + list(self.x.values())
        return all(np.all(np.minimum(np.abs(v), np.abs(v - 1.0)) <= tol) for v in vals)

    def copy(self) -> "PlacementSolution":
        return PlacementSolution(
            beta=self.beta.copy(),
            x={u: m.copy() for u, m in self.x.items()},
            y={u: m.copy() for u, m in self.y.items()},
            binary_flag=self.binary_flag,
        )

    def to_dict(self, instance: NfvInstance) -> dict:
        return {
            "version": 1,
            "servers": list(instance.graph.server_ids),
            "arcs": [a.id for a in instance.graph.arcs],
            "beta": [float(v) for v in self.beta],
            "x": {u: [[float(v) for v in row] for row in m] for u, m in self.x.items()},
            "y": {u: [[float(v) for v in row] for row in m] for u, m in self.y.items()},
            "binary": self.binary_flag,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlacementSolution":
        return cls(
            beta=np.array(data["beta"], dtype=float),
            x={u: np.array(m, dtype=float) for u, m in data["x"].items()},
            y={u: np.array(m, dtype=float) for u, m in data["y"].items()},
            binary_flag=data["binary"],
        )


class Violation(NamedTuple):
    """One violated constraint: id, offending index tuple, and residual.

    Residuals are normalized (capacity constraints divided by the capacity,
    balance constraints by the segment bandwidth) so a single absolute
    tolerance is meaningful across constraints.
    """

    constraint: str
    where: tuple
    residual: float


def _check_dims(instance: NfvInstance, sol: PlacementSolution) -> None:
    n, a = len(instance.graph.servers), len(instance.graph.arcs)
    if sol.beta.shape != (n,):
        raise DomainError(f"beta has shape {sol.beta.shape}, expected ({n},)")
    if set(sol.x) != set(instance.users) or set(sol.y) != set(instance.users):
        raise DomainError("solution users do not match instance users")
    for sfc in instance.sfcs:
        if sol.x[sfc.user_id].shape != (sfc.n_vnfs, n):
            raise DomainError(f"x[{sfc.user_id}] has wrong shape")
        if sol.y[sfc.user_id].shape != (sfc.n_segments, a):
            raise DomainError(f"y[{sfc.user_id}] has wrong shape")


def compute_delay(instance: NfvInstance, sol: PlacementSolution, user: str) -> float:
    """End-to-end delay for one user: processing time on servers plus
    transmission time over arcs (seconds)."""
    _check_dims(instance, sol)
    sfc = instance.sfc(user)
    caps = np.array([s.cpu_capacity for s in instance.graph.servers])
    proc = float(np.sum(sol.x[user] * (np.array(sfc.vnf_cpu)[:, None] / caps[None, :])))
    arc_bw = np.array([a.bandwidth for a in instance.graph.arcs])
    trans = float(np.sum(sol.y[user] / arc_bw[None, :]))
    return proc + trans


def compute_energy(instance: NfvInstance, sol: PlacementSolution) -> float:
    """Data-center power draw: static power of active servers plus
    per-server processing power scaled by utilization."""
    _check_dims(instance, sol)
    servers = instance.graph.servers
    static = float(np.dot(sol.beta, [s.static_power for s in servers]))
    caps = np.array([s.cpu_capacity for s in servers])
    util = np.zeros(len(servers))
    for sfc in instance.sfcs:
        util += np.array(sfc.vnf_cpu) @ sol.x[sfc.user_id] / caps
    return static + float(np.dot([s.proc_power for s in servers], util))


def compute_cost(instance: NfvInstance, sol: PlacementSolution) -> float:
    """Total price of the allocated resources across all users."""
    _check_dims(instance, sol)
    return sum(per_user_cost(instance, sol, u) for u in instance.users)


def per_user_cost(instance: NfvInstance, sol: PlacementSolution, user: str) -> float:
    """Price of the resources allocated to one user (CPU cycles plus
    arc bandwidth at that user's unit prices)."""
    sfc = instance.sfc(user)
    prices = np.array([sfc.server_unit_price[s.id] for s in instance.graph.servers])
    cpu_cost = float(np.array(sfc.vnf_cpu) @ sol.x[user] @ prices)
    arc_prices = np.array([sfc.link_unit_price[a.link_id] for a in instance.graph.arcs])
    bw_cost = float(np.sum(sol.y[user] @ arc_prices))
    return cpu_cost + bw_cost


def objective_f(instance: NfvInstance, sol: PlacementSolution) -> float:
    """Weighted single objective: alpha * energy + (1 - alpha) * cost."""
    return instance.alpha * compute_energy(instance, sol) \
        + (1.0 - instance.alpha) * compute_cost(instance, sol)


def beta_from_x(instance: NfvInstance, x: dict) -> np.ndarray:
    """Activation vector implied by a binary placement: a server is active
    iff it hosts at least one function."""
    n = len(instance.graph.servers)
    beta = np.zeros(n)
    for m in x.values():
        beta = np.maximum(beta, m.max(axis=0) > 0.5)
    return beta.astype(float)


def _virtual_x(sfc: SfcRequest, node: str, j: int) -> float:
    # placement indicator extended to the virtual chain endpoints: the source
    # switch "hosts" index 0 and the destination switch index n_vnfs + 1
    if j == 0:
        return 1.0 if node == sfc.source else 0.0
    if j == sfc.n_vnfs + 1:
        return 1.0 if node == sfc.destination else 0.0
    return 0.0


def check_feasibility(instance: NfvInstance, sol: PlacementSolution,
                      tol: float = 1e-6) -> list[Violation]:
    """Check every constraint and return the violations beyond ``tol``.

    Covered: per-function assignment (C1), per-chain distinct servers (C2,
    skipped when the instance disables it), server capacity (C3), activation
    coupling (C4), flow conservation at servers and at each chain's
    source/destination switch (C5), arc capacity (C6), the delay budget (C7),
    and the variable domains (C8/C9 boxes, or exact binarity when the
    solution claims it, and C10 nonnegativity).
    """
    if tol < 0:
        raise DomainError("tol must be >= 0")
    _check_dims(instance, sol)
    out: list[Violation] = []
    graph = instance.graph
    servers = graph.servers
    caps = np.array([s.cpu_capacity for s in servers])

    for sfc in instance.sfcs:
        u = sfc.user_id
        x = sol.x[u]
        # C1: each function placed exactly once
        row_sums = x.sum(axis=1)
        for j, rs in enumerate(row_sums):
            if abs(rs - 1.0) > tol:
                out.append(Violation("C1", (u, j), abs(rs - 1.0)))
        # C2: at most one function of a chain per server
        if instance.enforce_distinct_servers:
            col_sums = x.sum(axis=0)
            for k, cs in enumerate(col_sums):
                if cs - 1.0 > tol:
                    out.append(Violation("C2", (u, servers[k].id), cs - 1.0))

    # C3: hosted cycles within activated capacity (normalized by capacity)
    load = np.zeros(len(servers))
    for sfc in instance.sfcs:
        load += np.array(sfc.vnf_cpu) @ sol.x[sfc.user_id]
    for k, s in enumerate(servers):
        r = (load[k] - sol.beta[k] * s.cpu_capacity) / s.cpu_capacity
        if r > tol:
            out.append(Violation("C3", (s.id,), r))

    # C4: placement implies activation
    for sfc in instance.sfcs:
        u = sfc.user_id
        excess = sol.x[u] - sol.beta[None, :]
        for j, k in zip(*np.where(excess > tol)):
            out.append(Violation("C4", (u, int(j), servers[k].id), float(excess[j, k])))

    # C5: per-segment flow conservation at every node
    server_id_set = set(graph.server_ids)
    for sfc in instance.sfcs:
        u = sfc.user_id
        x, y = sol.x[u], sol.y[u]
        for j in range(sfc.n_segments):       # segment j connects index j to j+1
            bw = sfc.segment_bandwidth[j]
            for node in graph.nodes:
                balance = y[j, graph.arcs_out[node]].sum() - y[j, graph.arcs_in[node]].sum()
                if node in server_id_set:
                    k = graph.server_index(node)
                    xj = x[j - 1, k] if 1 <= j <= sfc.n_vnfs else _virtual_x(sfc, node, j)
                    xj1 = x[j, k] if j + 1 <= sfc.n_vnfs else _virtual_x(sfc, node, j + 1)
                else:
                    xj = _virtual_x(sfc, node, j)
                    xj1 = _virtual_x(sfc, node, j + 1)
                r = abs(balance - bw * (xj - xj1)) / bw
                if r > tol:
                    out.append(Violation("C5", (u, j, node), r))

    # C6: arc capacity (normalized)
    for arc in graph.arcs:
        used = sum(sol.y[u][:, arc.index].sum() for u in instance.users)
        r = (used - arc.bandwidth) / arc.bandwidth
        if r > tol:
            out.append(Violation("C6", (arc.id,), r))

    # C7: delay budget (seconds)
    for sfc in instance.sfcs:
        d = compute_delay(instance, sol, sfc.user_id)
        if d - sfc.max_delay > tol:
            out.append(Violation("C7", (sfc.user_id,), d - sfc.max_delay))

    # C8/C9: variable domains; exact binarity when claimed
    if sol.binary_flag:
        if np.any((sol.beta != 0.0) & (sol.beta != 1.0)):
            out.append(Violation("C8", (), float(np.max(np.minimum(sol.beta, 1 - sol.beta)))))
        for u, m in sol.x.items():
            if np.any((m != 0.0) & (m != 1.0)):
                out.append(Violation("C9", (u,), float(np.max(np.minimum(m, 1 - m)))))
    else:
        if np.any(sol.beta < -tol) or np.any(sol.beta > 1 + tol):
            out.append(Violation("C8", (), float(np.max(np.maximum(-sol.beta, sol.beta - 1)))))
        for u, m in sol.x.items():
            if np.any(m < -tol) or np.any(m > 1 + tol):
                out.append(Violation("C9", (u,), float(np.max(np.maximum(-m, m - 1)))))

    # C10: nonnegative bandwidth
    for u, m in sol.y.items():
        if np.any(m < -tol):
            out.append(Violation("C10", (u,), float(-m.min())))

    return out
