"""Shared LP assembly for the embedding problem.

Lays out the decision variables (per-server activation, per-function
placement, per-segment arc bandwidth) as one flat vector and builds the
constraint rows used by the exact solver, the penalty/surrogate iteration,
and the per-chain routing subproblem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import EQ, LE, LpProblem
from .model import NfvInstance, PlacementSolution, SfcRequest, _virtual_x


@dataclass
class Layout:
    """Index bookkeeping: beta block, then one x block per user, then one y
    block per user."""

    instance: NfvInstance
    n_servers: int
    n_arcs: int
    x_offset: dict
    y_offset: dict
    n_vars: int

    @classmethod
    def build(cls, instance: NfvInstance) -> "Layout":
        n = len(instance.graph.servers)
        a = len(instance.graph.arcs)
        x_offset, y_offset = {}, {}
        pos = n
        for sfc in instance.sfcs:
            x_offset[sfc.user_id] = pos
            pos += sfc.n_vnfs * n
        for sfc in instance.sfcs:
            y_offset[sfc.user_id] = pos
            pos += sfc.n_segments * a
        return cls(instance, n, a, x_offset, y_offset, pos)

    def beta_var(self, k: int) -> int:
        return k

    def x_var(self, user: str, j: int, k: int) -> int:
        return self.x_offset[user] + j * self.n_servers + k

    def y_var(self, user: str, seg: int, arc: int) -> int:
        return self.y_offset[user] + seg * self.n_arcs + arc

    def extract(self, xvec: np.ndarray, binary_flag: bool = False) -> PlacementSolution:
        inst = self.instance
        x = {}
        y = {}
        for sfc in inst.sfcs:
            u = sfc.user_id
            o = self.x_offset[u]
            x[u] = np.clip(xvec[o:o + sfc.n_vnfs * self.n_servers]
                           .reshape(sfc.n_vnfs, self.n_servers), 0.0, 1.0)
            o = self.y_offset[u]
            y[u] = np.maximum(xvec[o:o + sfc.n_segments * self.n_arcs]
                              .reshape(sfc.n_segments, self.n_arcs), 0.0)
        beta = np.clip(xvec[:self.n_servers], 0.0, 1.0)
        return PlacementSolution(beta=beta, x=x, y=y, binary_flag=binary_flag)


def objective_coefficients(layout: Layout) -> np.ndarray:
    """Flat objective: alpha-weighted energy plus (1 - alpha)-weighted cost."""
    inst = layout.instance
    alpha = inst.alpha
    c = np.zeros(layout.n_vars)
    servers = inst.graph.servers
    for k, s in enumerate(servers):
        c[layout.beta_var(k)] = alpha * s.static_power
    for sfc in inst.sfcs:
        u = sfc.user_id
        for j, demand in enumerate(sfc.vnf_cpu):
            for k, s in enumerate(servers):
                c[layout.x_var(u, j, k)] = (
                    alpha * s.proc_power * demand / s.cpu_capacity
                    + (1.0 - alpha) * sfc.server_unit_price[s.id] * demand
                )
        for seg in range(sfc.n_segments):
            for arc in inst.graph.arcs:
                c[layout.y_var(u, seg, arc.index)] = \
                    (1.0 - alpha) * sfc.link_unit_price[arc.link_id]
    return c


class RowBuilder:
    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.rows: list[np.ndarray] = []
        self.relations: list[int] = []
        self.rhs: list[float] = []

    def add(self, coeffs: dict, relation: int, rhs: float) -> None:
        row = np.zeros(self.n_vars)
        for idx, v in coeffs.items():
            row[idx] += v
        self.rows.append(row)
        self.relations.append(relation)
        self.rhs.append(rhs)

    def assemble(self):
        if not self.rows:
            return (np.zeros((0, self.n_vars)), np.zeros(0, dtype=int), np.zeros(0))
        return (np.vstack(self.rows), np.array(self.relations, dtype=int),
                np.array(self.rhs, dtype=float))


def _placement_rows(layout: Layout, rb: RowBuilder) -> None:
    """C1 (assign once), C2 (distinct servers per chain, when enforced),
    C3 (capacity vs activation), C4 (placement implies activation)."""
    inst = layout.instance
    n = layout.n_servers
    for sfc in inst.sfcs:
        u = sfc.user_id
        for j in range(sfc.n_vnfs):
            rb.add({layout.x_var(u, j, k): 1.0 for k in range(n)}, EQ, 1.0)
    if inst.enforce_distinct_servers:
        for sfc in inst.sfcs:
            u = sfc.user_id
            for k in range(n):
                rb.add({layout.x_var(u, j, k): 1.0 for j in range(sfc.n_vnfs)},
                       LE, 1.0)
    for k, s in enumerate(inst.graph.servers):
        coeffs = {layout.beta_var(k): -s.cpu_capacity}
        for sfc in inst.sfcs:
            for j, demand in enumerate(sfc.vnf_cpu):
                coeffs[layout.x_var(sfc.user_id, j, k)] = demand
        rb.add(coeffs, LE, 0.0)
    for sfc in inst.sfcs:
        u = sfc.user_id
        for j in range(sfc.n_vnfs):
            for k in range(n):
                rb.add({layout.x_var(u, j, k): 1.0, layout.beta_var(k): -1.0},
                       LE, 0.0)


def _flow_rows(layout: Layout, rb: RowBuilder, sfc: SfcRequest,
               x_is_variable: bool, fixed_x: np.ndarray | None = None) -> None:
    """C5 at every node for every segment of one chain.  With
    ``x_is_variable`` the placement indicators enter the row; otherwise the
    given binary placement moves into the right-hand side."""
    inst = layout.instance
    graph = inst.graph
    u = sfc.user_id
    server_ids = set(graph.server_ids)
    for seg in range(sfc.n_segments):
        bw = sfc.segment_bandwidth[seg]
        for node in graph.nodes:
            coeffs = {}
            for a in graph.arcs_out[node]:
                coeffs[layout.y_var(u, seg, a)] = 1.0
            for a in graph.arcs_in[node]:
                coeffs[layout.y_var(u, seg, a)] = coeffs.get(layout.y_var(u, seg, a), 0.0) - 1.0
            rhs = 0.0
            if node in server_ids:
                k = graph.server_index(node)
                for j, sign in ((seg, 1.0), (seg + 1, -1.0)):
                    if 1 <= j <= sfc.n_vnfs:
                        if x_is_variable:
                            idx = layout.x_var(u, j - 1, k)
                            coeffs[idx] = coeffs.get(idx, 0.0) - sign * bw
                        else:
                            rhs += sign * bw * fixed_x[j - 1, k]
                    # virtual endpoints never sit on servers
            else:
                rhs += bw * (_virtual_x(sfc, node, seg) - _virtual_x(sfc, node, seg + 1))
            rb.add(coeffs, EQ, rhs)


def _arc_capacity_rows(layout: Layout, rb: RowBuilder, users: list[str],
                       remaining: np.ndarray) -> None:
    """C6 per arc against the given remaining bandwidth."""
    inst = layout.instance
    for arc in inst.graph.arcs:
        coeffs = {}
        for sfc in inst.sfcs:
            if sfc.user_id not in users:
                continue
            for seg in range(sfc.n_segments):
                coeffs[layout.y_var(sfc.user_id, seg, arc.index)] = 1.0
        rb.add(coeffs, LE, float(remaining[arc.index]))


def _delay_rows(layout: Layout, rb: RowBuilder, users: list[str],
                x_is_variable: bool, fixed_x: dict | None = None) -> None:
    """C7 per chain; with fixed placement the processing part moves into the
    right-hand side."""
    inst = layout.instance
    graph = inst.graph
    for sfc in inst.sfcs:
        u = sfc.user_id
        if u not in users:
            continue
        coeffs = {}
        budget = sfc.max_delay
        for j, demand in enumerate(sfc.vnf_cpu):
            for k, s in enumerate(graph.servers):
                if x_is_variable:
                    coeffs[layout.x_var(u, j, k)] = demand / s.cpu_capacity
                else:
                    budget -= fixed_x[u][j, k] * demand / s.cpu_capacity
        for seg in range(sfc.n_segments):
            for arc in graph.arcs:
                coeffs[layout.y_var(u, seg, arc.index)] = 1.0 / arc.bandwidth
        rb.add(coeffs, LE, budget)


def build_relaxation(instance: NfvInstance,
                     x_bounds: dict | None = None,
                     penalty: tuple | None = None) -> tuple[LpProblem, Layout]:
    """LP over (beta, x, y) with every structural constraint and the binary
    variables relaxed to [0, 1].

    ``x_bounds`` optionally pins placement variables ((user, j, k) ->
    (lo, hi)) for branch-and-bound.  ``penalty`` is (lambda1, lambda2,
    previous solution); when given, the objective carries the linearized
    concave penalty: lam * sum(v) - lam * sum(2 v prev - prev^2), whose
    constant part lands in the offset.
    """
    layout = Layout.build(instance)
    c = objective_coefficients(layout)
    offset = 0.0
    if penalty is not None:
        lam1, lam2, prev = penalty
        for k in range(layout.n_servers):
            c[layout.beta_var(k)] += lam1 * (1.0 - 2.0 * prev.beta[k])
        offset += lam1 * float(np.sum(prev.beta ** 2))
        for sfc in instance.sfcs:
            u = sfc.user_id
            for j in range(sfc.n_vnfs):
                for k in range(layout.n_servers):
                    c[layout.x_var(u, j, k)] += lam2 * (1.0 - 2.0 * prev.x[u][j, k])
            offset += lam2 * float(np.sum(prev.x[u] ** 2))

    rb = RowBuilder(layout.n_vars)
    _placement_rows(layout, rb)
    for sfc in instance.sfcs:
        _flow_rows(layout, rb, sfc, x_is_variable=True)
    bandwidth = np.array([a.bandwidth for a in instance.graph.arcs])
    _arc_capacity_rows(layout, rb, list(instance.users), bandwidth)
    _delay_rows(layout, rb, list(instance.users), x_is_variable=True)
    a, rel, rhs = rb.assemble()

    lower = np.zeros(layout.n_vars)
    upper = np.full(layout.n_vars, np.inf)
    upper[:layout.n_servers] = 1.0
    for sfc in instance.sfcs:
        u = sfc.user_id
        o = layout.x_offset[u]
        upper[o:o + sfc.n_vnfs * layout.n_servers] = 1.0
    if x_bounds:
        for (u, j, k), (lo, hi) in x_bounds.items():
            idx = layout.x_var(u, j, k)
            lower[idx], upper[idx] = lo, hi

    problem = LpProblem(c=c, a=a, relations=rel, rhs=rhs, lower=lower,
                        upper=upper, offset=offset)
    return problem, layout


@dataclass
class RoutingLayout:
    """Compact variable layout holding only the routed chains' flows."""

    instance: NfvInstance
    users: list[str]
    n_arcs: int
    y_offset: dict
    n_vars: int

    @classmethod
    def build(cls, instance: NfvInstance, users: list[str]) -> "RoutingLayout":
        a = len(instance.graph.arcs)
        y_offset, pos = {}, 0
        for sfc in instance.sfcs:
            if sfc.user_id in users:
                y_offset[sfc.user_id] = pos
                pos += sfc.n_segments * a
        return cls(instance, list(users), a, y_offset, pos)

    def y_var(self, user: str, seg: int, arc: int) -> int:
        return self.y_offset[user] + seg * self.n_arcs + arc

    def extract_y(self, xvec: np.ndarray) -> dict:
        out = {}
        for sfc in self.instance.sfcs:
            u = sfc.user_id
            if u in self.y_offset:
                o = self.y_offset[u]
                out[u] = np.maximum(
                    xvec[o:o + sfc.n_segments * self.n_arcs]
                    .reshape(sfc.n_segments, self.n_arcs), 0.0)
        return out


def build_routing(instance: NfvInstance, x: dict, users: list[str],
                  remaining_bw: np.ndarray) -> tuple[LpProblem, RoutingLayout]:
    """Routing subproblem for a fixed binary placement of ``users``: minimize
    the (1 - alpha)-weighted bandwidth cost subject to flow conservation,
    remaining arc capacity, and each chain's delay budget net of its
    processing time."""
    layout = RoutingLayout.build(instance, users)
    c = np.zeros(layout.n_vars)
    for sfc in instance.sfcs:
        u = sfc.user_id
        if u not in layout.y_offset:
            continue
        for seg in range(sfc.n_segments):
            for arc in instance.graph.arcs:
                c[layout.y_var(u, seg, arc.index)] = \
                    (1.0 - instance.alpha) * sfc.link_unit_price[arc.link_id]
    rb = RowBuilder(layout.n_vars)
    for sfc in instance.sfcs:
        if sfc.user_id in layout.y_offset:
            _flow_rows(layout, rb, sfc, x_is_variable=False, fixed_x=x[sfc.user_id])
    _arc_capacity_rows(layout, rb, users, remaining_bw)
    _delay_rows(layout, rb, users, x_is_variable=False, fixed_x=x)
    a, rel, rhs = rb.assemble()
    problem = LpProblem(c=c, a=a, relations=rel, rhs=rhs,
                        lower=np.zeros(layout.n_vars),
                        upper=np.full(layout.n_vars, np.inf))
    return problem, layout
