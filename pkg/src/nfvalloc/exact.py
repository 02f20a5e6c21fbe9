"""Exact branch-and-bound for the embedding problem at desk scale.

Bounding uses the LP relaxation (binary variables boxed to [0, 1]); the
search is best-first; branching fixes the most fractional placement
variable, ties broken by the lowest (user, function, server) index.  The
activation variables are never branched: with any positive static power the
LP pins them to the placement envelope, and incumbents rebuild them exactly
from the binary placement.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .formulation import Layout, build_relaxation
from .lp import solve_lp
from .model import NfvInstance, PlacementSolution, beta_from_x, objective_f
from .rounding import round_to_binary
from .hura import solve_routing

INT_TOL = 1e-7


@dataclass
class ExactLimits:
    node_cap: int = 100_000
    time_cap: float | None = None      # seconds; None keeps the search deterministic


@dataclass(order=True)
class BnbNode:
    """Open node: LP bound of the parent, creation order (the tie-break that
    keeps the search deterministic), and the partial binary assignment."""

    lp_bound: float
    order: int
    fixed: dict = field(compare=False)     # (user, function, server) -> (lo, hi)
    depth: int = field(compare=False, default=0)


@dataclass
class ExactResult:
    status: str                        # optimal | infeasible | node_cap | time_cap
    solution: PlacementSolution | None
    objective: float | None
    optimal: bool
    nodes: int
    root_bound: float | None
    log: list = field(default_factory=list)   # (node id, depth, bound, incumbent)


def search_log_csv(result: ExactResult) -> str:
    lines = ["node,depth,bound,incumbent"]
    for node_id, depth, bound, inc in result.log:
        inc_s = f"{inc:.12g}" if inc is not None else ""
        lines.append(f"{node_id},{depth},{bound:.12g},{inc_s}")
    return "\n".join(lines) + "\n"


def _x_index_order(instance: NfvInstance, layout: Layout):
    """Flat LP indices of every placement variable in (user, function,
    server) lexicographic order."""
    order = []
    for sfc in instance.sfcs:
        for j in range(sfc.n_vnfs):
            for k in range(len(instance.graph.servers)):
                order.append(((sfc.user_id, j, k), layout.x_var(sfc.user_id, j, k)))
    return order


def _incumbent_from_binary(instance: NfvInstance, x: dict) -> PlacementSolution | None:
    """Exact binary completion: activation from the placement, flows from a
    clean routing solve (guards against relaxation round-off)."""
    y, _cost, status = solve_routing(instance, x, list(instance.users))
    if status != "optimal":
        return None
    return PlacementSolution(beta=beta_from_x(instance, x), x=x, y=y, binary_flag=True)


def solve_exact(instance: NfvInstance, limits: ExactLimits | None = None) -> ExactResult:
    limits = limits or ExactLimits()
    start = time.monotonic()

    if not instance.sfcs:
        return ExactResult("optimal", PlacementSolution.zeros(instance, binary_flag=True),
                           0.0, True, 0, 0.0)

    layout0 = Layout.build(instance)
    var_order = _x_index_order(instance, layout0)

    incumbent: PlacementSolution | None = None
    incumbent_obj = math.inf
    seen_roundings: set = set()
    log: list = []
    counter = 0
    nodes = 0
    root_bound = None

    heap: list = []        # best-first over BnbNode

    def push(bound, x_bounds, depth):
        nonlocal counter
        heapq.heappush(heap, BnbNode(bound, counter, x_bounds, depth))
        counter += 1

    def solve_node(x_bounds):
        problem, layout = build_relaxation(instance, x_bounds=x_bounds)
        sol = solve_lp(problem)
        return sol, layout

    def try_incumbent(candidate: PlacementSolution | None):
        nonlocal incumbent, incumbent_obj
        if candidate is None:
            return
        obj = objective_f(instance, candidate)
        if obj < incumbent_obj - 1e-12:
            incumbent, incumbent_obj = candidate, obj

    root_sol, layout = solve_node({})
    if root_sol.status != "optimal":
        return ExactResult("infeasible", None, None, False, 1, None)
    root_bound = root_sol.objective_value
    push(root_bound, {}, 0)

    status = "optimal"
    while heap:
        if nodes >= limits.node_cap:
            status = "node_cap"
            break
        if limits.time_cap is not None and time.monotonic() - start > limits.time_cap:
            status = "time_cap"
            break
        node = heapq.heappop(heap)
        bound, node_id, x_bounds, depth = node.lp_bound, node.order, node.fixed, node.depth
        prune_eps = 1e-9 * max(1.0, abs(incumbent_obj)) if incumbent is not None else 0.0
        if incumbent is not None and bound >= incumbent_obj - prune_eps:
            continue        # bound can only be stale upward; safe to drop the rest
        nodes += 1

        lp_sol, layout = (root_sol, layout) if node_id == 0 else solve_node(x_bounds)
        if lp_sol.status != "optimal":
            log.append((node_id, depth, math.inf,
                        incumbent_obj if incumbent is not None else None))
            continue
        node_bound = lp_sol.objective_value
        log.append((node_id, depth, node_bound,
                    incumbent_obj if incumbent is not None else None))
        if incumbent is not None and node_bound >= incumbent_obj - prune_eps:
            continue

        relaxed = layout.extract(lp_sol.x)
        # most fractional placement variable, lexicographic tie-break
        best_key, best_idx, best_frac = None, None, -1.0
        for key, idx in var_order:
            v = lp_sol.x[idx]
            frac = min(v, 1.0 - v)
            if frac > best_frac + 1e-12:
                best_key, best_idx, best_frac = key, idx, frac

        if best_frac <= INT_TOL:
            x_bin = {u: np.round(m) for u, m in relaxed.x.items()}
            try_incumbent(_incumbent_from_binary(instance, x_bin))
            continue

        # rounding heuristic for an early incumbent (deduplicated by shape)
        rounded = round_to_binary(instance, relaxed)
        if rounded is not None:
            sig = tuple(int(v) for m in rounded.x.values() for v in m.ravel())
            if sig not in seen_roundings:
                seen_roundings.add(sig)
                try_incumbent(rounded)

        u, j, k = best_key
        for fixed in (1.0, 0.0):
            child = dict(x_bounds)
            child[(u, j, k)] = (fixed, fixed)
            push(node_bound, child, depth + 1)

    if incumbent is None:
        if status == "optimal":
            return ExactResult("infeasible", None, None, False, nodes, root_bound, log)
        return ExactResult(status, None, None, False, nodes, root_bound, log)
    return ExactResult(status, incumbent, incumbent_obj, status == "optimal",
                       nodes, root_bound, log)
