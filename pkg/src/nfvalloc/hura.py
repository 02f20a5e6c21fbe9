"""Hungarian-assignment embedding heuristic.

Chains are served in increasing order of their delay budget.  For each chain
a square cost matrix over servers is built (activation + processing energy +
CPU price per admissible server, dummy rows padding the chain out to the
server count), solved exactly with the Hungarian algorithm, and the chain's
flows are then routed by a small LP against the remaining arc bandwidth.  If
routing fails the assignment is redone once with a pure processing-delay
matrix before the chain is rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .formulation import build_routing
from .lp import solve_lp
from .model import DomainError, NfvInstance, PlacementSolution, SfcRequest, objective_f

BIG_SCALE = 1e9


class NoAssignmentError(ValueError):
    """A real row of the assignment matrix admits no server."""


class StructuralError(ValueError):
    """The chain cannot fit at all (more functions than servers)."""


@dataclass
class AssignmentMatrix:
    """Square cost matrix; entries equal to ``big_value`` mark inadmissible
    (function, server) pairs."""

    a: np.ndarray
    big_value: float

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        if self.a.ndim != 2 or self.a.shape[0] != self.a.shape[1]:
            raise DomainError("assignment matrix must be square")
        if not np.all(np.isfinite(self.a)):
            raise DomainError("assignment matrix entries must be finite")

    @property
    def n(self) -> int:
        return self.a.shape[0]


def hungarian(matrix: AssignmentMatrix) -> tuple[np.ndarray, float]:
    """Exact minimum-cost perfect assignment (rows -> columns).

    O(n^3) shortest-augmenting-path formulation with potentials.  Raises
    NoAssignmentError when some row has no admissible column at all.
    """
    a = matrix.a
    n = matrix.n
    if n == 0:
        return np.zeros(0, dtype=int), 0.0
    for i in range(n):
        if np.all(a[i] >= matrix.big_value):
            raise NoAssignmentError(f"row {i} has no admissible column")

    inf = math.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=int)          # p[j]: row (1-based) matched to column j
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = a[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    assign = np.zeros(n, dtype=int)
    for j in range(1, n + 1):
        assign[p[j] - 1] = j - 1
    total = float(sum(a[i, assign[i]] for i in range(n)))
    return assign, total


@dataclass
class HuraState:
    """Capacity bookkeeping carried across chains.  Remaining capacities are
    recomputed from the committed totals so repeated commits cannot drift."""

    cpu_capacity: np.ndarray
    arc_bandwidth: np.ndarray
    committed_cpu: np.ndarray = field(init=False)
    committed_bw: np.ndarray = field(init=False)
    beta: np.ndarray = field(init=False)
    objective: float = 0.0

    def __post_init__(self):
        self.committed_cpu = np.zeros_like(self.cpu_capacity)
        self.committed_bw = np.zeros_like(self.arc_bandwidth)
        self.beta = np.zeros_like(self.cpu_capacity)

    @classmethod
    def fresh(cls, instance: NfvInstance) -> "HuraState":
        return cls(
            cpu_capacity=np.array([s.cpu_capacity for s in instance.graph.servers]),
            arc_bandwidth=np.array([a.bandwidth for a in instance.graph.arcs]),
        )

    @property
    def remain_cpu(self) -> np.ndarray:
        return self.cpu_capacity - self.committed_cpu

    @property
    def remain_bw(self) -> np.ndarray:
        return self.arc_bandwidth - self.committed_bw


def build_placement_matrix(sfc: SfcRequest, state: HuraState,
                           instance: NfvInstance, mode: str = "objective") -> AssignmentMatrix:
    """Cost matrix for one chain.

    "objective" entries: current running objective plus the activation power
    (only for still-inactive servers), the processing-energy share, and the
    CPU price, all alpha-weighted.  "delay" entries: pure processing delay.
    Servers without enough remaining capacity get the big marker; rows past
    the chain length are zero-padded.
    """
    if mode not in ("objective", "delay"):
        raise DomainError(f"unknown matrix mode {mode!r}")
    servers = instance.graph.servers
    n = len(servers)
    if n < sfc.n_vnfs:
        raise StructuralError(
            f"chain {sfc.user_id} has {sfc.n_vnfs} functions but only {n} servers")
    alpha = instance.alpha
    a = np.zeros((n, n))
    finite_max = 0.0
    for j, demand in enumerate(sfc.vnf_cpu):
        for k, s in enumerate(servers):
            if state.remain_cpu[k] >= demand:
                if mode == "objective":
                    activation = s.static_power if state.beta[k] < 0.5 else 0.0
                    entry = state.objective \
                        + alpha * (activation + s.proc_power * demand / s.cpu_capacity) \
                        + (1.0 - alpha) * sfc.server_unit_price[s.id] * demand
                else:
                    entry = demand / s.cpu_capacity
                a[j, k] = entry
                finite_max = max(finite_max, abs(entry))
            else:
                a[j, k] = np.nan       # marked below once big_value is known
    big = BIG_SCALE * (finite_max + 1.0)
    a = np.where(np.isnan(a), big, a)
    return AssignmentMatrix(a=a, big_value=big)


def solve_routing(instance: NfvInstance, x: dict, users: list[str],
                  remaining_bw: np.ndarray | None = None):
    """Route the given users' segments for a fixed binary placement.

    Returns (y dict, routing cost, status) where status is "optimal" or
    "infeasible"; cost is the (1 - alpha)-weighted bandwidth price.
    """
    if remaining_bw is None:
        remaining_bw = np.array([a.bandwidth for a in instance.graph.arcs])
    problem, layout = build_routing(instance, x, users, remaining_bw)
    sol = solve_lp(problem)
    if sol.status != "optimal":
        return None, None, "infeasible"
    return layout.extract_y(sol.x), float(sol.objective_value), "optimal"


@dataclass
class HuraResult:
    solution: PlacementSolution
    objective: float
    accepted: list
    rejected: list          # (user id, reason)
    log: list               # per-chain: (user, mode, servers, routing_cost, accepted)

    @property
    def status(self) -> str:
        return "optimal" if not self.rejected else "partial"


def hura_solve(instance: NfvInstance) -> HuraResult:
    """Run the full heuristic.  Rejected chains are reported, not fatal; the
    returned solution covers the accepted subset and is binary feasible."""
    order = sorted(instance.sfcs, key=lambda s: (s.max_delay, s.user_id))
    state = HuraState.fresh(instance)
    sol = PlacementSolution.zeros(instance)
    accepted: list = []
    rejected: list = []
    log: list = []

    for sfc in order:
        u = sfc.user_id
        placed = None
        for mode in ("objective", "delay"):
            try:
                matrix = build_placement_matrix(sfc, state, instance, mode)
            except StructuralError as exc:
                rejected.append((u, str(exc)))
                log.append((u, mode, None, None, False))
                break
            try:
                assign, _total = hungarian(matrix)
            except NoAssignmentError:
                rejected.append((u, "no capacity-feasible server set"))
                log.append((u, mode, None, None, False))
                break
            chosen = [int(assign[j]) for j in range(sfc.n_vnfs)]
            if any(matrix.a[j, k] >= matrix.big_value for j, k in enumerate(chosen)):
                rejected.append((u, "no capacity-feasible distinct assignment"))
                log.append((u, mode, None, None, False))
                break
            x_u = np.zeros((sfc.n_vnfs, len(instance.graph.servers)))
            for j, k in enumerate(chosen):
                x_u[j, k] = 1.0
            y_u, cost, status = solve_routing(instance, {u: x_u}, [u],
                                              remaining_bw=state.remain_bw)
            if status == "optimal":
                placed = (chosen, x_u, y_u[u], cost, mode)
                break
            log.append((u, mode, chosen, None, False))
        else:
            rejected.append((u, "routing infeasible in both matrix modes"))
            continue
        if placed is None:
            continue

        chosen, x_u, y_u, cost, mode = placed
        sol.x[u] = x_u
        sol.y[u] = y_u
        for j, k in enumerate(chosen):
            state.committed_cpu[k] += sfc.vnf_cpu[j]
            state.beta[k] = 1.0
        state.committed_bw = state.committed_bw + y_u.sum(axis=0)
        sol.beta = state.beta.copy()
        accepted.append(u)
        state.objective = objective_f(instance, sol)
        log.append((u, mode, [instance.graph.servers[k].id for k in chosen],
                    cost, True))

    sol.binary_flag = True
    return HuraResult(solution=sol, objective=state.objective,
                      accepted=accepted, rejected=rejected, log=log)


def decision_log_csv(result: HuraResult) -> str:
    """Per-chain decision log as CSV text."""
    lines = ["user,mode,servers,routing_cost,accepted"]
    for user, mode, servers, cost, ok in result.log:
        srv = ";".join(servers) if servers else ""
        cost_s = f"{cost:.9g}" if cost is not None else ""
        lines.append(f"{user},{mode},{srv},{cost_s},{int(ok)}")
    return "\n".join(lines) + "\n"


def restrict_instance(instance: NfvInstance, users: list[str]) -> NfvInstance:
    """Same graph and weights, chains limited to ``users`` (used to check
    feasibility of a partially-accepted solution)."""
    keep = [s for s in instance.sfcs if s.user_id in set(users)]
    return NfvInstance(graph=instance.graph, sfcs=tuple(keep), alpha=instance.alpha,
                       enforce_distinct_servers=instance.enforce_distinct_servers)


def restrict_solution(instance: NfvInstance, sol: PlacementSolution,
                      users: list[str]) -> PlacementSolution:
    keep = set(users)
    return PlacementSolution(
        beta=sol.beta.copy(),
        x={u: m.copy() for u, m in sol.x.items() if u in keep},
        y={u: m.copy() for u, m in sol.y.items() if u in keep},
        binary_flag=sol.binary_flag,
    )
