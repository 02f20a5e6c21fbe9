"""Turn a fractional placement into a deployable binary one.

For each (user, function) in instance order the feasible server with the
largest fractional weight wins (ties to the lowest server index), respecting
remaining capacity and, when enforced, per-chain server distinctness.  The
flows are then re-routed jointly by the routing LP; failure at either stage
reports None so callers can retry with a stronger penalty.
"""

from __future__ import annotations

import numpy as np

from .hura import solve_routing
from .model import NfvInstance, PlacementSolution


def round_to_binary(instance: NfvInstance,
                    relaxed: PlacementSolution) -> PlacementSolution | None:
    graph = instance.graph
    n = len(graph.servers)
    caps = np.array([s.cpu_capacity for s in graph.servers])
    committed = np.zeros(n)
    x = {}
    for sfc in instance.sfcs:
        u = sfc.user_id
        x_u = np.zeros((sfc.n_vnfs, n))
        used = np.zeros(n, dtype=bool)
        for j, demand in enumerate(sfc.vnf_cpu):
            weights = relaxed.x[u][j]
            # descending weight, ties to the lowest server index
            order = np.lexsort((np.arange(n), -weights))
            pick = -1
            for k in order:
                if caps[k] - committed[k] < demand:
                    continue
                if instance.enforce_distinct_servers and used[k]:
                    continue
                pick = int(k)
                break
            if pick < 0:
                return None
            x_u[j, pick] = 1.0
            used[pick] = True
            committed[pick] += demand
        x[u] = x_u

    beta = np.zeros(n)
    for m in x.values():
        beta = np.maximum(beta, m.max(axis=0))
    y, _cost, status = solve_routing(instance, x, list(instance.users))
    if status != "optimal":
        return None
    sol = PlacementSolution(beta=beta, x=x, y=y, binary_flag=True)
    return sol
