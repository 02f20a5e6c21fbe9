import numpy as np
import pytest

from nfvalloc.model import (DataCenterGraph, Link, NfvInstance, PlacementSolution,
                            Server, SfcRequest)


def tiny_graph():
    """One access switch, two servers, one transport switch, chain topology
    ac -> s0 -> s1 -> tr plus a shortcut ac -> s1."""
    return DataCenterGraph(
        access_switches=("ac0",),
        transport_switches=("tr0",),
        servers=(
            Server("s0", cpu_capacity=1000.0, static_power=10.0, proc_power=5.0),
            Server("s1", cpu_capacity=2000.0, static_power=4.0, proc_power=2.0),
        ),
        links=(
            Link("l0", "ac0", "s0", 500.0),
            Link("l1", "s0", "s1", 500.0),
            Link("l2", "s1", "tr0", 500.0),
            Link("l3", "ac0", "s1", 500.0),
        ),
    )


def tiny_instance(alpha=0.5, max_delay=10.0, enforce_distinct=True):
    graph = tiny_graph()
    sfc = SfcRequest(
        user_id="u0",
        vnf_cpu=(100.0,),
        segment_bandwidth=(50.0, 50.0),
        source="ac0",
        destination="tr0",
        max_delay=max_delay,
        server_unit_price={"s0": 0.5, "s1": 0.5},
        link_unit_price={"l0": 0.2, "l1": 0.2, "l2": 0.2, "l3": 0.2},
    )
    return NfvInstance(graph=graph, sfcs=(sfc,), alpha=alpha,
                       enforce_distinct_servers=enforce_distinct)


@pytest.fixture
def instance1():
    return tiny_instance()


def manual_solution(instance, server_for_vnf, paths):
    """Build a binary solution by hand: server_for_vnf maps user -> list of
    server ids, paths maps user -> list (per segment) of lists of arc ids
    each carrying the full segment bandwidth."""
    sol = PlacementSolution.zeros(instance)
    graph = instance.graph
    arc_by_id = {a.id: a for a in graph.arcs}
    for sfc in instance.sfcs:
        u = sfc.user_id
        for j, sid in enumerate(server_for_vnf[u]):
            sol.x[u][j, graph.server_index(sid)] = 1.0
        for j, arc_ids in enumerate(paths[u]):
            for aid in arc_ids:
                sol.y[u][j, arc_by_id[aid].index] += sfc.segment_bandwidth[j]
    beta = np.zeros(len(graph.servers))
    for u in instance.users:
        beta = np.maximum(beta, sol.x[u].max(axis=0))
    sol.beta = beta
    sol.binary_flag = True
    return sol
