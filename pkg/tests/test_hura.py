import itertools

import numpy as np
import pytest

from conftest import tiny_instance
from nfvalloc.hura import (AssignmentMatrix, HuraState, NoAssignmentError,
                           StructuralError, build_placement_matrix, decision_log_csv,
                           hungarian, hura_solve, restrict_instance,
                           restrict_solution, solve_routing)
from nfvalloc.model import (DataCenterGraph, Link, NfvInstance, Server, SfcRequest,
                            check_feasibility, compute_delay)
from nfvalloc.scenarios import NfvScenarioParams, generate_nfv_scenario


def brute_force_assignment(a: np.ndarray) -> float:
    n = a.shape[0]
    return min(sum(a[i, p[i]] for i in range(n))
               for p in itertools.permutations(range(n)))


class TestHungarian:
    def test_zero_matrix(self):
        assign, total = hungarian(AssignmentMatrix(np.zeros((3, 3)), big_value=1e9))
        assert total == 0.0
        assert sorted(assign) == [0, 1, 2]

    def test_two_by_two(self):
        a = AssignmentMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]), big_value=1e9)
        assign, total = hungarian(a)
        assert list(assign) == [0, 1]
        assert total == 3.0 - 1.0  # diagonal, total 2 (brute force over both perms)

    def test_matches_brute_force_small(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            n = int(rng.integers(2, 7))
            a = rng.integers(0, 50, size=(n, n)).astype(float)
            assign, total = hungarian(AssignmentMatrix(a, big_value=1e12))
            assert len(set(assign.tolist())) == n
            assert total == brute_force_assignment(a)

    def test_all_big_row_rejected(self):
        a = np.array([[1e9, 1e9], [1.0, 2.0]])
        with pytest.raises(NoAssignmentError):
            hungarian(AssignmentMatrix(a, big_value=1e9))

    def test_nonsquare_rejected(self):
        with pytest.raises(Exception):
            AssignmentMatrix(np.zeros((2, 3)), big_value=1e9)


class TestPlacementMatrix:
    def test_inactive_server_charges_static_power(self):
        inst = tiny_instance()
        state = HuraState.fresh(inst)
        m = build_placement_matrix(inst.sfcs[0], state, inst, "objective")
        s0 = inst.graph.servers[0]
        sfc = inst.sfcs[0]
        want = inst.alpha * (s0.static_power
                             + s0.proc_power * sfc.vnf_cpu[0] / s0.cpu_capacity) \
            + (1 - inst.alpha) * sfc.server_unit_price["s0"] * sfc.vnf_cpu[0]
        assert m.a[0, 0] == pytest.approx(want)

    def test_active_server_skips_static_power(self):
        inst = tiny_instance()
        state = HuraState.fresh(inst)
        state.beta[0] = 1.0
        m = build_placement_matrix(inst.sfcs[0], state, inst, "objective")
        s0 = inst.graph.servers[0]
        sfc = inst.sfcs[0]
        want = inst.alpha * s0.proc_power * sfc.vnf_cpu[0] / s0.cpu_capacity \
            + (1 - inst.alpha) * sfc.server_unit_price["s0"] * sfc.vnf_cpu[0]
        assert m.a[0, 0] == pytest.approx(want)

    def test_insufficient_capacity_marked_big(self):
        inst = tiny_instance()
        state = HuraState.fresh(inst)
        state.committed_cpu[0] = inst.graph.servers[0].cpu_capacity - 1.0
        m = build_placement_matrix(inst.sfcs[0], state, inst, "objective")
        assert m.a[0, 0] >= m.big_value

    def test_delay_mode_entries(self):
        inst = tiny_instance()
        m = build_placement_matrix(inst.sfcs[0], HuraState.fresh(inst), inst, "delay")
        sfc = inst.sfcs[0]
        for k, s in enumerate(inst.graph.servers):
            assert m.a[0, k] == pytest.approx(sfc.vnf_cpu[0] / s.cpu_capacity)

    def test_running_objective_added_to_entries(self):
        inst = tiny_instance()
        state = HuraState.fresh(inst)
        m0 = build_placement_matrix(inst.sfcs[0], state, inst, "objective")
        state.objective = 42.0
        m1 = build_placement_matrix(inst.sfcs[0], state, inst, "objective")
        assert m1.a[0, 0] - m0.a[0, 0] == pytest.approx(42.0)

    def test_more_functions_than_servers(self):
        inst = tiny_instance()
        sfc = SfcRequest("big", (1.0, 1.0, 1.0), (1.0,) * 4, "ac0", "tr0", 1.0,
                         inst.sfcs[0].server_unit_price, inst.sfcs[0].link_unit_price)
        with pytest.raises(StructuralError):
            build_placement_matrix(sfc, HuraState.fresh(inst), inst, "objective")


class TestRouting:
    def test_direct_arc_carries_segment_bandwidth(self):
        inst = tiny_instance()
        n = len(inst.graph.servers)
        x = {"u0": np.zeros((1, n))}
        x["u0"][0, 1] = 1.0       # s1: ac0 -l3-> s1 -l2-> tr0 both direct
        y, cost, status = solve_routing(inst, x, ["u0"])
        assert status == "optimal"
        sfc = inst.sfcs[0]
        arc_l3 = next(a for a in inst.graph.arcs if a.id == "l3:fwd")
        assert y["u0"][0, arc_l3.index] == pytest.approx(sfc.segment_bandwidth[0])
        want = (1 - inst.alpha) * (sfc.link_unit_price["l3"] * sfc.segment_bandwidth[0]
                                   + sfc.link_unit_price["l2"] * sfc.segment_bandwidth[1])
        assert cost == pytest.approx(want)

    def test_cheaper_parallel_arc_wins(self):
        graph = DataCenterGraph(
            ("ac0",), ("tr0",),
            (Server("s0", 1000.0, 1.0, 1.0),),
            (Link("cheap", "ac0", "s0", 1e6), Link("dear", "ac0", "s0", 1e6),
             Link("out", "s0", "tr0", 1e6)),
        )
        sfc = SfcRequest("u0", (10.0,), (100.0, 100.0), "ac0", "tr0", 1.0,
                         {"s0": 0.1},
                         {"cheap": 0.1, "dear": 5.0, "out": 0.1})
        inst = NfvInstance(graph=graph, sfcs=(sfc,), alpha=0.5)
        x = {"u0": np.ones((1, 1))}
        y, cost, status = solve_routing(inst, x, ["u0"])
        assert status == "optimal"
        cheap = next(a for a in graph.arcs if a.id == "cheap:fwd")
        dear = next(a for a in graph.arcs if a.id == "dear:fwd")
        assert y["u0"][0, cheap.index] == pytest.approx(100.0)
        assert y["u0"][0, dear.index] == pytest.approx(0.0)

    def test_delay_cap_below_processing_delay_infeasible(self):
        inst = tiny_instance(max_delay=0.05)   # s0 processing alone takes 0.1 s
        n = len(inst.graph.servers)
        x = {"u0": np.zeros((1, n))}
        x["u0"][0, 0] = 1.0
        y, cost, status = solve_routing(inst, x, ["u0"])
        assert status == "infeasible"


class TestHuraSolve:
    def test_matches_exact_on_unique_feasible_set(self):
        from nfvalloc.exact import solve_exact
        inst = tiny_instance()
        hu = hura_solve(inst)
        ex = solve_exact(inst)
        assert hu.accepted == ["u0"]
        assert hu.objective == pytest.approx(ex.objective, rel=1e-9)

    def test_tightest_delay_served_first(self):
        # two chains, reversed input order; the tight one must commit first
        inst = tiny_instance()
        base = inst.sfcs[0]
        loose = SfcRequest("loose", base.vnf_cpu, base.segment_bandwidth, base.source,
                           base.destination, 20.0, base.server_unit_price,
                           base.link_unit_price)
        tight = SfcRequest("tight", base.vnf_cpu, base.segment_bandwidth, base.source,
                           base.destination, 0.005, base.server_unit_price,
                           base.link_unit_price)
        inst2 = NfvInstance(graph=inst.graph, sfcs=(loose, tight), alpha=0.5)
        res = hura_solve(inst2)
        order = [entry[0] for entry in res.log]
        assert order.index("tight") < order.index("loose")

    def test_output_feasible_on_accepted_subset(self):
        for seed in range(8):
            p = NfvScenarioParams(n_servers=5, n_sfcs=3, n_access=1, n_transport=1,
                                  vnf_count_range=(1, 3), link_density=0.6, seed=seed)
            inst = generate_nfv_scenario(p)
            res = hura_solve(inst)
            sub_i = restrict_instance(inst, res.accepted)
            sub_s = restrict_solution(inst, res.solution, res.accepted)
            assert check_feasibility(sub_i, sub_s) == []
            assert res.solution.binary_flag

    def test_state_conservation(self):
        p = NfvScenarioParams(n_servers=5, n_sfcs=3, n_access=1, n_transport=1,
                              vnf_count_range=(1, 3), link_density=0.6, seed=3)
        inst = generate_nfv_scenario(p)
        res = hura_solve(inst)
        committed = np.zeros(len(inst.graph.servers))
        for u in res.accepted:
            committed += np.array(inst.sfc(u).vnf_cpu) @ res.solution.x[u]
        caps = np.array([s.cpu_capacity for s in inst.graph.servers])
        state = HuraState.fresh(inst)
        state.committed_cpu = committed
        assert np.allclose(state.remain_cpu + committed, caps, rtol=1e-12)

    def test_rejected_chain_reported_not_fatal(self):
        # second chain cannot fit: every server is too small for its demand
        graph = DataCenterGraph(
            ("ac0",), ("tr0",),
            (Server("s0", 1000.0, 1.0, 1.0), Server("s1", 1000.0, 1.0, 1.0)),
            (Link("l0", "ac0", "s0", 1e6), Link("l1", "s0", "tr0", 1e6),
             Link("l2", "ac0", "s1", 1e6), Link("l3", "s1", "tr0", 1e6)),
        )
        prices_s = {"s0": 0.5, "s1": 0.5}
        prices_l = {"l0": 0.1, "l1": 0.1, "l2": 0.1, "l3": 0.1}
        fits = SfcRequest("fits", (500.0,), (10.0, 10.0), "ac0", "tr0", 10.0,
                          prices_s, prices_l)
        huge = SfcRequest("huge", (5000.0,), (10.0, 10.0), "ac0", "tr0", 10.0,
                          prices_s, prices_l)
        inst = NfvInstance(graph=graph, sfcs=(fits, huge), alpha=0.5)
        res = hura_solve(inst)
        assert res.accepted == ["fits"]
        assert [u for u, _ in res.rejected] == ["huge"]

    def test_delay_retry_switches_to_fast_server(self):
        # cheap server is too slow for the budget; the retry pass must pick
        # the fast expensive one
        graph = DataCenterGraph(
            ("ac0",), ("tr0",),
            (Server("slow", 1000.0, 1.0, 1.0), Server("fast", 100000.0, 9.0, 4.0)),
            (Link("l0", "ac0", "slow", 1e6), Link("l1", "slow", "tr0", 1e6),
             Link("l2", "ac0", "fast", 1e6), Link("l3", "fast", "tr0", 1e6)),
        )
        sfc = SfcRequest("u0", (800.0,), (10.0, 10.0), "ac0", "tr0", 0.1,
                         {"slow": 0.01, "fast": 0.9},
                         {"l0": 0.1, "l1": 0.1, "l2": 0.1, "l3": 0.1})
        inst = NfvInstance(graph=graph, sfcs=(sfc,), alpha=0.5)
        res = hura_solve(inst)
        assert res.accepted == ["u0"]
        mode = next(entry[1] for entry in res.log if entry[4])
        assert mode == "delay"
        assert compute_delay(inst, res.solution, "u0") <= 0.1 + 1e-9

    def test_decision_log_csv_shape(self):
        inst = tiny_instance()
        res = hura_solve(inst)
        lines = decision_log_csv(res).splitlines()
        assert lines[0] == "user,mode,servers,routing_cost,accepted"
        assert len(lines) == 1 + len(res.log)

    def test_extra_server_never_hurts_on_corpus(self):
        # seeded corpus check: one more (fully wired) server never raises the
        # objective when the accepted set stays the same
        for seed in range(20):
            p = NfvScenarioParams(n_servers=5, n_sfcs=3, n_access=1, n_transport=1,
                                  vnf_count_range=(1, 3), link_density=0.6, seed=seed)
            inst = generate_nfv_scenario(p)
            base = hura_solve(inst)
            if base.rejected:
                continue
            rng = np.random.default_rng(seed + 10_000)
            extra = Server("s_extra", float(rng.uniform(1e6, 1e7)),
                           float(rng.uniform(1, 10)), float(rng.uniform(1, 5)))
            links = list(inst.graph.links)
            for node in inst.graph.nodes:
                links.append(Link(f"lx_{node}", node, "s_extra",
                                  float(rng.uniform(1e8, 5e8))))
            graph2 = DataCenterGraph(inst.graph.access_switches,
                                     inst.graph.transport_switches,
                                     inst.graph.servers + (extra,), tuple(links))
            sfcs2 = []
            for s in inst.sfcs:
                sp = dict(s.server_unit_price)
                sp["s_extra"] = float(rng.uniform(0.1, 1.0))
                lp_ = dict(s.link_unit_price)
                for l in links:
                    if l.id.startswith("lx_"):
                        lp_.setdefault(l.id, float(rng.uniform(0.1, 1.0)))
                sfcs2.append(SfcRequest(s.user_id, s.vnf_cpu, s.segment_bandwidth,
                                        s.source, s.destination, s.max_delay,
                                        sp, lp_))
            inst2 = NfvInstance(graph=graph2, sfcs=tuple(sfcs2), alpha=inst.alpha)
            ext = hura_solve(inst2)
            if ext.rejected or set(ext.accepted) != set(base.accepted):
                continue
            assert ext.objective <= base.objective * (1 + 1e-9), seed
