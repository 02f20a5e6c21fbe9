"""Deterministic simulation of the smart-contract allocation workflow.

One run executes the five contract steps: the provider advertises resources
and prices, each user submits its chain request, the chosen solver allocates,
per-user results and costs are announced, and users pay.  Miners verify every
announcement against the published prices and a full feasibility recheck,
bundle the transactions into one block, and a winner is drawn with
probability proportional to its compute demand.  Hashes are opaque
sequence-derived digests: the protocol logic is the subject here, not
cryptography, and determinism keeps runs reproducible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace

import numpy as np

from .ara import ara_solve
from .hura import hura_solve, restrict_instance, restrict_solution
from .mining import MiningTask, RewardParams, orphan_probability, reward
from .model import (DomainError, NfvInstance, PlacementSolution, check_feasibility,
                    compute_delay, per_user_cost)

INP_INFORMATION = "InpInformation"
RA_REQUEST = "RaRequest"
RUN_ALLOCATION = "RunAllocation"
PAYMENT = "Payment"

# verification rules, numbered as documented: 1 delay budget met, 2 announced
# cost recomputes from unit prices, 3 allocation output is feasible, 4 payment
# equals the announced cost
RULE_QOS = 1
RULE_COST = 2
RULE_FEASIBLE = 3
RULE_PAYMENT = 4

FAULT_KINDS = ("cost", "capacity", "delay", "payment")


@dataclass
class ContractEvent:
    kind: str
    issuer: str
    sequence: int
    payload: dict

    def digest(self) -> str:
        body = json.dumps({"kind": self.kind, "issuer": self.issuer,
                           "sequence": self.sequence, "payload": self.payload},
                          sort_keys=True)
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def to_json(self) -> str:
        return json.dumps({"sequence": self.sequence, "kind": self.kind,
                           "issuer": self.issuer, "payload": self.payload},
                          sort_keys=True)


@dataclass
class Block:
    transactions: list
    miner_id: str
    requested_reward: float
    prev_hash: str
    orphaned: bool            # sampled propagation-loss flag, informational


@dataclass
class Verdict:
    accept: bool
    reasons: list             # (rule number, message) for each failed rule


@dataclass
class WorkflowReport:
    events: list
    block: Block | None
    winner: str | None
    reward_paid: float
    payments: dict            # user -> amount
    solution: PlacementSolution | None
    accepted_users: list
    solver: str
    seed: int

    def event_log_jsonl(self) -> str:
        return "\n".join(ev.to_json() for ev in self.events) + "\n"

    def ledger_csv(self) -> str:
        lines = ["entry,party,amount"]
        for user in sorted(self.payments):
            lines.append(f"payment,{user},{self.payments[user]:.12g}")
        if self.winner is not None:
            lines.append(f"mining_reward,{self.winner},{self.reward_paid:.12g}")
        return "\n".join(lines) + "\n"


def select_winner(tasks: list[MiningTask], rng: np.random.Generator) -> str:
    """One categorical draw: miner i wins with probability proportional to
    its compute demand."""
    demands = np.array([t.demand for t in tasks])
    probs = demands / demands.sum()
    idx = int(rng.choice(len(tasks), p=probs))
    return tasks[idx].miner_id


def verify_transaction(ev: ContractEvent, instance: NfvInstance,
                       sol: PlacementSolution) -> Verdict:
    """Miner-side check of an allocation or payment announcement.

    Everything is recomputed from the instance and the solution; the payload
    is never trusted for derived quantities.
    """
    reasons: list = []
    if ev.kind not in (RUN_ALLOCATION, PAYMENT):
        return Verdict(False, [(0, f"unverifiable event kind {ev.kind}")])
    payload = ev.payload
    user = payload.get("user")
    if user is None or "cost" not in payload:
        return Verdict(False, [(0, "malformed payload: missing user or cost")])
    try:
        sfc = instance.sfc(user)
    except DomainError:
        return Verdict(False, [(0, f"malformed payload: unknown user {user}")])

    # rule 1: the chain's delay budget is met
    delay = compute_delay(instance, sol, user)
    if delay > sfc.max_delay + 1e-9:
        reasons.append((RULE_QOS, f"delay {delay:.6g}s exceeds budget "
                                  f"{sfc.max_delay:.6g}s"))
    # rule 2: the announced cost reproduces from the unit prices (the
    # recomputation is exact arithmetic on the same data, so the margin is
    # pure float noise)
    recomputed = per_user_cost(instance, sol, user)
    announced = float(payload["cost"])
    if abs(recomputed - announced) > 1e-9 * max(1.0, abs(recomputed)):
        reasons.append((RULE_COST, f"cost mismatch: announced {announced:.12g}, "
                                   f"recomputed {recomputed:.12g}"))
    # rule 3: the full allocation passes the feasibility recheck
    violations = check_feasibility(instance, sol)
    if violations:
        broken = sorted({v.constraint for v in violations})
        reasons.append((RULE_FEASIBLE,
                        f"allocation infeasible: {', '.join(broken)} "
                        f"({len(violations)} violations)"))
    # rule 4: payment equals the announced cost
    if ev.kind == PAYMENT:
        paid = float(payload.get("amount", np.nan))
        if not abs(paid - announced) <= 1e-9 * max(1.0, abs(announced)):
            reasons.append((RULE_PAYMENT, f"payment {paid:.12g} differs from "
                                          f"announced cost {announced:.12g}"))
    return Verdict(not reasons, reasons)


def verify_block(block: Block, cap: float) -> Verdict:
    """Block-level rules: the requested reward respects the protocol cap and
    every bundled transaction was verified before inclusion.  (Nonce
    correctness is modeled by construction, not by real hashing.)"""
    reasons = []
    if block.requested_reward > cap + 1e-12:
        reasons.append((1, f"requested reward {block.requested_reward:.12g} "
                           f"exceeds cap {cap:.12g}"))
    for tx in block.transactions:
        if not tx.get("verified", False):
            reasons.append((2, f"transaction {tx['sequence']} not verified"))
    return Verdict(not reasons, reasons)


def run_workflow(instance: NfvInstance, mining: list[MiningTask], solver: str,
                 rp: RewardParams | None = None, seed: int = 0) -> WorkflowReport:
    """Execute the allocation workflow end to end with the chosen solver
    ("ara" or "hura") and a seeded miner draw.  Fixed seed, fixed output."""
    rp = rp or RewardParams()
    if solver not in ("ara", "hura"):
        raise DomainError(f"workflow solver must be 'ara' or 'hura', got {solver!r}")
    rng = np.random.default_rng(seed)
    events: list = []

    def emit(kind, issuer, payload):
        events.append(ContractEvent(kind, issuer, len(events), payload))
        return events[-1]

    emit(INP_INFORMATION, "inp", {
        "servers": {s.id: {"cpu_capacity": s.cpu_capacity,
                           "static_power": s.static_power,
                           "proc_power": s.proc_power}
                    for s in instance.graph.servers},
        "links": {l.id: {"src": l.src, "dst": l.dst, "bandwidth": l.bandwidth}
                  for l in instance.graph.links},
        "unit_prices": {s.user_id: {"servers": dict(sorted(s.server_unit_price.items())),
                                    "links": dict(sorted(s.link_unit_price.items()))}
                        for s in instance.sfcs},
    })
    for sfc in instance.sfcs:
        emit(RA_REQUEST, sfc.user_id, {
            "user": sfc.user_id,
            "vnf_cpu": list(sfc.vnf_cpu),
            "segment_bandwidth": list(sfc.segment_bandwidth),
            "source": sfc.source,
            "destination": sfc.destination,
            "max_delay": sfc.max_delay,
        })

    if not instance.sfcs:
        solution = PlacementSolution.zeros(instance, binary_flag=True)
        accepted: list = []
    elif solver == "ara":
        res = ara_solve(instance)
        if res.status != "optimal":
            raise WorkflowAborted(f"allocation failed at step 3: {res.status}")
        solution, accepted = res.solution, list(instance.users)
    else:
        res = hura_solve(instance)
        if not res.accepted and instance.sfcs:
            raise WorkflowAborted("allocation failed at step 3: every chain rejected")
        solution, accepted = res.solution, list(res.accepted)

    check_inst = restrict_instance(instance, accepted)
    check_sol = restrict_solution(instance, solution, accepted)

    verified: list = []
    payments: dict = {}
    for user in accepted:
        cost = per_user_cost(instance, solution, user)
        servers = [instance.graph.servers[int(k)].id
                   for k in np.argmax(solution.x[user], axis=1)]
        ev = emit(RUN_ALLOCATION, "inp", {"user": user, "cost": cost,
                                          "servers": servers})
        verdict = verify_transaction(ev, check_inst, check_sol)
        verified.append({"sequence": ev.sequence, "digest": ev.digest(),
                         "verified": verdict.accept})
        pay = emit(PAYMENT, user, {"user": user, "cost": cost, "amount": cost})
        pay_verdict = verify_transaction(pay, check_inst, check_sol)
        verified.append({"sequence": pay.sequence, "digest": pay.digest(),
                         "verified": pay_verdict.accept})
        payments[user] = cost

    block = None
    winner = None
    reward_paid = 0.0
    if mining:
        winner = select_winner(mining, rng)
        task = next(t for t in mining if t.miner_id == winner)
        block_rp = replace(rp, n_trans=len(verified))
        reward_paid = reward(task, mining, block_rp)
        orphaned = bool(rng.random() < orphan_probability(block_rp))
        block = Block(transactions=verified, miner_id=winner,
                      requested_reward=reward_paid,
                      prev_hash=hashlib.sha256(b"genesis").hexdigest()[:16],
                      orphaned=orphaned)

    return WorkflowReport(events=events, block=block, winner=winner,
                          reward_paid=reward_paid, payments=payments,
                          solution=solution, accepted_users=accepted,
                          solver=solver, seed=seed)


class WorkflowAborted(RuntimeError):
    """The allocation step failed; the workflow cannot continue."""


# ---- fault catalog ---------------------------------------------------------
# Four documented tamper classes used to exercise the verification rules.
# Each returns (event, instance, solution) triples ready for
# verify_transaction and names the rule expected to reject it.

def tamper_cost(ev: ContractEvent) -> ContractEvent:
    """Inflate the announced cost by one unit (rule 2)."""
    payload = dict(ev.payload)
    payload["cost"] = float(payload["cost"]) + 1.0
    if "amount" in payload:
        payload["amount"] = payload["cost"]       # keep rule 4 silent
    return ContractEvent(ev.kind, ev.issuer, ev.sequence, payload)


def tamper_payment(ev: ContractEvent) -> ContractEvent:
    """Underpay by one unit relative to the announced cost (rule 4)."""
    payload = dict(ev.payload)
    payload["amount"] = float(payload["cost"]) - 1.0
    return ContractEvent(ev.kind, ev.issuer, ev.sequence, payload)


def tamper_capacity(instance: NfvInstance, sol: PlacementSolution,
                    user: str) -> PlacementSolution:
    """Silently pile every function of every chain onto the smallest server
    so its capacity bound breaks (rule 3)."""
    bad = sol.copy()
    target = int(np.argmin([s.cpu_capacity for s in instance.graph.servers]))
    for u in bad.x:
        bad.x[u][:, :] = 0.0
        bad.x[u][:, target] = 1.0
    bad.beta[target] = 1.0
    return bad


def tamper_delay(instance: NfvInstance, sol: PlacementSolution,
                 user: str) -> PlacementSolution:
    """Inflate one chain's allocated bandwidth far beyond its budget so the
    end-to-end delay breaks (rule 1)."""
    bad = sol.copy()
    sfc = instance.sfc(user)
    arc_bw = np.array([a.bandwidth for a in instance.graph.arcs])
    # push enough traffic onto the first arc to blow the delay budget
    bad.y[user][0, 0] += 2.0 * sfc.max_delay * arc_bw[0]
    return bad
