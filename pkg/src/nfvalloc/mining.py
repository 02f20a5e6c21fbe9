"""Mining-offloading half of the toolkit: channel rate, energy, block
orphaning and reward models, and the weight-splitting LP that offloads each
miner's workload across its participants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lp import EQ, LE, LpProblem, solve_lp
from .model import DomainError


@dataclass(frozen=True)
class Participant:
    """A device lending CPU cycles to a miner."""

    id: str
    cpu_capacity: float     # cycles/s
    proc_power: float       # W while processing
    unit_price: float       # price per CPU cycle
    channel_gain: float     # dimensionless path gain from the miner
    noise: float            # W at the receiver

    def __post_init__(self):
        if self.cpu_capacity <= 0:
            raise DomainError(f"participant {self.id}: cpu_capacity must be > 0")
        if min(self.proc_power, self.unit_price, self.channel_gain, self.noise) < 0:
            raise DomainError(f"participant {self.id}: negative parameter")


@dataclass
class MiningTask:
    """One miner's workload: size in bits, cycles per bit, transmit power
    toward each participant, and a completion deadline (defaults to one
    block interval)."""

    miner_id: str
    size_bits: float
    cycles_per_bit: float
    tx_power: dict                      # participant id -> W
    participants: tuple[Participant, ...]
    max_delay: float = 600.0

    def __post_init__(self):
        self.participants = tuple(self.participants)
        if self.size_bits <= 0 or self.cycles_per_bit <= 0:
            raise DomainError(f"task {self.miner_id}: size and cycles must be > 0")
        if not self.participants:
            raise DomainError(f"task {self.miner_id}: participants must be nonempty")
        ids = [p.id for p in self.participants]
        if len(set(ids)) != len(ids):
            raise DomainError(f"task {self.miner_id}: duplicate participant ids")
        if set(self.tx_power) != set(ids):
            raise DomainError(f"task {self.miner_id}: tx_power must cover participants")

    @property
    def demand(self) -> float:
        return self.size_bits * self.cycles_per_bit

    def to_dict(self) -> dict:
        return {
            "miner_id": self.miner_id,
            "size_bits": self.size_bits,
            "cycles_per_bit": self.cycles_per_bit,
            "max_delay": self.max_delay,
            "tx_power": dict(sorted(self.tx_power.items())),
            "participants": [
                {"id": p.id, "cpu_capacity": p.cpu_capacity, "proc_power": p.proc_power,
                 "unit_price": p.unit_price, "channel_gain": p.channel_gain,
                 "noise": p.noise}
                for p in self.participants
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MiningTask":
        return cls(miner_id=d["miner_id"], size_bits=d["size_bits"],
                   cycles_per_bit=d["cycles_per_bit"], max_delay=d["max_delay"],
                   tx_power=dict(d["tx_power"]),
                   participants=tuple(Participant(**p) for p in d["participants"]))


@dataclass(frozen=True)
class RewardParams:
    """Block reward model; defaults follow the standard experiment setup
    (constant reward 12.5, 0.01 per transaction, 5 transactions per block,
    one block every 600 s, latency parameter 0.01)."""

    r_const: float = 12.5
    r_trans: float = 0.01
    n_trans: int = 5
    lam: float = 1.0 / 600.0
    z: float = 0.01

    def __post_init__(self):
        if min(self.r_const, self.r_trans, self.n_trans, self.z) < 0:
            raise DomainError("reward parameters must be >= 0")
        if self.lam <= 0:
            raise DomainError("block rate must be > 0")


def data_rate(tx_power: float, gain: float, noise: float) -> float:
    """Channel rate log2(1 + p*h/sigma) in bit/s."""
    if noise <= 0:
        raise DomainError("noise must be > 0")
    return math.log2(1.0 + tx_power * gain / noise)


def _rates(task: MiningTask) -> np.ndarray:
    return np.array([data_rate(task.tx_power[p.id], p.channel_gain, p.noise)
                     for p in task.participants])


def mining_energy(tasks: list[MiningTask], f: dict) -> float:
    """Total energy: transmit power times transfer time plus device power
    times processing time, summed over every (miner, participant) share."""
    total = 0.0
    for task in tasks:
        rates = _rates(task)
        weights = np.asarray(f[task.miner_id], dtype=float)
        if weights.shape != (len(task.participants),):
            raise DomainError(f"task {task.miner_id}: weight vector has wrong length")
        for k, p in enumerate(task.participants):
            w = weights[k]
            if w == 0.0:
                continue
            if rates[k] <= 0.0:
                raise DomainError(
                    f"task {task.miner_id}: participant {p.id} has zero rate but "
                    f"positive weight")
            total += task.tx_power[p.id] * (w * task.size_bits / rates[k])
            total += p.proc_power * (w * task.size_bits * task.cycles_per_bit
                                     / p.cpu_capacity)
    return total


def orphan_probability(rp: RewardParams) -> float:
    """Chance a mined block is discarded for propagating too slowly:
    1 - exp(-rate * latency * transactions)."""
    return -math.expm1(-rp.lam * rp.z * rp.n_trans)


def reward(task: MiningTask, all_tasks: list[MiningTask], rp: RewardParams) -> float:
    """Expected block reward for one miner: its compute share times the block
    reward, discounted by the orphaning survival probability."""
    if not all_tasks:
        raise DomainError("reward needs at least one task")
    total_demand = sum(t.demand for t in all_tasks)
    if total_demand <= 0:
        raise DomainError("total demand must be > 0")
    share = task.demand / total_demand
    return share * (rp.r_const + rp.n_trans * rp.r_trans) \
        * math.exp(-rp.lam * rp.z * rp.n_trans)


@dataclass
class OffloadSolution:
    """Optimal weight split.  ``f`` maps miner id -> weights over that
    task's participant order; the reward total enters the objective as a
    constant."""

    status: str                       # optimal | infeasible
    f: dict = field(default_factory=dict)
    objective_value: float | None = None
    energy: float | None = None
    cost: float | None = None
    rewards: dict = field(default_factory=dict)


def offload_csv(tasks: list[MiningTask], sol: OffloadSolution) -> str:
    """One row per (miner, participant): weight, energy share, cost share."""
    lines = ["miner,participant,f,energy_share,cost_share"]
    for task in tasks:
        rates = _rates(task)
        for k, p in enumerate(task.participants):
            w = float(sol.f[task.miner_id][k])
            e = 0.0
            if w > 0.0:
                e = task.tx_power[p.id] * w * task.size_bits / rates[k] \
                    + p.proc_power * w * task.demand / p.cpu_capacity
            c = p.unit_price * w * task.demand
            lines.append(f"{task.miner_id},{p.id},{w:.12g},{e:.12g},{c:.12g}")
    return "\n".join(lines) + "\n"


def mo_solve(tasks: list[MiningTask], gamma: float,
             rp: RewardParams | None = None) -> OffloadSolution:
    """Weight-splitting LP.

    Minimizes gamma-weighted energy plus (1 - gamma)-weighted payment minus
    the (constant) rewards, subject to full coverage per miner, shared
    per-participant capacity, and a per-(miner, participant) completion
    deadline.  Participants with zero channel rate are pinned to weight 0.
    """
    if not 0.0 <= gamma <= 1.0:
        raise DomainError("gamma must lie in [0, 1]")
    rp = rp or RewardParams()
    if not tasks:
        return OffloadSolution("optimal", {}, 0.0, 0.0, 0.0, {})

    index = {}              # (miner, k) -> flat var
    pos = 0
    for task in tasks:
        for k in range(len(task.participants)):
            index[(task.miner_id, k)] = pos
            pos += 1
    n = pos

    # one capacity row per distinct participant id; parameters must agree
    by_id: dict = {}
    for task in tasks:
        for p in task.participants:
            if p.id in by_id and by_id[p.id] != p:
                raise DomainError(f"participant {p.id} redeclared with different data")
            by_id[p.id] = p

    c = np.zeros(n)
    lower = np.zeros(n)
    upper = np.ones(n)
    rows, rels, rhs = [], [], []

    rewards = {t.miner_id: reward(t, tasks, rp) for t in tasks}
    offset = -(1.0 - gamma) * sum(rewards.values())

    for task in tasks:
        rates = _rates(task)
        cover = np.zeros(n)
        for k, p in enumerate(task.participants):
            j = index[(task.miner_id, k)]
            cover[j] = 1.0
            if rates[k] <= 0.0:
                upper[j] = 0.0
                continue
            tx_time = task.size_bits / rates[k]
            proc_time = task.demand / p.cpu_capacity
            c[j] = gamma * (task.tx_power[p.id] * tx_time + p.proc_power * proc_time) \
                + (1.0 - gamma) * p.unit_price * task.demand
            row = np.zeros(n)
            row[j] = tx_time + proc_time
            rows.append(row)
            rels.append(LE)
            rhs.append(task.max_delay)
        rows.append(cover)
        rels.append(EQ)
        rhs.append(1.0)

    for pid, p in sorted(by_id.items()):
        row = np.zeros(n)
        hit = False
        for task in tasks:
            for k, q in enumerate(task.participants):
                if q.id == pid:
                    row[index[(task.miner_id, k)]] = task.demand
                    hit = True
        if hit:
            rows.append(row)
            rels.append(LE)
            rhs.append(p.cpu_capacity)

    problem = LpProblem(c=c, a=np.vstack(rows), relations=np.array(rels),
                        rhs=np.array(rhs), lower=lower, upper=upper, offset=offset)
    lp_sol = solve_lp(problem)
    if lp_sol.status != "optimal":
        return OffloadSolution("infeasible")

    f = {}
    for task in tasks:
        w = np.array([max(0.0, lp_sol.x[index[(task.miner_id, k)]])
                      for k in range(len(task.participants))])
        f[task.miner_id] = w
    energy = mining_energy(tasks, f)
    cost = sum(p.unit_price * f[t.miner_id][k] * t.demand
               for t in tasks for k, p in enumerate(t.participants))
    return OffloadSolution("optimal", f, float(lp_sol.objective_value),
                           energy, float(cost), rewards)
