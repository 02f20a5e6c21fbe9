"""Request/response models for the allocation service.

Scenario parameter records travel as plain dicts and are validated by the
core dataclasses, so the table defaults live in exactly one place.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class NfvGenerateRequest(BaseModel):
    params: dict = Field(default_factory=dict)   # NfvScenarioParams overrides
    seed: int = 0


class NfvGenerateResponse(BaseModel):
    instance: dict


class SolveRequest(BaseModel):
    instance: dict
    solver: str = "hura"                         # exact | ara | hura
    timeout_s: float | None = None


class SolveSummary(BaseModel):
    objective: float | None = None
    energy: float | None = None
    cost: float | None = None
    delays: dict = Field(default_factory=dict)
    active_servers: int | None = None
    feasible: bool = False
    accepted_users: list[str] = Field(default_factory=list)
    rejected: list = Field(default_factory=list)
    optimal: bool | None = None


class SolveResponse(BaseModel):
    status: str                                  # optimal | partial | infeasible | ...
    solution: dict | None = None
    summary: SolveSummary


class MiningGenerateRequest(BaseModel):
    params: dict = Field(default_factory=dict)   # MiningScenarioParams overrides
    seed: int = 0


class MiningGenerateResponse(BaseModel):
    tasks: list[dict]
    gamma: float
    reward: dict


class MineRequest(BaseModel):
    tasks: list[dict]
    gamma: float = 0.5
    reward: dict = Field(default_factory=dict)   # RewardParams overrides


class MineResponse(BaseModel):
    status: str
    objective: float | None = None
    energy: float | None = None
    cost: float | None = None
    f: dict = Field(default_factory=dict)
    rewards: dict = Field(default_factory=dict)
    csv: str | None = None


class WorkflowRequest(BaseModel):
    instance: dict
    tasks: list[dict] = Field(default_factory=list)
    solver: str = "hura"                         # ara | hura
    reward: dict = Field(default_factory=dict)
    seed: int = 0


class WorkflowResponse(BaseModel):
    events_jsonl: str
    ledger_csv: str
    winner: str | None
    reward_paid: float
    payments: dict
    accepted_users: list[str]


class SweepRequest(BaseModel):
    kind: str = "nfv"                            # nfv | mining
    params: dict = Field(default_factory=dict)
    axis: str = "n_servers"
    values: list
    solvers: list[str] | None = None
    snapshots: int = 10
    seed: int = 0
    timeout_s: float | None = None
    timing: bool = False


class SweepResponse(BaseModel):
    detail_csv: str
    aggregate_csv: str
