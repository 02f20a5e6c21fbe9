"""FastAPI facade over the solver toolkit.

The service is stateless: every request carries its full problem and the
response carries the full result, so replicas can run side by side.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..ara import ara_solve
from ..chain import WorkflowAborted, run_workflow
from ..exact import ExactLimits, solve_exact
from ..hura import hura_solve, restrict_instance, restrict_solution
from ..mining import MiningTask, RewardParams, mo_solve, offload_csv
from ..model import (DomainError, NfvInstance, check_feasibility, compute_cost,
                     compute_delay, compute_energy, objective_f)
from ..scenarios import (MiningScenarioParams, NfvScenarioParams,
                         generate_mining_scenario, generate_nfv_scenario)
from ..sweep import run_sweep
from . import schemas


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(exc))


def _parse_instance(data: dict) -> NfvInstance:
    try:
        return NfvInstance.from_dict(data)
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise _bad_request(exc)


def _parse_tasks(items: list) -> list[MiningTask]:
    try:
        return [MiningTask.from_dict(d) for d in items]
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise _bad_request(exc)


def _summary(instance, solution, users, rejected=(), optimal=None) -> schemas.SolveSummary:
    if solution is None:
        return schemas.SolveSummary(rejected=list(rejected), optimal=optimal)
    sub_i = restrict_instance(instance, users)
    sub_s = restrict_solution(instance, solution, users)
    return schemas.SolveSummary(
        objective=objective_f(instance, solution),
        energy=compute_energy(instance, solution),
        cost=compute_cost(instance, solution),
        delays={u: compute_delay(instance, solution, u) for u in users},
        active_servers=int(np.sum(solution.beta > 0.5)),
        feasible=not check_feasibility(sub_i, sub_s),
        accepted_users=list(users),
        rejected=list(rejected),
        optimal=optimal,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="nfvalloc", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/nfv/generate", response_model=schemas.NfvGenerateResponse)
    def nfv_generate(req: schemas.NfvGenerateRequest):
        try:
            params = NfvScenarioParams(**{**req.params, "seed": req.seed})
            instance = generate_nfv_scenario(params)
        except (DomainError, TypeError) as exc:
            raise _bad_request(exc)
        return schemas.NfvGenerateResponse(instance=instance.to_dict())

    @app.post("/nfv/solve", response_model=schemas.SolveResponse)
    def nfv_solve(req: schemas.SolveRequest):
        instance = _parse_instance(req.instance)
        if req.solver == "exact":
            res = solve_exact(instance, ExactLimits(time_cap=req.timeout_s))
            if res.solution is None:
                return schemas.SolveResponse(status=res.status,
                                             summary=_summary(instance, None, []))
            return schemas.SolveResponse(
                status=res.status,
                solution=res.solution.to_dict(instance),
                summary=_summary(instance, res.solution, list(instance.users),
                                 optimal=res.optimal))
        if req.solver == "ara":
            res = ara_solve(instance)
            if res.status != "optimal":
                return schemas.SolveResponse(status=res.status,
                                             summary=_summary(instance, None, []))
            return schemas.SolveResponse(
                status="optimal",
                solution=res.solution.to_dict(instance),
                summary=_summary(instance, res.solution, list(instance.users)))
        if req.solver == "hura":
            res = hura_solve(instance)
            if instance.sfcs and not res.accepted:
                return schemas.SolveResponse(
                    status="infeasible",
                    summary=_summary(instance, None, [], rejected=res.rejected))
            return schemas.SolveResponse(
                status=res.status,
                solution=res.solution.to_dict(instance),
                summary=_summary(instance, res.solution, res.accepted,
                                 rejected=res.rejected))
        raise _bad_request(DomainError(f"unknown solver {req.solver!r}"))

    @app.post("/mining/generate", response_model=schemas.MiningGenerateResponse)
    def mining_generate(req: schemas.MiningGenerateRequest):
        try:
            params = MiningScenarioParams(**{**req.params, "seed": req.seed})
            tasks = generate_mining_scenario(params)
        except (DomainError, TypeError) as exc:
            raise _bad_request(exc)
        return schemas.MiningGenerateResponse(
            tasks=[t.to_dict() for t in tasks], gamma=params.gamma,
            reward=params.reward.__dict__)

    @app.post("/mining/solve", response_model=schemas.MineResponse)
    def mining_solve(req: schemas.MineRequest):
        tasks = _parse_tasks(req.tasks)
        try:
            rp = RewardParams(**req.reward)
            res = mo_solve(tasks, req.gamma, rp)
        except DomainError as exc:
            raise _bad_request(exc)
        if res.status != "optimal":
            return schemas.MineResponse(status=res.status)
        return schemas.MineResponse(
            status="optimal", objective=res.objective_value, energy=res.energy,
            cost=res.cost, f={m: [float(v) for v in w] for m, w in res.f.items()},
            rewards=res.rewards, csv=offload_csv(tasks, res))

    @app.post("/workflow/run", response_model=schemas.WorkflowResponse)
    def workflow_run(req: schemas.WorkflowRequest):
        instance = _parse_instance(req.instance)
        tasks = _parse_tasks(req.tasks)
        try:
            rp = RewardParams(**req.reward)
            report = run_workflow(instance, tasks, req.solver, rp, seed=req.seed)
        except DomainError as exc:
            raise _bad_request(exc)
        except WorkflowAborted as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return schemas.WorkflowResponse(
            events_jsonl=report.event_log_jsonl(),
            ledger_csv=report.ledger_csv(),
            winner=report.winner,
            reward_paid=report.reward_paid,
            payments=report.payments,
            accepted_users=report.accepted_users)

    @app.post("/sweep/run", response_model=schemas.SweepResponse)
    def sweep_run(req: schemas.SweepRequest):
        try:
            if req.kind == "nfv":
                base = NfvScenarioParams(**{**req.params, "seed": req.seed})
            elif req.kind == "mining":
                base = MiningScenarioParams(**{**req.params, "seed": req.seed})
            else:
                raise DomainError(f"unknown sweep kind {req.kind!r}")
            detail, agg = run_sweep(base, req.axis, req.values, req.solvers,
                                    req.snapshots, req.timeout_s, req.timing)
        except (DomainError, TypeError) as exc:
            raise _bad_request(exc)
        return schemas.SweepResponse(detail_csv=detail, aggregate_csv=agg)

    return app


app = create_app()
