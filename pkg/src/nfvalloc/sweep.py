"""Parameter sweeps over seeded scenarios.

One detail row per (axis value, snapshot, solver) with the fixed header
``axis_value,seed,solver,objective,energy,cost,mean_delay,active_servers,
runtime_ms,feasible`` plus a mean-aggregated companion table.  Snapshots are
independent seeded scenarios; aggregation is a plain mean over a sorted key
set, so job order never matters.

Wall-clock timing is opt-in (``timing=True``): with it off the runtime
column is zero and identical invocations produce byte-identical files.
"""

from __future__ import annotations

import time
from dataclasses import fields, replace
from statistics import mean

import numpy as np

from .ara import ara_solve
from .exact import ExactLimits, solve_exact
from .hura import hura_solve, restrict_instance, restrict_solution
from .mining import mo_solve, _rates
from .model import DomainError, check_feasibility, compute_cost, compute_delay, \
    compute_energy, objective_f
from .scenarios import (MiningScenarioParams, generate_mining_scenario,
                        generate_nfv_scenario)

CSV_HEADER = "axis_value,seed,solver,objective,energy,cost,mean_delay,active_servers,runtime_ms,feasible"
AGG_HEADER = "axis_value,solver,snapshots,objective,energy,cost,mean_delay,active_servers,runtime_ms,feasible_rate"


def _with_axis(base, axis: str, value):
    """Set one axis field; a scalar assigned to a (lo, hi) range field pins
    the range to (value, value)."""
    if axis not in {f.name for f in fields(base)}:
        raise DomainError(f"{type(base).__name__} has no field {axis!r}")
    current = getattr(base, axis)
    if isinstance(current, tuple) and len(current) == 2 \
            and not isinstance(value, (tuple, list)):
        value = (value, value)
    elif isinstance(value, list):
        value = tuple(value)
    if isinstance(current, int) and not isinstance(current, bool) \
            and not isinstance(value, tuple):
        value = int(value)
    return replace(base, **{axis: value})


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _nfv_row(instance, solver: str, timeout_s: float | None):
    t0 = time.perf_counter()
    if solver == "exact":
        res = solve_exact(instance, ExactLimits(time_cap=timeout_s))
        sol, users = res.solution, list(instance.users)
        ok = res.status == "optimal" and sol is not None
    elif solver == "ara":
        res = ara_solve(instance)
        sol, users = res.solution, list(instance.users)
        ok = res.status == "optimal"
    elif solver == "hura":
        res = hura_solve(instance)
        sol, users = res.solution, list(res.accepted)
        ok = bool(res.accepted) and not res.rejected
    else:
        raise DomainError(f"unknown solver {solver!r}")
    runtime_ms = (time.perf_counter() - t0) * 1e3
    if sol is None:
        return {"objective": None, "energy": None, "cost": None, "mean_delay": None,
                "active_servers": None, "runtime_ms": runtime_ms, "feasible": 0}
    sub_inst = restrict_instance(instance, users)
    sub_sol = restrict_solution(instance, sol, users)
    feasible = ok and not check_feasibility(sub_inst, sub_sol)
    delays = [compute_delay(instance, sol, u) for u in users]
    return {
        "objective": objective_f(instance, sol),
        "energy": compute_energy(instance, sol),
        "cost": compute_cost(instance, sol),
        "mean_delay": mean(delays) if delays else 0.0,
        "active_servers": float(np.sum(sol.beta > 0.5)),
        "runtime_ms": runtime_ms,
        "feasible": int(feasible),
    }


def _mining_row(tasks, params: MiningScenarioParams):
    t0 = time.perf_counter()
    res = mo_solve(tasks, params.gamma, params.reward)
    runtime_ms = (time.perf_counter() - t0) * 1e3
    if res.status != "optimal":
        return {"objective": None, "energy": None, "cost": None, "mean_delay": None,
                "active_servers": None, "runtime_ms": runtime_ms, "feasible": 0}
    delays = []
    for task in tasks:
        rates = _rates(task)
        per = [res.f[task.miner_id][k] * (task.size_bits / rates[k]
                                          + task.demand / p.cpu_capacity)
               for k, p in enumerate(task.participants) if rates[k] > 0]
        delays.append(max(per) if per else 0.0)
    return {
        "objective": res.objective_value,
        "energy": res.energy,
        "cost": res.cost,
        "mean_delay": mean(delays) if delays else 0.0,
        "active_servers": None,
        "runtime_ms": runtime_ms,
        "feasible": 1,
    }


def run_sweep(base, axis: str, values: list, solvers: list | None = None,
              snapshots: int = 10, timeout_s: float | None = None,
              timing: bool = False) -> tuple[str, str]:
    """Run the sweep and return (detail_csv, aggregate_csv) as text.

    ``base`` is an NfvScenarioParams or MiningScenarioParams; ``axis`` names
    one of its fields.  Mining sweeps ignore ``solvers`` (the LP is the only
    solver).  Snapshot seeds are base.seed + snapshot index.
    """
    is_mining = isinstance(base, MiningScenarioParams)
    if solvers is None:
        solvers = ["mo"] if is_mining else ["hura"]
    detail = [CSV_HEADER]
    cells: dict = {}
    for value in values:
        for snap in range(snapshots):
            params = _with_axis(base, axis, value)
            params = replace(params, seed=base.seed + snap)
            if is_mining:
                tasks = generate_mining_scenario(params)
                rows = {"mo": _mining_row(tasks, params)}
            else:
                instance = generate_nfv_scenario(params)
                rows = {s: _nfv_row(instance, s, timeout_s) for s in solvers}
            for solver, row in rows.items():
                if not timing:
                    row = dict(row, runtime_ms=0.0)
                detail.append(",".join([
                    _fmt(value), str(params.seed), solver,
                    _fmt(row["objective"]), _fmt(row["energy"]), _fmt(row["cost"]),
                    _fmt(row["mean_delay"]), _fmt(row["active_servers"]),
                    _fmt(row["runtime_ms"]), str(row["feasible"]),
                ]))
                cells.setdefault((str(_fmt(value)), solver), []).append(row)

    agg = [AGG_HEADER]
    for (value, solver) in sorted(cells):
        rows = cells[(value, solver)]
        good = [r for r in rows if r["objective"] is not None]

        def col(name):
            vals = [r[name] for r in good if r[name] is not None]
            return mean(vals) if vals else None

        agg.append(",".join([
            value, solver, str(len(rows)),
            _fmt(col("objective")), _fmt(col("energy")), _fmt(col("cost")),
            _fmt(col("mean_delay")), _fmt(col("active_servers")),
            _fmt(col("runtime_ms")),
            _fmt(sum(r["feasible"] for r in rows) / len(rows)),
        ]))
    return "\n".join(detail) + "\n", "\n".join(agg) + "\n"
