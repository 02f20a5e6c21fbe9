"""Penalty-based approximation solver.

The binary variables are boxed to [0, 1] and charged a concave penalty
lam * sum(v - v^2) that vanishes exactly at binary points.  Each iteration
minimizes the convex surrogate obtained by linearizing the concave part at
the previous iterate (exact at the expansion point, an overestimate
everywhere else), so the penalized objective never increases.  Iteration
stops on a small relative change or at the iteration cap; if the terminal
iterate is not binary enough the whole run is repeated with the penalty
weight doubled, a few times.  The final fractional iterate is rounded to a
deployable binary placement and re-routed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .formulation import Layout, build_relaxation
from .lp import LpProblem, solve_lp
from .model import DomainError, NfvInstance, PlacementSolution, objective_f
from .rounding import round_to_binary


class DescentError(RuntimeError):
    """The surrogate subproblem failed mid-run; with a feasible previous
    iterate this cannot happen, so treat it as a solver bug."""


@dataclass
class AraConfig:
    """lambda1/lambda2 are the activation/placement penalty weights; None
    auto-scales them to 1000x the objective at the initial point."""

    lambda1: float | None = None
    lambda2: float | None = None
    t_max: int = 50
    eps_converge: float = 1e-4          # relative change of the penalized objective
    eps_binary: float = 1e-3            # total penalty residual counted as binary
    max_weight_retries: int = 3         # doublings when the residual stays high

    def __post_init__(self):
        if self.lambda1 is not None and self.lambda1 <= 0:
            raise DomainError("lambda1 must be > 0")
        if self.lambda2 is not None and self.lambda2 <= 0:
            raise DomainError("lambda2 must be > 0")
        if self.t_max < 1:
            raise DomainError("t_max must be >= 1")
        if self.eps_converge <= 0 or self.eps_binary <= 0:
            raise DomainError("thresholds must be > 0")


@dataclass
class AraIteration:
    attempt: int
    iteration: int
    surrogate: float          # optimum of the linearized problem
    penalized: float          # true penalized objective at the new iterate
    beta_residual: float
    x_residual: float
    snapshot: PlacementSolution | None = None


@dataclass
class AraTrace:
    """Per-iteration history; the penalized objective is non-increasing
    within each attempt (fresh attempts restart with a new weight)."""

    records: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)      # (lambda1, lambda2) per attempt

    def attempt_records(self, attempt: int) -> list:
        return [r for r in self.records if r.attempt == attempt]

    def to_csv(self) -> str:
        lines = ["attempt,iteration,surrogate,penalized,beta_residual,x_residual"]
        for r in self.records:
            lines.append(f"{r.attempt},{r.iteration},{r.surrogate:.12g},"
                         f"{r.penalized:.12g},{r.beta_residual:.12g},{r.x_residual:.12g}")
        return "\n".join(lines) + "\n"


@dataclass
class AraResult:
    status: str                       # optimal | infeasible | rounding_failure
    solution: PlacementSolution | None
    objective: float | None
    relaxed: PlacementSolution | None
    relaxed_objective: float | None   # plain objective at the terminal iterate
    trace: AraTrace
    lambda1: float | None = None
    lambda2: float | None = None

    @property
    def terminal_residuals(self) -> tuple[float, float]:
        if not self.trace.records:
            return (0.0, 0.0)
        last = self.trace.records[-1]
        return (last.beta_residual, last.x_residual)


def penalty_residual(sol: PlacementSolution) -> tuple[float, float]:
    """(sum of beta - beta^2, sum of x - x^2): zero exactly at binary points."""
    for arr in [sol.beta] + list(sol.x.values()):
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("penalty residual needs values inside [0, 1]")
    beta_res = float(np.sum(sol.beta - sol.beta ** 2))
    x_res = float(sum(np.sum(m - m ** 2) for m in sol.x.values()))
    return beta_res, x_res


def penalized_objective(instance: NfvInstance, sol: PlacementSolution,
                        lambda1: float, lambda2: float) -> float:
    b, x = penalty_residual(sol)
    return objective_f(instance, sol) + lambda1 * b + lambda2 * x


def build_surrogate(instance: NfvInstance, cfg: AraConfig,
                    prev: PlacementSolution) -> tuple[LpProblem, Layout]:
    """Linearized penalized problem around ``prev``.  The surrogate equals
    the penalized objective at ``prev`` and overestimates it elsewhere."""
    if cfg.lambda1 is None or cfg.lambda2 is None:
        raise DomainError("build_surrogate needs concrete penalty weights")
    return build_relaxation(instance, penalty=(cfg.lambda1, cfg.lambda2, prev))


def surrogate_value(instance: NfvInstance, lambda1: float, lambda2: float,
                    prev: PlacementSolution, point: PlacementSolution) -> float:
    """Value of the linearization around ``prev`` evaluated at ``point``,
    without building the LP."""
    def lin(v, p):
        return float(np.sum(v * (1.0 - 2.0 * p) + p ** 2))

    total = objective_f(instance, point) + lambda1 * lin(point.beta, prev.beta)
    for u in point.x:
        total += lambda2 * lin(point.x[u], prev.x[u])
    return total


def _mm_run(instance: NfvInstance, cfg: AraConfig, start: PlacementSolution,
            attempt: int, trace: AraTrace) -> PlacementSolution:
    lam1, lam2 = cfg.lambda1, cfg.lambda2
    prev = start
    phi_prev = penalized_objective(instance, prev, lam1, lam2)
    for t in range(1, cfg.t_max + 1):
        problem, layout = build_surrogate(instance, cfg, prev)
        lp_sol = solve_lp(problem)
        if lp_sol.status != "optimal":
            raise DescentError(f"surrogate infeasible at iteration {t}")
        new = layout.extract(lp_sol.x)
        phi_new = penalized_objective(instance, new, lam1, lam2)
        if phi_new > phi_prev:
            # the surrogate optimum cannot beat the expansion point beyond
            # round-off: numerical fixed point, keep the current iterate
            b_res, x_res = penalty_residual(prev)
            trace.records.append(AraIteration(attempt, t, float(lp_sol.objective_value),
                                              phi_prev, b_res, x_res, prev))
            break
        b_res, x_res = penalty_residual(new)
        trace.records.append(AraIteration(attempt, t, float(lp_sol.objective_value),
                                          phi_new, b_res, x_res, new))
        converged = abs(phi_new - phi_prev) <= cfg.eps_converge * max(1.0, abs(phi_prev))
        prev, phi_prev = new, phi_new
        if converged:
            break
    return prev


def ara_solve(instance: NfvInstance, cfg: AraConfig | None = None) -> AraResult:
    """Full pipeline.

    The box relaxation provides the iteration start and a lower-bound
    reference; the warm-start heuristic (when it serves every chain) seeds a
    binary incumbent.  Each escalation attempt runs the penalty iteration,
    rounds its terminal iterate, and keeps the best binary placement found;
    attempts after the first restart from that incumbent, whose surrogate
    fixed point certifies a zero penalty residual.
    """
    from .hura import hura_solve      # late import: hura is also a client

    cfg = cfg or AraConfig()
    trace = AraTrace()

    relaxed_lp, layout = build_relaxation(instance)
    lp_sol = solve_lp(relaxed_lp)
    if lp_sol.status != "optimal":
        return AraResult("infeasible", None, None, None, None, trace)
    start = layout.extract(lp_sol.x)
    f_init = float(lp_sol.objective_value)

    base1 = cfg.lambda1 if cfg.lambda1 is not None else 1e3 * max(1e-6, f_init)
    base2 = cfg.lambda2 if cfg.lambda2 is not None else 1e3 * max(1e-6, f_init)

    incumbent: PlacementSolution | None = None
    incumbent_obj = np.inf

    def harvest(candidate: PlacementSolution | None):
        nonlocal incumbent, incumbent_obj
        if candidate is None:
            return
        obj = objective_f(instance, candidate)
        if obj < incumbent_obj:
            incumbent, incumbent_obj = candidate, obj

    warm = hura_solve(instance)
    if not warm.rejected:
        harvest(round_to_binary(instance, warm.solution))
    harvest(round_to_binary(instance, start))

    terminal = start
    run_cfg = cfg
    for attempt in range(cfg.max_weight_retries + 1):
        run_cfg = AraConfig(lambda1=base1 * 2 ** attempt, lambda2=base2 * 2 ** attempt,
                            t_max=cfg.t_max, eps_converge=cfg.eps_converge,
                            eps_binary=cfg.eps_binary,
                            max_weight_retries=cfg.max_weight_retries)
        trace.lambdas.append((run_cfg.lambda1, run_cfg.lambda2))
        attempt_start = start if (attempt == 0 or incumbent is None) else incumbent
        terminal = _mm_run(instance, run_cfg, attempt_start, attempt, trace)
        harvest(round_to_binary(instance, terminal))
        b_res, x_res = penalty_residual(terminal)
        if b_res + x_res <= cfg.eps_binary:
            break

    if incumbent is None:
        return AraResult("rounding_failure", None, None, terminal,
                         objective_f(instance, terminal), trace,
                         run_cfg.lambda1, run_cfg.lambda2)
    return AraResult("optimal", incumbent, incumbent_obj, terminal,
                     objective_f(instance, terminal), trace,
                     run_cfg.lambda1, run_cfg.lambda2)
