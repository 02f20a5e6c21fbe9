"""Self-contained dense linear-programming solver.

Bounded-variable two-phase primal simplex: Dantzig pricing by default,
switching to Bland's rule after a run of degenerate pivots so termination is
guaranteed.  Dense tableau; instances here are small enough that determinism
and simplicity beat sparsity.

Every solve owns its workspace, so concurrent solves on distinct problems
need no synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LE, EQ, GE = -1, 0, 1

PIVOT_TOL = 1e-8
FEAS_TOL = 1e-6


class LpInputError(ValueError):
    """Malformed problem data (dimension mismatch, crossed bounds, ...)."""


class IterationLimitError(RuntimeError):
    """The pivot limit was hit before reaching a verdict."""


@dataclass
class LpProblem:
    """min c.x + offset  s.t.  a x (<=|=|>=) rhs,  lower <= x <= upper.

    ``relations`` holds LE/EQ/GE per row; bounds may be +-inf.
    """

    c: np.ndarray
    a: np.ndarray
    relations: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.relations = np.asarray(self.relations, dtype=int)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        m, n = self.a.shape if self.a.size else (0, self.c.size)
        if self.c.shape != (n,):
            raise LpInputError("objective length does not match column count")
        if self.rhs.shape != (m,) or self.relations.shape != (m,):
            raise LpInputError("rhs/relations length does not match row count")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise LpInputError("bounds length does not match column count")
        if not np.all(np.isfinite(self.rhs)):
            raise LpInputError("rhs must be finite")
        if np.any(self.lower > self.upper):
            raise LpInputError("lower bound exceeds upper bound")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    def dump(self) -> str:
        """Text form, one constraint per line, for cross-checks against
        external solvers."""
        rel = {LE: "<=", EQ: "=", GE: ">="}
        lines = ["min " + " + ".join(f"{v:g} x{j}" for j, v in enumerate(self.c) if v != 0.0)
                 + (f" + {self.offset:g}" if self.offset else "")]
        for i in range(self.n_rows):
            terms = " + ".join(f"{v:g} x{j}" for j, v in enumerate(self.a[i]) if v != 0.0)
            lines.append(f"{terms or '0'} {rel[int(self.relations[i])]} {self.rhs[i]:g}")
        for j in range(self.n_vars):
            lines.append(f"{self.lower[j]:g} <= x{j} <= {self.upper[j]:g}")
        return "\n".join(lines)


@dataclass
class LpSolution:
    status: str                       # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective_value: float | None
    iterations: int
    duals: np.ndarray | None = None          # one multiplier per row
    reduced_costs: np.ndarray | None = None  # one per structural variable


REFRESH_EVERY = 100


class _Tableau:
    """Working state for one simplex run over the extended column set
    (structurals, slacks, artificials).

    The tableau and basic values are refactorized from the original columns
    every ``REFRESH_EVERY`` pivots and at every phase boundary, so rank-one
    update drift cannot silently corrupt the ratio test or the verdict.
    """

    def __init__(self, a_ext, b, lower, upper, basis, xval, tol, row_signs):
        self.a = a_ext                       # original extended matrix, kept for refresh
        self.b = b
        self.tab = a_ext * row_signs[:, None]    # B^-1 A for the artificial basis
        self.lower = lower
        self.upper = upper
        self.basis = basis                   # column index of each basic variable
        self.xval = xval                     # current value of every variable
        self.tol = tol
        self.m, self.n = a_ext.shape
        self.in_basis = np.zeros(self.n, dtype=bool)
        self.in_basis[basis] = True
        self.iterations = 0
        self.degenerate_run = 0

    def refresh(self):
        """Refactorize B^-1 A and the basic values from the pristine data."""
        if self.m == 0:
            return
        bmat = self.a[:, self.basis]
        try:
            self.tab = np.linalg.solve(bmat, self.a)
            nonbasic = ~self.in_basis
            rhs_eff = self.b - self.a[:, nonbasic] @ self.xval[nonbasic]
            self.xval[self.basis] = np.linalg.solve(bmat, rhs_eff)
        except np.linalg.LinAlgError:
            pass                             # keep the updated tableau

    def run(self, c, max_iter) -> str:
        """Minimize c.x from the current basis; returns "optimal" or
        "unbounded".  Raises IterationLimitError when out of pivots."""
        z = c - c[self.basis] @ self.tab      # reduced costs
        z[self.basis] = 0.0
        bland_after = 2 * (self.m + self.n)
        since_refresh = 0
        while True:
            if self.iterations >= max_iter:
                raise IterationLimitError(f"no verdict after {max_iter} pivots")
            if since_refresh >= REFRESH_EVERY:
                self.refresh()
                z = c - c[self.basis] @ self.tab
                z[self.basis] = 0.0
                since_refresh = 0
            at_lower = self.xval <= self.lower
            can_dec = ~at_lower | ~np.isfinite(self.lower)
            can_inc = (self.xval < self.upper) | ~np.isfinite(self.upper)
            viol = np.where(~self.in_basis & can_inc & (z < -self.tol), -z, 0.0) \
                + np.where(~self.in_basis & can_dec & (z > self.tol), z, 0.0)
            # a variable pinned by equal bounds can never move
            viol[self.lower == self.upper] = 0.0
            if not np.any(viol > 0.0):
                return "optimal"
            bland = self.degenerate_run > bland_after
            if bland:
                q = int(np.nonzero(viol > 0.0)[0][0])        # Bland: lowest index
            else:
                q = int(np.argmax(viol))                     # Dantzig; argmax tie -> lowest
            direction = 1.0 if z[q] < 0 else -1.0
            self.iterations += 1
            since_refresh += 1
            self._pivot(q, direction, z, bland)
            if self.status == "unbounded":
                return "unbounded"
        # unreachable

    def _pivot(self, q, direction, z, bland):
        self.status = ""
        col = self.tab[:, q]
        d = direction * col
        xb = self.xval[self.basis]
        lb = self.lower[self.basis]
        ub = self.upper[self.basis]

        # max step before a basic variable hits one of its bounds
        with np.errstate(divide="ignore", invalid="ignore"):
            t_low = np.where(d > self.tol, (xb - lb) / d, np.inf)
            t_up = np.where(d < -self.tol, (xb - ub) / d, np.inf)
        steps = np.minimum(t_low, t_up)
        steps[steps < 0.0] = 0.0             # numerical guard on degenerate rows
        t_basic = float(steps.min()) if steps.size else np.inf

        # step at which the entering variable meets its own other bound
        span = self.upper[q] - self.lower[q]
        t_flip = span if np.isfinite(span) else np.inf

        t = min(t_basic, t_flip)
        if not np.isfinite(t):
            self.status = "unbounded"
            return

        if t_flip <= t_basic:
            # bound flip: no basis change
            self.xval[q] = self.upper[q] if direction > 0 else self.lower[q]
            self.xval[self.basis] = xb - t * d
            self.degenerate_run = 0 if t > self.tol else self.degenerate_run + 1
            return

        # leaving row: under Bland's rule strictly the lowest variable index
        # among exact minimizers; otherwise the numerically largest pivot
        # among near-minimal rows
        if bland:
            tie = np.nonzero(steps == t_basic)[0]
            r = int(tie[np.argmin(self.basis[tie])])
        else:
            near = np.nonzero(steps <= t_basic + 1e-9 * (1.0 + abs(t_basic)))[0]
            r = int(near[np.argmax(np.abs(d[near]))])
        leave = self.basis[r]
        t = float(steps[r])      # land the chosen leaver exactly on its bound
        self.xval[self.basis] = xb - t * d
        self.xval[q] = self.xval[q] + direction * t
        hit_lower = t_low[r] <= t_up[r]
        self.xval[leave] = self.lower[leave] if hit_lower else self.upper[leave]

        piv = self.tab[r, q]
        row = self.tab[r] / piv
        self.tab -= np.outer(self.tab[:, q], row)
        self.tab[r] = row
        z -= z[q] * row
        z[q] = 0.0
        self.in_basis[leave] = False
        self.in_basis[q] = True
        self.basis[r] = q
        self.degenerate_run = 0 if t > self.tol else self.degenerate_run + 1


def solve_lp(problem: LpProblem, tol: float = PIVOT_TOL,
             max_iter: int | None = None) -> LpSolution:
    """Solve ``problem``; statuses are "optimal", "infeasible" or
    "unbounded".  An exhausted pivot budget raises IterationLimitError
    rather than returning a possibly-wrong answer."""
    n, m = problem.n_vars, problem.n_rows

    # normalize: >= rows negated so slacks are all [0, inf)
    a = problem.a.copy()
    b = problem.rhs.copy()
    flip = problem.relations == GE
    a[flip] *= -1.0
    b[flip] *= -1.0
    is_eq = problem.relations == EQ

    # row equilibration: wildly mixed coefficient magnitudes would swamp the
    # absolute pivot tolerance
    row_scale = np.abs(a).max(axis=1, initial=0.0) if m else np.zeros(0)
    row_scale[row_scale == 0.0] = 1.0
    a /= row_scale[:, None]
    b /= row_scale

    n_slack = int(np.sum(~is_eq))
    n_total = n + n_slack + m              # structurals, slacks, artificials
    a_ext = np.zeros((m, n_total))
    a_ext[:, :n] = a
    lower = np.full(n_total, 0.0)
    upper = np.full(n_total, np.inf)
    lower[:n] = problem.lower
    upper[:n] = problem.upper

    k = n
    for i in range(m):
        if not is_eq[i]:
            a_ext[i, k] = 1.0
            k += 1

    # start every structural/slack at its bound nearest zero; artificials
    # carry the residual so the initial basis is feasible by construction
    xval = np.zeros(n_total)
    finite_l = np.isfinite(lower)
    finite_u = np.isfinite(upper)
    start = np.where(finite_l, lower, np.where(finite_u, upper, 0.0))
    both = finite_l & finite_u
    start[both] = np.where(np.abs(lower[both]) <= np.abs(upper[both]),
                           lower[both], upper[both])
    xval[:n + n_slack] = start[:n + n_slack]

    resid = b - a_ext[:, :n + n_slack] @ xval[:n + n_slack]
    basis = np.arange(n + n_slack, n_total)
    row_signs = np.where(resid >= 0, 1.0, -1.0)
    for i in range(m):
        a_ext[i, n + n_slack + i] = row_signs[i]
        xval[n + n_slack + i] = abs(resid[i])

    tableau = _Tableau(a_ext, b, lower, upper, basis, xval, tol, row_signs)
    if max_iter is None:
        max_iter = max(2000, 50 * (m + n_total))

    # phase 1: drive artificials to zero
    c1 = np.zeros(n_total)
    c1[n + n_slack:] = 1.0
    status = tableau.run(c1, max_iter)
    tableau.refresh()
    art_vals = np.abs(tableau.xval[n + n_slack:])
    row_tol = FEAS_TOL * np.maximum(1.0, np.abs(b))
    if status != "optimal" or (m and np.any(art_vals > row_tol)):
        return LpSolution("infeasible", None, None, tableau.iterations)

    # pin artificials at zero for phase 2
    tableau.lower[n + n_slack:] = 0.0
    tableau.upper[n + n_slack:] = 0.0
    tableau.xval[n + n_slack:][~tableau.in_basis[n + n_slack:]] = 0.0

    c2 = np.zeros(n_total)
    c2[:n] = problem.c

    # run phase 2 until a refactorized pricing pass confirms optimality
    status = ""
    for _round in range(6):
        status = tableau.run(c2, max_iter)
        if status == "unbounded":
            return LpSolution("unbounded", None, None, tableau.iterations)
        tableau.refresh()
        z = c2 - c2[tableau.basis] @ tableau.tab
        z[tableau.basis] = 0.0
        at_lower = tableau.xval <= tableau.lower
        can_dec = ~at_lower | ~np.isfinite(tableau.lower)
        can_inc = (tableau.xval < tableau.upper) | ~np.isfinite(tableau.upper)
        viol = np.where(~tableau.in_basis & can_inc & (z < -10 * tol), -z, 0.0) \
            + np.where(~tableau.in_basis & can_dec & (z > 10 * tol), z, 0.0)
        viol[tableau.lower == tableau.upper] = 0.0
        if not np.any(viol > 0.0):
            break
    else:
        raise IterationLimitError("optimality could not be certified after refreshes")

    # clean final answer: recompute basic values and duals from the original
    # columns to shed accumulated tableau drift
    basis = tableau.basis
    nonbasic = np.ones(n_total, dtype=bool)
    nonbasic[basis] = False
    xnb = tableau.xval.copy()
    if m:
        bmat = a_ext[:, basis]
        rhs_eff = b - a_ext[:, nonbasic] @ xnb[nonbasic]
        try:
            xb = np.linalg.solve(bmat, rhs_eff)
            y = np.linalg.solve(bmat.T, c2[basis])
        except np.linalg.LinAlgError:        # nearly singular basis: keep iterates
            xb = tableau.xval[basis]
            y = np.zeros(m)
    else:
        xb = np.zeros(0)
        y = np.zeros(0)
    x_full = xnb
    x_full[basis] = xb
    x = x_full[:n]
    obj = float(problem.c @ x) + problem.offset
    reduced = problem.c - (y @ a)
    # report duals against the caller's rows (undo scaling and >= negation)
    duals = y / row_scale if m else y
    duals[flip] *= -1.0
    return LpSolution("optimal", x, obj, tableau.iterations, duals, reduced)
