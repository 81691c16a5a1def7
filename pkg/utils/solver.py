"""
Exact LP / MILP Core

Dense-tableau two-phase primal simplex with Bland's anti-cycling rule, and a
best-bound branch-and-bound over binary variables on top of it. Everything is
deterministic: ties always go to the lowest index.
"""

import heapq
import logging
import re
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from utils.config import (
    FEASIBILITY_TOL, INTEGRALITY_TOL, MAX_SIMPLEX_ITERATIONS, PIVOT_TOL
)
from utils.errors import IterationLimitError, SolverInputError


logger = logging.getLogger(__name__)

SENSES = ('<=', '=', '>=')


class LpStatus(str, Enum):
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'


@dataclass
class LpProblem:
    """
    min c.x  s.t.  A x (sense) b,  lower <= x <= upper.

    Lower bounds must be finite; upper bounds may be +inf.
    """

    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    lower: np.ndarray = None
    upper: np.ndarray = None
    names: tuple = ()

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.shape[0]
        self.A = np.asarray(self.A, dtype=float)
        if self.A.size == 0:
            self.A = self.A.reshape(0, n)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.senses = tuple(self.senses)
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).copy()
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).copy()
        self.names = tuple(self.names)

    @property
    def num_vars(self):
        return self.c.shape[0]

    @property
    def num_rows(self):
        return self.A.shape[0]

    def with_bounds(self, lower, upper):
        return replace(self, lower=np.asarray(lower, dtype=float), upper=np.asarray(upper, dtype=float))

    def var_name(self, j):
        return self.names[j] if self.names else f"x{j}"


@dataclass
class LpSolution:
    status: LpStatus
    objective: float = None
    x: np.ndarray = None
    iterations: int = 0
    nodes_explored: int = 0

    @property
    def is_optimal(self):
        return self.status == LpStatus.OPTIMAL


@dataclass(order=True)
class BnbNode:
    """Open branch-and-bound node; ordered by bound, then creation order."""

    bound: float
    seq: int
    depth: int = field(compare=False, default=0)
    fixed: dict = field(compare=False, default_factory=dict)
    relaxation: LpSolution = field(compare=False, default=None)


def _check_dimensions(problem):
    if problem.A.ndim != 2:
        raise SolverInputError("constraint matrix must be two-dimensional")
    m, n = problem.A.shape
    if n != problem.num_vars:
        raise SolverInputError(f"constraint matrix has {n} columns for {problem.num_vars} variables")
    if problem.b.shape[0] != m or len(problem.senses) != m:
        raise SolverInputError(f"{m} rows but {problem.b.shape[0]} right-hand sides and {len(problem.senses)} senses")
    if problem.lower.shape[0] != n or problem.upper.shape[0] != n:
        raise SolverInputError('bound vectors do not match the number of variables')
    if problem.names and len(problem.names) != n:
        raise SolverInputError('variable names do not match the number of variables')
    bad = [s for s in problem.senses if s not in SENSES]
    if bad:
        raise SolverInputError(f"unknown constraint senses {sorted(set(bad))}")
    if not np.all(np.isfinite(problem.lower)):
        raise SolverInputError('lower bounds must be finite')


def _pivot(T, row, col):
    T[row, :] /= T[row, col]
    column = T[:, col].copy()
    column[row] = 0.0
    T -= np.outer(column, T[row, :])
    T[row, col] = 1.0


def _run_simplex(T, basis, num_cols, iterations, max_iterations):
    """
    Minimise over the tableau in place. Bottom row holds reduced costs and
    minus the objective. Returns (status, iterations).
    """
    m = T.shape[0] - 1
    while True:
        costs = T[-1, :num_cols]
        candidates = np.flatnonzero(costs < -FEASIBILITY_TOL)
        if candidates.size == 0:
            return LpStatus.OPTIMAL, iterations
        col = int(candidates[0])

        column = T[:m, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            return LpStatus.UNBOUNDED, iterations
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        row = int(min(tied, key=lambda r: basis[r]))

        _pivot(T, row, col)
        basis[row] = col
        rhs = T[:m, -1]
        rhs[(rhs < 0) & (rhs > -PIVOT_TOL)] = 0.0

        iterations += 1
        if iterations >= max_iterations:
            raise IterationLimitError(f"simplex did not finish within {max_iterations} pivots")


def solve_lp(problem, max_iterations=MAX_SIMPLEX_ITERATIONS):
    """
    Solve an LP with the two-phase primal simplex method.

    Variables with equal bounds are substituted out before the tableau is
    built; rows are scaled by their largest coefficient.

    Args:
        problem: LpProblem
        max_iterations: Pivot budget shared by both phases

    Returns:
        LpSolution: status, objective, primal values and pivot count

    Raises:
        SolverInputError: inconsistent dimensions
        IterationLimitError: pivot budget exhausted
    """
    _check_dimensions(problem)
    n = problem.num_vars
    lower, upper = problem.lower, problem.upper

    if np.any(lower > upper + FEASIBILITY_TOL):
        return LpSolution(LpStatus.INFEASIBLE)

    free = np.flatnonzero(upper - lower > FEASIBILITY_TOL)
    A_full = problem.A
    b_shift = problem.b - A_full @ lower

    rows = [A_full[i, free] for i in range(problem.num_rows)]
    rhs = list(b_shift)
    senses = list(problem.senses)
    for k, j in enumerate(free):
        if np.isfinite(upper[j]):
            row = np.zeros(free.size)
            row[k] = 1.0
            rows.append(row)
            rhs.append(upper[j] - lower[j])
            senses.append('<=')

    kept_rows, kept_rhs, kept_senses = [], [], []
    for row, value, sense in zip(rows, rhs, senses):
        scale = np.abs(row).max() if row.size else 0.0
        if scale <= PIVOT_TOL:
            violated = (
                (sense == '<=' and value < -FEASIBILITY_TOL)
                or (sense == '>=' and value > FEASIBILITY_TOL)
                or (sense == '=' and abs(value) > FEASIBILITY_TOL)
            )
            if violated:
                return LpSolution(LpStatus.INFEASIBLE)
            continue
        row, value = row / scale, value / scale
        if value < 0:
            row, value = -row, -value
            sense = {'<=': '>=', '>=': '<=', '=': '='}[sense]
        kept_rows.append(row)
        kept_rhs.append(value)
        kept_senses.append(sense)

    m = len(kept_rows)
    nf = free.size
    num_slack = sum(1 for s in kept_senses if s != '=')
    num_art = sum(1 for s in kept_senses if s != '<=')
    art_start = nf + num_slack
    width = art_start + num_art

    T = np.zeros((m + 1, width + 1))
    basis = [0] * m
    slack = nf
    art = art_start
    for i, (row, value, sense) in enumerate(zip(kept_rows, kept_rhs, kept_senses)):
        T[i, :nf] = row
        T[i, -1] = value
        if sense == '<=':
            T[i, slack] = 1.0
            basis[i] = slack
            slack += 1
        elif sense == '>=':
            T[i, slack] = -1.0
            slack += 1
            T[i, art] = 1.0
            basis[i] = art
            art += 1
        else:
            T[i, art] = 1.0
            basis[i] = art
            art += 1

    iterations = 0
    if num_art:
        T[-1, art_start:width] = 1.0
        for i in range(m):
            if basis[i] >= art_start:
                T[-1, :] -= T[i, :]
        _, iterations = _run_simplex(T, basis, width, iterations, max_iterations)
        if -T[-1, -1] > FEASIBILITY_TOL:
            logger.debug('phase 1 ended with infeasibility %.3e', -T[-1, -1])
            return LpSolution(LpStatus.INFEASIBLE, iterations=iterations)

        redundant = []
        for i in range(m):
            if basis[i] < art_start:
                continue
            entries = np.flatnonzero(np.abs(T[i, :art_start]) > PIVOT_TOL)
            if entries.size:
                _pivot(T, i, int(entries[0]))
                basis[i] = int(entries[0])
            else:
                redundant.append(i)
        if redundant:
            logger.debug('dropping %d redundant rows', len(redundant))
            keep = [i for i in range(m) if i not in redundant]
            T = T[keep + [m], :]
            basis = [basis[i] for i in keep]
            m = len(basis)
        T = np.hstack([T[:, :art_start], T[:, -1:]])

    costs = np.zeros(art_start)
    costs[:nf] = problem.c[free]
    T[-1, :] = 0.0
    T[-1, :art_start] = costs
    for i in range(m):
        if costs[basis[i]] != 0.0:
            T[-1, :] -= costs[basis[i]] * T[i, :]

    status, iterations = _run_simplex(T, basis, art_start, iterations, max_iterations)
    if status == LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, iterations=iterations)

    y = np.zeros(art_start)
    for i in range(m):
        y[basis[i]] = T[i, -1]
    x = lower.copy()
    x[free] += y[:nf]
    x = np.minimum(x, upper)
    objective = float(problem.c @ x)
    return LpSolution(LpStatus.OPTIMAL, objective, x, iterations)


def _improves(value, best):
    return not np.isfinite(best) or value < best - 1e-9 * max(1.0, abs(best))


def _most_fractional(x, binaries, tol):
    best_index, best_frac = None, tol
    for j in binaries:
        frac = abs(x[j] - round(x[j]))
        if frac > best_frac + 1e-15:
            best_index, best_frac = j, frac
    return best_index


def solve_milp(problem, binaries, integrality_tol=INTEGRALITY_TOL, max_iterations=MAX_SIMPLEX_ITERATIONS):
    """
    Exact optimum over 0/1 assignments of ``binaries`` by branch-and-bound.

    Best-bound node selection, branching on the most fractional binary (ties
    to the lowest index), down-branch created before the up-branch.

    Args:
        problem: LpProblem
        binaries: Indices of the 0/1 variables
        integrality_tol: Distance from 0/1 still treated as integral

    Returns:
        LpSolution: the incumbent (status optimal) or an infeasible/unbounded status
    """
    _check_dimensions(problem)
    binaries = sorted(set(int(j) for j in binaries))
    for j in binaries:
        if j < 0 or j >= problem.num_vars:
            raise SolverInputError(f"binary index {j} out of range")
        if problem.lower[j] < -integrality_tol or problem.upper[j] > 1 + integrality_tol:
            raise SolverInputError(f"binary variable {problem.var_name(j)} has bounds outside [0, 1]")

    root = solve_lp(problem, max_iterations)
    if not root.is_optimal:
        root.nodes_explored = 1
        return root

    counter = 0
    iterations = root.iterations
    explored = 1
    heap = [BnbNode(root.objective, counter, 0, {}, root)]
    incumbent = None
    best = np.inf

    while heap:
        node = heapq.heappop(heap)
        if not _improves(node.bound, best):
            continue

        x = node.relaxation.x
        j = _most_fractional(x, binaries, integrality_tol)
        if j is None:
            incumbent, best = node.relaxation, node.bound
            logger.debug('new incumbent %.6f at depth %d', best, node.depth)
            continue

        for value in (0.0, 1.0):
            lower = problem.lower.copy()
            upper = problem.upper.copy()
            fixed = dict(node.fixed)
            fixed[j] = value
            for k, v in fixed.items():
                lower[k] = upper[k] = v
            child = solve_lp(problem.with_bounds(lower, upper), max_iterations)
            explored += 1
            iterations += child.iterations
            if child.is_optimal and _improves(child.objective, best):
                counter += 1
                heapq.heappush(heap, BnbNode(child.objective, counter, node.depth + 1, fixed, child))

    logger.debug('branch-and-bound explored %d nodes', explored)
    if incumbent is None:
        return LpSolution(LpStatus.INFEASIBLE, iterations=iterations, nodes_explored=explored)
    return replace(incumbent, iterations=iterations, nodes_explored=explored)


_LP_NAME = re.compile(r'[^A-Za-z0-9_.(),]')


def lp_name(name):
    """Make an identifier safe for LP-format text."""
    cleaned = _LP_NAME.sub('_', str(name))
    if not cleaned or cleaned[0].isdigit() or cleaned[0] == '.':
        cleaned = 'v' + cleaned
    return cleaned


def _format_terms(coefficients, names):
    terms = []
    for j in np.flatnonzero(coefficients):
        coef = coefficients[j]
        sign = '-' if coef < 0 else '+'
        terms.append(f"{sign} {abs(coef):.12g} {names[j]}")
    return ' '.join(terms) if terms else '0'


def write_lp(problem, binaries=(), title='model'):
    """
    Render an LpProblem as CPLEX LP-format text.

    Args:
        problem: LpProblem
        binaries: Indices written in the Binary section
        title: Comment placed on the first line

    Returns:
        str: LP text ending with a newline
    """
    names = [lp_name(problem.var_name(j)) for j in range(problem.num_vars)]
    binaries = set(binaries)
    lines = [f"\\ {title}", 'Minimize', f" obj: {_format_terms(problem.c, names)}", 'Subject To']
    for i in range(problem.num_rows):
        lines.append(f" c{i}: {_format_terms(problem.A[i], names)} {problem.senses[i]} {problem.b[i]:.12g}")
    lines.append('Bounds')
    for j in range(problem.num_vars):
        if j in binaries:
            continue
        lo, hi = problem.lower[j], problem.upper[j]
        if np.isfinite(hi):
            lines.append(f" {lo:.12g} <= {names[j]} <= {hi:.12g}")
        else:
            lines.append(f" {names[j]} >= {lo:.12g}")
    if binaries:
        lines.append('Binary')
        lines.append(' ' + ' '.join(names[j] for j in sorted(binaries)))
    lines.append('End')
    return '\n'.join(lines) + '\n'


def _parse_terms(text, index):
    coefficients = {}
    tokens = text.split()
    sign, coef = 1.0, None
    for token in tokens:
        if token in '+-':
            sign = -1.0 if token == '-' else 1.0
            continue
        try:
            coef = float(token)
            continue
        except ValueError:
            pass
        j = index.setdefault(token, len(index))
        coefficients[j] = coefficients.get(j, 0.0) + sign * (1.0 if coef is None else coef)
        sign, coef = 1.0, None
    return coefficients


def read_lp(text):
    """
    Parse LP-format text produced by ``write_lp``.

    Returns:
        tuple: (LpProblem, sorted list of binary indices)
    """
    section = None
    index = {}
    objective, rows, senses, rhs = {}, [], [], []
    bounds, binary_names = {}, []

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith('\\'):
            continue
        lowered = line.lower()
        if lowered in ('minimize', 'subject to', 'bounds', 'binary', 'end'):
            section = lowered
            continue
        if section == 'minimize':
            objective = _parse_terms(line.split(':', 1)[1], index)
        elif section == 'subject to':
            body = line.split(':', 1)[1]
            sense = next(s for s in ('<=', '>=', '=') if s in body)
            left, right = body.split(sense)
            rows.append(_parse_terms(left, index))
            senses.append(sense)
            rhs.append(float(right))
        elif section == 'bounds':
            parts = line.split()
            if len(parts) == 5:
                name = parts[2]
                bounds[name] = (float(parts[0]), float(parts[4]))
            else:
                name = parts[0]
                bounds[name] = (float(parts[2]), np.inf)
            index.setdefault(name, len(index))
        elif section == 'binary':
            for name in line.split():
                index.setdefault(name, len(index))
                binary_names.append(name)

    n = len(index)
    names = [None] * n
    for name, j in index.items():
        names[j] = name
    c = np.zeros(n)
    for j, v in objective.items():
        c[j] = v
    A = np.zeros((len(rows), n))
    for i, row in enumerate(rows):
        for j, v in row.items():
            A[i, j] = v
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    for name, (lo, hi) in bounds.items():
        lower[index[name]], upper[index[name]] = lo, hi
    for name in binary_names:
        lower[index[name]], upper[index[name]] = 0.0, 1.0

    problem = LpProblem(c, A, senses, rhs, lower, upper, tuple(names))
    return problem, sorted(index[name] for name in binary_names)
