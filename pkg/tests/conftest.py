"""
Shared fixtures and independent oracles for the planner test-suite.

The oracles here never call into the planner or the in-house simplex: they
rebuild the flow model from scratch and hand it to scipy.
"""

import sys
from itertools import chain, combinations
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import linprog

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))
sys.path.insert(0, str(ROOT / 'data'))

from generate_scenarios import ScenarioGenerator  # noqa: E402
from utils.scenario_io import load_scenario  # noqa: E402
from utils.topology import PercentagePolicy  # noqa: E402


DATA_DIR = ROOT / 'data'


@pytest.fixture(scope='session')
def generator():
    return ScenarioGenerator(seed=42)


@pytest.fixture(scope='session')
def fig1():
    return load_scenario(DATA_DIR / 'fig1.json')


@pytest.fixture(scope='session')
def fig5():
    return load_scenario(DATA_DIR / 'fig5.json')


@pytest.fixture(scope='session')
def euroqci():
    return load_scenario(DATA_DIR / 'euroqci-toy.json')


@pytest.fixture(scope='session')
def sat_problem():
    return load_scenario(DATA_DIR / 'satellite-3x6x4.json')


# Oracles

def vertex_enumeration(c, A, senses, b, lower, upper):
    """
    Minimum of c.x over a bounded polytope by trying every basic point.

    Returns:
        float or None: optimum, None when no vertex is feasible
    """
    n = len(c)
    rows, rhs = [], []
    for row, sense, value in zip(A, senses, b):
        rows.append((np.asarray(row, dtype=float), sense, float(value)))
    for j in range(n):
        unit = np.zeros(n)
        unit[j] = 1.0
        rows.append((unit, '>=', float(lower[j])))
        rows.append((unit, '<=', float(upper[j])))

    def feasible(x):
        for row, sense, value in rows:
            lhs = row @ x
            if sense == '<=' and lhs > value + 1e-7:
                return False
            if sense == '>=' and lhs < value - 1e-7:
                return False
            if sense == '=' and abs(lhs - value) > 1e-7:
                return False
        return True

    best = None
    for active in combinations(range(len(rows)), n):
        M = np.array([rows[i][0] for i in active])
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, np.array([rows[i][2] for i in active]))
        if feasible(x):
            value = float(np.dot(c, x))
            if best is None or value < best:
                best = value
    return best


def binary_enumeration(c, A, senses, b, lower, upper, binaries):
    """MILP optimum by fixing every 0/1 assignment and calling linprog."""
    A = np.asarray(A, dtype=float)
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row, sense, value in zip(A, senses, b):
        if sense == '<=':
            A_ub.append(row)
            b_ub.append(value)
        elif sense == '>=':
            A_ub.append(-row)
            b_ub.append(-value)
        else:
            A_eq.append(row)
            b_eq.append(value)

    best = None
    for assignment in range(2 ** len(binaries)):
        bounds = [(float(lo), None if np.isinf(hi) else float(hi)) for lo, hi in zip(lower, upper)]
        for k, j in enumerate(binaries):
            v = float((assignment >> k) & 1)
            bounds[j] = (v, v)
        result = linprog(
            c, A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
            A_eq=np.array(A_eq) if A_eq else None, b_eq=b_eq or None,
            bounds=bounds, method='highs',
        )
        if result.status == 0 and (best is None or result.fun < best):
            best = float(result.fun)
    return best


def _flow_lp(problem, active_links, max_served):
    """
    Pure flow LP (no build decisions) for a fixed set of usable links.

    Supports terrestrial links, Percentage policies and per-window demands,
    which is everything the random scenarios use.
    """
    topology = problem.topology
    nodes = [n.id for n in topology.nodes]
    commodities = [(u, w) for u in problem.use_cases for w in u.schedule]
    num_flow = 2 * len(commodities) * len(active_links)
    num_vars = num_flow + (len(commodities) if max_served else 0)

    def var(k, e, direction):
        return (k * len(active_links) + e) * 2 + direction

    A_eq, b_eq, A_ub, b_ub = [], [], [], []
    for k, (u, w) in enumerate(commodities):
        for node in nodes:
            row = np.zeros(num_vars)
            for e, link in enumerate(active_links):
                if link.a == node:
                    row[var(k, e, 0)] += 1.0
                    row[var(k, e, 1)] -= 1.0
                elif link.b == node:
                    row[var(k, e, 0)] -= 1.0
                    row[var(k, e, 1)] += 1.0
            sign = 1.0 if node == u.source else -1.0 if node == u.sink else 0.0
            if max_served:
                row[num_flow + k] = -sign
                A_eq.append(row)
                b_eq.append(0.0)
            else:
                A_eq.append(row)
                b_eq.append(sign * u.required_rate)

    for e, link in enumerate(active_links):
        countries = {topology.country_of(link.a), topology.country_of(link.b)}
        policy = None
        if len(countries) == 1:
            policy = topology.country_map[next(iter(countries))].availability_policy
        for w in range(problem.num_windows):
            row = np.zeros(num_vars)
            external = np.zeros(num_vars)
            for k, (u, uw) in enumerate(commodities):
                if uw != w:
                    continue
                row[var(k, e, 0)] = row[var(k, e, 1)] = 1.0
                involved = {topology.country_of(x) for x in u.endpoints}
                if not countries <= involved:
                    external[var(k, e, 0)] = external[var(k, e, 1)] = 1.0
            if row.any():
                A_ub.append(row)
                b_ub.append(link.capacity)
            if isinstance(policy, PercentagePolicy) and external.any():
                A_ub.append(external)
                b_ub.append(policy.fraction * link.capacity)

    c = np.zeros(num_vars)
    bounds = [(0.0, None)] * num_flow
    if max_served:
        c[num_flow:] = -1.0
        bounds += [(0.0, u.required_rate) for u, _ in commodities]
    return linprog(
        c, A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
        A_eq=np.array(A_eq) if A_eq else None, b_eq=b_eq or None,
        bounds=bounds, method='highs',
    )


def build_subset_oracle(problem, max_served=False, budget=None):
    """
    Enumerate every candidate build subset and solve the induced flow LP.

    Returns:
        float or None: min-cost optimum (or max total served rate), None when
        no subset is feasible
    """
    links = problem.topology.links
    existing = [l for l in links if not l.is_candidate]
    candidates = [l for l in links if l.is_candidate]
    subsets = chain.from_iterable(combinations(candidates, r) for r in range(len(candidates) + 1))

    best = None
    for subset in subsets:
        cost = sum(l.build_cost for l in subset)
        if max_served and budget is not None and cost > budget + 1e-9:
            continue
        active = [l for l in links if l in existing or l in subset]
        result = _flow_lp(problem, active, max_served)
        if result.status != 0:
            continue
        value = -result.fun if max_served else cost
        if best is None or (value > best if max_served else value < best):
            best = value
    return best
