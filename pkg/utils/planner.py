"""
Federated Design Planner

Turns a design problem (topology, international use-cases, availability
policies, candidate builds) into a multi-commodity flow MILP, solves it with
the in-house branch-and-bound, and reads the chosen builds, flows and budget
split back out.

Constraint families, per window:
    C1 flow conservation at every non-endpoint node
    C2 demand (or served variable) at the source
    C3 link capacity times build indicator
    C4 admissibility (arcs outside the admissible set get no variable)
    C5 percentage availability on national links
    C6 point-to-point availability through synthetic transit edges
    C7 satellite-feed capacity from the pass schedule
    C8 budget (max-served objective only)
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import networkx as nx
import numpy as np

from utils.config import (
    DEFAULT_WINDOW_DURATION_S, FEASIBILITY_TOL, FLOW_TOL, INTEGRALITY_TOL
)
from utils.errors import (
    FedQciError, InfeasibleDesignError, InfeasibleInputError, UnboundedModelError
)
from utils.satellite import effective_feed_capacity, schedule_passes
from utils.solver import LpProblem, LpStatus, solve_milp, write_lp
from utils.topology import (
    LinkKind, PercentagePolicy, PointToPointPolicy, admissible_subgraph
)


logger = logging.getLogger(__name__)

# Re-exported so callers can build policies from the planner namespace
AvailabilityPolicy = (PercentagePolicy, PointToPointPolicy)

OGS_PREFIX = 'ogs:'
TRANSIT_PREFIX = 'transit:'


class Objective(str, Enum):
    MIN_COST = 'min_cost'
    MAX_SERVED = 'max_served_rate_under_budget'


class ProblemDefinitionError(FedQciError):
    code = 'INVARIANT_VIOLATION'


@dataclass(frozen=True)
class UseCase:
    id: str
    endpoints: tuple
    required_rate: float
    schedule: tuple = (0,)
    clearance: int = 0
    min_security_level: int = 0
    excluded_countries: frozenset = frozenset()
    masked_relays: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'endpoints', tuple(self.endpoints))
        object.__setattr__(self, 'schedule', tuple(sorted(set(self.schedule))))
        object.__setattr__(self, 'excluded_countries', frozenset(self.excluded_countries))

    @property
    def source(self):
        return self.endpoints[0]

    @property
    def sink(self):
        return self.endpoints[1]

    def involved_countries(self, topology):
        return frozenset(topology.country_of(e) for e in self.endpoints)


@dataclass(frozen=True)
class DesignProblem:
    topology: object
    use_cases: tuple = ()
    objective: Objective = Objective.MIN_COST
    budget: float = None
    num_windows: int = 1
    window_duration_s: float = DEFAULT_WINDOW_DURATION_S
    satellite: object = None
    feasibility_tol: float = FEASIBILITY_TOL
    integrality_tol: float = INTEGRALITY_TOL

    def __post_init__(self):
        object.__setattr__(self, 'use_cases', tuple(self.use_cases))
        object.__setattr__(self, 'objective', Objective(self.objective))


@dataclass(frozen=True)
class Arc:
    """A routable edge: a physical link or a synthetic transit edge."""

    id: str
    a: str
    b: str
    link: object = None
    country: str = None
    rate: float = 0.0


@dataclass
class MilpModel:
    lp: LpProblem
    binaries: list
    flow_index: dict
    served_index: dict
    build_index: dict
    arcs: dict
    row_labels: list
    schedule: object = None

    @property
    def num_variables(self):
        return self.lp.num_vars

    @property
    def num_constraints(self):
        return self.lp.num_rows


@dataclass
class DesignSolution:
    built: tuple = ()
    flows: dict = field(default_factory=dict)
    total_cost: float = 0.0
    served: dict = field(default_factory=dict)
    budget_shares: dict = field(default_factory=dict)
    objective_value: float = 0.0
    nodes_explored: int = 0


class _ModelBuilder:
    def __init__(self):
        self.names, self.lower, self.upper, self.cost = [], [], [], []
        self.rows, self.senses, self.rhs, self.labels = [], [], [], []

    def add_var(self, name, lower=0.0, upper=np.inf, cost=0.0):
        self.names.append(name)
        self.lower.append(lower)
        self.upper.append(upper)
        self.cost.append(cost)
        return len(self.names) - 1

    def add_row(self, coefficients, sense, rhs, label):
        self.rows.append(coefficients)
        self.senses.append(sense)
        self.rhs.append(rhs)
        self.labels.append(label)

    def to_lp(self):
        A = np.zeros((len(self.rows), len(self.names)))
        for i, row in enumerate(self.rows):
            for j, value in row.items():
                A[i, j] += value
        return LpProblem(
            self.cost, A, self.senses, self.rhs,
            np.array(self.lower, dtype=float), np.array(self.upper, dtype=float), tuple(self.names)
        )


def ogs_candidate_id(node_id):
    return f"{OGS_PREFIX}{node_id}"


def transit_arc_id(country_id, a, b):
    return f"{TRANSIT_PREFIX}{country_id}:{a}:{b}"


def candidate_costs(topology):
    """Ordered map of candidate id -> build cost (links first, then OGSs)."""
    costs = {}
    for link in topology.links:
        if link.is_candidate:
            costs[link.id] = float(link.build_cost)
    for candidate in topology.ground_station_candidates:
        costs[ogs_candidate_id(candidate.node)] = float(candidate.build_cost)
    return costs


def problem_schedule(problem):
    """Satellite schedule for the problem's pass table, or None."""
    section = problem.satellite
    if section is None or not section.passes:
        return None
    return schedule_passes(problem.topology, section.passes, section.requests, problem.window_duration_s)


def link_capacity(problem, link, window, schedule=None, failed_links=()):
    """
    Capacity a link offers the planner in one window (bits/s).

    Satellite feeds take their rate from the pass schedule when one exists;
    cross-border links keep their custom reserve aside.
    """
    if link.id in failed_links:
        return 0.0
    if link.kind == LinkKind.SATELLITE_FEED and schedule is not None:
        capacity = effective_feed_capacity(schedule, link, window)
    else:
        capacity = float(link.capacity)
    if problem.topology.is_cross_border(link):
        capacity *= 1.0 - link.custom_reserve_fraction
    return capacity


def validate_problem(problem):
    """
    Check DesignProblem invariants that the topology validation does not cover.

    Returns:
        list[tuple]: (entity id, message) pairs; empty when valid
    """
    issues = []
    topology = problem.topology
    if problem.num_windows < 1:
        issues.append(('solver', f"num_windows must be positive, got {problem.num_windows}"))
    if problem.objective == Objective.MAX_SERVED and (problem.budget is None or problem.budget <= 0):
        issues.append(('solver', 'max-served objective needs a positive budget'))

    seen = set()
    for u in problem.use_cases:
        if u.id in seen:
            issues.append((u.id, 'use-case id declared more than once'))
        seen.add(u.id)
        if len(u.endpoints) != 2 or u.endpoints[0] == u.endpoints[1]:
            issues.append((u.id, 'use-case needs two distinct endpoints'))
        for e in u.endpoints:
            if e not in topology.node_map:
                issues.append((u.id, f"endpoint {e} is not declared"))
        if not u.required_rate > 0:
            issues.append((u.id, f"required rate {u.required_rate} must be positive"))
        if not u.schedule:
            issues.append((u.id, 'schedule must name at least one window'))
        for w in u.schedule:
            if not 0 <= w < problem.num_windows:
                issues.append((u.id, f"window {w} outside 0..{problem.num_windows - 1}"))
        for c in sorted(u.excluded_countries):
            if c not in topology.country_map:
                issues.append((u.id, f"excluded country {c} is not declared"))
    return issues


def _reachability_prepass(problem):
    topology = problem.topology
    for u in problem.use_cases:
        graph = admissible_subgraph(topology, u).to_graph()
        if problem.objective == Objective.MIN_COST:
            if not nx.has_path(graph, u.source, u.sink):
                raise InfeasibleInputError(
                    f"{u.source} cannot reach {u.sink} even with every candidate built", u.id
                )
        else:
            for endpoint in u.endpoints:
                if graph.degree(endpoint) == 0:
                    raise InfeasibleInputError(f"endpoint {endpoint} is isolated", u.id)


def use_case_arcs(topology, use_case):
    """
    Arcs a use-case may route over (C4 and C6 applied).

    Links must be in the admissible view and meet the security floor on the
    link and on every intermediate endpoint. Countries with a point-to-point
    policy are black boxes for external use-cases: their internal links are
    dropped and replaced by transit arcs between guaranteed border pairs.
    """
    view = admissible_subgraph(topology, use_case)
    involved = use_case.involved_countries(topology)
    floor = use_case.min_security_level
    endpoints = set(use_case.endpoints)
    black_boxes = {
        c.id: c.availability_policy for c in topology.countries
        if isinstance(c.availability_policy, PointToPointPolicy) and c.id not in involved
    }

    def secure(node_id):
        return node_id in endpoints or topology.node_map[node_id].security_level >= floor

    arcs = []
    for link in topology.links:
        if link.id not in view.link_ids or link.security_level < floor:
            continue
        if not (secure(link.a) and secure(link.b)):
            continue
        countries = topology.link_countries(link)
        if len(countries) == 1 and countries[0] in black_boxes:
            continue
        arcs.append(Arc(link.id, link.a, link.b, link=link))

    for country_id, policy in black_boxes.items():
        if country_id in use_case.excluded_countries:
            continue
        for a, b, rate in policy.rates:
            if rate <= 0 or a not in view.node_ids or b not in view.node_ids:
                continue
            if secure(a) and secure(b):
                arcs.append(Arc(transit_arc_id(country_id, a, b), a, b, country=country_id, rate=rate))
    return arcs


def formulate(problem, fixed_builds=None, failed_links=()):
    """
    Build the multi-commodity flow MILP for a design problem.

    Args:
        problem: DesignProblem
        fixed_builds: Optional map candidate id -> 0/1 that pins the build
            decisions (used for re-solves of a finished design)
        failed_links: Link ids whose capacity is forced to zero

    Returns:
        MilpModel

    Raises:
        ProblemDefinitionError: the problem breaks a use-case or solver invariant
        InfeasibleInputError: an endpoint is unreachable with every candidate built
    """
    issues = validate_problem(problem)
    if fixed_builds is not None:
        issues = [i for i in issues if not i[1].startswith('max-served')]
    if issues:
        raise ProblemDefinitionError('; '.join(f"{subject}: {msg}" for subject, msg in issues))
    if fixed_builds is None:
        _reachability_prepass(problem)

    topology = problem.topology
    failed_links = set(failed_links)
    schedule = problem_schedule(problem)
    max_served = problem.objective == Objective.MAX_SERVED
    builder = _ModelBuilder()

    build_index = {}
    costs = candidate_costs(topology)
    for candidate_id, cost in costs.items():
        lower, upper = 0.0, 1.0
        if fixed_builds is not None:
            lower = upper = float(fixed_builds.get(candidate_id, 0))
        build_index[candidate_id] = builder.add_var(
            f"b[{candidate_id}]", lower, upper, 0.0 if max_served else cost
        )

    flow_index, served_index, arcs = {}, {}, {}
    usage = {}
    for u in problem.use_cases:
        u_arcs = use_case_arcs(topology, u)
        external_to = {
            c.id for c in topology.countries if c.id not in u.involved_countries(topology)
        }
        for w in u.schedule:
            balance = {}
            for arc in u_arcs:
                arcs.setdefault(arc.id, arc)
                forward = builder.add_var(f"f[{u.id}|{arc.id}|{w}|+]")
                backward = builder.add_var(f"f[{u.id}|{arc.id}|{w}|-]")
                flow_index[(u.id, arc.id, w, '+')] = forward
                flow_index[(u.id, arc.id, w, '-')] = backward
                usage.setdefault((arc.id, w), []).append((u.id, external_to, forward, backward))
                for node, out_var, in_var in ((arc.a, forward, backward), (arc.b, backward, forward)):
                    row = balance.setdefault(node, {})
                    row[out_var] = row.get(out_var, 0.0) + 1.0
                    row[in_var] = row.get(in_var, 0.0) - 1.0

            for node in sorted(balance):
                if node not in u.endpoints:
                    builder.add_row(balance[node], '=', 0.0, f"C1:{u.id}:{node}:{w}")

            source_row = dict(balance.get(u.source, {}))
            if max_served:
                served = builder.add_var(f"s[{u.id}|{w}]", 0.0, float(u.required_rate), -1.0)
                served_index[(u.id, w)] = served
                source_row[served] = -1.0
                builder.add_row(source_row, '=', 0.0, f"C2:{u.id}:{w}")
            else:
                builder.add_row(source_row, '=', float(u.required_rate), f"C2:{u.id}:{w}")

    ogs_links = {}
    for link in topology.links:
        for node_id in (link.a, link.b):
            if node_id in topology.ogs_candidate_map:
                ogs_links.setdefault(link.id, []).append(ogs_candidate_id(node_id))

    for (arc_id, w), users in sorted(usage.items(), key=lambda item: (item[0][1], item[0][0])):
        arc = arcs[arc_id]
        total = {}
        for _, _, forward, backward in users:
            total[forward] = 1.0
            total[backward] = 1.0

        if arc.link is None:
            builder.add_row(total, '<=', arc.rate, f"C6:{arc_id}:{w}")
            continue

        link = arc.link
        capacity = link_capacity(problem, link, w, schedule, failed_links)
        if link.is_candidate:
            row = dict(total)
            row[build_index[link.id]] = -capacity
            builder.add_row(row, '<=', 0.0, f"C3:{link.id}:{w}")
        else:
            builder.add_row(total, '<=', capacity, f"C3:{link.id}:{w}")
        for ogs_id in ogs_links.get(link.id, []):
            row = dict(total)
            row[build_index[ogs_id]] = -capacity
            builder.add_row(row, '<=', 0.0, f"C3:{link.id}:{ogs_id}:{w}")

        countries = topology.link_countries(link)
        if len(countries) == 1:
            policy = topology.country_map[countries[0]].availability_policy
            if isinstance(policy, PercentagePolicy) and policy.fraction < 1.0:
                external = {}
                for _, external_to, forward, backward in users:
                    if countries[0] in external_to:
                        external[forward] = 1.0
                        external[backward] = 1.0
                if external:
                    builder.add_row(
                        external, '<=', policy.fraction * capacity, f"C5:{countries[0]}:{link.id}:{w}"
                    )

    if max_served and fixed_builds is None and costs:
        budget_row = {build_index[cid]: cost for cid, cost in costs.items()}
        builder.add_row(budget_row, '<=', float(problem.budget), 'C8:budget')

    lp = builder.to_lp()
    logger.info('formulated model: %d variables (%d binaries), %d constraints',
                lp.num_vars, len(build_index), lp.num_rows)
    return MilpModel(
        lp=lp,
        binaries=sorted(build_index.values()),
        flow_index=flow_index,
        served_index=served_index,
        build_index=build_index,
        arcs=arcs,
        row_labels=builder.labels,
        schedule=schedule,
    )


def model_to_lp_text(model, title='federated design'):
    """Human-readable LP-format dump of a formulated model."""
    return write_lp(model.lp, model.binaries, title)


def _clean(value):
    return 0.0 if abs(value) < FLOW_TOL else float(value)


def extract_solution(problem, model, result):
    """Read builds, net flows, service and cost out of a solver result."""
    x = result.x
    costs = candidate_costs(problem.topology)
    built = tuple(sorted(cid for cid, j in model.build_index.items() if x[j] > 0.5))

    flows = {}
    for (u_id, arc_id, w, direction), j in model.flow_index.items():
        if direction != '+':
            continue
        net = x[j] - x[model.flow_index[(u_id, arc_id, w, '-')]]
        net = _clean(net)
        if net != 0.0:
            flows[(u_id, arc_id, w)] = net

    served = {}
    for u in problem.use_cases:
        per_window = {}
        for w in u.schedule:
            if (u.id, w) in model.served_index:
                per_window[w] = min(float(u.required_rate), max(0.0, _clean(x[model.served_index[(u.id, w)]])))
            else:
                per_window[w] = float(u.required_rate)
        served[u.id] = per_window

    solution = DesignSolution(
        built=built,
        flows=flows,
        total_cost=math.fsum(costs[cid] for cid in built),
        served=served,
        objective_value=float(result.objective),
        nodes_explored=result.nodes_explored,
    )
    solution.budget_shares = budget_distribution(solution, problem.topology)
    return solution


def solve(problem, fixed_builds=None, failed_links=()):
    """
    Solve a design problem to optimality.

    Args:
        problem: DesignProblem
        fixed_builds: Optional pinned build decisions (see ``formulate``)
        failed_links: Link ids forced to zero capacity

    Returns:
        DesignSolution

    Raises:
        InfeasibleDesignError: no build set satisfies every demand and policy
        UnboundedModelError: the model objective is unbounded
    """
    model = formulate(problem, fixed_builds, failed_links)
    result = solve_milp(model.lp, model.binaries, problem.integrality_tol)
    if result.status == LpStatus.INFEASIBLE:
        raise InfeasibleDesignError('no build set satisfies all demands and availability policies')
    if result.status == LpStatus.UNBOUNDED:
        raise UnboundedModelError('objective is unbounded; the model is malformed')

    solution = extract_solution(problem, model, result)
    logger.info('design solved: cost %.6f, %d builds, %d branch-and-bound nodes',
                solution.total_cost, len(solution.built), solution.nodes_explored)
    return solution


def budget_distribution(solution, topology):
    """
    Charge every built element to the countries it sits in.

    Intra-country builds and OGSs go to their own country; cross-border links
    are split 50/50 between the two endpoint countries.

    Args:
        solution: DesignSolution
        topology: NetworkTopology

    Returns:
        dict: country id -> currency, sorted by country id
    """
    parts = {}
    for candidate_id in solution.built:
        if candidate_id.startswith(OGS_PREFIX):
            node_id = candidate_id[len(OGS_PREFIX):]
            cost = topology.ogs_candidate_map[node_id].build_cost
            parts.setdefault(topology.country_of(node_id), []).append(float(cost))
            continue
        link = topology.link_map[candidate_id]
        countries = topology.link_countries(link)
        for country_id in countries:
            parts.setdefault(country_id, []).append(float(link.build_cost) / len(countries))
    return {country_id: math.fsum(values) for country_id, values in sorted(parts.items())}


def arc_endpoints(topology, arc_id):
    """Endpoints of a physical link or synthetic transit arc id."""
    if arc_id.startswith(TRANSIT_PREFIX):
        _, a, b = arc_id[len(TRANSIT_PREFIX):].split(':')
        return a, b
    link = topology.link_map[arc_id]
    return link.a, link.b


def check_solution(problem, solution, tol=FLOW_TOL):
    """
    Recheck a solution against conservation, capacity and availability.

    Returns:
        list[str]: One message per violated constraint; empty when clean
    """
    topology = problem.topology
    schedule = problem_schedule(problem)
    built = set(solution.built)
    violations = []

    for u in problem.use_cases:
        for w in u.schedule:
            balance = {}
            for (u_id, arc_id, window), net in solution.flows.items():
                if u_id != u.id or window != w:
                    continue
                a, b = arc_endpoints(topology, arc_id)
                balance[a] = balance.get(a, 0.0) + net
                balance[b] = balance.get(b, 0.0) - net
            served = solution.served.get(u.id, {}).get(w, 0.0)
            for node, value in sorted(balance.items()):
                expected = served if node == u.source else -served if node == u.sink else 0.0
                if abs(value - expected) > tol:
                    violations.append(f"conservation {u.id} window {w} node {node}: {value:.6f} != {expected:.6f}")
            if u.source not in balance and served > tol:
                violations.append(f"demand {u.id} window {w}: nothing leaves {u.source}")

    load, external_load = {}, {}
    for (u_id, arc_id, w), net in solution.flows.items():
        load[(arc_id, w)] = load.get((arc_id, w), 0.0) + abs(net)
        external_load.setdefault((arc_id, w), []).append((u_id, abs(net)))

    involved = {u.id: u.involved_countries(topology) for u in problem.use_cases}
    for (arc_id, w), total in sorted(load.items()):
        if arc_id.startswith(TRANSIT_PREFIX):
            country_id, a, b = arc_id[len(TRANSIT_PREFIX):].split(':')
            rate = topology.country_map[country_id].availability_policy.rate_map.get((a, b), 0.0)
            if total > rate + tol:
                violations.append(f"transit {arc_id} window {w}: {total:.6f} > {rate:.6f}")
            continue

        link = topology.link_map[arc_id]
        capacity = link_capacity(problem, link, w, schedule)
        if link.is_candidate and link.id not in built:
            capacity = 0.0
        for node_id in (link.a, link.b):
            if node_id in topology.ogs_candidate_map and ogs_candidate_id(node_id) not in built:
                capacity = 0.0
        if total > capacity + tol:
            violations.append(f"capacity {arc_id} window {w}: {total:.6f} > {capacity:.6f}")

        countries = topology.link_countries(link)
        if len(countries) == 1:
            policy = topology.country_map[countries[0]].availability_policy
            if isinstance(policy, PercentagePolicy):
                external = sum(f for u_id, f in external_load[(arc_id, w)] if countries[0] not in involved[u_id])
                if external > policy.fraction * capacity + tol:
                    violations.append(
                        f"availability {arc_id} window {w}: external {external:.6f} > {policy.fraction * capacity:.6f}"
                    )

    expected_cost = math.fsum(candidate_costs(topology)[cid] for cid in solution.built)
    if abs(expected_cost - solution.total_cost) > tol:
        violations.append(f"total cost {solution.total_cost:.6f} != {expected_cost:.6f}")
    return violations
