"""
Virtual Network Partitioning

Splits the capacity of every link of a finished design into a national share,
a federated share for external (international) use-cases, and a custom
reserve kept free for cross-border research protocols. The partition is
static: a country's availability floor is reserved in every window, whether
or not external demand uses it.
"""

import logging
from dataclasses import dataclass

from utils import planner
from utils.config import FLOW_TOL
from utils.errors import OvercommittedError
from utils.satellite import effective_feed_capacity
from utils.topology import LinkKind, PercentagePolicy


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VNetAllocation:
    link: str
    window: int
    capacity: float
    national_share: float
    federated_share: float
    custom_reserve: float


@dataclass(frozen=True)
class VNetViolation:
    link: str
    window: int
    kind: str
    flow: float
    limit: float

    def __str__(self):
        return f"{self.kind} on {self.link} window {self.window}: {self.flow:.6f} > {self.limit:.6f}"


def _physical_capacity(problem, link, window, schedule):
    if link.kind == LinkKind.SATELLITE_FEED and schedule is not None:
        return effective_feed_capacity(schedule, link, window)
    return float(link.capacity)


def _is_active(topology, link, built):
    if link.is_candidate and link.id not in built:
        return False
    for node_id in (link.a, link.b):
        if node_id in topology.ogs_candidate_map and planner.ogs_candidate_id(node_id) not in built:
            return False
    return True


def link_loads(problem, solution):
    """
    Split each link's carried flow into external and national parts.

    A use-case is external on a link when its endpoint countries do not
    include every country the link touches.

    Returns:
        dict: (link id, window) -> (external flow, national flow)
    """
    topology = problem.topology
    involved = {u.id: u.involved_countries(topology) for u in problem.use_cases}
    loads = {}
    for (u_id, arc_id, window), net in solution.flows.items():
        link = topology.link_map.get(arc_id)
        if link is None:
            continue
        external, national = loads.get((arc_id, window), (0.0, 0.0))
        if set(topology.link_countries(link)) <= involved[u_id]:
            national += abs(net)
        else:
            external += abs(net)
        loads[(arc_id, window)] = (external, national)
    return loads


def allocate_vnets(problem, solution, reserve_fractions=None):
    """
    Partition every active link's capacity per window.

    federated = max(external flow, policy floor), where the floor is
    fraction * capacity on national links of Percentage countries;
    custom = reserve fraction * capacity on cross-border links;
    national = the remainder.

    Args:
        problem: DesignProblem
        solution: DesignSolution for that problem
        reserve_fractions: Optional map link id -> custom reserve fraction,
            defaulting to each link's own ``custom_reserve_fraction``

    Returns:
        list[VNetAllocation]: in topology link order, then window order

    Raises:
        OvercommittedError: federated share plus reserve exceed capacity
        ProblemDefinitionError: a reserve is requested on a national link
    """
    topology = problem.topology
    reserve_fractions = reserve_fractions or {}
    schedule = planner.problem_schedule(problem)
    built = set(solution.built)
    loads = link_loads(problem, solution)
    allocations = []

    for link in topology.links:
        if not _is_active(topology, link, built):
            continue
        countries = topology.link_countries(link)
        cross_border = len(countries) > 1
        fraction = float(reserve_fractions.get(link.id, link.custom_reserve_fraction))
        if fraction and not cross_border:
            raise planner.ProblemDefinitionError('custom reserve is only allowed on cross-border links', link.id)

        policy = None if cross_border else topology.country_map[countries[0]].availability_policy

        for window in range(problem.num_windows):
            capacity = _physical_capacity(problem, link, window, schedule)
            external, _ = loads.get((link.id, window), (0.0, 0.0))
            floor = policy.fraction * capacity if isinstance(policy, PercentagePolicy) else 0.0
            federated = max(external, floor)
            custom = fraction * capacity

            if federated + custom > capacity + FLOW_TOL:
                raise OvercommittedError(
                    f"window {window}: federated {federated:.6f} + reserve {custom:.6f} exceed capacity {capacity:.6f}",
                    link.id,
                )
            federated = min(federated, capacity - custom)
            national = max(0.0, capacity - federated - custom)
            allocations.append(VNetAllocation(link.id, window, capacity, national, federated, custom))

    logger.info('allocated %d virtual sub-links', len(allocations))
    return allocations


def enforcement_check(allocations, solution, problem):
    """
    Verify that a solution's flows respect a set of allocations.

    External flow must fit in the federated share; national flow may use the
    national share plus any federated headroom external flow leaves unused,
    but never the custom reserve.

    Returns:
        list[VNetViolation]: empty when every flow fits
    """
    loads = link_loads(problem, solution)
    violations = []
    for allocation in allocations:
        external, national = loads.get((allocation.link, allocation.window), (0.0, 0.0))
        if external > allocation.federated_share + FLOW_TOL:
            violations.append(VNetViolation(
                allocation.link, allocation.window, 'FEDERATED_EXCEEDED', external, allocation.federated_share
            ))
        headroom = max(0.0, allocation.federated_share - external)
        if national > allocation.national_share + headroom + FLOW_TOL:
            violations.append(VNetViolation(
                allocation.link, allocation.window, 'NATIONAL_EXCEEDED', national, allocation.national_share + headroom
            ))
    return violations
